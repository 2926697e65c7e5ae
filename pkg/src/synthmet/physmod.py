"""Psychrometrics (Magnus form), sky temperature and site extrapolation."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import SynthmetError
from .solar import geometry_for_dates, hourly_profile
from .weather import Site, Var, WeatherSeries

MAGNUS_A = 610.94    # Pa
MAGNUS_B = 17.625
MAGNUS_C = 243.04    # degC
EPS_W = 0.622        # ratio of molar masses water / dry air
P_STD = 101325.0
LAPSE_RATE = 6.5     # K per km
MAX_ALT_CHANGE = 3000.0
T_RANGE = (-40.0, 60.0)


def _check_temperature(T):
    T = np.asarray(T, dtype=float)
    bad = np.isfinite(T) & ((T < T_RANGE[0]) | (T > T_RANGE[1]))
    if bad.any():
        raise SynthmetError(f"temperature {T[bad].flat[0]} outside [{T_RANGE[0]}, {T_RANGE[1]}] degC")
    return T


def saturation_vapor_pressure(T):
    """Saturation vapour pressure over water, Pa."""
    T = _check_temperature(T)
    return MAGNUS_A * np.exp(MAGNUS_B * T / (T + MAGNUS_C))


def dew_point(e):
    """Closed-form inversion of the Magnus form; NaN where e <= 0."""
    e = np.asarray(e, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.log(e / MAGNUS_A)
        td = MAGNUS_C * g / (MAGNUS_B - g)
    return np.where(e > 0, td, np.nan)


def humidity_ratio(e, P=P_STD):
    e = np.asarray(e, dtype=float)
    return EPS_W * e / (P - e)


def vapor_pressure_from_ratio(w, P=P_STD):
    w = np.asarray(w, dtype=float)
    return w * P / (EPS_W + w)


def enthalpy(T, w):
    """Moist-air enthalpy, kJ per kg of dry air."""
    T = np.asarray(T, dtype=float)
    return 1.006 * T + np.asarray(w, dtype=float) * (2501.0 + 1.86 * T)


def relative_humidity(T, w, P=P_STD):
    """RH (%) of air at ``T`` with humidity ratio ``w``, not capped."""
    return 100.0 * vapor_pressure_from_ratio(w, P) / saturation_vapor_pressure(T)


@dataclass(frozen=True, eq=False)
class MoistAirState:
    T: np.ndarray
    RH: np.ndarray
    P: float | np.ndarray
    e: np.ndarray
    w: np.ndarray
    Td: np.ndarray     # NaN where RH = 0 (undefined)
    h: np.ndarray

    @property
    def dew_point_defined(self) -> np.ndarray:
        return np.isfinite(self.Td)


def moist_air_state(T, RH, P=P_STD) -> MoistAirState:
    T = _check_temperature(T)
    RH = np.asarray(RH, dtype=float)
    if np.any((RH < 0) | (RH > 100)):
        raise SynthmetError("RH outside [0, 100] %")
    e = RH / 100.0 * saturation_vapor_pressure(T)
    if np.any(np.asarray(P) <= e):
        raise SynthmetError("pressure must exceed vapour pressure")
    w = humidity_ratio(e, P)
    td = dew_point(e)
    # exact at saturation, where the inversion can round a hair above T
    td = np.where(RH >= 100.0, T, np.minimum(td, T))
    return MoistAirState(T, RH, P, e, w, td, enthalpy(T, w))


def sky_temperature(T, Td, okta):
    """Sky temperature (degC) from clear-sky emissivity with a cloud correction.

    Clear emissivity uses dew point in degC; cloud cover enters in tenths
    (okta / 8 * 10). The result never exceeds the air temperature.
    """
    T = np.asarray(T, dtype=float)
    Td = np.asarray(Td, dtype=float)
    okta = np.asarray(okta, dtype=float)
    if np.any((okta < 0) | (okta > 8)):
        raise SynthmetError("nebulosity outside [0, 8] octas")
    x = Td / 100.0
    eps0 = 0.711 + 0.56 * x + 0.73 * x * x
    n = okta / 8.0 * 10.0
    eps = eps0 * (1.0 + 0.0224 * n - 0.0035 * n ** 2 + 0.00028 * n ** 3)
    tsky = np.clip(eps, 0.0, None) ** 0.25 * (T + 273.15) - 273.15
    return np.minimum(tsky, T)


def add_derived_columns(series: WeatherSeries) -> WeatherSeries:
    """Append dew point, vapour pressure, humidity ratio, enthalpy and
    (when nebulosity is present) sky temperature."""
    if Var.TEMP not in series.columns or Var.RH not in series.columns:
        raise SynthmetError("derived columns need temp_C and rh_pct")
    T, RH = series[Var.TEMP], series[Var.RH]
    ok = np.isfinite(T) & np.isfinite(RH)
    P = series.site.pressure_pa
    s = moist_air_state(np.where(ok, T, 20.0), np.where(ok, RH, 50.0), P)
    nan = np.full(T.shape, np.nan)
    cols = {Var.TDEW: np.where(ok, s.Td, nan), Var.VAP: np.where(ok, s.e, nan),
            Var.HUMRATIO: np.where(ok, s.w, nan), Var.ENTHALPY: np.where(ok, s.h, nan)}
    if Var.OKTA in series.columns:
        ok2 = ok & np.isfinite(series[Var.OKTA]) & np.isfinite(s.Td)
        ts = sky_temperature(np.where(ok2, T, 20.0), np.where(ok2, s.Td, 10.0),
                             np.where(ok2, series[Var.OKTA], 0.0))
        cols[Var.TSKY] = np.where(ok2, ts, nan)
    return series.with_columns(**{k.value: v for k, v in cols.items()})


def _same_place(a: Site, b: Site) -> bool:
    return (a.latitude == b.latitude and a.longitude == b.longitude
            and a.altitude == b.altitude and a.pressure_pa == b.pressure_pa)


def extrapolate_site(series: WeatherSeries, target: Site, lapse_rate: float = LAPSE_RATE) -> WeatherSeries:
    """Move a weather series to another site.

    Temperature follows the lapse rate, RH is recomputed at constant dew
    point (capped at 100 %), and when latitude or longitude change each
    whole day's clearness index is re-emitted through the target's solar
    geometry. Daily diffuse fraction and relative sunshine are kept.
    """
    src = series.site
    d_alt = target.altitude - src.altitude
    if abs(d_alt) > MAX_ALT_CHANGE:
        raise SynthmetError(f"altitude change {d_alt:.0f} m exceeds {MAX_ALT_CHANGE:.0f} m")
    if _same_place(src, target):
        return series.replace(site=target)
    cols = dict(series.columns)
    if Var.TEMP in cols and d_alt != 0.0:
        T0 = cols[Var.TEMP]
        T1 = T0 - lapse_rate * d_alt / 1000.0
        if Var.RH in cols:
            RH0 = cols[Var.RH]
            ok = np.isfinite(T0) & np.isfinite(RH0) & np.isfinite(T1)
            e = RH0[ok] / 100.0 * saturation_vapor_pressure(T0[ok])
            rh = np.full(T0.shape, np.nan)
            rh[ok] = np.minimum(100.0 * e / saturation_vapor_pressure(np.clip(T1[ok], *T_RANGE)), 100.0)
            cols[Var.RH] = rh
        cols[Var.TEMP] = T1
    if (target.latitude, target.longitude) != (src.latitude, src.longitude) and Var.GHI in cols:
        cols.update(_reproject_solar(series, target))
    return WeatherSeries(target, series.times, cols)


def _reproject_solar(series: WeatherSeries, target: Site) -> dict:
    dates, idx = series.whole_days()
    n = len(series)
    ghi0 = series[Var.GHI]
    out = {Var.GHI: np.full(n, np.nan)}
    has_dhi = Var.DHI in series.columns
    has_bni = Var.BNI in series.columns
    has_sun = Var.SUNFRAC in series.columns
    if has_dhi:
        out[Var.DHI] = np.full(n, np.nan)
    if has_bni:
        out[Var.BNI] = np.full(n, np.nan)
    if has_sun:
        out[Var.SUNFRAC] = np.full(n, np.nan)
    if len(dates) == 0:
        return out
    g_src = geometry_for_dates(series.site, dates)
    g_dst = geometry_for_dates(target, dates)
    clamped = 0
    for r, g0, g1 in zip(idx, g_src, g_dst):
        day = ghi0[r]
        if np.isnan(day).any() or g0.H0_daily <= 0:
            continue
        kt = day.sum() / g0.H0_daily
        if kt > 1.0:
            clamped += 1
            kt = 1.0
        ghi = hourly_profile(kt, g1)
        out[Var.GHI][r] = ghi
        if has_dhi:
            dhi0 = series[Var.DHI][r]
            if not np.isnan(dhi0).any():
                fd = dhi0.sum() / day.sum() if day.sum() > 0 else 1.0
                dhi = min(fd, 1.0) * ghi
                out[Var.DHI][r] = dhi
                if has_bni:
                    cz = g1.cos_zenith_hourly
                    with np.errstate(divide="ignore", invalid="ignore"):
                        bni = np.where(cz > 0.05, (ghi - dhi) / cz, 0.0)
                    out[Var.BNI][r] = np.clip(bni, 0.0, 1500.0)
        if has_sun:
            s0 = series[Var.SUNFRAC][r]
            if not np.isnan(s0).any() and g0.day_length > 0:
                s_rel = min(s0.sum() / g0.day_length, 1.0)
                out[Var.SUNFRAC][r] = s_rel * g1.daylight_fraction
    if clamped:
        warnings.warn(f"{clamped} day(s) with kt > 1 clamped during extrapolation", stacklevel=3)
    return out

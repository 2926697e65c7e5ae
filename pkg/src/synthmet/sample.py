"""Synthetic fixtures: a humid-tropical coastal year and planted radiation days.

These are stand-ins for a measured station database, used by the tests, the
acceptance suite and the README examples.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtr
from scipy.stats import beta as beta_dist

from .physmod import saturation_vapor_pressure
from .solar import default_correlation, geometry_for_dates, hourly_profile
from .weather import Site, Var, WeatherSeries

GILLOT = Site("Gillot", -20.89, 55.53, 8.0)


def _ar1(rng, n, phi):
    e = rng.standard_normal(n + 200) * np.sqrt(1 - phi * phi)
    z = np.empty_like(e)
    z[0] = e[0] / np.sqrt(1 - phi * phi)
    for i in range(1, e.size):
        z[i] = phi * z[i - 1] + e[i]
    return z[200:]


def synthetic_year(site: Site = GILLOT, start: str = "2021-01-01", days: int = 365, seed: int = 0) -> WeatherSeries:
    """Hourly series with all base variables.

    Daily kt is a persistent Beta-distributed process; GHI follows the
    hourly profile, diffuse fraction the Erbs correlation, wind a Weibull law
    with hourly persistence, temperature a seasonal and diurnal cycle driven
    by radiation, and RH follows from a slowly varying dew point.
    """
    rng = np.random.default_rng(seed)
    n = 24 * days
    dates = np.datetime64(start, "D") + np.arange(days)
    geoms = geometry_for_dates(site, dates)
    doy = np.array([g.day_of_year for g in geoms])

    # daily clearness: Beta(3, 2) on [0.15, 0.78] through a persistent Gaussian
    u = ndtr(_ar1(rng, days, 0.5))
    kt = 0.15 + 0.63 * beta_dist.ppf(np.clip(u, 1e-9, 1 - 1e-9), 3.0, 2.0)

    ghi = np.concatenate([hourly_profile(k, g) for k, g in zip(kt, geoms)])
    h0h = np.concatenate([g.H0_hourly for g in geoms])
    cz = np.concatenate([g.cos_zenith_hourly for g in geoms])
    dayfrac = np.concatenate([g.daylight_fraction for g in geoms])
    with np.errstate(divide="ignore", invalid="ignore"):
        kth = np.where(h0h > 0, np.clip(ghi / h0h, 0, 1), 0.0)
    fd = default_correlation("erbs").predict({"kt_h": kth})
    dhi = np.where(ghi > 0, fd * ghi, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        bni = np.where(cz > 0.05, (ghi - dhi) / cz, 0.0)
    bni = np.clip(bni, 0.0, 1400.0)
    s_rel = np.clip((kt - 0.20) / 0.55 + rng.normal(0, 0.05, days), 0.0, 1.0)
    sunfrac = np.repeat(s_rel, 24) * dayfrac
    okta = np.repeat(np.clip(np.round(8.0 * (1.0 - s_rel) + rng.normal(0, 0.7, days)), 0, 8), 24)

    hours = np.arange(n) % 24
    # wind: Weibull(k=2, lambda=5.6) marginal, hourly persistence, afternoon breeze
    zw = _ar1(rng, n, 0.85)
    breeze = 1.0 + 0.25 * np.sin(2 * np.pi * (hours - 9) / 24)
    wind = np.clip(5.6 * (-np.log1p(-np.clip(ndtr(zw), 0, 1 - 1e-12))) ** 0.5 * breeze, 0.0, 30.0)
    winddir = np.mod(110.0 + 25.0 * _ar1(rng, n, 0.95), 360.0)

    # temperature: austral-summer maximum near day 30, diurnal cycle scaled by kt
    season = 24.0 + 3.0 * np.cos(2 * np.pi * (doy - 30) / 365.25)
    tday = np.repeat(season + 1.2 * _ar1(rng, days, 0.7), 24)
    amp = np.repeat(2.0 + 5.0 * kt, 24)
    temp = tday + 0.5 * amp * np.sin(2 * np.pi * (hours - 8) / 24) + 0.4 * _ar1(rng, n, 0.8)
    temp = temp - 0.0006 * (wind - 5.0) * np.repeat(kt * 100, 24)
    # dew point below daily mean temperature; humid season moister
    depr = np.repeat(5.5 - 1.5 * np.cos(2 * np.pi * (doy - 30) / 365.25) + 0.8 * _ar1(rng, days, 0.6), 24)
    tdew = tday - np.clip(depr, 1.0, None) + 0.3 * _ar1(rng, n, 0.9)
    tdew = np.minimum(tdew, temp)
    rh = np.clip(100.0 * saturation_vapor_pressure(tdew) / saturation_vapor_pressure(temp), 5.0, 100.0)

    cols = {Var.TEMP: temp, Var.RH: rh, Var.WIND: wind, Var.WINDDIR: winddir, Var.GHI: ghi,
            Var.DHI: dhi, Var.BNI: bni, Var.SUNFRAC: sunfrac, Var.OKTA: okta}
    return WeatherSeries.hourly(site, f"{start}T00", {k: np.round(v, 4) for k, v in cols.items()})


# Daily GHI shapes (Wh/m2 per hour, hours 0..23) for the three classic
# radiation evolutions of a humid season: overcast (about 1000 Wh/m2/day),
# sunny morning then clouding over, and a clear day.
def _bell(peak_hour, width, total):
    h = np.arange(24) + 0.5
    y = np.clip(np.cos(np.pi * (h - peak_hour) / (2 * width)), 0, None) ** 1.5
    y[(h < 6) | (h > 18.5)] = 0.0
    return total * y / y.sum()


PLANTED_SHAPES = {
    "overcast": _bell(12.5, 6.0, 1000.0),
    "morning": np.where(np.arange(24) < 14, _bell(10.0, 4.5, 4600.0), _bell(10.0, 4.5, 4600.0) * 0.25),
    "clear": _bell(12.5, 6.5, 7600.0),
}


def planted_radiation_days(days: int = 150, seed: int = 0, noise: float = 0.08,
                           site: Site = GILLOT, start: str = "2021-11-01"):
    """GHI series built from the three planted shapes with multiplicative noise.

    Returns ``(series, labels)`` with ``labels[d]`` the planted shape index
    (order of ``PLANTED_SHAPES``) of day ``d``.
    """
    rng = np.random.default_rng(seed)
    shapes = np.array(list(PLANTED_SHAPES.values()))
    labels = rng.integers(0, len(shapes), days)
    scale = rng.normal(1.0, noise, (days, 1))
    hourly_noise = rng.normal(1.0, noise, (days, 24))
    ghi = np.clip(shapes[labels] * scale * hourly_noise, 0.0, 1450.0)
    return WeatherSeries.hourly(site, f"{start}T00", {Var.GHI: ghi.ravel()}), labels

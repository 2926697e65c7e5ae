import math

import numpy as np
import pytest
from scipy.optimize import brentq

from synthmet.errors import SynthmetError
from synthmet.physmod import (
    add_derived_columns,
    dew_point,
    enthalpy,
    extrapolate_site,
    moist_air_state,
    saturation_vapor_pressure,
    sky_temperature,
)
from synthmet.sample import GILLOT, synthetic_year
from synthmet.solar import geometry_for_dates
from synthmet.weather import Site, Var


def test_saturation_anchors():
    assert float(saturation_vapor_pressure(0.0)) == pytest.approx(610.94, abs=1e-9)
    # hand evaluation: 610.94 * exp(17.625 * 30 / 273.04)
    assert float(saturation_vapor_pressure(30.0)) == pytest.approx(610.94 * math.exp(528.75 / 273.04), rel=1e-12)
    assert float(saturation_vapor_pressure(30.0)) == pytest.approx(4237, rel=0.005)
    T = np.arange(-40.0, 60.01, 0.5)
    assert np.all(np.diff(saturation_vapor_pressure(T)) > 0)
    with pytest.raises(SynthmetError):
        saturation_vapor_pressure(61.0)


def test_dew_point_anchors():
    assert float(moist_air_state(30.0, 100.0).Td) == pytest.approx(30.0, abs=0.01)
    td = float(moist_air_state(30.0, 50.0).Td)
    # bisection oracle on the Magnus form
    e = 0.5 * float(saturation_vapor_pressure(30.0))
    oracle = brentq(lambda t: float(saturation_vapor_pressure(t)) - e, -40, 30, xtol=1e-12)
    assert td == pytest.approx(oracle, abs=1e-9)
    assert td == pytest.approx(18.4, abs=0.2)


def test_enthalpy_anchor():
    assert float(enthalpy(25.0, 0.010)) == pytest.approx(1.006 * 25 + 0.01 * (2501 + 1.86 * 25), abs=1e-12)
    assert float(enthalpy(25.0, 0.010)) == pytest.approx(50.6, abs=0.1)
    T = np.linspace(-10, 50, 50)
    assert np.all(np.diff(enthalpy(T, 0.01)) > 0)
    assert np.all(np.diff(enthalpy(25.0, np.linspace(0, 0.03, 50))) > 0)


def test_rh_zero_dew_point_undefined():
    s = moist_air_state(25.0, 0.0)
    assert np.isnan(s.Td) and not s.dew_point_defined
    assert float(s.w) == 0.0 and float(s.h) == pytest.approx(1.006 * 25)


def test_state_consistency_loop():
    rng = np.random.default_rng(0)
    # dew points stay inside the Magnus domain for this box
    T = rng.uniform(-10, 55, 2000)
    RH = rng.uniform(10, 100, 2000)
    s = moist_air_state(T, RH)
    assert np.all(s.Td <= s.T) and np.all(s.e <= saturation_vapor_pressure(T) * (1 + 1e-12))
    back = moist_air_state(s.Td, np.full_like(T, 100.0))
    np.testing.assert_allclose(back.e, s.e, rtol=1e-3)
    np.testing.assert_allclose(dew_point(s.e), s.Td, rtol=1e-6, atol=1e-9)
    w_from_e = 0.622 * s.e / (101325 - s.e)
    np.testing.assert_allclose(w_from_e, s.w, rtol=1e-6)


def test_state_errors():
    with pytest.raises(SynthmetError):
        moist_air_state(25.0, 101.0)
    with pytest.raises(SynthmetError):
        moist_air_state(-45.0, 50.0)


def test_sky_temperature_anchor():
    # hand evaluation: eps0 = 0.711 + 0.56 * 0.15 + 0.73 * 0.15**2
    eps = 0.711 + 0.084 + 0.73 * 0.0225
    oracle = eps ** 0.25 * 298.15 - 273.15
    assert float(sky_temperature(25.0, 15.0, 0.0)) == pytest.approx(oracle, abs=1e-9)
    assert oracle == pytest.approx(9.82, abs=0.01)


def test_sky_temperature_properties():
    assert sky_temperature(25.0, 15.0, 8.0) > sky_temperature(25.0, 15.0, 0.0)
    rng = np.random.default_rng(1)
    T = rng.uniform(-30, 50, 10_000)
    Td = T - rng.uniform(0, 30, 10_000)
    okta = rng.uniform(0, 8, 10_000)
    assert np.all(sky_temperature(T, Td, okta) <= T)
    with pytest.raises(SynthmetError):
        sky_temperature(20.0, 10.0, 9.0)


def test_derived_columns():
    year = synthetic_year(days=10, seed=1)
    d = add_derived_columns(year)
    for v in (Var.TDEW, Var.VAP, Var.HUMRATIO, Var.ENTHALPY, Var.TSKY):
        assert v in d.columns and np.all(np.isfinite(d[v]))
    assert np.all(d[Var.TDEW] <= d[Var.TEMP])


def test_extrapolate_identity_bit_exact():
    year = synthetic_year(days=5, seed=2)
    same = Site("Gillot bis", GILLOT.latitude, GILLOT.longitude, GILLOT.altitude)
    out = extrapolate_site(year, same)
    for v in year.columns:
        assert out[v].tobytes() == year[v].tobytes()


def test_extrapolate_altitude():
    year = synthetic_year(days=5, seed=3)
    high = Site("Plaine", GILLOT.latitude, GILLOT.longitude, GILLOT.altitude + 1000)
    out = extrapolate_site(year, high)
    np.testing.assert_allclose(out[Var.TEMP], year[Var.TEMP] - 6.5, atol=1e-9)
    assert out[Var.RH].max() <= 100
    # dew point conserved where not capped
    td0 = moist_air_state(year[Var.TEMP], year[Var.RH]).Td
    td1 = moist_air_state(out[Var.TEMP], out[Var.RH]).Td
    unc = out[Var.RH] < 100
    np.testing.assert_allclose(td1[unc], td0[unc], atol=1e-9)
    assert out.site.pressure_pa < year.site.pressure_pa
    with pytest.raises(SynthmetError):
        extrapolate_site(year, Site("x", GILLOT.latitude, GILLOT.longitude, 3500))


def test_extrapolate_latitude_keeps_kt():
    year = synthetic_year(days=20, seed=4)
    south = Site("South", -35.0, GILLOT.longitude, GILLOT.altitude)
    out = extrapolate_site(year, south)
    dates, idx = year.whole_days()
    g0 = geometry_for_dates(GILLOT, dates)
    g1 = geometry_for_dates(south, dates)
    kt0 = year[Var.GHI][idx].sum(1) / np.array([g.H0_daily for g in g0])
    kt1 = out[Var.GHI][idx].sum(1) / np.array([g.H0_daily for g in g1])
    np.testing.assert_allclose(kt1, kt0, rtol=1e-12)
    assert not np.allclose([g.H0_daily for g in g0], [g.H0_daily for g in g1])

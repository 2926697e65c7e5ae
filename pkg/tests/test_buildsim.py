import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial import ConvexHull

from synthmet.buildsim import (
    ComfortZone,
    IdealHvac,
    InternalLoadSchedule,
    NodalModel,
    Zone,
    ashrae_summer_zone,
    build_demo_dwelling,
    building_from_dict,
    comfort_fraction,
    demo_dwelling_dict,
    ideal_hvac_loads,
    load_zones,
    simulate_thermal,
)
from synthmet.errors import SingularMatrixError, SynthmetError
from synthmet.physmod import humidity_ratio, moist_air_state, saturation_vapor_pressure
from synthmet.sample import GILLOT, synthetic_year
from synthmet.weather import Var, WeatherSeries


def _one_node(UA=50.0, tau_h=5.0):
    return NodalModel.from_couplings(["air"], [UA * tau_h * 3600.0], [], g_ext=[UA],
                                     zones=[Zone("room", 0, 50.0, 0.0)])


def _weather(temp, rh=None):
    cols = {Var.TEMP: np.asarray(temp, dtype=float)}
    if rh is not None:
        cols[Var.RH] = np.broadcast_to(np.asarray(rh, dtype=float), cols[Var.TEMP].shape).copy()
    return WeatherSeries.hourly(GILLOT, "2021-01-01T00", cols)


def _constant_load(watts, latent=0.0):
    return InternalLoadSchedule(("room",), np.full((1, 24), watts), np.full((1, 24), latent))


# -- thermal model

def test_single_node_equilibrium():
    T = np.full(101, 30.0)
    T[0] = 20.0  # initial state is the first-hour exterior temperature
    r = simulate_thermal(_one_node(), _weather(T))
    assert r.T0[0] == 20.0
    assert r.T[-1, 0] == pytest.approx(30.0, abs=1e-6)


def test_single_node_steady_gain():
    r = simulate_thermal(_one_node(), _weather(np.full(400, 30.0)), _constant_load(500.0))
    # analytic steady state T = Text + Q / UA
    assert r.T[-1, 0] == pytest.approx(30.0 + 500.0 / 50.0, abs=1e-4)


def test_step_response_vs_exponential():
    tau = 5.0
    T = np.full(60, 30.0)
    T[0] = 20.0
    r = simulate_thermal(_one_node(tau_h=tau), _weather(T))
    dev = (30.0 - r.T[:, 0]) / 10.0
    t = np.arange(1, 60)
    exact = np.exp(-t / tau)
    # per-step response factor
    assert dev[1] / dev[0] == pytest.approx(math.exp(-1 / tau), rel=0.02)
    # backward Euler closed form, exactly
    np.testing.assert_allclose(dev[1:], (1 / (1 + 1 / tau)) ** t, rtol=1e-10)
    assert np.abs(dev[1:] - exact).max() < 0.035
    # trajectory within 2% of the step amplitude once tau >= 10 h
    r10 = simulate_thermal(_one_node(tau_h=10.0), _weather(T))
    dev10 = (30.0 - r10.T[1:, 0]) / 10.0
    assert np.abs(dev10 - np.exp(-t / 10.0)).max() < 0.02


def test_energy_balance_demo():
    model, loads = build_demo_dwelling()
    year = synthetic_year(days=20, seed=4)
    r = simulate_thermal(model, year, loads)
    assert r.energy_residual() < 1e-3
    res = ideal_hvac_loads(model, year, loads, IdealHvac())
    assert res.thermal.energy_residual() < 1e-3


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_passive_network_bounded(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    pairs = [(i, j, float(rng.uniform(1, 100))) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.6]
    pairs += [(i, i + 1, float(rng.uniform(1, 100))) for i in range(n - 1)]
    g = np.zeros(n)
    g[0] = rng.uniform(1, 100)
    m = NodalModel.from_couplings(range(n), rng.uniform(1e4, 1e7, n), pairs, g_ext=g)
    text = rng.uniform(10, 35, 200)
    r = simulate_thermal(m, _weather(text))
    assert r.T.min() >= text.min() - 1e-9 and r.T.max() <= text.max() + 1e-9


def test_model_invariants():
    with pytest.raises(SynthmetError):
        NodalModel.from_couplings(["a"], [0.0], [], g_ext=[1.0])
    with pytest.raises(SingularMatrixError):
        # node b has no path to a boundary
        NodalModel.from_couplings(["a", "b"], [1.0, 1.0], [], g_ext=[1.0, 0.0])
    good = NodalModel.from_couplings(["a", "b"], [1.0, 1.0], [("a", "b", 2.0)], g_ext=[1.0, 0.0])
    A = good.A.copy()
    A[0, 1] = 5.0
    with pytest.raises(SynthmetError):
        NodalModel(good.nodes, good.C, A, good.g_ext, good.g_sky, good.solar, ())
    A = good.A.copy()
    A[0, 0] += 1.0
    with pytest.raises(SynthmetError):
        NodalModel(good.nodes, good.C, A, good.g_ext, good.g_sky, good.solar, ())


def test_missing_weather_inputs():
    model, loads = build_demo_dwelling()
    with pytest.raises(SynthmetError):
        simulate_thermal(model, _weather(np.full(24, 25.0)), loads)


# -- ideal HVAC

def test_sensible_load_constant_exterior():
    hv = IdealHvac(hours=range(24), setpoint_C=26.0, w_setpoint=0.02)
    res = ideal_hvac_loads(_one_node(), _weather(np.full(72, 35.0), 50.0), _constant_load(0.0), hv)
    # steady: UA * (35 - 26) W for 24 h
    assert res.sensible_kWh[1] == pytest.approx(50 * 9 * 24 / 1000, rel=1e-9)
    assert res.sensible_kWh[0] > res.sensible_kWh[1]  # stored heat removed first
    air = res.thermal.T[:, 0]
    assert np.all(air <= 26.0 + 1e-9)


def test_floating_below_setpoint_no_load():
    res = ideal_hvac_loads(_one_node(), _weather(np.full(48, 15.0), 50.0), _constant_load(0.0), IdealHvac())
    assert np.all(res.sensible_kWh == 0.0)
    assert np.all(res.latent_kWh == 0.0)


def test_latent_load_oracle():
    hv = IdealHvac(hours=range(24))
    T, RH = 30.0, 80.0
    room = Zone("room", 0, 50.0, 2.0)
    m = NodalModel.from_couplings(["air"], [1e6], [], g_ext=[50.0], zones=[room])
    res = ideal_hvac_loads(m, _weather(np.full(24, T), RH), _constant_load(0.0, latent=100.0), hv)
    w_ext = float(humidity_ratio(RH / 100 * saturation_vapor_pressure(T), GILLOT.pressure_pa))
    w_sp = float(humidity_ratio(0.6 * saturation_vapor_pressure(26.0), GILLOT.pressure_pa))
    mdot = 1.2 * 50.0 * 2.0 / 3600.0
    per_hour = mdot * (w_ext - w_sp) * 2501e3 + 100.0
    assert res.latent_kWh[0] == pytest.approx(per_hour * 24 / 1000, rel=1e-9)


def test_totals_and_aggregates():
    model, loads = build_demo_dwelling()
    res = ideal_hvac_loads(model, synthetic_year(days=10, seed=1), loads, IdealHvac())
    np.testing.assert_allclose(res.total_kWh, res.sensible_kWh + res.latent_kWh, atol=1e-9)
    assert res.MEAN["total_kWh"] == pytest.approx(res.MEAN["sensible_kWh"] + res.MEAN["latent_kWh"], abs=1e-9)
    assert res.MAX["total_kWh"] == pytest.approx(res.total_kWh.max())
    assert np.all(res.sensible_kWh >= 0) and np.all(res.latent_kWh >= 0)


@pytest.fixture(scope="module")
def humid_days():
    return synthetic_year(days=14, seed=6, start="2021-01-10")


def test_direction_exterior_rh(humid_days):
    model, loads = build_demo_dwelling()
    hv = IdealHvac()
    lo = ideal_hvac_loads(model, humid_days.with_columns(rh_pct=np.full(len(humid_days), 60.0)), loads, hv)
    hi = ideal_hvac_loads(model, humid_days.with_columns(rh_pct=np.full(len(humid_days), 90.0)), loads, hv)
    assert hi.latent_kWh.sum() > lo.latent_kWh.sum()


def test_direction_exterior_temperature(humid_days):
    model, loads = build_demo_dwelling()
    hv = IdealHvac()
    base = ideal_hvac_loads(model, humid_days, loads, hv)
    warm = ideal_hvac_loads(model, humid_days.with_columns(temp_C=humid_days[Var.TEMP] + 1.5), loads, hv)
    assert warm.sensible_kWh.sum() > base.sensible_kWh.sum()


def test_hvac_validation():
    for bad in (dict(hours=()), dict(hours=(25,)), dict(setpoint_C=50.0), dict(w_setpoint=0.2)):
        with pytest.raises(SynthmetError):
            IdealHvac(**bad)
    assert IdealHvac().humidity_setpoint() == pytest.approx(float(moist_air_state(26.0, 60.0).w), rel=1e-12)
    assert sorted(IdealHvac().hours) == [0, 1, 2, 3, 4, 5, 20, 21, 22, 23]


# -- demo dwelling

def test_demo_dwelling_loads():
    model, loads = build_demo_dwelling()
    assert loads.nominal_sensible() == 60 * 2 + 40 * 2 + 500
    assert [z.name for z in model.zones] == ["living", "bedroom"]
    model.validate()


def test_demo_closed_dwelling_hot(humid_days):
    model, loads = build_demo_dwelling()
    r = simulate_thermal(model, humid_days, loads)
    ext_daily_mean = humid_days[Var.TEMP].reshape(-1, 24).mean(axis=1)
    inside_max = r.zone_air().reshape(-1, 24, 2).max(axis=(1, 2))
    assert np.all(inside_max > ext_daily_mean)


def test_building_errors():
    d = demo_dwelling_dict()
    d["couplings"].append({"from": "attic", "to": "exterior", "UA_WK": 1.0})
    with pytest.raises(SynthmetError):
        building_from_dict(d)
    d = demo_dwelling_dict()
    d["couplings"][0]["UA_WK"] = -1.0
    with pytest.raises(SynthmetError):
        building_from_dict(d)
    d = demo_dwelling_dict()
    d["loads"][0]["schedule"] = {"garage": [1]}
    with pytest.raises(SynthmetError):
        building_from_dict(d)


# -- comfort

def test_comfort_anchor_points():
    w24 = float(moist_air_state(24.0, 50.0).w)
    assert ashrae_summer_zone().contains(24.0, w24)[0]
    w35 = float(moist_air_state(35.0, 90.0).w)
    zones = load_zones()
    assert [z.name for z in zones] == ["givoni_zone1", "givoni_zone2"]
    assert not any(z.contains(35.0, w35)[0] for z in zones)


def test_vertices_count_inside():
    for z in load_zones() + [ashrae_summer_zone()]:
        v = np.array(z.vertices)
        assert comfort_fraction((v[:, 0], v[:, 1]), [z])[z.name] == 1.0
        mids = (v + np.roll(v, -1, axis=0)) / 2
        assert comfort_fraction((mids[:, 0], mids[:, 1]), [z])[z.name] == 1.0


def test_zone2_contains_zone1():
    z1, z2 = load_zones()
    rng = np.random.default_rng(0)
    T, w = rng.uniform(15, 35, 20000), rng.uniform(0.002, 0.025, 20000)
    assert np.all(z2.contains(T, w)[z1.contains(T, w)])


def _convex_oracle(v, T, w):
    # inside or on the edge of a counter-clockwise convex polygon
    ok = np.ones(T.shape, dtype=bool)
    for (x1, y1), (x2, y2) in zip(v, np.roll(v, -1, axis=0)):
        ok &= (x2 - x1) * (w - y1) - (y2 - y1) * (T - x1) >= -1e-12
    return ok


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000), st.floats(0.1, 0.95))
def test_convex_polygon_oracle_and_shrink(seed, factor):
    rng = np.random.default_rng(seed)
    pts = np.c_[rng.uniform(20, 30, 12), rng.uniform(0.005, 0.02, 12)]
    hull = pts[ConvexHull(pts * [1, 1000]).vertices]   # counter-clockwise
    zone = ComfortZone("z", tuple(map(tuple, hull)))
    T, w = rng.uniform(18, 32, 2000), rng.uniform(0.003, 0.022, 2000)
    inside = zone.contains(T, w)
    assert np.array_equal(inside, _convex_oracle(hull * [1, 1000], T, w * 1000))
    c = hull.mean(axis=0)
    small = ComfortZone("s", tuple(map(tuple, c + factor * (hull - c))))
    assert comfort_fraction((T, w), [small])["s"] <= comfort_fraction((T, w), [zone])["z"]


def test_degenerate_polygons():
    with pytest.raises(SynthmetError):
        ComfortZone("two", ((20, 0.01), (25, 0.01)))
    with pytest.raises(SynthmetError):
        ComfortZone("line", ((20, 0.01), (22, 0.012), (24, 0.014)))
    with pytest.raises(SynthmetError):
        ComfortZone("bowtie", ((20, 0.01), (25, 0.015), (25, 0.01), (20, 0.015)))
    with pytest.raises(SynthmetError):
        comfort_fraction((np.array([]), np.array([])), load_zones())


def test_comfort_from_hvac_states(humid_days):
    model, loads = build_demo_dwelling()
    res = ideal_hvac_loads(model, humid_days, loads, IdealHvac())
    T = res.thermal.zone_air()
    frac = comfort_fraction((T, res.indoor_w), load_zones())
    assert all(0.0 <= f <= 1.0 for f in frac.values())
    assert frac["givoni_zone2"] >= frac["givoni_zone1"]

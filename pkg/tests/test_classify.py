import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.cluster.hierarchy import fcluster, linkage

from synthmet.classify import (
    DayProfileMatrix,
    Predicate,
    SequenceCriteria,
    ascending_classification,
    parse_criteria,
    pca,
    representative_days,
    search_sequences,
    ward_linkage,
)
from synthmet.errors import InsufficientDataError, SynthmetError
from synthmet.sample import PLANTED_SHAPES, planted_radiation_days
from synthmet.weather import Indicator, Site, Var, WeatherSeries

SITE = Site("Gillot", -20.9, 55.5, 8.0)


def _agreement(labels, truth):
    k = max(labels.max(), truth.max()) + 1
    return max(np.mean(np.array(p)[labels] == truth) for p in itertools.permutations(range(k)))


# -- PCA

def test_pca_rank_one():
    rng = np.random.default_rng(0)
    base, direction = rng.normal(size=24), rng.normal(size=24)
    X = base + rng.normal(size=(40, 1)) * direction
    r = pca(X, scale=False)
    assert r.explained[0] == pytest.approx(1.0, abs=1e-9)
    assert r.n_retained == 1


def test_pca_toy_covariance():
    # four points whose population covariance is exactly [[2, 1], [1, 2]]
    a, b = math.sqrt(3.0), 1.0
    u, v = np.array([1, 1]) / math.sqrt(2), np.array([1, -1]) / math.sqrt(2)
    X = np.array([a * u * math.sqrt(2), -a * u * math.sqrt(2), b * v * math.sqrt(2), -b * v * math.sqrt(2)])
    np.testing.assert_allclose(np.cov(X.T, bias=True), [[2, 1], [1, 2]], atol=1e-12)
    r = pca(X, scale=False)
    np.testing.assert_allclose(r.eigenvalues, [3, 1], atol=1e-12)
    np.testing.assert_allclose(r.components[0], u, atol=1e-12)


@pytest.mark.parametrize("seed", range(50))
def test_pca_properties(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(30, 24)) @ rng.normal(size=(24, 24))
    r = pca(X)
    assert np.all(np.diff(r.explained) <= 1e-15)
    assert r.explained.sum() <= 1 + 1e-12
    G = r.components @ r.components.T
    assert np.abs(G - np.eye(24)).max() < 1e-9
    rel = np.linalg.norm(r.reconstruct() - X) / np.linalg.norm(X - X.mean(0))
    assert rel < 1e-8
    cum = np.cumsum(r.explained)
    assert cum[r.n_retained - 1] >= 0.9 - 1e-12
    assert r.n_retained == 1 or cum[r.n_retained - 2] < 0.9
    # sign convention
    piv = np.argmax(np.abs(r.components), axis=1)
    assert np.all(r.components[np.arange(24), piv] > 0)


def test_pca_errors():
    with pytest.raises(InsufficientDataError):
        pca(np.ones((1, 24)))
    with pytest.raises(SynthmetError):
        pca(np.ones((5, 24)))


def test_pca_night_columns_tolerated():
    ser, _ = planted_radiation_days(40, seed=1)
    m = DayProfileMatrix.from_series(ser, "ghi")
    r = pca(m)
    assert np.all(np.isfinite(r.scores))
    assert len(m) == 40


# -- Ward classification

@pytest.mark.parametrize("seed", range(5))
def test_ward_matches_scipy(seed):
    X = np.random.default_rng(seed).normal(size=(60, 3))
    Z = ward_linkage(X)
    Zs = linkage(X, "ward")
    np.testing.assert_allclose(Z[:, 2], Zs[:, 2], rtol=1e-10)
    for k in (2, 4, 7):
        ours = ascending_classification(X, k).labels
        theirs = fcluster(Zs, k, "maxclust")
        assert len(set(zip(ours, theirs))) == k


def test_ward_tie_break_smallest_ids():
    # square: all four sides tie; pair (0, 1) must merge first
    X = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    Z = ward_linkage(X)
    assert tuple(Z[0, :2]) == (0, 1)


def test_two_clouds_automatic_k():
    rng = np.random.default_rng(3)
    a = rng.normal(0, 1, (30, 2))
    b = rng.normal(0, 1, (25, 2)) + np.array([10 * 2 * 3, 0])
    X = np.vstack([a, b])
    cl = ascending_classification(X)
    assert cl.k == 2 and cl.automatic
    truth = np.r_[np.zeros(30, int), np.ones(25, int)]
    assert _agreement(cl.labels, truth) == 1.0


def test_singletons():
    X = np.random.default_rng(0).normal(size=(7, 2))
    cl = ascending_classification(X, k=7)
    assert all(c.frequency == pytest.approx(1 / 7) for c in cl.classes)


def test_three_blobs_over_seeds():
    centers = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])
    for seed in range(20):
        rng = np.random.default_rng(seed)
        truth = rng.integers(0, 3, 90)
        X = centers[truth] + rng.normal(0, 0.1, (90, 2))
        cl = ascending_classification(X, k=3)
        assert _agreement(cl.labels, truth) >= 0.95


def test_k_too_large():
    with pytest.raises(SynthmetError):
        ascending_classification(np.zeros((3, 2)), k=4)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.01, 100.0))
def test_classification_scale_invariant(seed, factor):
    X = np.random.default_rng(seed).normal(size=(25, 3))
    a = ascending_classification(X, k=4).labels
    b = ascending_classification(X * factor, k=4).labels
    assert np.array_equal(a, b)


def test_frequencies_partition():
    X = np.random.default_rng(1).normal(size=(40, 3))
    cl = ascending_classification(X, k=5)
    assert sum(c.frequency for c in cl.classes) == pytest.approx(1.0, abs=1e-12)
    members = np.sort(np.concatenate([c.members for c in cl.classes]))
    np.testing.assert_array_equal(members, np.arange(40))
    for c in cl.classes:
        assert c.representative in c.members


# -- representative days

def test_planted_shapes_recovered():
    shapes = np.array(list(PLANTED_SHAPES.values()))
    for seed in range(3):
        ser, truth = planted_radiation_days(120, seed=seed)
        rep = representative_days(ser, ["ghi"])
        r = rep.per_variable["ghi_Whm2"]
        assert r.classification.k == 3
        assert _agreement(r.classification.labels, truth) >= 0.95
        for c in r.classes:
            prof = r.profiles["ghi_Whm2"][c.representative]
            assert max(np.corrcoef(prof, s)[0, 1] for s in shapes) > 0.95
            # representatives are real calendar days of the input
            assert c.representative_date in r.dates


def test_k1_nearest_global_centroid():
    ser, _ = planted_radiation_days(30, seed=4)
    r = representative_days(ser, ["ghi"], k=1).per_variable["ghi_Whm2"]
    (c,) = r.classes
    s = r.pca["ghi_Whm2"].retained_scores
    assert c.representative == int(np.argmin(((s - s.mean(0)) ** 2).sum(1)))
    assert c.frequency == 1.0


def test_joint_mode_and_report():
    from synthmet.sample import synthetic_year
    year = synthetic_year(days=60, seed=2)
    rep = representative_days(year, ["temp", "ghi", "wind"], k=4)
    assert rep.joint is not None and len(rep.joint.classes) == 4
    d = rep.to_dict()
    assert sum(c["frequency"] for c in d["joint"]["classes"]) == pytest.approx(1.0)
    assert len(d["joint"]["classes"][0]["profiles"]["temp_C"]) == 24


def test_representative_insufficient():
    ser, _ = planted_radiation_days(5, seed=0)
    with pytest.raises(InsufficientDataError):
        representative_days(ser, ["ghi"], k=3)


# -- sequence search

def _temperature_series(days=40, seed=0):
    rng = np.random.default_rng(seed)
    daily = rng.uniform(24.0, 27.0, days)
    daily[12:17] = 31.0
    h = np.arange(24)
    T = (daily[:, None] + 2.0 * np.sin(2 * np.pi * (h - 8) / 24)).ravel()
    W = np.repeat(rng.uniform(1.0, 8.0, days), 24)
    return WeatherSeries.hourly(SITE, "2021-01-01T00", {Var.TEMP: T, Var.WIND: W})


def test_search_single_planted_window():
    ser = _temperature_series()
    res = search_sequences(ser, SequenceCriteria(5, parse_criteria("tmean:30:32")))
    assert len(res) == 1
    assert res[0].start == np.datetime64("2021-01-13")
    assert res[0].achieved["temp_C.mean"] == pytest.approx(31.0)
    assert res[0].distance == pytest.approx(0.0, abs=1e-12)


def test_search_unbounded_all_windows():
    ser = _temperature_series()
    res = search_sequences(ser, SequenceCriteria(5, parse_criteria("tmean::")))
    assert len(res) == 40 - 5 + 1


def test_search_monotone():
    ser = _temperature_series(seed=3)
    loose = search_sequences(ser, SequenceCriteria(3, parse_criteria("tmean:25:32,wmean:2:7")))
    strict = search_sequences(ser, SequenceCriteria(3, parse_criteria("tmean:26:31,wmean:3:6")))
    assert {m.start for m in strict} <= {m.start for m in loose}


def test_search_empty_result():
    assert search_sequences(_temperature_series(), SequenceCriteria(5, parse_criteria("tmean:40:45"))) == []


def test_search_no_overlap_flag():
    ser = _temperature_series()
    res = search_sequences(ser, SequenceCriteria(5, parse_criteria("tmean::"), allow_overlap=False))
    starts = sorted(m.start.astype(int) for m in res)
    assert all(b - a >= 5 for a, b in zip(starts, starts[1:]))


def test_search_planted_high_radiation_sequence():
    # criteria in the spirit of a hot, sunny, breezy-to-windy sequence
    from synthmet.sample import synthetic_year
    year = synthetic_year(days=120, seed=5)
    T = year[Var.TEMP].copy().reshape(-1, 24)
    W = year[Var.WIND].copy().reshape(-1, 24)
    G = year[Var.GHI].copy().reshape(-1, 24)
    T[60:65] += 27.0 - T[60:65].mean()
    W[60:65] = 4.5
    G[60:65] = np.clip(G[60:65] * 8000 / G[60:65].sum(1, keepdims=True), 0, 1400)
    planted = year.with_columns(temp_C=T.ravel(), wind_ms=W.ravel(), ghi_Whm2=G.ravel())
    crit = SequenceCriteria(5, parse_criteria("ghitot:5700:8400,wmean:3:6,tmean:26.5:27.5"))
    res = search_sequences(planted, crit)
    assert res and res[0].start == planted.dates[0] + 60


def test_search_classification_fallback():
    ser, _ = planted_radiation_days(60, seed=2)
    res = search_sequences(ser, SequenceCriteria(3, (), classify_vars=("ghi",), k=3))
    assert len(res) == 3
    assert sum(m.frequency for m in res) == pytest.approx(1.0)
    with pytest.raises(SynthmetError):
        search_sequences(ser, SequenceCriteria(3))


def test_parse_criteria():
    p = parse_criteria("tmean:30:32, wmean:0:3, ghitot:5700:, temp_C.max::35")
    assert p[0] == Predicate(Var.TEMP, Indicator.MEAN, 30, 32)
    assert p[2].hi == math.inf and p[3].lo == -math.inf and p[3].kind is Indicator.MAX
    for bad in ("tmean:32:30", "xmean:1:2", "tmean:1", "ttot:0:1", "tmean:a:b"):
        with pytest.raises(SynthmetError):
            parse_criteria(bad)

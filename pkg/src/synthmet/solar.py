"""
Solar geometry, clearness index, daily-to-hourly disaggregation and the
registry of empirical radiation correlations.

Radiation quantities are hour-integrated (Wh/m2). Hours are local standard
time; the hour angle is shifted by the site longitude offset from its
standard meridian (equation of time neglected).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import InsufficientDataError, SingularMatrixError, SynthmetError
from .weather import Site, Var, WeatherSeries

SOLAR_CONSTANT = 1367.0  # W/m2


def declination(day_of_year) -> np.ndarray:
    """Cooper's declination (degrees)."""
    n = np.asarray(day_of_year, dtype=float)
    return 23.45 * np.sin(np.radians(360.0 * (284.0 + n) / 365.0))


def eccentricity(day_of_year) -> np.ndarray:
    n = np.asarray(day_of_year, dtype=float)
    return 1.0 + 0.033 * np.cos(np.radians(360.0 * n / 365.0))


@dataclass(frozen=True, eq=False)
class SolarGeometry:
    day_of_year: int
    latitude: float
    declination: float
    sunset_hour_angle: float
    day_length: float
    H0_daily: float
    H0_hourly: np.ndarray
    hour_edges: np.ndarray  # hour angles (rad) of the 25 LST hour boundaries

    @property
    def daylight_fraction(self) -> np.ndarray:
        """Sunlit fraction of each LST hour."""
        ws = self.sunset_hour_angle
        lengths = np.array([_overlap(a, b, ws) for a, b in zip(self.hour_edges[:-1], self.hour_edges[1:])])
        return lengths / (math.pi / 12.0)

    @property
    def cos_zenith_hourly(self) -> np.ndarray:
        """Hour-averaged cosine of the zenith angle (0 at night)."""
        e0 = eccentricity(self.day_of_year)
        return self.H0_hourly / (SOLAR_CONSTANT * float(e0))


def _day_windows(ws):
    return [(-ws + 2 * math.pi * k, ws + 2 * math.pi * k) for k in (-1, 0, 1)]


def _overlap(a, b, ws):
    total = 0.0
    for lo, hi in _day_windows(ws):
        total += max(0.0, min(b, hi) - max(a, lo))
    return total


def _integrate_windows(a, b, ws, antiderivative):
    total = 0.0
    for lo, hi in _day_windows(ws):
        x0, x1 = max(a, lo), min(b, hi)
        if x1 > x0:
            total += antiderivative(x1) - antiderivative(x0)
    return total


def hour_angle_edges(site: Site) -> np.ndarray:
    offset_h = (site.longitude - site.standard_meridian) / 15.0
    solar_time = np.arange(25, dtype=float) + offset_h
    return np.radians((solar_time - 12.0) * 15.0)


def solar_geometry(site: Site, day_of_year: int) -> SolarGeometry:
    """Extraterrestrial radiation and day length for one day at ``site``.

    Polar day and night are clamped to 24 h and 0 h of daylight.
    """
    n = int(day_of_year)
    if not 1 <= n <= 366:
        raise SynthmetError(f"day_of_year {n} outside [1, 365]")
    n = min(n, 365)
    phi = math.radians(site.latitude)
    delta_deg = float(declination(n))
    delta = math.radians(delta_deg)
    ws = math.acos(min(1.0, max(-1.0, -math.tan(phi) * math.tan(delta))))
    e0 = float(eccentricity(n))
    cc = math.cos(phi) * math.cos(delta)
    ss = math.sin(phi) * math.sin(delta)
    h0_daily = 24.0 / math.pi * SOLAR_CONSTANT * e0 * (cc * math.sin(ws) + ws * ss)

    edges = hour_angle_edges(site)
    k = 12.0 / math.pi * SOLAR_CONSTANT * e0

    def antider(w):
        return cc * math.sin(w) + w * ss

    hourly = np.array([k * _integrate_windows(a, b, ws, antider) for a, b in zip(edges[:-1], edges[1:])])
    hourly = np.maximum(hourly, 0.0)
    return SolarGeometry(n, site.latitude, delta_deg, ws, 24.0 * ws / math.pi,
                         max(h0_daily, 0.0), hourly, edges)


def day_of_year(dates) -> np.ndarray:
    d = np.asarray(dates, dtype="datetime64[D]")
    return (d - d.astype("datetime64[Y]")).astype(int) + 1


class ClearnessIndex(NamedTuple):
    kt: np.ndarray
    n_clamped: int


def clearness_index(ghi_daily, h0_daily) -> ClearnessIndex:
    """kt = ghi / H0, clamped to [0, 1]."""
    g = np.asarray(ghi_daily, dtype=float)
    h = np.asarray(h0_daily, dtype=float)
    if np.any(h <= 0):
        raise SynthmetError("clearness index undefined: extraterrestrial radiation is zero")
    raw = g / h
    kt = np.clip(raw, 0.0, 1.0)
    return ClearnessIndex(kt, int(np.count_nonzero(raw != kt)))


def _cpr_antiderivative(ws):
    a = 0.409 + 0.5016 * math.sin(ws - math.pi / 3)
    b = 0.6609 - 0.4767 * math.sin(ws - math.pi / 3)
    cs = math.cos(ws)

    # integral of (a + b cos w)(cos w - cos ws) dw
    def F(w):
        return (a * math.sin(w) - a * cs * w + b * (w / 2 + math.sin(2 * w) / 4)
                - b * cs * math.sin(w))
    return F


def hourly_profile(kt_daily: float, geometry: SolarGeometry) -> np.ndarray:
    """Split ``kt_daily * H0_daily`` over the 24 LST hours.

    Hour weights integrate the Collares-Pereira and Rabl ratio over each hour;
    they are renormalised so the hours sum exactly to the daily total.
    """
    kt = float(kt_daily)
    if not 0.0 <= kt <= 1.0:
        raise SynthmetError(f"kt {kt} outside [0, 1]")
    return kt * geometry.H0_daily * profile_weights(geometry)


def profile_weights(geometry: SolarGeometry) -> np.ndarray:
    ws = geometry.sunset_hour_angle
    if ws <= 0 or geometry.H0_daily <= 0:
        return np.zeros(24)
    F = _cpr_antiderivative(ws)
    e = geometry.hour_edges
    w = np.array([_integrate_windows(a, b, ws, F) for a, b in zip(e[:-1], e[1:])])
    w = np.where(geometry.H0_hourly > 0, np.maximum(w, 0.0), 0.0)
    s = w.sum()
    return w / s if s > 0 else w


# ------------------------------------------------------------ correlations

# Quantities a correlation can read or predict, with their physical range.
QUANTITIES = {
    "kt": (0.0, 1.0),          # daily clearness index
    "kt_h": (0.0, 1.0),        # hourly clearness index
    "sunfrac_d": (0.0, 1.0),   # daily relative sunshine duration S/S0
    "fd": (0.0, 1.0),          # daily diffuse fraction
    "fd_h": (0.0, 1.0),        # hourly diffuse fraction
    "okta_d": (0.0, 8.0),      # daily mean nebulosity
}
HOURLY_QUANTITIES = {"kt_h", "fd_h"}


def _poly_design(X, degree):
    cols = [np.ones(X.shape[0])]
    for j in range(X.shape[1]):
        for d in range(1, degree + 1):
            cols.append(X[:, j] ** d)
    return np.column_stack(cols)


def _erbs_predict(p, X):
    kt = X[:, 0]
    low = 1.0 - p[0] * kt
    mid = p[1] + p[2] * kt + p[3] * kt ** 2 + p[4] * kt ** 3 + p[5] * kt ** 4
    return np.where(kt <= 0.22, low, np.where(kt <= 0.80, mid, p[6]))


def _erbs_fit(X, y, default):
    kt = X[:, 0]
    p = list(default)
    low = kt <= 0.22
    mid = (kt > 0.22) & (kt <= 0.80)
    high = kt > 0.80
    # a piece lacking data keeps its literature coefficients
    if low.sum() >= 2:
        A = kt[low][:, None]
        p[0] = float(_lstsq(A, 1.0 - y[low])[0])
    if mid.sum() >= 10:
        p[1:6] = _lstsq(_poly_design(kt[mid][:, None], 4), y[mid]).tolist()
    if high.sum() >= 2:
        p[6] = float(y[high].mean())
    return np.array(p)


@dataclass(frozen=True)
class Form:
    inputs: tuple
    output: str
    n_params: int
    predict: Callable
    default: tuple | None = None
    fit: Callable | None = None
    degree: int = 1
    family: str = "linear"


def _linear_form(inputs, output, default=None, degree=1, family="linear"):
    n = 1 + len(inputs) * degree
    return Form(tuple(inputs), output, n, lambda p, X, d=degree: _poly_design(X, d) @ p,
                default, None, degree, family)


FORMS: dict[str, Form] = {
    "angstrom_black": _linear_form(["sunfrac_d"], "kt", (0.25, 0.50)),
    "angstrom_black_inverse": _linear_form(["kt"], "sunfrac_d"),
    "erbs": Form(("kt_h",), "fd_h", 7, _erbs_predict,
                 (0.09, 0.9511, -0.1604, 4.388, -16.638, 12.336, 0.165), _erbs_fit, 4, "piecewise"),
    "page": _linear_form(["kt"], "fd", (1.00, -1.13)),
    "liu_jordan": _linear_form(["kt"], "fd", (1.390, -4.027, 5.531, -3.108), degree=3),
    "gopinathan": _linear_form(["kt", "sunfrac_d"], "fd", (0.87813, -0.33280, -0.53039)),
    # remaining table rows: generic polynomial regression, fitted from data
    "hay": _linear_form(["sunfrac_d"], "kt", family="polynomial"),
    "hay_inverse": _linear_form(["kt"], "sunfrac_d", family="polynomial"),
    "klein": _linear_form(["kt", "sunfrac_d"], "fd", family="polynomial"),
    "icqbal": _linear_form(["sunfrac_d"], "fd", degree=2, family="polynomial"),
    "castagnoli": _linear_form(["okta_d"], "kt", degree=2, family="polynomial"),
    "barri": _linear_form(["okta_d"], "kt", degree=3, family="polynomial"),
    "rangarajan": _linear_form(["okta_d"], "sunfrac_d", degree=2, family="polynomial"),
    "gopinathan2": _linear_form(["kt", "sunfrac_d"], "fd", degree=2, family="polynomial"),
    "soler": _linear_form(["kt", "sunfrac_d"], "fd", degree=3, family="polynomial"),
}


def polynomial_form(inputs, output, degree) -> Form:
    if not 1 <= degree <= 3:
        raise SynthmetError("polynomial degree must be in [1, 3]")
    for q in (*inputs, output):
        if q not in QUANTITIES:
            raise SynthmetError(f"unknown correlation quantity {q!r}")
    return _linear_form(list(inputs), output, degree=degree, family="polynomial")


def get_form(name, inputs=None, output=None, degree=None) -> Form:
    if name.startswith("poly"):
        if inputs is None or output is None:
            raise SynthmetError("a polynomial correlation needs inputs and an output")
        return polynomial_form(inputs, output, degree or 1)
    try:
        return FORMS[name]
    except KeyError:
        raise SynthmetError(f"unknown correlation {name!r}; known: {sorted(FORMS)}") from None


@dataclass(frozen=True)
class CorrelationModel:
    name: str
    inputs: tuple
    output: str
    params: tuple
    rmse: float = 0.0
    mbe: float = 0.0
    n: int = 0
    domain: tuple = ()
    degree: int = 1
    period: str = ""
    site: str = ""

    @property
    def form(self) -> Form:
        return get_form(self.name, self.inputs, self.output, self.degree)

    @property
    def is_hourly(self) -> bool:
        return self.output in HOURLY_QUANTITIES

    def predict(self, inputs) -> np.ndarray:
        return evaluate_correlation(self, inputs).value

    def to_dict(self):
        return {"kind": "correlation", "name": self.name, "inputs": list(self.inputs),
                "output": self.output, "params": list(self.params), "rmse": self.rmse,
                "mbe": self.mbe, "n": self.n, "domain": [list(d) for d in self.domain],
                "degree": self.degree, "period": self.period, "site": self.site}

    @classmethod
    def from_dict(cls, d):
        return cls(d["name"], tuple(d["inputs"]), d["output"], tuple(float(p) for p in d["params"]),
                   float(d.get("rmse", 0.0)), float(d.get("mbe", 0.0)), int(d.get("n", 0)),
                   tuple(tuple(x) for x in d.get("domain", ())), int(d.get("degree", 1)),
                   d.get("period", ""), d.get("site", ""))


def default_correlation(name) -> CorrelationModel:
    """Registry entry with its literature coefficients (no fit diagnostics)."""
    form = get_form(name)
    if form.default is None:
        raise SynthmetError(f"correlation {name!r} has no published default; fit it from data")
    return CorrelationModel(name, form.inputs, form.output, tuple(form.default), degree=form.degree)


class CorrelationResult(NamedTuple):
    value: np.ndarray
    n_clamped: int
    out_of_domain: bool


def _input_matrix(model, inputs):
    cols = []
    for q in model.inputs:
        if q not in inputs:
            raise SynthmetError(f"correlation {model.name} needs input {q!r}")
        cols.append(np.atleast_1d(np.asarray(inputs[q], dtype=float)))
    return np.column_stack(np.broadcast_arrays(*cols))


def evaluate_correlation(model: CorrelationModel, inputs) -> CorrelationResult:
    """Predict ``model.output`` and clamp it to the output's physical range.

    Inputs outside the fitted domain only raise the ``out_of_domain`` flag.
    """
    form = model.form
    X = _input_matrix(model, inputs)
    raw = np.asarray(form.predict(np.asarray(model.params, float), X), dtype=float)
    lo, hi = QUANTITIES[model.output]
    value = np.clip(raw, lo, hi)
    ood = False
    for j, dom in enumerate(model.domain):
        if dom and (np.any(X[:, j] < dom[0]) or np.any(X[:, j] > dom[1])):
            ood = True
    if ood:
        warnings.warn(f"{model.name}: inputs outside the fitted domain", stacklevel=2)
    return CorrelationResult(value, int(np.count_nonzero(raw != value)), ood)


def _lstsq(A, y):
    if A.shape[0] < A.shape[1] or np.linalg.matrix_rank(A) < A.shape[1]:
        raise SingularMatrixError("singular design matrix (collinear or constant inputs)")
    return np.linalg.lstsq(A, y, rcond=None)[0]


def fit_correlation_arrays(name, X: dict, y, inputs=None, output=None, degree=None,
                           period="", site="") -> CorrelationModel:
    """Ordinary least squares of a registry form on explicit samples."""
    form = get_form(name, inputs, output, degree)
    A = np.column_stack([np.asarray(X[q], dtype=float) for q in form.inputs])
    y = np.asarray(y, dtype=float)
    ok = np.all(np.isfinite(A), axis=1) & np.isfinite(y)
    A, y = A[ok], y[ok]
    if y.size < form.n_params:
        raise InsufficientDataError(f"{name}: {y.size} samples for {form.n_params} parameters")
    if form.fit is not None:
        params = form.fit(A, y, form.default)
    else:
        params = _lstsq(_poly_design(A, form.degree), y)
    domain = tuple((float(A[:, j].min()), float(A[:, j].max())) for j in range(A.shape[1]))
    model = CorrelationModel(name, form.inputs, form.output, tuple(float(p) for p in params),
                             0.0, 0.0, int(y.size), domain, form.degree, period, site)
    pred = evaluate_correlation(model, {q: A[:, j] for j, q in enumerate(form.inputs)}).value
    err = pred - y
    return CorrelationModel(name, form.inputs, form.output, model.params,
                            float(np.sqrt(np.mean(err ** 2))), float(np.mean(err)), int(y.size),
                            domain, form.degree, period, site)


MIN_FIT_DAYS = 30


@dataclass
class SolarQuantities:
    """Correlation quantities extracted from a series (daily and hourly samples)."""

    dates: np.ndarray
    daily: dict = field(default_factory=dict)
    hourly: dict = field(default_factory=dict)


def geometry_for_dates(site: Site, dates) -> list:
    cache = {}
    out = []
    for n in day_of_year(dates):
        n = int(n)
        if n not in cache:
            cache[n] = solar_geometry(site, n)
        out.append(cache[n])
    return out


def solar_quantities(series: WeatherSeries, needed) -> SolarQuantities:
    """Daily/hourly correlation quantities on days complete for what ``needed`` requires."""
    needed = set(needed)
    req_vars = {Var.GHI}
    if needed & {"sunfrac_d"}:
        req_vars.add(Var.SUNFRAC)
    if needed & {"fd", "fd_h"}:
        req_vars.add(Var.DHI)
    if needed & {"okta_d"}:
        req_vars.add(Var.OKTA)
    for v in req_vars:
        if v not in series.columns:
            raise InsufficientDataError(f"series lacks {v.value}")
    dates, idx, _ = series.complete_days(*req_vars)
    geoms = geometry_for_dates(series.site, dates)
    h0 = np.array([g.H0_daily for g in geoms])
    keep = h0 > 0
    dates, idx = dates[keep], idx[keep]
    geoms = [g for g, k in zip(geoms, keep) if k]
    h0 = h0[keep]
    ghi = series[Var.GHI][idx]
    q = SolarQuantities(dates)
    q.daily["kt"] = np.clip(ghi.sum(axis=1) / h0, 0.0, 1.0)
    if Var.SUNFRAC in req_vars:
        daylen = np.array([g.day_length for g in geoms])
        q.daily["sunfrac_d"] = np.clip(series[Var.SUNFRAC][idx].sum(axis=1) / daylen, 0.0, 1.0)
    if Var.DHI in req_vars:
        tot = ghi.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            q.daily["fd"] = np.where(tot > 0, np.clip(series[Var.DHI][idx].sum(axis=1) / tot, 0, 1), np.nan)
    if Var.OKTA in req_vars:
        q.daily["okta_d"] = series[Var.OKTA][idx].mean(axis=1)
    if needed & HOURLY_QUANTITIES:
        h0h = np.array([g.H0_hourly for g in geoms])
        # skip the low-sun hours where hourly ratios are noise dominated
        mask = (h0h > 50.0) & (ghi > 0)
        q.hourly["kt_h"] = np.clip(ghi[mask] / h0h[mask], 0.0, 1.0)
        if Var.DHI in req_vars:
            q.hourly["fd_h"] = np.clip(series[Var.DHI][idx][mask] / ghi[mask], 0.0, 1.0)
    return q


def fit_correlation(name, series: WeatherSeries, inputs=None, output=None, degree=None,
                    period="") -> CorrelationModel:
    """Fit a registry correlation on the complete days of ``series``."""
    form = get_form(name, inputs, output, degree)
    needed = {*form.inputs, form.output}
    q = solar_quantities(series, needed)
    if len(q.dates) < MIN_FIT_DAYS:
        raise InsufficientDataError(f"{name}: {len(q.dates)} complete days, need {MIN_FIT_DAYS}")
    hourly = form.output in HOURLY_QUANTITIES
    if any((i in HOURLY_QUANTITIES) != hourly for i in form.inputs):
        raise SynthmetError("cannot mix hourly and daily quantities in one correlation")
    source = q.hourly if hourly else q.daily
    X = {i: source[i] for i in form.inputs}
    return fit_correlation_arrays(name, X, source[form.output], form.inputs, form.output,
                                  form.degree, period, series.site.name)

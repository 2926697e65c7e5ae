"""
Representative days (PCA of daily profiles, then Ward ascending
classification) and criterion-driven search for multi-day sequences.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDataError, SynthmetError
from .weather import Indicator, Var, WeatherSeries, _reduce

K_AUTO_RANGE = (2, 8)


@dataclass(frozen=True, eq=False)
class DayProfileMatrix:
    variable: str
    dates: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[1] != 24:
            raise SynthmetError("day profile matrix needs 24 columns")
        if np.isnan(v).any():
            raise SynthmetError("day profile matrix has missing cells")
        if len(self.dates) != v.shape[0]:
            raise SynthmetError("one date per row required")

    @classmethod
    def from_series(cls, series: WeatherSeries, var, dates=None):
        var = Var.parse(var)
        d, idx, _ = series.complete_days(var)
        if dates is not None:
            keep = np.isin(d, dates)
            d, idx = d[keep], idx[keep]
        return cls(var.value, d, series[var][idx])

    def __len__(self):
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class PcaResult:
    components: np.ndarray   # (p, p), one direction per row
    eigenvalues: np.ndarray
    explained: np.ndarray    # variance fractions, non-increasing
    scores: np.ndarray       # (n, p)
    n_retained: int
    mean: np.ndarray
    scale: np.ndarray

    @property
    def retained_scores(self) -> np.ndarray:
        return self.scores[:, : self.n_retained]

    def reconstruct(self, n_components=None) -> np.ndarray:
        m = self.components.shape[0] if n_components is None else n_components
        return (self.scores[:, :m] @ self.components[:m]) * self.scale + self.mean


def pca(matrix, variance_threshold: float = 0.90, scale: bool = True) -> PcaResult:
    """Principal components of the rows of ``matrix``.

    Columns are centred and, with ``scale``, divided by their standard
    deviation, so the eigendecomposition is of the correlation matrix.
    Zero-variance columns (night hours of radiation) are left unscaled and
    carry no variance. ``n_retained`` is the smallest count whose cumulative
    explained fraction reaches ``variance_threshold``.
    """
    X = np.asarray(matrix.values if isinstance(matrix, DayProfileMatrix) else matrix, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise InsufficientDataError("PCA needs at least 2 days")
    if not 0 < variance_threshold <= 1:
        raise SynthmetError("variance_threshold must be in (0, 1]")
    mu = X.mean(axis=0)
    Xc = X - mu
    sd = Xc.std(axis=0)
    if not np.any(sd > 0):
        raise SynthmetError("zero-variance matrix")
    sc = np.where(sd > 0, sd, 1.0) if scale else np.ones_like(sd)
    Z = Xc / sc
    C = Z.T @ Z / Z.shape[0]
    w, V = np.linalg.eigh(C)
    order = np.argsort(w)[::-1]
    w = np.clip(w[order], 0.0, None)
    V = V[:, order].T
    # sign: largest-magnitude loading positive
    pivot = np.argmax(np.abs(V), axis=1)
    V *= np.sign(V[np.arange(V.shape[0]), pivot])[:, None]
    frac = w / w.sum()
    m = int(np.searchsorted(np.cumsum(frac), variance_threshold - 1e-12) + 1)
    m = min(m, V.shape[0])
    return PcaResult(V, w, frac, Z @ V.T, m, mu, sc)


def ward_linkage(points) -> np.ndarray:
    """Ward agglomeration in scipy linkage format ``[id_a, id_b, height, size]``.

    Heights are Ward distances sqrt(2 * increase in within-class sum of
    squares), updated with the Lance-Williams recurrence. Among equal merge
    distances the pair with the smallest cluster ids wins.
    """
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if n < 1:
        raise InsufficientDataError("nothing to classify")
    sq = (X * X).sum(axis=1)
    D = np.maximum(sq[:, None] + sq[None, :] - 2.0 * X @ X.T, 0.0)
    # exact diagonal blocks for duplicated points
    D[np.isclose(D, 0.0, atol=1e-12 * max(1.0, float(sq.max())))] = 0.0
    np.fill_diagonal(D, np.inf)
    ids = np.arange(n)
    size = np.ones(n)
    Z = np.zeros((max(n - 1, 0), 4))
    for step in range(n - 1):
        dmin = D.min()
        ii, jj = np.nonzero(D == dmin)
        lo_id = np.minimum(ids[ii], ids[jj])
        hi_id = np.maximum(ids[ii], ids[jj])
        pick = np.lexsort((hi_id, lo_id))[0]
        i, j = sorted((ii[pick], jj[pick]))
        ni, nj = size[i], size[j]
        nk = size
        t = ni + nj + nk
        new = ((ni + nk) * D[i] + (nj + nk) * D[j] - nk * dmin) / t
        Z[step] = (min(ids[i], ids[j]), max(ids[i], ids[j]), math.sqrt(dmin), ni + nj)
        D[i, :] = new
        D[:, i] = new
        D[i, i] = np.inf
        D[j, :] = np.inf
        D[:, j] = np.inf
        size[i] = ni + nj
        ids[i] = n + step
    return Z


def cut_linkage(Z: np.ndarray, n: int, k: int) -> np.ndarray:
    """Labels after applying the first ``n - k`` merges (label = root slot)."""
    parent = np.arange(2 * n - 1)

    def root(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for step in range(n - k):
        a, b = int(Z[step, 0]), int(Z[step, 1])
        parent[root(a)] = n + step
        parent[root(b)] = n + step
    roots = np.array([root(i) for i in range(n)])
    # renumber by first appearance
    _, first, inv = np.unique(roots, return_index=True, return_inverse=True)
    rank = np.argsort(np.argsort(first))
    return rank[inv]


def auto_k(heights, n: int) -> int:
    """Cut at the largest relative gap between consecutive merge heights."""
    h = np.asarray(heights, dtype=float)
    lo, hi = K_AUTO_RANGE
    hi = min(hi, n - 1)
    if hi < lo:
        return min(n, lo)
    best_k, best_gap = lo, -1.0
    for k in range(lo, hi + 1):
        below, above = h[n - k - 1], h[n - k]
        gap = 1.0 - below / above if above > 0 else 0.0
        if gap > best_gap + 1e-12:
            best_k, best_gap = k, gap
    return best_k


@dataclass(frozen=True, eq=False)
class DayClass:
    label: int
    members: np.ndarray
    centroid: np.ndarray
    frequency: float
    representative: int
    representative_date: np.datetime64 | None = None

    def __len__(self):
        return int(self.members.size)


@dataclass(frozen=True, eq=False)
class Classification:
    classes: list
    labels: np.ndarray
    linkage: np.ndarray
    k: int
    automatic: bool

    def __iter__(self):
        return iter(self.classes)

    def __len__(self):
        return len(self.classes)


def ascending_classification(scores, k: int | None = None, dates=None) -> Classification:
    """Ward ascending classification of per-day factor scores.

    ``k=None`` chooses the class count automatically in [2, 8].
    """
    X = np.asarray(scores, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if k is not None and (k < 1 or k > n):
        raise SynthmetError(f"k={k} not in [1, {n}]")
    Z = ward_linkage(X)
    automatic = k is None
    if automatic:
        if n < 2:
            raise InsufficientDataError("automatic classification needs at least 2 days")
        k = auto_k(Z[:, 2], n)
    labels = cut_linkage(Z, n, k)
    classes = []
    for c in range(k):
        members = np.flatnonzero(labels == c)
        centroid = X[members].mean(axis=0)
        d2 = ((X[members] - centroid) ** 2).sum(axis=1)
        rep = int(members[np.argmin(d2)])
        classes.append(DayClass(c, members, centroid, members.size / n, rep,
                                None if dates is None else dates[rep]))
    return Classification(classes, labels, Z, k, automatic)


def _scaled_block(s: np.ndarray) -> np.ndarray:
    tot = s.var(axis=0).sum()
    return s / math.sqrt(tot) if tot > 0 else s


@dataclass(frozen=True, eq=False)
class ClassReport:
    variables: tuple
    dates: np.ndarray
    profiles: dict           # var -> (n_days, 24)
    classification: Classification
    pca: dict = field(default_factory=dict)

    @property
    def classes(self):
        return self.classification.classes

    def to_dict(self):
        out = []
        for c in self.classes:
            out.append({
                "class_id": c.label,
                "frequency": c.frequency,
                "n_days": len(c),
                "representative_date": str(c.representative_date),
                "profiles": {v: self.profiles[v][c.representative].tolist() for v in self.variables},
            })
        return {"variables": list(self.variables), "k": self.classification.k,
                "automatic_k": self.classification.automatic, "n_days": int(len(self.dates)),
                "classes": out}

    def csv_rows(self):
        rows = []
        for c in self.classes:
            for v in self.variables:
                rows.append([c.label, f"{c.frequency!r}", str(c.representative_date), v]
                            + [repr(float(x)) for x in self.profiles[v][c.representative]])
        return rows


@dataclass(frozen=True, eq=False)
class RepresentativeDays:
    per_variable: dict
    joint: ClassReport | None

    def to_dict(self):
        d = {"per_variable": {k: r.to_dict() for k, r in self.per_variable.items()}}
        if self.joint is not None:
            d["joint"] = self.joint.to_dict()
        return d


def representative_days(series: WeatherSeries, variables, k: int | None = None,
                        variance_threshold: float = 0.90) -> RepresentativeDays:
    """Per-variable and joint representative days.

    Only days complete in every chosen variable are used so the per-variable
    and joint classifications share the same calendar.
    """
    variables = tuple(Var.parse(v) for v in variables)
    if not variables:
        raise SynthmetError("choose at least one variable")
    for v in variables:
        if v not in series.columns:
            raise SynthmetError(f"variable {v.value} not present in series")
    dates, idx, _ = series.complete_days(*variables)
    need = 2 * (k if k is not None else K_AUTO_RANGE[0])
    if len(dates) < need:
        raise InsufficientDataError(f"{len(dates)} complete days, need {need}")
    profiles = {v.value: series[v][idx] for v in variables}
    per_var, blocks, pcas = {}, [], {}
    for v in variables:
        p = pca(profiles[v.value], variance_threshold)
        pcas[v.value] = p
        cl = ascending_classification(p.retained_scores, k, dates)
        per_var[v.value] = ClassReport((v.value,), dates, {v.value: profiles[v.value]}, cl, {v.value: p})
        blocks.append(_scaled_block(p.retained_scores))
    joint = None
    if len(variables) > 1:
        cl = ascending_classification(np.hstack(blocks), k, dates)
        joint = ClassReport(tuple(v.value for v in variables), dates, profiles, cl, pcas)
    return RepresentativeDays(per_var, joint)


# -- sequence search

_CODE_VARS = {"t": Var.TEMP, "rh": Var.RH, "w": Var.WIND, "ghi": Var.GHI, "dhi": Var.DHI,
              "bni": Var.BNI, "sun": Var.SUNFRAC, "okta": Var.OKTA}
_CODE_KINDS = {"mean": Indicator.MEAN, "max": Indicator.MAX, "min": Indicator.MIN,
               "amp": Indicator.AMPLITUDE, "tot": Indicator.TOTAL}
_CODE_RE = re.compile(r"^(t|rh|w|ghi|dhi|bni|sun|okta)(mean|max|min|amp|tot)$")


@dataclass(frozen=True)
class Predicate:
    variable: Var
    kind: Indicator
    lo: float = -math.inf
    hi: float = math.inf

    def __post_init__(self):
        if self.lo > self.hi:
            raise SynthmetError(f"predicate min {self.lo} > max {self.hi}")

    @property
    def code(self) -> str:
        return f"{self.variable.value}.{self.kind.value}"

    def holds(self, x):
        return (x >= self.lo) & (x <= self.hi)

    def distance(self, x):
        if math.isinf(self.lo) or math.isinf(self.hi) or self.hi == self.lo:
            return np.zeros_like(np.asarray(x, dtype=float))
        mid, half = 0.5 * (self.lo + self.hi), 0.5 * (self.hi - self.lo)
        return np.abs(np.asarray(x) - mid) / half


@dataclass(frozen=True)
class SequenceCriteria:
    length: int
    predicates: tuple = ()
    classify_vars: tuple = ()
    allow_overlap: bool = True
    k: int | None = None

    def __post_init__(self):
        if self.length < 1:
            raise SynthmetError("window length must be >= 1")


def parse_predicate(text: str) -> Predicate:
    """``code:min:max`` with code like ``tmean`` or ``temp_C.mean``; empty bound = unbounded."""
    parts = text.strip().split(":")
    if len(parts) != 3:
        raise SynthmetError(f"criterion {text!r} is not code:min:max")
    code, lo, hi = (p.strip() for p in parts)
    m = _CODE_RE.match(code.lower())
    if m:
        var, kind = _CODE_VARS[m.group(1)], _CODE_KINDS[m.group(2)]
    elif "." in code:
        v, k = code.rsplit(".", 1)
        var, kind = Var.parse(v), Indicator.parse(k)
    else:
        raise SynthmetError(f"unknown criterion code {code!r}")
    if kind is Indicator.TOTAL and not var.is_radiation:
        raise SynthmetError(f"daily-total is only defined for radiation ({code!r})")
    try:
        lo_v = float(lo) if lo else -math.inf
        hi_v = float(hi) if hi else math.inf
    except ValueError:
        raise SynthmetError(f"bad bounds in criterion {text!r}") from None
    return Predicate(var, kind, lo_v, hi_v)


def parse_criteria(text: str) -> tuple:
    return tuple(parse_predicate(p) for p in text.split(",") if p.strip())


@dataclass(frozen=True)
class SequenceMatch:
    start: np.datetime64
    length: int
    achieved: dict
    distance: float
    class_id: int | None = None
    frequency: float | None = None

    def to_row(self):
        return [str(self.start), self.length, repr(float(self.distance))] + \
            [repr(float(v)) for v in self.achieved.values()]


def _window_starts(dates: np.ndarray, L: int) -> np.ndarray:
    """Positions i such that dates[i:i+L] are L consecutive calendar days."""
    n = dates.size
    if n < L:
        return np.zeros(0, dtype=int)
    d = dates.astype("datetime64[D]").astype(np.int64)
    i = np.arange(n - L + 1)
    return i[d[i + L - 1] - d[i] == L - 1]


def _drop_overlaps(matches, L):
    taken, out = [], []
    for m in matches:
        s = m.start.astype(np.int64)
        if all(abs(s - t) >= L for t in taken):
            taken.append(s)
            out.append(m)
    return out


def search_sequences(series: WeatherSeries, criteria: SequenceCriteria) -> list:
    """Windows of ``criteria.length`` consecutive complete days meeting every predicate.

    Achieved values are window means of the daily indicators. Results are
    ranked by summed normalised distance to the predicate midpoints, then by
    date. Without numeric predicates the days are classified on
    ``classify_vars`` and one window per class is returned, starting at its
    representative day, ranked by class frequency.
    """
    L = criteria.length
    if not criteria.predicates:
        return _search_by_class(series, criteria)
    variables = sorted({p.variable for p in criteria.predicates}, key=lambda v: v.value)
    for v in variables:
        if v not in series.columns:
            raise SynthmetError(f"variable {v.value} not present in series")
    dates, idx, _ = series.complete_days(*variables)
    starts = _window_starts(dates, L)
    if starts.size == 0:
        return []
    ok = np.ones(starts.size, dtype=bool)
    dist = np.zeros(starts.size)
    achieved = {}
    for p in criteria.predicates:
        daily = _reduce(series[p.variable][idx], p.kind)
        c = np.concatenate([[0.0], np.cumsum(daily)])
        a = (c[starts + L] - c[starts]) / L
        achieved[p.code] = a
        ok &= p.holds(a)
        dist += p.distance(a)
    sel = np.flatnonzero(ok)
    sel = sel[np.lexsort((starts[sel], dist[sel]))]
    out = [SequenceMatch(dates[starts[i]], L, {k: float(v[i]) for k, v in achieved.items()}, float(dist[i]))
           for i in sel]
    return out if criteria.allow_overlap else _drop_overlaps(out, L)


def _search_by_class(series: WeatherSeries, criteria: SequenceCriteria) -> list:
    if not criteria.classify_vars:
        raise SynthmetError("give numeric predicates or variables to classify on")
    L = criteria.length
    rep = representative_days(series, criteria.classify_vars, criteria.k)
    report = rep.joint if rep.joint is not None else next(iter(rep.per_variable.values()))
    dates = report.dates
    starts = set(_window_starts(dates, L).tolist())
    scores = np.hstack([_scaled_block(report.pca[v].retained_scores) for v in report.variables]) \
        if len(report.variables) > 1 else report.pca[report.variables[0]].retained_scores
    out = []
    for c in report.classes:
        d2 = ((scores[c.members] - c.centroid) ** 2).sum(axis=1)
        for m in c.members[np.argsort(d2, kind="stable")]:
            if int(m) in starts:
                out.append(SequenceMatch(dates[m], L, {"frequency": c.frequency}, float(1.0 - c.frequency),
                                         c.label, c.frequency))
                break
    out.sort(key=lambda m: (m.distance, m.start))
    return out if criteria.allow_overlap else _drop_overlaps(out, L)

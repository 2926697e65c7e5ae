"""Summary tables, histograms and the chi-square dependence test."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc

from .errors import InsufficientDataError, SynthmetError
from .weather import DailyIndicator


@dataclass(frozen=True)
class SummaryTable:
    variable: str
    kind: str
    period: str
    mean: float
    min: float
    max: float
    sd: float
    count: int

    def to_dict(self):
        return dict(self.__dict__)

    def format(self) -> str:
        rows = [("variable", self.variable), ("indicator", self.kind),
                ("period", self.period or "all"), ("count", str(self.count)),
                ("mean", f"{self.mean:.4f}"), ("min", f"{self.min:.4f}"),
                ("max", f"{self.max:.4f}"), ("sd", f"{self.sd:.4f}")]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v:>14}" for k, v in rows) + "\n"


def summarize(indicator: DailyIndicator) -> SummaryTable:
    """Sample statistics of a daily indicator (sd with n-1 denominator; 0 for n=1)."""
    x = np.asarray(indicator.values, dtype=float)
    if x.size == 0:
        raise InsufficientDataError("empty indicator")
    sd = float(x.std(ddof=1)) if x.size > 1 else 0.0
    mean = float(x.mean())
    # keep min <= mean <= max under rounding of constant samples
    mn, mx = float(x.min()), float(x.max())
    mean = min(max(mean, mn), mx)
    return SummaryTable(indicator.variable.value, indicator.kind.value, indicator.period,
                        mean, mn, mx, sd, int(x.size))


@dataclass(frozen=True, eq=False)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.counts.sum()

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("bin_low,bin_high,count,frequency\n")
            for lo, hi, c, f in zip(self.edges[:-1], self.edges[1:], self.counts, self.frequencies):
                fh.write(f"{lo!r},{hi!r},{int(c)},{f!r}\n")

    def to_dict(self):
        return {"edges": self.edges.tolist(), "counts": self.counts.tolist(),
                "frequencies": self.frequencies.tolist()}


def histogram(values, bins=10, range=None) -> Histogram:
    """Bin ``values`` on right-open intervals, the last bin closed.

    ``bins`` is either a bin count (equal-width edges over ``range`` or the
    data extent) or an ascending sequence of edges.
    """
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise InsufficientDataError("histogram needs at least one value")
    if not np.all(np.isfinite(x)):
        raise SynthmetError("histogram input contains non-finite values")
    if np.ndim(bins) == 0:
        nbins = int(bins)
        if nbins < 1:
            raise SynthmetError("bins must be >= 1")
        if range is not None:
            lo, hi = map(float, range)
            if not hi > lo:
                raise SynthmetError("zero-width histogram range")
        else:
            lo, hi = float(x.min()), float(x.max())
            if lo == hi:
                lo, hi = lo - 0.5, hi + 0.5
        edges = np.linspace(lo, hi, nbins + 1)
    else:
        edges = np.asarray(bins, dtype=float)
        if edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise SynthmetError("bin edges must be strictly ascending")
    counts, _ = np.histogram(x, bins=edges)
    return Histogram(edges, counts.astype(np.int64))


@dataclass(frozen=True, eq=False)
class ContingencyResult:
    table: np.ndarray
    expected: np.ndarray
    chi2: float
    dof: int
    p_value: float
    row_edges: np.ndarray | None = None
    col_edges: np.ndarray | None = None

    def to_dict(self):
        d = {"table": self.table.tolist(), "expected": self.expected.tolist(),
             "chi2": self.chi2, "dof": self.dof, "p_value": self.p_value}
        if self.row_edges is not None:
            d["row_edges"] = self.row_edges.tolist()
            d["col_edges"] = self.col_edges.tolist()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def format(self) -> str:
        lines = ["contingency table (rows: first indicator, cols: second)"]
        for row in self.table:
            lines.append("  " + " ".join(f"{int(c):>7d}" for c in row))
        lines.append(f"chi2     {self.chi2:.4f}")
        lines.append(f"dof      {self.dof}")
        lines.append(f"p_value  {self.p_value:.4g}")
        return "\n".join(lines) + "\n"


def chi2_pvalue(chi2: float, dof: int) -> float:
    """Upper-tail probability of the chi-square law, Q(dof/2, chi2/2)."""
    if dof < 1:
        raise SynthmetError("dof must be >= 1")
    return float(gammaincc(dof / 2.0, max(chi2, 0.0) / 2.0))


def chi2_from_table(table) -> ContingencyResult:
    obs = np.asarray(table, dtype=float)
    if obs.ndim != 2 or min(obs.shape) < 2:
        raise SynthmetError("contingency table must be at least 2x2")
    total = obs.sum()
    rows, cols = obs.sum(axis=1), obs.sum(axis=0)
    if np.any(rows == 0) or np.any(cols == 0):
        raise SynthmetError("contingency table has an empty margin")
    expected = np.outer(rows, cols) / total
    chi2 = float(((obs - expected) ** 2 / expected).sum())
    dof = (obs.shape[0] - 1) * (obs.shape[1] - 1)
    return ContingencyResult(obs, expected, chi2, dof, chi2_pvalue(chi2, dof))


def tercile_edges(x, n=3):
    x = np.asarray(x, dtype=float)
    q = np.quantile(x, np.linspace(0, 1, n + 1))
    q[0], q[-1] = x.min(), x.max()
    return q


def _bin_index(x, edges):
    # right-open bins, last closed, values beyond edges go to the end bins
    idx = np.searchsorted(edges, x, side="right") - 1
    return np.clip(idx, 0, len(edges) - 2)


def _merge_empty(counts_1d, edges):
    """Merge empty bins into a neighbour; return the surviving edge list."""
    edges = list(edges)
    counts = list(counts_1d)
    i = 0
    while i < len(counts):
        if counts[i] == 0 and len(counts) > 1:
            if i < len(counts) - 1:
                counts[i + 1] += counts[i]
                del edges[i + 1]
            else:
                counts[i - 1] += counts[i]
                del edges[i]
            del counts[i]
            continue
        i += 1
    return np.asarray(edges)


def chi2_independence(a: DailyIndicator, b: DailyIndicator, bins_a=3, bins_b=3) -> ContingencyResult:
    """Chi-square test of independence between two daily indicators.

    Integer bin counts use quantile edges (terciles by default); empty bins are
    merged into their neighbours before the table is built.
    """
    xa, xb = np.asarray(a.values, float), np.asarray(b.values, float)
    if getattr(a, "dates", None) is not None and getattr(b, "dates", None) is not None \
            and len(a.dates) == len(b.dates) and not np.array_equal(a.dates, b.dates):
        raise SynthmetError("indicators cover different days")
    if xa.size != xb.size:
        raise SynthmetError("indicators must have the same day count")
    ea = tercile_edges(xa, bins_a) if np.ndim(bins_a) == 0 else np.asarray(bins_a, float)
    eb = tercile_edges(xb, bins_b) if np.ndim(bins_b) == 0 else np.asarray(bins_b, float)
    ea = _merge_empty(np.bincount(_bin_index(xa, ea), minlength=len(ea) - 1), ea)
    eb = _merge_empty(np.bincount(_bin_index(xb, eb), minlength=len(eb) - 1), eb)
    if len(ea) < 3 or len(eb) < 3:
        raise SynthmetError("fewer than 2 non-empty bins in a margin")
    ia, ib = _bin_index(xa, ea), _bin_index(xb, eb)
    table = np.zeros((len(ea) - 1, len(eb) - 1))
    np.add.at(table, (ia, ib), 1)
    res = chi2_from_table(table)
    return ContingencyResult(res.table, res.expected, res.chi2, res.dof, res.p_value, ea, eb)

"""Distribution laws: Weibull for wind speed, bounded Beta law for daily kt."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats
from scipy.special import gamma as gamma_fn

from ..errors import ConvergenceError, InsufficientDataError, SynthmetError


@dataclass(frozen=True)
class WeibullLaw:
    shape: float
    scale: float
    n: int = 0
    zero_fraction: float = 0.0
    iterations: int = 0
    variable: str = "wind_ms"
    period: str = ""
    site: str = ""

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise SynthmetError("Weibull shape and scale must be positive")

    @property
    def mean(self) -> float:
        return self.scale * gamma_fn(1.0 + 1.0 / self.shape)

    @property
    def support(self):
        return (0.0, math.inf)

    def cdf(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return 1.0 - np.exp(-(x / self.scale) ** self.shape)

    def ppf(self, p):
        p = np.asarray(p, dtype=float)
        return self.scale * (-np.log1p(-p)) ** (1.0 / self.shape)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        k, lam = self.shape, self.scale
        return np.where(x >= 0, k / lam * (x / lam) ** (k - 1) * np.exp(-(x / lam) ** k), 0.0)

    def sample(self, rng, size):
        return self.scale * rng.weibull(self.shape, size)

    def to_dict(self):
        return {"kind": "weibull", **asdict(self)}

    @classmethod
    def from_dict(cls, d):
        d = {k: v for k, v in d.items() if k != "kind"}
        return cls(**d)


def fit_weibull(values, min_n: int = 100, tol: float = 1e-8, max_iter: int = 100) -> WeibullLaw:
    """Maximum-likelihood Weibull fit of strictly positive wind speeds.

    Zeros are dropped (their fraction is kept on the law). The shape solves the
    profile-likelihood equation by Newton iteration started from the moment
    estimator ``(sd/mean)**-1.086``.
    """
    x = np.asarray(values, dtype=float)
    x = x[np.isfinite(x)]
    if x.size == 0 or not np.any(x > 0):
        raise InsufficientDataError("no strictly positive value to fit")
    pos = x[x > 0]
    if pos.size < min_n:
        raise InsufficientDataError(f"{pos.size} positive values, need {min_n}")
    zero_fraction = 1.0 - pos.size / x.size

    ref = pos.mean()
    lnx = np.log(pos / ref)
    mean_ln = lnx.mean()
    cv = pos.std() / ref
    k = cv ** -1.086 if cv > 0 else 10.0
    for it in range(1, max_iter + 1):
        # scaled powers; subtract the max exponent to stay finite for large k
        e = k * lnx
        w = np.exp(e - e.max())
        A, B, C = w.sum(), (w * lnx).sum(), (w * lnx * lnx).sum()
        g = B / A - 1.0 / k - mean_ln
        dg = (C * A - B * B) / (A * A) + 1.0 / (k * k)
        step = g / dg
        k_new = k - step
        if k_new <= 0:
            k_new = k / 2.0
        if abs(k_new - k) < tol:
            k = k_new
            break
        k = k_new
    else:
        raise ConvergenceError("Weibull shape did not converge in 100 iterations", best=k)
    e = k * lnx
    scale = ref * float(np.exp((np.log(np.mean(np.exp(e - e.max()))) + e.max()) / k))
    return WeibullLaw(float(k), scale, int(pos.size), float(zero_fraction), it)


@dataclass(frozen=True)
class ClearnessLaw:
    """Beta density of daily kt rescaled to ``[kt_min, kt_max]``."""

    kt_min: float
    kt_max: float
    alpha: float
    beta: float
    climate: str = "tropical"
    mean_kt: float = float("nan")
    n: int = 0
    variable: str = "kt"
    period: str = ""
    site: str = ""

    def __post_init__(self):
        if not 0.0 <= self.kt_min < self.kt_max <= 1.0:
            raise SynthmetError("clearness support must satisfy 0 <= min < max <= 1")
        if not (self.alpha > 0 and self.beta > 0):
            raise SynthmetError("Beta parameters must be positive")
        if self.climate not in ("tropical", "temperate"):
            raise SynthmetError("climate must be 'tropical' or 'temperate'")

    @property
    def _dist(self):
        return stats.beta(self.alpha, self.beta, loc=self.kt_min, scale=self.kt_max - self.kt_min)

    @property
    def support(self):
        return (self.kt_min, self.kt_max)

    @property
    def mean(self) -> float:
        return self.kt_min + (self.kt_max - self.kt_min) * self.alpha / (self.alpha + self.beta)

    def pdf(self, x):
        return self._dist.pdf(x)

    def cdf(self, x):
        return self._dist.cdf(x)

    def ppf(self, p):
        return np.clip(self._dist.ppf(p), self.kt_min, self.kt_max)

    def sample(self, rng, size):
        return self.kt_min + (self.kt_max - self.kt_min) * rng.beta(self.alpha, self.beta, size)

    def to_dict(self):
        return {"kind": "clearness", **asdict(self)}

    @classmethod
    def from_dict(cls, d):
        d = {k: v for k, v in d.items() if k != "kind"}
        return cls(**d)


def fit_clearness_law(kt_daily, climate: str = "tropical", min_n: int = 30, pad: float = 0.02) -> ClearnessLaw:
    """Method-of-moments Beta law on the padded sample range."""
    x = np.asarray(kt_daily, dtype=float)
    x = x[np.isfinite(x)]
    x = x[(x > 0) & (x < 1)]
    if x.size < min_n:
        raise InsufficientDataError(f"{x.size} daily kt values in (0, 1), need {min_n}")
    lo = max(0.0, float(x.min()) - pad)
    hi = min(1.0, float(x.max()) + pad)
    u = (x - lo) / (hi - lo)
    m, v = float(u.mean()), float(u.var())
    if v <= 0:
        raise SynthmetError("degenerate clearness sample (zero variance)")
    common = m * (1.0 - m) / v - 1.0
    if common <= 0:
        raise SynthmetError("sample variance too large for a Beta law")
    return ClearnessLaw(lo, hi, m * common, (1.0 - m) * common, climate, float(x.mean()), int(x.size))


def law_from_dict(d):
    kind = d.get("kind")
    if kind == "weibull":
        return WeibullLaw.from_dict(d)
    if kind == "clearness":
        return ClearnessLaw.from_dict(d)
    raise SynthmetError(f"unknown law kind {kind!r}")

"""
Autoregressive models fitted by Yule-Walker / Levinson-Durbin, with optional
normal-score transform against a distribution law and optional per-hour-of-day
standardisation (removes the diurnal cycle before fitting).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter
from scipy.special import ndtr, ndtri
from scipy.stats import rankdata

from ..errors import InsufficientDataError, SynthmetError
from .laws import law_from_dict

WARMUP = 500
_EPS = 1e-9


def levinson_durbin(acf, order: int):
    """Solve the Yule-Walker equations for orders 0..``order``.

    Parameters
    ----------
    acf : array_like
        Autocovariances (or autocorrelations) at lags 0..order.

    Returns
    -------
    phis : list of ndarray
        ``phis[p]`` holds the AR(p) coefficients.
    variances : ndarray
        Innovation variance of each order, in the units of ``acf[0]``.
    """
    r = np.asarray(acf, dtype=float)
    if r.size < order + 1:
        raise SynthmetError("need autocovariances up to the requested order")
    if not r[0] > 0:
        raise SynthmetError("lag-0 autocovariance must be positive")
    phis = [np.zeros(0)]
    variances = [r[0]]
    phi = np.zeros(0)
    v = r[0]
    for k in range(1, order + 1):
        kappa = (r[k] - np.dot(phi, r[k - 1:0:-1])) / v
        phi = np.concatenate([phi - kappa * phi[::-1], [kappa]])
        v = v * (1.0 - kappa * kappa)
        phis.append(phi.copy())
        variances.append(v)
    return phis, np.array(variances)


def sample_acovf(x, nlags: int) -> np.ndarray:
    """Biased sample autocovariance (divides by n)."""
    x = np.asarray(x, dtype=float)
    x = x - x.mean()
    n = x.size
    return np.array([np.dot(x[: n - k], x[k:]) / n for k in range(nlags + 1)])


def _law_forward(law, x):
    p = np.clip(law.cdf(x), _EPS, 1.0 - _EPS)
    return ndtri(p)


def _law_inverse(law, z):
    return law.ppf(np.clip(ndtr(z), 0.0, 1.0))


@dataclass(frozen=True, eq=False)
class ARModel:
    coefs: tuple
    innovation_sd: float
    mean: float = 0.0
    scale: float = 1.0
    hourly_mean: tuple | None = None
    hourly_sd: tuple | None = None
    transform: object = None
    variable: str = ""
    n: int = 0
    aic: tuple = ()
    period: str = ""
    site: str = ""

    @property
    def order(self) -> int:
        return len(self.coefs)

    @property
    def sigma(self) -> float:
        """Innovation sd in the units of the (transformed) series."""
        return self.innovation_sd * (1.0 if self.hourly_mean is not None else self.scale)

    def roots(self) -> np.ndarray:
        if not self.coefs:
            return np.zeros(0)
        # 1 - phi_1 z - ... - phi_p z^p, highest power first
        poly = np.concatenate([-np.asarray(self.coefs)[::-1], [1.0]])
        return np.roots(poly)

    def is_stationary(self) -> bool:
        return bool(np.all(np.abs(self.roots()) > 1.0))

    def autocorrelation(self, max_lag: int) -> np.ndarray:
        """Theoretical autocorrelation of the standardised process at lags 0..max_lag."""
        p = self.order
        phi = np.asarray(self.coefs, dtype=float)
        rho = np.zeros(max(max_lag, p) + 1)
        rho[0] = 1.0
        if p:
            # rho_k = sum_i phi_i rho_|k-i| for k = 1..p
            A = np.eye(p)
            b = np.zeros(p)
            for k in range(1, p + 1):
                for i in range(1, p + 1):
                    lag = abs(k - i)
                    if lag == 0:
                        b[k - 1] += phi[i - 1]
                    else:
                        A[k - 1, lag - 1] -= phi[i - 1]
            rho[1:p + 1] = np.linalg.solve(A, b)
            for k in range(p + 1, rho.size):
                rho[k] = np.dot(phi, rho[k - 1::-1][:p])
        return rho[: max_lag + 1]

    # -- transforms between physical values and the standardised AR space

    def standardize(self, x, hours=None) -> np.ndarray:
        y = np.asarray(x, dtype=float)
        if self.transform is not None:
            y = _law_forward(self.transform, y)
        if self.hourly_mean is not None:
            h = _hours(hours, y.size)
            return (y - np.asarray(self.hourly_mean)[h]) / np.asarray(self.hourly_sd)[h]
        return (y - self.mean) / self.scale

    def to_physical(self, z, shift: float = 0.0, hours=None) -> np.ndarray:
        z = np.asarray(z, dtype=float) + shift
        if self.hourly_mean is not None:
            h = _hours(hours, z.size)
            y = z * np.asarray(self.hourly_sd)[h] + np.asarray(self.hourly_mean)[h]
        else:
            y = z * self.scale + self.mean
        if self.transform is not None:
            return _law_inverse(self.transform, y)
        return y

    def to_dict(self):
        return {
            "kind": "ar", "variable": self.variable, "order": self.order,
            "coefs": list(self.coefs), "innovation_sd": self.innovation_sd,
            "sigma": self.sigma, "mean": self.mean, "scale": self.scale,
            "hourly_mean": None if self.hourly_mean is None else list(self.hourly_mean),
            "hourly_sd": None if self.hourly_sd is None else list(self.hourly_sd),
            "transform": None if self.transform is None else self.transform.to_dict(),
            "n": self.n, "aic": list(self.aic), "period": self.period, "site": self.site,
        }

    @classmethod
    def from_dict(cls, d):
        hm, hs = d.get("hourly_mean"), d.get("hourly_sd")
        tr = d.get("transform")
        return cls(tuple(float(c) for c in d["coefs"]), float(d["innovation_sd"]),
                   float(d.get("mean", 0.0)), float(d.get("scale", 1.0)),
                   None if hm is None else tuple(hm), None if hs is None else tuple(hs),
                   None if tr is None else law_from_dict(tr), d.get("variable", ""),
                   int(d.get("n", 0)), tuple(d.get("aic", ())), d.get("period", ""), d.get("site", ""))


def _hours(hours, n):
    if hours is None:
        raise SynthmetError("this model is standardised per hour of day; pass hours")
    h = np.asarray(hours, dtype=int)
    if h.size == 1 and n > 1:
        # start hour given: consecutive hours from there
        h = (int(h) + np.arange(n)) % 24
    return h


def fit_ar(values, max_order: int = 3, transform=None, hours=None, variable: str = "",
           min_n: int = 200) -> ARModel:
    """Fit AR(p), p <= ``max_order``, choosing the order by minimum AIC.

    ``transform`` is a distribution law (with ``cdf``/``ppf``): values are
    normal-scored against it before fitting. ``hours`` (hour of day per value)
    switches to per-hour standardisation.
    """
    if not 0 <= max_order <= 3:
        raise SynthmetError("max_order must be in [0, 3]")
    x = np.asarray(values, dtype=float)
    if x.size < min_n:
        raise InsufficientDataError(f"{x.size} values, need {min_n}")
    if not np.all(np.isfinite(x)):
        raise SynthmetError("AR fitting needs a gap-free finite series")
    if np.ptp(x) == 0:
        raise SynthmetError("constant series")
    y = _law_forward(transform, x) if transform is not None else x
    hm = hs = None
    mean, scale = 0.0, 1.0
    if hours is not None:
        h = np.asarray(hours, dtype=int)
        if h.size != y.size:
            raise SynthmetError("hours must align with values")
        hm_arr = np.zeros(24)
        hs_arr = np.ones(24)
        for k in range(24):
            sel = y[h == k]
            if sel.size:
                hm_arr[k] = sel.mean()
                hs_arr[k] = max(sel.std(), 1e-6)
        z = (y - hm_arr[h]) / hs_arr[h]
        hm, hs = tuple(hm_arr.tolist()), tuple(hs_arr.tolist())
    else:
        mean, scale = float(y.mean()), float(y.std())
        if scale <= 0:
            raise SynthmetError("constant series after transform")
        z = (y - mean) / scale
    acov = sample_acovf(z, max_order)
    phis, variances = levinson_durbin(acov, max_order)
    n = z.size
    aic = n * np.log(variances) + 2 * np.arange(max_order + 1)
    p = int(np.argmin(aic))
    model = ARModel(tuple(float(c) for c in phis[p]), float(np.sqrt(variances[p])), mean, scale,
                    hm, hs, transform, variable, int(n), tuple(float(a) for a in aic))
    # Yule-Walker on a biased autocovariance is always stationary; verify anyway
    assert model.is_stationary(), "Yule-Walker produced a non-stationary model"
    return model


def simulate_standard(model: ARModel, n: int, seed=None, warmup: int = WARMUP) -> np.ndarray:
    """AR recursion in standardised space, after discarding ``warmup`` steps."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    e = rng.standard_normal(n + warmup) * model.innovation_sd
    if model.order:
        z = lfilter([1.0], np.concatenate([[1.0], -np.asarray(model.coefs)]), e)
    else:
        z = e
    return z[warmup:]


def simulate_ar(model: ARModel, n: int, seed=None, shift: float = 0.0, hours=None) -> np.ndarray:
    """Simulate ``n`` values in physical units (inverse transform applied).

    ``shift`` is added in standardised space; ``hours`` gives the hour of day
    of each value (or the start hour) for per-hour standardised models.
    """
    if not model.is_stationary():
        raise SynthmetError("cannot simulate a non-stationary model")
    z = simulate_standard(model, n, seed)
    return model.to_physical(z, shift, hours)


class NormalScore:
    """Empirical normal-score map built from a sample."""

    def __init__(self, values):
        x = np.asarray(values, dtype=float)
        if x.size < 2 or np.ptp(x) == 0:
            raise SynthmetError("normal score needs at least two distinct values")
        ranks = rankdata(x, method="average")
        self.scores = ndtri((ranks - 0.5) / x.size)
        order = np.argsort(x, kind="stable")
        xs, zs = x[order], self.scores[order]
        self.knots_x, first = np.unique(xs, return_index=True)
        self.knots_z = zs[first]

    def forward(self, x):
        return np.interp(x, self.knots_x, self.knots_z)

    def inverse(self, z):
        return np.interp(z, self.knots_z, self.knots_x)

    __call__ = inverse


def normal_score(values):
    """Rank-based normal scores of ``values`` and the map back to data units."""
    ns = NormalScore(values)
    return ns.scores, ns

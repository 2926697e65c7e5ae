"""Generation of synthetic hourly sequences from a model library."""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from ..errors import ConvergenceError, LibraryError, SynthmetError
from ..physmod import add_derived_columns
from ..solar import evaluate_correlation, geometry_for_dates, profile_weights
from ..stochmod import ARModel, ClearnessLaw, WeibullLaw
from ..stochmod.ar import simulate_standard
from ..stochmod.mlp import run_mlp
from ..weather import Site, Var, WeatherSeries
from .library import ModelRegistry
from .plan import GenerationPlan, plan_variable, resolve_plan

MAX_CONDITION_ITER = 50
DEFAULT_TOLERANCE = {"kt": 0.02, "wind_ms": 0.2}
TARGET_RANGE = {"kt": (0.0, 1.0), "wind_ms": (0.0, 75.0)}
DEFAULT_VARIABLES = ("ghi_Whm2", "dhi_Whm2", "bni_Whm2", "wind_ms", "temp_C", "rh_pct", "sunfrac", "okta")

# hourly GHI perturbation: multiplicative AR(1)
GHI_PHI = 0.5
GHI_SIGMA = 0.08
GHI_FLOOR = -0.9
CLEAR_SKY_KT = 0.85
COSZ_MIN = 0.05
# conditioning aims inside the user tolerance so later clamping keeps the contract
INNER_TOL = 0.25


@dataclass(frozen=True)
class Target:
    variable: str
    value: float
    tolerance: float
    statistic: str = "daily mean"

    def __post_init__(self):
        if self.variable not in TARGET_RANGE:
            raise SynthmetError(f"targets are supported on kt and wind_ms, not {self.variable!r}")
        lo, hi = TARGET_RANGE[self.variable]
        if not lo <= self.value <= hi:
            raise SynthmetError(f"target {self.variable}={self.value} outside [{lo}, {hi}]")
        if not self.tolerance > 0:
            raise SynthmetError("target tolerance must be positive")

    @classmethod
    def parse(cls, text: str) -> "Target":
        """``var=value`` or ``var=value:tolerance``; ``wind`` is accepted for wind_ms."""
        m = re.fullmatch(r"\s*([A-Za-z_]+)\s*=\s*([-+0-9.eE]+)\s*(?::\s*([0-9.eE+-]+))?\s*", text)
        if not m:
            raise SynthmetError(f"bad target {text!r}; expected var=value[:tolerance]")
        var = plan_variable(m.group(1))
        value = float(m.group(2))
        tol = float(m.group(3)) if m.group(3) else DEFAULT_TOLERANCE.get(var, math.nan)
        return cls(var, value, tol)


@dataclass(frozen=True)
class GenerationRequest:
    site: Site
    n_days: int
    start: str = "2021-01-01"
    variables: tuple = DEFAULT_VARIABLES
    targets: tuple = ()
    seed: int = 0
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_days < 1:
            raise SynthmetError("n_days must be >= 1")
        seen = [t.variable for t in self.targets]
        if len(set(seen)) != len(seen):
            raise SynthmetError("one target per variable")


@dataclass(frozen=True)
class ConditionResult:
    values: np.ndarray
    shift: float
    achieved: float
    iterations: int


def ar_for_law(law, variable: str = "") -> ARModel:
    """Independent draws from ``law`` expressed as an AR(0) model."""
    return ARModel((), 1.0, 0.0, 1.0, transform=law, variable=variable or law.variable)


def condition_to_target(model, n: int, target: float | None, tolerance: float, seed=None,
                        hours=None, max_iter: int = MAX_CONDITION_ITER) -> ConditionResult:
    """Simulate ``n`` values whose mean is within ``tolerance`` of ``target``.

    One standardised AR path is drawn and shifted; the shift is found by
    secant steps, falling back to bisection once the target is bracketed.
    ``target=None`` returns the unshifted simulation.
    """
    if isinstance(model, (WeibullLaw, ClearnessLaw)):
        model = ar_for_law(model)
    law = model.transform
    if target is not None and law is not None:
        lo, hi = law.support
        if not lo < target < hi:
            raise SynthmetError(f"target {target} outside the law support [{lo}, {hi}]")
    z = simulate_standard(model, n, seed)

    def f(s):
        return float(np.mean(model.to_physical(z, s, hours)))

    s0, f0 = 0.0, f(0.0)
    if target is None or abs(f0 - target) <= tolerance:
        return ConditionResult(model.to_physical(z, 0.0, hours), 0.0, f0, 1)
    best = (abs(f0 - target), 0.0, f0)
    lo = hi = None  # bracket on the shift: f(lo) < target < f(hi)
    if f0 < target:
        lo = (s0, f0)
    else:
        hi = (s0, f0)
    s1 = 0.5 if f0 < target else -0.5
    prev = (s0, f0)
    for it in range(2, max_iter + 1):
        f1 = f(s1)
        if abs(f1 - target) < best[0]:
            best = (abs(f1 - target), s1, f1)
        if abs(f1 - target) <= tolerance:
            return ConditionResult(model.to_physical(z, s1, hours), s1, f1, it)
        if f1 < target and (lo is None or s1 > lo[0]):
            lo = (s1, f1)
        if f1 > target and (hi is None or s1 < hi[0]):
            hi = (s1, f1)
        # secant step from the two latest points
        denom = f1 - prev[1]
        step = abs(s1 - prev[0])
        nxt = s1 - (f1 - target) * (s1 - prev[0]) / denom if denom != 0 else math.nan
        prev = (s1, f1)
        if lo is not None and hi is not None:
            if not (lo[0] < nxt < hi[0]):
                nxt = 0.5 * (lo[0] + hi[0])
        elif not math.isfinite(nxt) or abs(nxt - s1) > 4.0 * max(1.0, step) \
                or (nxt - s1) * (target - f1) <= 0:
            # no bracket yet: expand geometrically in the right direction
            nxt = s1 + (2.0 * step + 0.5) * (1 if f1 < target else -1)
        s1 = nxt
    raise ConvergenceError(f"target {target} not reached in {max_iter} iterations "
                           f"(best {best[2]:.6g})", best=best[2])


def _ghi_hours(kt, geoms, rng, n_hours):
    """Hourly GHI with AR(1) perturbation, clipped to the clear-sky envelope,
    rescaled per day so the daily total keeps ``kt * H0``."""
    D = kt.size
    unit = np.array([g.H0_daily * profile_weights(g) for g in geoms])
    base = kt[:, None] * unit
    env = np.maximum(CLEAR_SKY_KT, kt)[:, None] * unit
    e = rng.standard_normal(n_hours) * GHI_SIGMA * math.sqrt(1 - GHI_PHI ** 2)
    eps = np.maximum(lfilter([1.0], [1.0, -GHI_PHI], e), GHI_FLOOR).reshape(D, 24)
    g = base * (1.0 + eps)
    total = base.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        c_hi = np.where(g > 0, env / g, 0.0).max(axis=1, keepdims=True)
    c_lo = np.zeros_like(c_hi)
    c_hi = np.maximum(c_hi, 1.0)
    for _ in range(80):
        c = 0.5 * (c_lo + c_hi)
        s = np.minimum(c * g, env).sum(axis=1, keepdims=True)
        low = s < total
        c_lo = np.where(low, c, c_lo)
        c_hi = np.where(low, c_hi, c)
    c = 0.5 * (c_lo + c_hi)
    out = np.minimum(c * g, env)
    clamped = int(np.sum(c * g > env))
    # remove the last bisection residual exactly on the unclamped hours
    s = out.sum(axis=1, keepdims=True)
    free = (c * g < env) & (out > 0)
    fsum = np.where(free, out, 0.0).sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        adj = np.where(fsum > 0, (total - s) / fsum, 0.0)
    out = np.where(free, out * (1.0 + adj), out)
    return out.ravel(), clamped


@dataclass(frozen=True, eq=False)
class GeneratedSequence:
    series: WeatherSeries
    achieved: dict
    clamp_counts: dict
    plan: GenerationPlan
    seed: int
    conditioning: dict
    daily_kt: np.ndarray

    def to_manifest(self) -> dict:
        return {
            "seed": self.seed,
            "plan": self.plan.to_dict(),
            "achieved": self.achieved,
            "clamp_counts": self.clamp_counts,
            "conditioning": self.conditioning,
            "n_hours": len(self.series),
            "columns": [v.value for v in self.series.variables],
        }


def _root_model(plan, var):
    p = plan.producer_of(var)
    if p is None or p.entry is None:
        raise LibraryError(f"the library has no model for the root variable {var}")
    m = p.entry.model
    if isinstance(m, ARModel):
        return m
    return ar_for_law(m, var)


def generate(request: GenerationRequest, registry: ModelRegistry, chooser=None) -> GeneratedSequence:
    targets = {t.variable: t for t in request.targets}
    plan = resolve_plan(registry, tuple(request.variables) + tuple(targets), request.overrides, chooser)
    n_days = request.n_days
    n = 24 * n_days
    dates = np.datetime64(request.start, "D") + np.arange(n_days)
    geoms = geometry_for_dates(request.site, dates)
    hours = np.arange(n) % 24
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(request.seed).spawn(5)]
    rng_kt, rng_ghi, rng_wind, rng_thermal, _ = streams

    state: dict = {}
    clamps: dict = {}
    conditioning: dict = {}
    cols: dict = {}
    h0h = np.concatenate([g.H0_hourly for g in geoms])
    h0d = np.array([g.H0_daily for g in geoms])

    for step in plan.steps:
        p = step.producer
        outs = step.outputs
        if p.kind == "root" and outs == ("kt",):
            model = _root_model(plan, "kt")
            t = targets.get("kt")
            r = condition_to_target(model, n_days, None if t is None else t.value,
                                    INNER_TOL * t.tolerance if t else 1.0, rng_kt)
            kt = np.clip(r.values, 0.0, 1.0)
            clamps["kt"] = int(np.sum(kt != r.values))
            state["kt"] = kt
            conditioning["kt"] = {"shift": r.shift, "iterations": r.iterations}
        elif p.kind == "root":
            model = _root_model(plan, "wind_ms")
            t = targets.get("wind_ms")
            hrs = 0 if model.hourly_mean is not None else None
            r = condition_to_target(model, n, None if t is None else t.value,
                                    INNER_TOL * t.tolerance if t else 1.0, rng_wind, hours=hrs)
            w = np.clip(r.values, 0.0, 40.0)
            clamps["wind_ms"] = int(np.sum(w != r.values))
            cols["wind_ms"] = w
            conditioning["wind_ms"] = {"shift": r.shift, "iterations": r.iterations}
        elif p.id == "hourly_profile":
            ghi, c = _ghi_hours(state["kt"], geoms, rng_ghi, n)
            clamps["ghi_Whm2"] = c
            cols["ghi_Whm2"] = ghi
        elif p.id == "hourly_clearness":
            with np.errstate(divide="ignore", invalid="ignore"):
                kth = np.where(h0h > 0, cols["ghi_Whm2"] / h0h, 0.0)
            clamps["kt_h"] = int(np.sum(kth > 1.0))
            state["kt_h"] = np.clip(kth, 0.0, 1.0)
        elif p.kind == "correlation":
            model = p.entry.model
            X = {q: state[q] for q in model.inputs}
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                res = evaluate_correlation(model, X)
            state[model.output] = res.value
            clamps[model.output] = int(res.n_clamped)
            if res.out_of_domain:
                conditioning.setdefault("out_of_domain", []).append(p.entry.id)
        elif p.id == "diffuse_from_hourly_fraction":
            cols["dhi_Whm2"] = np.where(cols["ghi_Whm2"] > 0, state["fd_h"] * cols["ghi_Whm2"], 0.0)
        elif p.id == "diffuse_from_daily_fraction":
            cols["dhi_Whm2"] = np.repeat(state["fd"], 24) * cols["ghi_Whm2"]
        elif p.id == "beam_normal":
            cz = np.concatenate([g.cos_zenith_hourly for g in geoms])
            with np.errstate(divide="ignore", invalid="ignore"):
                bni = np.where(cz > COSZ_MIN, (cols["ghi_Whm2"] - cols["dhi_Whm2"]) / cz, 0.0)
            clamps["bni_Whm2"] = int(np.sum(bni > 1500.0))
            cols["bni_Whm2"] = np.clip(bni, 0.0, 1500.0)
        elif p.id == "insolation_profile":
            frac = np.concatenate([g.daylight_fraction for g in geoms])
            cols["sunfrac"] = np.clip(np.repeat(state["sunfrac_d"], 24) * frac, 0.0, 1.0)
        elif p.id == "nebulosity":
            cols["okta"] = np.clip(np.repeat(state["okta_d"], 24), 0.0, 8.0)
        elif p.kind == "mlp":
            model = p.entry.model
            if "mlp" not in state:
                sd = model.val_rmse * model.y_sd if np.isfinite(model.val_rmse) else np.zeros(2)
                noise = rng_thermal.standard_normal((n, 2)) * sd
                state["mlp"] = run_mlp(model, hours, cols["ghi_Whm2"], cols["wind_ms"],
                                       float(model.y_mean[0]), float(model.y_mean[1]), noise)
            T, RH = state["mlp"]
            for o in outs:
                cols[o] = T if o == "temp_C" else RH
        elif p.kind == "ar":
            model = p.entry.model
            (o,) = outs
            hrs = 0 if model.hourly_mean is not None else None
            x = model.to_physical(simulate_standard(model, n, rng_thermal), 0.0, hrs)
            lo, hi = (-40.0, 60.0) if o == "temp_C" else (0.0, 100.0)
            clamps[o] = int(np.sum((x < lo) | (x > hi)))
            cols[o] = np.clip(x, lo, hi)
        elif p.id in ("psychrometrics", "sky_temperature"):
            pass  # appended after the base columns exist
        else:  # pragma: no cover - plan and executor out of sync
            raise SynthmetError(f"no executor for plan step {p.id}")

    emit = [v for v in plan.requested if v in cols]
    series = WeatherSeries.hourly(request.site, f"{request.start}T00",
                                  {Var(v): cols[v] for v in emit})
    derived = [v for v in plan.requested if v in ("tdew_C", "e_Pa", "w_kgkg", "h_kJkg", "tsky_C")
               and v in plan.produced]
    if derived:
        base = WeatherSeries.hourly(request.site, f"{request.start}T00",
                                    {Var(v): cols[v] for v in ("temp_C", "rh_pct", "okta") if v in cols})
        full = add_derived_columns(base)
        series = series.with_columns(**{v: full[Var(v)] for v in derived})

    achieved = {}
    daily_kt = np.array([])
    if "ghi_Whm2" in cols:
        daily_kt = cols["ghi_Whm2"].reshape(n_days, 24).sum(axis=1) / np.where(h0d > 0, h0d, np.nan)
        achieved["kt"] = float(np.nanmean(daily_kt))
    elif "kt" in state:
        daily_kt = state["kt"]
        achieved["kt"] = float(np.mean(daily_kt))
    if "wind_ms" in cols:
        achieved["wind_ms"] = float(np.mean(cols["wind_ms"]))
    for t in request.targets:
        a = achieved.get(t.variable)
        if a is None or abs(a - t.value) > t.tolerance:
            raise ConvergenceError(f"target {t.variable}={t.value} missed (achieved {a})", best=a)
    return GeneratedSequence(series, achieved, clamps, plan, request.seed, conditioning, daily_kt)

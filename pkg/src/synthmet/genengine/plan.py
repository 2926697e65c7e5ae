"""Resolve which variables can be generated, in what order and by which model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..errors import SynthmetError
from ..solar import QUANTITIES
from ..weather import Var
from .library import LibraryEntry, ModelRegistry

ROOTS = ("kt", "wind_ms")

# Built-in producers: (id, inputs, outputs). Order is the preference order
# when two built-ins can produce the same variable.
BUILTINS = (
    ("hourly_profile", ("kt",), ("ghi_Whm2",)),
    ("hourly_clearness", ("ghi_Whm2",), ("kt_h",)),
    ("diffuse_from_hourly_fraction", ("fd_h", "ghi_Whm2"), ("dhi_Whm2",)),
    ("diffuse_from_daily_fraction", ("fd", "ghi_Whm2"), ("dhi_Whm2",)),
    ("beam_normal", ("ghi_Whm2", "dhi_Whm2"), ("bni_Whm2",)),
    ("insolation_profile", ("sunfrac_d",), ("sunfrac",)),
    ("nebulosity", ("okta_d",), ("okta",)),
    ("psychrometrics", ("temp_C", "rh_pct"), ("tdew_C", "e_Pa", "w_kgkg", "h_kJkg")),
    ("sky_temperature", ("temp_C", "rh_pct", "okta"), ("tsky_C",)),
)

# What kind of library model could produce a variable, for unreachable reports.
_HINTS = {
    "kt": "a clearness law or an ar model of kt",
    "wind_ms": "a weibull law or an ar model of wind_ms",
    "temp_C": "an mlp model or an ar model of temp_C",
    "rh_pct": "an mlp model or an ar model of rh_pct",
    "fd_h": "a correlation producing fd_h",
    "fd": "a correlation producing fd",
    "sunfrac_d": "a correlation producing sunfrac_d",
    "okta_d": "a correlation producing okta_d",
    "winddir_deg": "nothing (wind direction is not modelled)",
}


@dataclass(frozen=True)
class Producer:
    id: str
    kind: str                  # root | builtin | correlation | mlp | ar
    inputs: tuple
    outputs: tuple
    rmse: float = math.nan
    entry: LibraryEntry | None = field(default=None, compare=False)

    @property
    def sort_rmse(self) -> float:
        return math.inf if math.isnan(self.rmse) else self.rmse


@dataclass(frozen=True)
class PlanStep:
    producer: Producer
    outputs: tuple

    def describe(self) -> str:
        src = self.producer.entry.id if self.producer.entry is not None else self.producer.id
        ins = ", ".join(self.producer.inputs) or "-"
        return f"{self.producer.kind}:{src} ({ins} -> {', '.join(self.outputs)})"

    def to_dict(self):
        p = self.producer
        return {"kind": p.kind, "id": p.entry.id if p.entry is not None else p.id,
                "inputs": list(p.inputs), "outputs": list(self.outputs),
                "rmse": None if math.isnan(p.rmse) else p.rmse}


@dataclass(frozen=True)
class GenerationPlan:
    steps: tuple
    requested: tuple
    unreachable: dict

    def producer_of(self, variable) -> Producer | None:
        for s in self.steps:
            if variable in s.outputs:
                return s.producer
        return None

    @property
    def produced(self) -> list:
        return [v for s in self.steps for v in s.outputs]

    def to_dict(self):
        return {"requested": list(self.requested), "steps": [s.to_dict() for s in self.steps],
                "unreachable": {k: list(v) for k, v in self.unreachable.items()}}

    def check_sound(self):
        """Every step reads only variables produced by earlier steps."""
        seen = set()
        for s in self.steps:
            missing = [i for i in s.producer.inputs if i not in seen]
            if missing:
                raise SynthmetError(f"plan step {s.describe()} reads {missing} before they exist")
            seen.update(s.outputs)


def plan_variable(name) -> str:
    """Canonical plan name of a weather column or correlation quantity."""
    if str(name).strip().lower() in ("kt", "clearness"):
        return "kt"
    if name in QUANTITIES:
        return name
    try:
        return Var.parse(name).value
    except SynthmetError:
        raise SynthmetError(f"unknown variable {name!r}") from None


def _root_producer(var, entries, override, chooser):
    cands = [e for e in entries if var in e.outputs and e.kind in
             (("clearness", "ar") if var == "kt" else ("weibull", "ar"))]
    chosen = None
    if override is not None:
        chosen = _find_override(var, cands, override)
    elif len(cands) > 1 and chooser is not None:
        chosen = _ask(chooser, var, cands)
    elif cands:
        # an AR model (persistence) is preferred over a bare law
        chosen = sorted(cands, key=lambda e: (e.kind != "ar", e.id))[0]
    return Producer(f"root:{var}", "root", (), (var,), entry=chosen)


def _find_override(var, cands, override):
    for e in cands:
        if e.id == override:
            return e
    raise SynthmetError(f"override {override!r} does not name a usable model producing {var}")


def _ask(chooser, var, cands):
    pick = chooser(var, list(cands))
    for e in cands:
        if e is pick or e.id == pick:
            return e
    raise SynthmetError(f"chooser returned {pick!r}, not a candidate for {var}")


def resolve_plan(registry: ModelRegistry, variables, overrides=None, chooser=None) -> GenerationPlan:
    """Plan the generation of ``variables`` from ``registry``.

    Roots ``kt`` and ``wind_ms`` are always available (their model is
    attached when the library has one). Among several models producing one
    variable the override wins, else ``chooser(variable, entries)`` when
    given, else the lowest recorded rmse. Unreachable requested variables
    are reported with what blocks them.
    """
    overrides = {plan_variable(k): v for k, v in (overrides or {}).items()}
    requested = tuple(dict.fromkeys(plan_variable(v) for v in variables))
    entries = list(registry)

    # the chooser is consulted for a root only once the root is known to be needed
    producers = [_root_producer(v, entries, overrides.get(v), None) for v in ROOTS]
    producers += [Producer(i, "builtin", ins, outs) for i, ins, outs in BUILTINS]
    for e in entries:
        if e.kind in ("correlation", "mlp") or (e.kind == "ar" and e.outputs[0] not in ROOTS):
            outs = tuple(o for o in e.outputs if o not in ROOTS)
            if outs:
                producers.append(Producer(e.id, e.kind, e.inputs, outs, e.rmse, e))

    # reachability closure
    reach = set(ROOTS)
    changed = True
    while changed:
        changed = False
        for p in producers:
            if set(p.inputs) <= reach and not set(p.outputs) <= reach:
                reach.update(p.outputs)
                changed = True

    # default selection per variable: override, else lowest rmse
    selected = {}
    lib_cands = {}
    for var in sorted(reach):
        cands = [p for p in producers if var in p.outputs and set(p.inputs) <= reach]
        if var in ROOTS:
            selected[var] = cands[0]
            continue
        lib = [p for p in cands if p.entry is not None]
        lib_cands[var] = lib
        if var in overrides:
            selected[var] = _override_producer(var, lib, overrides[var])
        elif lib:
            selected[var] = sorted(lib, key=lambda p: (p.sort_rmse, p.id))[0]
        else:
            selected[var] = cands[0]

    def needed():
        need, stack = set(), [v for v in requested if v in reach]
        while stack:
            v = stack.pop()
            if v not in need:
                need.add(v)
                stack.extend(selected[v].inputs)
        return need

    need = needed()
    if chooser is not None:
        # ask only about needed variables, roots first; a new choice may
        # change what is needed, so repeat until nothing new comes up
        asked = set()
        while True:
            todo = sorted((need - asked) - set(overrides), key=lambda v: (v not in ROOTS, v))
            if not todo:
                break
            for v in todo:
                asked.add(v)
                if v in ROOTS:
                    i = ROOTS.index(v)
                    producers[i] = selected[v] = _root_producer(v, entries, None, chooser)
                elif len(lib_cands.get(v, ())) > 1:
                    e = _ask(chooser, v, [p.entry for p in lib_cands[v]])
                    selected[v] = next(p for p in lib_cands[v] if p.entry is e)
            need = needed()

    # order steps: a producer runs once its inputs exist; one step per producer
    steps, done = [], set()
    pending = sorted(need, key=lambda v: (v not in ROOTS, v))
    while pending:
        progressed = False
        for v in list(pending):
            if v in done:
                pending.remove(v)
                continue
            p = selected[v]
            if set(p.inputs) <= done:
                outs = tuple(o for o in p.outputs if o in need and selected[o] is p)
                steps.append(PlanStep(p, outs))
                done.update(outs)
                pending = [x for x in pending if x not in outs]
                progressed = True
                break
        if not progressed:
            raise SynthmetError(f"cyclic model dependencies among {sorted(pending)}")

    unreachable = {v: _blockers(v, producers, reach) for v in requested if v not in reach}
    plan = GenerationPlan(tuple(steps), requested, unreachable)
    plan.check_sound()
    return plan


def _override_producer(var, lib, override):
    for p in lib:
        if p.entry.id == override:
            return p
    raise SynthmetError(f"override {override!r} does not name a usable model producing {var}")


def _blockers(var, producers, reach) -> list:
    out = []
    for p in producers:
        if var in p.outputs:
            miss = [i if i not in _HINTS else f"{i} ({_HINTS[i]})" for i in p.inputs if i not in reach]
            if miss:
                out.append(f"{p.id} needs {', '.join(miss)}")
    if not out or (var in _HINTS and not any(var in p.outputs and p.kind != "builtin" for p in producers)):
        out.append(f"no model produces {var} (needs {_HINTS.get(var, 'a model producing it')})")
    return out

"""Linear nodal thermal model, C dT/dt = A T + B, stepped with implicit Euler."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from ..errors import SingularMatrixError, SynthmetError
from ..physmod import moist_air_state, sky_temperature
from ..weather import Var, WeatherSeries

DEFAULT_OKTA = 4.0  # cloud cover assumed when the weather has no okta column


@dataclass(frozen=True)
class Zone:
    name: str
    node: int
    volume_m3: float
    ach: float = 0.0   # infiltration air changes per hour

    @property
    def air_mass_kg(self) -> float:
        return 1.2 * self.volume_m3


@dataclass(frozen=True, eq=False)
class NodalModel:
    """Nodes with capacitance ``C`` (J/K) coupled by ``A`` (W/K).

    ``A`` holds the node couplings off the diagonal; each diagonal entry is
    minus the sum of the row's couplings and of the node's conductances to
    the exterior air (``g_ext``) and to the sky (``g_sky``). ``solar`` is
    the absorbing aperture of each node in m2 (GHI times it gives watts).
    """

    nodes: tuple
    C: np.ndarray
    A: np.ndarray
    g_ext: np.ndarray
    g_sky: np.ndarray
    solar: np.ndarray
    zones: tuple

    def __post_init__(self):
        self.validate()

    @classmethod
    def from_couplings(cls, nodes, capacitance, couplings, g_ext=None, g_sky=None, solar=None, zones=()):
        """Assemble ``A`` from ``(i, j, UA)`` couplings between node names or indices."""
        nodes = tuple(nodes)
        n = len(nodes)
        idx = {name: i for i, name in enumerate(nodes)}
        K = np.zeros((n, n))
        for a, b, ua in couplings:
            i, j = idx.get(a, a), idx.get(b, b)
            if i == j:
                raise SynthmetError(f"self coupling on node {nodes[i]}")
            K[i, j] += ua
            K[j, i] += ua
        g_ext = np.zeros(n) if g_ext is None else np.asarray(g_ext, dtype=float)
        g_sky = np.zeros(n) if g_sky is None else np.asarray(g_sky, dtype=float)
        solar = np.zeros(n) if solar is None else np.asarray(solar, dtype=float)
        A = K - np.diag(K.sum(axis=1) + g_ext + g_sky)
        return cls(nodes, np.asarray(capacitance, dtype=float), A, g_ext, g_sky, solar, tuple(zones))

    @property
    def n(self) -> int:
        return len(self.nodes)

    def index(self, name) -> int:
        try:
            return self.nodes.index(name)
        except ValueError:
            raise SynthmetError(f"unknown node {name!r}") from None

    def zone(self, name) -> Zone:
        for z in self.zones:
            if z.name == name:
                return z
        raise SynthmetError(f"unknown zone {name!r}")

    def validate(self):
        n = len(self.nodes)
        for arr, nm in ((self.C, "C"), (self.g_ext, "g_ext"), (self.g_sky, "g_sky"), (self.solar, "solar")):
            if arr.shape != (n,):
                raise SynthmetError(f"{nm} must have one entry per node")
        if self.A.shape != (n, n):
            raise SynthmetError("A must be square with one row per node")
        if np.any(self.C <= 0) or not np.all(np.isfinite(self.C)):
            raise SynthmetError("every node needs a positive capacitance")
        if np.any(self.g_ext < 0) or np.any(self.g_sky < 0) or np.any(self.solar < 0):
            raise SynthmetError("boundary conductances and apertures must be non-negative")
        off = self.A - np.diag(np.diag(self.A))
        if np.any(off < 0):
            raise SynthmetError("node couplings must be non-negative")
        if not np.allclose(off, off.T, rtol=1e-12, atol=1e-12):
            raise SynthmetError("node couplings must be symmetric")
        expect = -(off.sum(axis=1) + self.g_ext + self.g_sky)
        if not np.allclose(np.diag(self.A), expect, rtol=1e-12, atol=1e-9):
            raise SynthmetError("A diagonal must equal minus the row's total conductance")
        # unique steady state: every node connected to a boundary
        if np.linalg.matrix_rank(self.A) < n:
            raise SingularMatrixError("model has a node group with no path to a boundary temperature")
        for z in self.zones:
            if not 0 <= z.node < n:
                raise SynthmetError(f"zone {z.name} points outside the node list")

    def zone_vector(self, per_zone) -> np.ndarray:
        """Spread a per-zone array (..., n_zones) onto the zone air nodes."""
        per_zone = np.asarray(per_zone, dtype=float)
        out = np.zeros(per_zone.shape[:-1] + (self.n,))
        for k, z in enumerate(self.zones):
            out[..., z.node] += per_zone[..., k]
        return out

    def forcing(self, t_ext, t_sky, ghi, q_internal) -> np.ndarray:
        """B for each step: (n_steps, n_nodes) in W."""
        t_ext, t_sky, ghi = (np.asarray(x, dtype=float)[:, None] for x in (t_ext, t_sky, ghi))
        return self.g_ext * t_ext + self.g_sky * t_sky + self.solar * ghi + q_internal

    def steady_state(self, B) -> np.ndarray:
        return np.linalg.solve(-self.A, np.asarray(B, dtype=float))


@dataclass(frozen=True)
class InternalLoadSchedule:
    """Hourly sensible and latent gains (W) per zone, repeated every day."""

    zones: tuple
    sensible: np.ndarray   # (n_zones, 24)
    latent: np.ndarray     # (n_zones, 24)
    items: tuple = ()

    def __post_init__(self):
        nz = len(self.zones)
        if self.sensible.shape != (nz, 24) or self.latent.shape != (nz, 24):
            raise SynthmetError("load profiles must be (n_zones, 24)")
        if np.any(self.sensible < 0) or np.any(self.latent < 0):
            raise SynthmetError("internal loads must be non-negative")

    @classmethod
    def none(cls, zones):
        nz = len(zones)
        return cls(tuple(zones), np.zeros((nz, 24)), np.zeros((nz, 24)))

    @classmethod
    def from_items(cls, zones, items):
        """``items``: dicts with name, count, sensible_W, latent_W and a
        ``schedule`` mapping zone name to the hours the item is there."""
        zones = tuple(zones)
        S = np.zeros((len(zones), 24))
        L = np.zeros((len(zones), 24))
        for it in items:
            count = it.get("count", 1)
            for zname, hours in it["schedule"].items():
                if zname not in zones:
                    raise SynthmetError(f"load {it['name']!r} refers to unknown zone {zname!r}")
                h = np.asarray(hours, dtype=int)
                if np.any((h < 0) | (h > 23)):
                    raise SynthmetError(f"load {it['name']!r} has hours outside 0-23")
                k = zones.index(zname)
                S[k, h] += count * it["sensible_W"]
                L[k, h] += count * it.get("latent_W", 0.0)
        return cls(zones, S, L, tuple(items))

    def nominal_sensible(self) -> float:
        """Total sensible gain with every item present at once."""
        return float(sum(it.get("count", 1) * it["sensible_W"] for it in self.items))

    def at_hours(self, hours):
        h = np.asarray(hours, dtype=int)
        return self.sensible[:, h].T, self.latent[:, h].T


@dataclass(frozen=True, eq=False)
class ThermalResult:
    times: np.ndarray
    T: np.ndarray        # (n_steps, n_nodes), state at the end of each step
    T0: np.ndarray
    B: np.ndarray
    q_control: np.ndarray  # heat added by the controller, W (negative when cooling)
    dt: float
    model: NodalModel = field(repr=False)

    def node(self, name) -> np.ndarray:
        return self.T[:, self.model.index(name)]

    def zone_air(self) -> np.ndarray:
        return self.T[:, [z.node for z in self.model.zones]]

    def energy_residual(self) -> float:
        """Relative closure of the whole-model energy balance.

        Storage change against boundary exchanges, solar, internal and
        controller gains, normalised by the gross flows.
        """
        m = self.model
        stored = float(np.sum(m.C * (self.T[-1] - self.T0)))
        # boundary terms recomputed from B and the node states
        boundary = self.B - (m.g_ext + m.g_sky) * self.T + self.q_control
        inflow = float(boundary.sum() * self.dt)
        gross = float(np.abs(boundary).sum() * self.dt) + abs(stored)
        return abs(stored - inflow) / gross if gross > 0 else 0.0


def weather_drivers(model: NodalModel, weather: WeatherSeries):
    """Exterior temperature, sky temperature and GHI arrays for ``weather``."""
    if Var.TEMP not in weather:
        raise SynthmetError("weather needs temp_C to drive the thermal model")
    t_ext = weather[Var.TEMP]
    n = len(weather)
    if np.any(m := ~np.isfinite(t_ext)):
        raise SynthmetError(f"temp_C has {int(m.sum())} missing hours")
    if np.any(model.g_sky > 0):
        if Var.TSKY in weather:
            t_sky = weather[Var.TSKY]
        elif Var.RH in weather:
            td = moist_air_state(t_ext, np.clip(weather[Var.RH], 1e-6, 100.0)).Td
            okta = weather[Var.OKTA] if Var.OKTA in weather else np.full(n, DEFAULT_OKTA)
            t_sky = sky_temperature(t_ext, td, okta)
        else:
            raise SynthmetError("sky coupling needs tsky_C or rh_pct in the weather")
    else:
        t_sky = np.zeros(n)
    if np.any(model.solar > 0):
        if Var.GHI not in weather:
            raise SynthmetError("solar apertures need ghi_Whm2 in the weather")
        ghi = weather[Var.GHI]
    else:
        ghi = np.zeros(n)
    return t_ext, t_sky, ghi


def simulate_thermal(model: NodalModel, weather: WeatherSeries, loads: InternalLoadSchedule | None = None,
                     dt: float = 3600.0, setpoints=None) -> ThermalResult:
    """Step the model over ``weather`` with implicit Euler.

    ``setpoints`` (n_steps, n_zones), NaN where free, caps the zone air
    temperatures: an ideal cooler removes exactly the heat needed to hold
    a zone at its setpoint whenever it would float above it.
    """
    t_ext, t_sky, ghi = weather_drivers(model, weather)
    if loads is None:
        loads = InternalLoadSchedule.none([z.name for z in model.zones])
    sens, _ = loads.at_hours(weather.hour_of_day)
    B = model.forcing(t_ext, t_sky, ghi, model.zone_vector(sens) if model.zones else 0.0)
    T0 = np.full(model.n, float(t_ext[0]))
    T, q = _integrate(model, B, T0, dt, setpoints)
    return ThermalResult(weather.times, T, T0, B, q, dt, model)


def _integrate(model, B, T0, dt, setpoints=None):
    n_steps, n = B.shape
    Cdt = model.C / dt
    M = np.diag(Cdt) - model.A
    try:
        lu = lu_factor(M, check_finite=True)
    except (ValueError, np.linalg.LinAlgError) as exc:  # pragma: no cover - caught by validate
        raise SingularMatrixError(f"singular step matrix: {exc}") from None
    if not np.all(np.isfinite(lu[0])) or np.any(np.abs(np.diag(lu[0])) < 1e-300):
        raise SingularMatrixError("singular step matrix")
    T = np.empty((n_steps, n))
    q = np.zeros((n_steps, n))
    air = np.array([z.node for z in model.zones], dtype=int)
    sp_all = None if setpoints is None else np.asarray(setpoints, dtype=float)
    prev = np.asarray(T0, dtype=float)
    for k in range(n_steps):
        rhs = Cdt * prev + B[k]
        cur = lu_solve(lu, rhs)
        if sp_all is not None:
            sp = sp_all[k]
            active = np.isfinite(sp) & (cur[air] > sp)
            if active.any():
                cur, q[k] = _hold(M, rhs, cur, air, sp, active)
        T[k] = cur
        prev = cur
    return T, q


def _hold(M, rhs, cur, air, sp, active):
    """Re-solve with the active zone air nodes fixed at their setpoints.

    Zones that would need heating are released, newly overheated zones are
    added, until the active set is stable.
    """
    n = M.shape[0]
    for _ in range(2 * len(air) + 1):
        fixed = air[active]
        free = np.setdiff1d(np.arange(n), fixed)
        T = np.empty(n)
        T[fixed] = sp[active]
        if free.size:
            T[free] = np.linalg.solve(M[np.ix_(free, free)], rhs[free] - M[np.ix_(free, fixed)] @ T[fixed])
        q = np.zeros(n)
        q[fixed] = M[fixed] @ T - rhs[fixed]
        heating = np.zeros(len(air), dtype=bool)
        heating[active] = q[air[active]] > 0
        over = np.isfinite(sp) & ~active & (T[air] > sp + 1e-12)
        if not heating.any() and not over.any():
            return T, q
        active = (active & ~heating) | over
        if not active.any():
            return np.linalg.solve(M, rhs), np.zeros(n)
    raise SynthmetError("ideal controller active set did not settle")  # pragma: no cover

"""Comfort zones on the psychrometric chart (temperature, humidity ratio)."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from ..errors import SynthmetError

_EPS = 1e-12


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _segments_intersect(p1, p2, p3, p4) -> bool:
    d1, d2 = _cross(p3, p4, p1), _cross(p3, p4, p2)
    d3, d4 = _cross(p1, p2, p3), _cross(p1, p2, p4)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and 0 not in (d1, d2, d3, d4):
        return True

    def on(p, q, r):
        return min(p[0], q[0]) <= r[0] <= max(p[0], q[0]) and min(p[1], q[1]) <= r[1] <= max(p[1], q[1])

    return ((d1 == 0 and on(p3, p4, p1)) or (d2 == 0 and on(p3, p4, p2))
            or (d3 == 0 and on(p1, p2, p3)) or (d4 == 0 and on(p1, p2, p4)))


@dataclass(frozen=True)
class ComfortZone:
    name: str
    vertices: tuple                 # ((T degC, w kg/kg), ...)
    air_speed_max: float = 0.0      # m/s the zone assumes
    description: str = ""

    def __post_init__(self):
        v = tuple((float(t), float(w)) for t, w in self.vertices)
        object.__setattr__(self, "vertices", v)
        if len(v) < 3:
            raise SynthmetError(f"comfort zone {self.name!r} needs at least 3 vertices")
        if abs(self.area) < _EPS:
            raise SynthmetError(f"comfort zone {self.name!r} is degenerate (zero area)")
        n = len(v)
        for i in range(n):
            for j in range(i + 1, n):
                if j == i + 1 or (i == 0 and j == n - 1):
                    continue
                if _segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]):
                    raise SynthmetError(f"comfort zone {self.name!r} is self-intersecting")

    @property
    def area(self) -> float:
        v = np.array(self.vertices)
        x, y = v[:, 0], v[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))

    def contains(self, T, w) -> np.ndarray:
        """Ray casting; points on an edge or vertex count as inside.

        Humidity ratios are scaled by 1000 so both axes have comparable
        magnitude for the on-edge tolerance.
        """
        T = np.atleast_1d(np.asarray(T, dtype=float))
        y = np.atleast_1d(np.asarray(w, dtype=float)) * 1000.0
        v = np.array(self.vertices) * [1.0, 1000.0]
        inside = np.zeros(T.shape, dtype=bool)
        edge = np.zeros(T.shape, dtype=bool)
        n = len(v)
        for i in range(n):
            (x1, y1), (x2, y2) = v[i], v[(i + 1) % n]
            # boundary test: collinear and within the segment box
            cr = (x2 - x1) * (y - y1) - (y2 - y1) * (T - x1)
            scale = max(abs(x2 - x1), abs(y2 - y1), 1.0)
            within = ((np.minimum(x1, x2) - 1e-9 <= T) & (T <= np.maximum(x1, x2) + 1e-9)
                      & (np.minimum(y1, y2) - 1e-9 <= y) & (y <= np.maximum(y1, y2) + 1e-9))
            edge |= within & (np.abs(cr) <= 1e-9 * scale)
            crosses = (y1 > y) != (y2 > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            inside ^= crosses & (T < xint)
        return inside | edge

    def to_dict(self):
        return {"name": self.name, "vertices": [list(p) for p in self.vertices],
                "air_speed_max": self.air_speed_max, "description": self.description}

    @classmethod
    def from_dict(cls, d):
        return cls(d["name"], tuple(tuple(p) for p in d["vertices"]), float(d.get("air_speed_max", 0.0)),
                   d.get("description", ""))


def _states(states):
    if hasattr(states, "T") and hasattr(states, "w"):
        return np.ravel(states.T), np.ravel(states.w)
    T, w = states
    return np.ravel(np.asarray(T, dtype=float)), np.ravel(np.asarray(w, dtype=float))


def comfort_fraction(states, zones) -> dict:
    """Fraction of states inside each zone.

    ``states`` is a MoistAirState or a pair ``(T, w)`` of arrays.
    """
    T, w = _states(states)
    if T.size == 0:
        raise SynthmetError("comfort evaluation needs at least one state")
    ok = np.isfinite(T) & np.isfinite(w)
    if not ok.any():
        raise SynthmetError("no finite states to evaluate")
    return {z.name: float(np.mean(z.contains(T[ok], w[ok]))) for z in zones}


def load_zones(path=None) -> list:
    """Comfort zones from a JSON file; the packaged Givoni zones by default."""
    if path is None:
        text = resources.files("synthmet.buildsim").joinpath("data/givoni_zones.json").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SynthmetError(f"bad comfort zone file: {exc}") from None
    return [ComfortZone.from_dict(d) for d in data["zones"]]


def ashrae_summer_zone() -> ComfortZone:
    text = resources.files("synthmet.buildsim").joinpath("data/ashrae_summer.json").read_text(encoding="utf-8")
    return ComfortZone.from_dict(json.loads(text)["zones"][0])

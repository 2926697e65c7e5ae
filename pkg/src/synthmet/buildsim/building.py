"""Building description files and the packaged demo dwelling."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from ..errors import SynthmetError
from .hvac import IdealHvac
from .thermal import InternalLoadSchedule, NodalModel, Zone

RHO_CP_AIR = 1.2 * 1006.0      # J/(m3 K)
BOUNDARIES = ("exterior", "sky")
# share of GHI reaching a surface; vertical facades get half (no facade irradiance model)
ORIENTATION_FACTOR = {"horizontal": 1.0, "vertical": 0.5, "north": 0.5, "east": 0.5, "south": 0.5, "west": 0.5}


@dataclass(frozen=True, eq=False)
class Building:
    name: str
    model: NodalModel
    loads: InternalLoadSchedule
    hvac: IdealHvac
    data: dict


def _air_node(zone_name):
    return f"{zone_name}_air"


def building_from_dict(d: dict) -> Building:
    """Assemble a nodal model from a building description.

    Zone air nodes are named ``<zone>_air``; couplings may name them with or
    without the suffix, or the boundaries ``exterior`` and ``sky``. Zone air
    changes add a ventilation coupling to the exterior.
    """
    try:
        zones_d = d["zones"]
        nodes = [_air_node(z["name"]) for z in zones_d] + [n["name"] for n in d.get("nodes", [])]
        caps = [float(z["air_capacitance_JK"]) for z in zones_d] + \
               [float(n["capacitance_JK"]) for n in d.get("nodes", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise SynthmetError(f"building description: bad zones or nodes ({exc})") from None
    if len(set(nodes)) != len(nodes):
        raise SynthmetError("building description: duplicate node names")
    zone_names = [z["name"] for z in zones_d]
    idx = {name: i for i, name in enumerate(nodes)}
    idx.update({zn: idx[_air_node(zn)] for zn in zone_names})
    n = len(nodes)
    g_ext, g_sky, solar = np.zeros(n), np.zeros(n), np.zeros(n)
    pairs = []
    for c in d.get("couplings", []):
        a, b, ua = c.get("from"), c.get("to"), float(c.get("UA_WK", -1))
        if ua < 0:
            raise SynthmetError(f"coupling {a}-{b}: UA_WK must be >= 0")
        if a in BOUNDARIES:
            a, b = b, a
        if a not in idx:
            raise SynthmetError(f"coupling refers to unknown node {a!r}")
        if b == "exterior":
            g_ext[idx[a]] += ua
        elif b == "sky":
            g_sky[idx[a]] += ua
        elif b in idx:
            pairs.append((idx[a], idx[b], ua))
        else:
            raise SynthmetError(f"coupling refers to unknown node {b!r}")
    zones = []
    for z in zones_d:
        vol, ach = float(z.get("volume_m3", 0.0)), float(z.get("ach", 0.0))
        if vol < 0 or ach < 0:
            raise SynthmetError(f"zone {z['name']}: volume and ach must be >= 0")
        node = idx[z["name"]]
        g_ext[node] += RHO_CP_AIR * vol * ach / 3600.0
        zones.append(Zone(z["name"], node, vol, ach))
    for s in d.get("surfaces", []):
        target = s.get("node", s.get("zone"))
        if target not in idx:
            raise SynthmetError(f"surface refers to unknown node {target!r}")
        orient = s.get("orientation", "horizontal")
        if orient not in ORIENTATION_FACTOR:
            raise SynthmetError(f"unknown surface orientation {orient!r}")
        alpha = float(s.get("absorptivity", 0.0))
        if not 0.0 <= alpha <= 1.0:
            raise SynthmetError("surface absorptivity outside [0, 1]")
        solar[idx[target]] += float(s["area_m2"]) * alpha * ORIENTATION_FACTOR[orient]
    model = NodalModel.from_couplings(nodes, caps, pairs, g_ext, g_sky, solar, zones)
    loads = InternalLoadSchedule.from_items(zone_names, d.get("loads", []))
    hvac = IdealHvac.from_dict(d.get("hvac", {}))
    return Building(d.get("name", "building"), model, loads, hvac, d)


def load_building(path) -> Building:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SynthmetError(f"cannot read building file {path}: {exc}") from None
    return building_from_dict(data)


def demo_dwelling_dict() -> dict:
    text = resources.files("synthmet.buildsim").joinpath("data/demo_dwelling.json").read_text(encoding="utf-8")
    return json.loads(text)


def build_demo_dwelling():
    """Two-zone collective dwelling: ``(NodalModel, InternalLoadSchedule)``."""
    b = building_from_dict(demo_dwelling_dict())
    return b.model, b.loads

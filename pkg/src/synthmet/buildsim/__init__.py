"""Nodal building thermal model, ideal HVAC loads and comfort zones."""

from .building import Building, build_demo_dwelling, building_from_dict, demo_dwelling_dict, load_building
from .comfort import ComfortZone, ashrae_summer_zone, comfort_fraction, load_zones
from .hvac import H_FG, IdealHvac, LoadResult, ideal_hvac_loads
from .thermal import InternalLoadSchedule, NodalModel, ThermalResult, Zone, simulate_thermal

__all__ = [
    "Building", "ComfortZone", "H_FG", "IdealHvac", "InternalLoadSchedule", "LoadResult", "NodalModel",
    "ThermalResult", "Zone", "ashrae_summer_zone", "build_demo_dwelling", "building_from_dict",
    "comfort_fraction", "demo_dwelling_dict", "ideal_hvac_loads", "load_building", "load_zones",
    "simulate_thermal",
]

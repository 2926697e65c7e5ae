"""Ideal-control cooling loads, sensible and latent."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import SynthmetError
from ..physmod import humidity_ratio, moist_air_state, saturation_vapor_pressure
from ..weather import Var, WeatherSeries
from .thermal import InternalLoadSchedule, NodalModel, ThermalResult, simulate_thermal

H_FG = 2501e3     # J/kg, latent heat used for moisture loads
J_PER_KWH = 3.6e6


@dataclass(frozen=True)
class IdealHvac:
    """Controller holding the zone air at setpoint during ``hours``.

    ``w_setpoint`` defaults to the humidity ratio of ``setpoint_C`` at
    ``rh_setpoint`` percent. ``ventilation_ach`` overrides the zone air
    change rates for the moisture balance; ``air_mass_kg`` overrides the
    zone air masses (both per zone name).
    """

    hours: frozenset = frozenset(list(range(20, 24)) + list(range(0, 6)))
    setpoint_C: float = 26.0
    rh_setpoint: float = 60.0
    w_setpoint: float | None = None
    ventilation_ach: dict | None = None
    air_mass_kg: dict | None = None

    def __post_init__(self):
        hours = frozenset(int(h) for h in self.hours)
        object.__setattr__(self, "hours", hours)
        if not hours:
            raise SynthmetError("HVAC schedule is empty")
        if any(not 0 <= h <= 23 for h in hours):
            raise SynthmetError("HVAC hours must be in 0-23")
        if not 10.0 <= self.setpoint_C <= 35.0:
            raise SynthmetError(f"temperature setpoint {self.setpoint_C} outside [10, 35] degC")
        if not 0.0 < self.rh_setpoint <= 100.0:
            raise SynthmetError("RH setpoint outside (0, 100] %")
        if self.w_setpoint is not None and not 0.0 < self.w_setpoint < 0.05:
            raise SynthmetError("humidity-ratio setpoint outside (0, 0.05) kg/kg")

    @classmethod
    def from_dict(cls, d):
        return cls(frozenset(d.get("hours", cls.hours)), float(d.get("setpoint_C", 26.0)),
                   float(d.get("rh_setpoint", 60.0)), d.get("w_setpoint"),
                   d.get("ventilation_ach"), d.get("air_mass_kg"))

    def to_dict(self):
        return {"hours": sorted(self.hours), "setpoint_C": self.setpoint_C, "rh_setpoint": self.rh_setpoint,
                "w_setpoint": self.w_setpoint, "ventilation_ach": self.ventilation_ach,
                "air_mass_kg": self.air_mass_kg}

    def humidity_setpoint(self, pressure=101325.0) -> float:
        if self.w_setpoint is not None:
            return float(self.w_setpoint)
        e = self.rh_setpoint / 100.0 * saturation_vapor_pressure(self.setpoint_C)
        return float(humidity_ratio(e, pressure))

    def on(self, hours) -> np.ndarray:
        return np.isin(np.asarray(hours), sorted(self.hours))


@dataclass(frozen=True, eq=False)
class LoadResult:
    dates: np.ndarray
    sensible_kWh: np.ndarray
    latent_kWh: np.ndarray
    total_kWh: np.ndarray
    thermal: ThermalResult | None = field(default=None, repr=False)
    indoor_w: np.ndarray | None = field(default=None, repr=False)   # (n_steps, n_zones)

    @property
    def MEAN(self) -> dict:
        return {"sensible_kWh": float(self.sensible_kWh.mean()), "latent_kWh": float(self.latent_kWh.mean()),
                "total_kWh": float(self.total_kWh.mean())}

    @property
    def MAX(self) -> dict:
        return {"sensible_kWh": float(self.sensible_kWh.max()), "latent_kWh": float(self.latent_kWh.max()),
                "total_kWh": float(self.total_kWh.max())}

    def rows(self):
        for d, s, l, t in zip(self.dates, self.sensible_kWh, self.latent_kWh, self.total_kWh):
            yield str(d), float(s), float(l), float(t)

    def to_dict(self):
        return {"days": len(self.dates), "MEAN": self.MEAN, "MAX": self.MAX}


def _zone_airflow(model, hvac):
    """Air mass flow (kg/s) per zone from air change rates."""
    out = []
    for z in model.zones:
        ach = (hvac.ventilation_ach or {}).get(z.name, z.ach)
        mass = (hvac.air_mass_kg or {}).get(z.name, z.air_mass_kg)
        out.append(mass * ach / 3600.0)
    return np.array(out)


def ideal_hvac_loads(model: NodalModel, weather: WeatherSeries, loads: InternalLoadSchedule,
                     hvac: IdealHvac, dt: float = 3600.0) -> LoadResult:
    """Daily sensible and latent cooling energy of an ideal controller.

    Sensible: heat removed to hold each zone air node at the setpoint in the
    scheduled hours (nothing when the zone floats below it). Latent: the
    moisture brought by air exchange and occupants above the humidity-ratio
    setpoint, converted at 2501 kJ/kg, in the scheduled hours.
    """
    if not model.zones:
        raise SynthmetError("the model has no zones to condition")
    if len(weather) % 24 or int(weather.hour_of_day[0]) != 0:
        raise SynthmetError("load accounting needs whole days starting at 00:00")
    if Var.RH not in weather:
        raise SynthmetError("latent loads need rh_pct in the weather")
    nz = len(model.zones)
    hours = weather.hour_of_day
    on = hvac.on(hours)
    sp = np.where(on[:, None], hvac.setpoint_C, np.nan) * np.ones((1, nz))
    th = simulate_thermal(model, weather, loads, dt, setpoints=sp)

    air = [z.node for z in model.zones]
    q_cool = np.maximum(-th.q_control[:, air], 0.0)          # W per zone
    sensible = q_cool.sum(axis=1) * dt / J_PER_KWH

    P = weather.site.pressure_pa
    w_ext = moist_air_state(weather[Var.TEMP], weather[Var.RH], P).w
    w_sp = hvac.humidity_setpoint(P)
    mdot = _zone_airflow(model, hvac)
    _, lat_gain = loads.at_hours(hours)
    inflow = mdot * (w_ext[:, None] - w_sp) * H_FG + lat_gain    # W per zone
    lat = np.where(on[:, None], np.maximum(inflow, 0.0), 0.0)
    latent = lat.sum(axis=1) * dt / J_PER_KWH

    # quasi-steady zone humidity, capped at the setpoint while the plant runs
    with np.errstate(divide="ignore", invalid="ignore"):
        w_free = np.where(mdot > 0, w_ext[:, None] + lat_gain / (mdot * H_FG), w_ext[:, None])
    w_in = np.where(on[:, None] & (inflow > 0), w_sp, w_free)

    n_days = len(weather) // 24
    S = sensible.reshape(n_days, 24).sum(axis=1)
    L = latent.reshape(n_days, 24).sum(axis=1)
    return LoadResult(weather.whole_days()[0], S, L, S + L, th, w_in)

"""Hourly weather characterisation, model libraries and synthetic sequence
generation, with a small nodal building model to exercise the sequences."""

__version__ = "0.1.0"

from .errors import SynthmetError  # noqa: F401
from .weather import Site, Var, WeatherSeries  # noqa: F401

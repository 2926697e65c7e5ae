"""
Hourly weather series: site metadata, variables with their validity ranges,
CSV ingestion/emission, period slicing and daily indicators.

Missing cells are stored as NaN. Timestamps are local standard time on an
hourly grid, held as ``datetime64[h]``.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import GapError, InsufficientDataError, SynthmetError, WeatherFormatError, WeatherRangeError

HOUR = np.timedelta64(1, "h")


class Var(str, Enum):
    TEMP = "temp_C"
    RH = "rh_pct"
    WIND = "wind_ms"
    WINDDIR = "winddir_deg"
    GHI = "ghi_Whm2"
    DHI = "dhi_Whm2"
    BNI = "bni_Whm2"
    SUNFRAC = "sunfrac"
    OKTA = "okta"
    # derived psychrometric columns
    TDEW = "tdew_C"
    VAP = "e_Pa"
    HUMRATIO = "w_kgkg"
    ENTHALPY = "h_kJkg"
    TSKY = "tsky_C"

    @classmethod
    def parse(cls, name) -> "Var":
        if isinstance(name, Var):
            return name
        key = str(name).strip()
        for v in cls:
            if key == v.value or key.upper() == v.name:
                return v
        alias = _ALIASES.get(key.lower())
        if alias is None:
            raise SynthmetError(f"unknown weather variable {name!r}")
        return alias

    @property
    def valid_range(self) -> tuple[float, float]:
        return VALID_RANGE[self]

    @property
    def is_radiation(self) -> bool:
        return self in (Var.GHI, Var.DHI, Var.BNI, Var.SUNFRAC)


# Column order of the CSV format.
BASE_VARS = (Var.TEMP, Var.RH, Var.WIND, Var.WINDDIR, Var.GHI, Var.DHI, Var.BNI, Var.SUNFRAC, Var.OKTA)
DERIVED_VARS = (Var.TDEW, Var.VAP, Var.HUMRATIO, Var.ENTHALPY, Var.TSKY)

VALID_RANGE = {
    Var.TEMP: (-60.0, 60.0),
    Var.RH: (0.0, 100.0),
    Var.WIND: (0.0, 75.0),
    Var.WINDDIR: (0.0, 360.0),
    # hour-integrated, bounded by the extraterrestrial normal irradiance
    Var.GHI: (0.0, 1500.0),
    Var.DHI: (0.0, 1500.0),
    Var.BNI: (0.0, 1500.0),
    Var.SUNFRAC: (0.0, 1.0),
    Var.OKTA: (0.0, 8.0),
    Var.TDEW: (-90.0, 60.0),
    Var.VAP: (0.0, 25000.0),
    Var.HUMRATIO: (0.0, 0.2),
    Var.ENTHALPY: (-70.0, 600.0),
    Var.TSKY: (-120.0, 60.0),
}

_ALIASES = {
    "t": Var.TEMP, "temp": Var.TEMP, "temperature": Var.TEMP,
    "rh": Var.RH, "humidity": Var.RH,
    "w": Var.WIND, "wind": Var.WIND, "ws": Var.WIND,
    "wd": Var.WINDDIR, "winddir": Var.WINDDIR,
    "ghi": Var.GHI, "global": Var.GHI,
    "dhi": Var.DHI, "diffuse": Var.DHI,
    "bni": Var.BNI, "beam": Var.BNI,
    "sun": Var.SUNFRAC, "insolation": Var.SUNFRAC,
    "neb": Var.OKTA, "nebulosity": Var.OKTA,
    "tdew": Var.TDEW, "tsky": Var.TSKY,
}


def standard_pressure(altitude: float) -> float:
    """Standard-atmosphere pressure (Pa) at ``altitude`` metres."""
    return 101325.0 * (1.0 - 2.25577e-5 * altitude) ** 5.25588


@dataclass(frozen=True)
class Site:
    name: str
    latitude: float
    longitude: float
    altitude: float = 0.0
    pressure: float | None = None

    def __post_init__(self):
        if "," in self.name or "\n" in self.name:
            raise SynthmetError("site name may not contain commas or newlines")
        if not -90.0 <= self.latitude <= 90.0:
            raise SynthmetError(f"latitude {self.latitude} outside [-90, 90]")
        if not -180.0 <= self.longitude <= 180.0:
            raise SynthmetError(f"longitude {self.longitude} outside [-180, 180]")
        if not -500.0 <= self.altitude <= 9000.0:
            raise SynthmetError(f"altitude {self.altitude} outside [-500, 9000]")
        if self.pressure is not None and self.pressure <= 0:
            raise SynthmetError("pressure must be positive")

    @property
    def pressure_pa(self) -> float:
        return self.pressure if self.pressure is not None else standard_pressure(self.altitude)

    @property
    def standard_meridian(self) -> float:
        # no time-zone database: nearest 15-degree meridian
        return 15.0 * round(self.longitude / 15.0)

    def to_dict(self):
        d = {"name": self.name, "latitude": self.latitude, "longitude": self.longitude,
             "altitude": self.altitude}
        if self.pressure is not None:
            d["pressure"] = self.pressure
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d["name"], float(d["latitude"]), float(d["longitude"]),
                   float(d.get("altitude", 0.0)), d.get("pressure"))


def _as_hours(t) -> np.datetime64:
    if isinstance(t, str):
        return np.datetime64(t, "h")
    if isinstance(t, dt.date) and not isinstance(t, dt.datetime):
        t = dt.datetime(t.year, t.month, t.day)
    return np.datetime64(t, "h")


@dataclass(frozen=True, eq=False)
class WeatherSeries:
    """Hourly multivariate series for one site.

    ``times`` must be strictly increasing on the hourly grid. Series read from
    CSV are contiguous; period slices may skip whole days.
    """

    site: Site
    times: np.ndarray
    columns: dict = field(default_factory=dict)

    def __post_init__(self):
        times = np.array(self.times, dtype="datetime64[h]")
        object.__setattr__(self, "times", times)
        cols = {}
        for key, values in self.columns.items():
            var = Var.parse(key)
            arr = np.array(values, dtype=float)
            if arr.ndim != 1 or arr.size != times.size:
                raise SynthmetError(
                    f"column {var.value} has {arr.size} values, expected {times.size}")
            arr.setflags(write=False)
            cols[var] = arr
        object.__setattr__(self, "columns", cols)
        times.setflags(write=False)
        if times.size > 1 and np.any(np.diff(times) <= np.timedelta64(0, "h")):
            raise SynthmetError("timestamps must be strictly increasing")
        self._check_ranges()

    def _check_ranges(self):
        for var, arr in self.columns.items():
            lo, hi = var.valid_range
            present = ~np.isnan(arr)
            bad = present & ((arr < lo) | (arr > hi) | ~np.isfinite(arr))
            if bad.any():
                i = int(np.argmax(bad))
                raise WeatherRangeError(
                    f"row {i + 1}: {var.value}={arr[i]!r} outside [{lo}, {hi}]",
                    row=i + 1, variable=var)

    @classmethod
    def hourly(cls, site: Site, start, columns: dict) -> "WeatherSeries":
        n = len(next(iter(columns.values()))) if columns else 0
        t0 = _as_hours(start)
        return cls(site, t0 + np.arange(n) * HOUR, columns)

    def __len__(self):
        return int(self.times.size)

    def __contains__(self, var):
        return Var.parse(var) in self.columns

    def __getitem__(self, var) -> np.ndarray:
        v = Var.parse(var)
        if v not in self.columns:
            raise SynthmetError(f"variable {v.value} not present in series")
        return self.columns[v]

    def __eq__(self, other):
        if not isinstance(other, WeatherSeries):
            return NotImplemented
        if self.site != other.site or not np.array_equal(self.times, other.times):
            return False
        if set(self.columns) != set(other.columns):
            return False
        return all(self.columns[k].tobytes() == other.columns[k].tobytes() for k in self.columns)

    __hash__ = None

    @property
    def start(self) -> np.datetime64:
        return self.times[0]

    @property
    def variables(self) -> list:
        return [v for v in (*BASE_VARS, *DERIVED_VARS) if v in self.columns]

    @property
    def is_contiguous(self) -> bool:
        return self.times.size < 2 or bool(np.all(np.diff(self.times) == HOUR))

    @property
    def dates(self) -> np.ndarray:
        return self.times.astype("datetime64[D]")

    @property
    def hour_of_day(self) -> np.ndarray:
        return (self.times - self.dates).astype(int)

    @property
    def months(self) -> np.ndarray:
        return self.times.astype("datetime64[M]").astype(int) % 12 + 1

    def replace(self, columns=None, site=None, times=None) -> "WeatherSeries":
        return WeatherSeries(site or self.site, self.times if times is None else times,
                             self.columns if columns is None else columns)

    def with_columns(self, **updates) -> "WeatherSeries":
        cols = dict(self.columns)
        for k, v in updates.items():
            cols[Var.parse(k)] = v
        return self.replace(columns=cols)

    def take(self, index) -> "WeatherSeries":
        index = np.asarray(index)
        return WeatherSeries(self.site, self.times[index],
                             {k: v[index] for k, v in self.columns.items()})

    def whole_days(self):
        """Dates having all 24 hourly slots, and the row index of each (n_days x 24)."""
        if len(self) == 0:
            return np.array([], dtype="datetime64[D]"), np.zeros((0, 24), dtype=int)
        dates = self.dates
        hours = self.hour_of_day
        # runs of identical dates
        change = np.flatnonzero(dates[1:] != dates[:-1]) + 1
        starts = np.concatenate([[0], change])
        stops = np.concatenate([change, [len(self)]])
        keep = [(a, b) for a, b in zip(starts, stops)
                if b - a == 24 and hours[a] == 0 and hours[b - 1] == 23]
        if not keep:
            return np.array([], dtype="datetime64[D]"), np.zeros((0, 24), dtype=int)
        idx = np.array([np.arange(a, b) for a, b in keep])
        return dates[idx[:, 0]], idx

    def complete_days(self, *variables):
        """Whole days where every named variable is present at all 24 hours.

        Returns ``(dates, index, excluded_dates)``.
        """
        dates, idx = self.whole_days()
        ok = np.ones(len(dates), dtype=bool)
        for var in variables:
            col = self[var]
            ok &= ~np.isnan(col[idx]).any(axis=1)
        return dates[ok], idx[ok], dates[~ok]

    def daily_matrix(self, var):
        dates, idx, _ = self.complete_days(var)
        return dates, self[var][idx]


class Indicator(str, Enum):
    MEAN = "mean"
    MAX = "max"
    MIN = "min"
    AMPLITUDE = "amplitude"
    TOTAL = "daily-total"

    @classmethod
    def parse(cls, name) -> "Indicator":
        if isinstance(name, Indicator):
            return name
        key = str(name).strip().lower()
        aliases = {"amp": "amplitude", "total": "daily-total", "tot": "daily-total",
                   "sum": "daily-total", "maximum": "max", "minimum": "min"}
        key = aliases.get(key, key)
        for k in cls:
            if k.value == key:
                return k
        raise SynthmetError(f"unknown indicator {name!r}")


@dataclass(frozen=True, eq=False)
class DailyIndicator:
    kind: Indicator
    variable: Var
    dates: np.ndarray
    values: np.ndarray
    excluded: np.ndarray = field(default_factory=lambda: np.array([], dtype="datetime64[D]"))
    period: str = ""

    def __len__(self):
        return int(self.values.size)


def _reduce(matrix, kind: Indicator):
    if kind is Indicator.MEAN:
        return matrix.mean(axis=1)
    if kind is Indicator.MAX:
        return matrix.max(axis=1)
    if kind is Indicator.MIN:
        return matrix.min(axis=1)
    if kind is Indicator.AMPLITUDE:
        return matrix.max(axis=1) - matrix.min(axis=1)
    return matrix.sum(axis=1)


def daily_indicators(series: WeatherSeries, var, kind, period: str = "") -> DailyIndicator:
    """One indicator value per complete day of ``var``.

    Days with any missing hour are left out and listed in ``excluded``.
    """
    var = Var.parse(var)
    kind = Indicator.parse(kind)
    if var not in series.columns:
        raise SynthmetError(f"variable {var.value} not present in series")
    if kind is Indicator.TOTAL and not var.is_radiation:
        raise SynthmetError("daily-total is only defined for radiation and insolation")
    dates, idx, excluded = series.complete_days(var)
    if len(dates) == 0:
        raise InsufficientDataError(f"no complete day for {var.value}")
    values = _reduce(series[var][idx], kind)
    return DailyIndicator(kind, var, dates, values, excluded, period)


def slice_period(series: WeatherSeries, months) -> WeatherSeries:
    """Whole days of ``series`` falling in the given calendar months."""
    months = {int(m) for m in months}
    if not months:
        raise SynthmetError("months must be non-empty")
    if not months <= set(range(1, 13)):
        raise SynthmetError(f"invalid month numbers {sorted(months)}")
    dates, idx = series.whole_days()
    day_months = dates.astype("datetime64[M]").astype(int) % 12 + 1
    keep = np.isin(day_months, sorted(months))
    if not keep.any():
        raise InsufficientDataError(f"no whole day in months {sorted(months)}")
    return series.take(idx[keep].ravel())


HUMID_SEASON = (11, 12, 1, 2, 3, 4)


# --------------------------------------------------------------------- CSV

CSV_COLUMNS = ("timestamp",) + tuple(v.value for v in BASE_VARS)


def _fmt(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def parse_weather_csv(path) -> WeatherSeries:
    """Read a weather CSV file (4-line header, one row per hour)."""
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            site_row = next(reader)
            start_row = next(reader)
            step_row = next(reader)
            header = next(reader)
        except StopIteration:
            raise WeatherFormatError(f"{path}: truncated header") from None
        site = _parse_site(site_row, path)
        if len(start_row) != 2 or start_row[0] != "#start":
            raise WeatherFormatError(f"{path}: line 2 must be '#start,<YYYY-MM-DDTHH:00>'")
        start = _parse_stamp(start_row[1], path, 2)
        if step_row != ["#step", "1h"]:
            raise WeatherFormatError(f"{path}: line 3 must be '#step,1h'")
        if not header or header[0] != "timestamp":
            raise WeatherFormatError(f"{path}: column header must start with 'timestamp'")
        try:
            variables = [Var(name) for name in header[1:]]
        except ValueError as exc:
            raise WeatherFormatError(f"{path}: unknown column in header ({exc})") from None
        if len(set(variables)) != len(variables):
            raise WeatherFormatError(f"{path}: duplicate column in header")

        data = [[] for _ in variables]
        expected = start
        for row_no, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != len(header):
                raise WeatherFormatError(
                    f"{path}: row {row_no} has {len(row)} fields, expected {len(header)}")
            stamp = _parse_stamp(row[0], path, row_no + 4)
            if stamp != expected:
                raise GapError(f"{path}: row {row_no} timestamp {row[0]} breaks the hourly "
                               f"sequence (expected {expected})", row=row_no)
            expected = expected + HOUR
            for j, cell in enumerate(row[1:]):
                cell = cell.strip()
                if cell == "":
                    data[j].append(math.nan)
                    continue
                try:
                    x = float(cell)
                except ValueError:
                    raise WeatherFormatError(
                        f"{path}: row {row_no}: bad number {cell!r} in {header[j + 1]}") from None
                if not math.isfinite(x):
                    raise WeatherRangeError(f"row {row_no}: non-finite {header[j + 1]}",
                                            row=row_no, variable=variables[j])
                data[j].append(x)
    n = len(data[0]) if data else 0
    columns = {v: np.array(col, dtype=float) for v, col in zip(variables, data)}
    try:
        return WeatherSeries(site, start + np.arange(n) * HOUR, columns)
    except WeatherRangeError as exc:
        raise WeatherRangeError(f"{path}: {exc}", row=exc.row, variable=exc.variable) from None


def _parse_site(row, path) -> Site:
    if len(row) not in (8, 10) or row[0] != "#site" or row[2:8:2] != ["lat", "lon", "alt"]:
        raise WeatherFormatError(
            f"{path}: line 1 must be '#site,<name>,lat,<deg>,lon,<deg>,alt,<m>'")
    pressure = None
    if len(row) == 10:
        if row[8] != "pressure":
            raise WeatherFormatError(f"{path}: unexpected site field {row[8]!r}")
        pressure = float(row[9])
    try:
        return Site(row[1], float(row[3]), float(row[5]), float(row[7]), pressure)
    except ValueError as exc:
        raise WeatherFormatError(f"{path}: bad site header ({exc})") from None


def _parse_stamp(text, path, line) -> np.datetime64:
    try:
        stamp = dt.datetime.strptime(text.strip(), "%Y-%m-%dT%H:%M")
    except ValueError:
        raise WeatherFormatError(f"{path}: line {line}: bad timestamp {text!r}") from None
    if stamp.minute != 0:
        raise WeatherFormatError(f"{path}: line {line}: timestamp not on the hour")
    return np.datetime64(stamp, "h")


def _fmt_stamp(t: np.datetime64) -> str:
    return str(t.astype("datetime64[m]"))[:16]


def write_weather_csv(series: WeatherSeries, path) -> Path:
    """Write ``series`` so that :func:`parse_weather_csv` reproduces it bit-exactly."""
    if len(series) == 0:
        raise SynthmetError("cannot write an empty series")
    if not series.is_contiguous:
        raise SynthmetError("CSV output requires a contiguous hourly series")
    path = Path(path)
    s = series.site
    site_row = ["#site", s.name, "lat", repr(float(s.latitude)), "lon", repr(float(s.longitude)),
                "alt", repr(float(s.altitude))]
    if s.pressure is not None:
        site_row += ["pressure", repr(float(s.pressure))]
    variables = series.variables
    cols = [series.columns[v] for v in variables]
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(site_row)
        w.writerow(["#start", _fmt_stamp(series.start)])
        w.writerow(["#step", "1h"])
        w.writerow(["timestamp"] + [v.value for v in variables])
        for i, t in enumerate(series.times):
            w.writerow([_fmt_stamp(t)] + [_fmt(c[i]) for c in cols])
    return path

"""Model libraries: directories of JSON model entries."""

from __future__ import annotations

import json
import os
import re
import warnings
from dataclasses import dataclass
from pathlib import Path

from ..errors import LibraryError
from ..solar import CorrelationModel
from ..stochmod import ARModel, ClearnessLaw, MlpModel, WeibullLaw

KINDS = {
    "correlation": CorrelationModel,
    "weibull": WeibullLaw,
    "clearness": ClearnessLaw,
    "ar": ARModel,
    "mlp": MlpModel,
}
ENV_LIBDIR = "SYNTHMET_LIBDIR"
MANIFEST_SUFFIX = ".manifest.json"   # run manifests may sit next to entries


def model_kind(model) -> str:
    for kind, cls in KINDS.items():
        if isinstance(model, cls):
            return kind
    raise LibraryError(f"not a library model: {type(model).__name__}")


def model_from_entry(d: dict):
    kind = d.get("kind")
    if kind not in KINDS:
        raise LibraryError(f"unknown model kind {kind!r}")
    try:
        return KINDS[kind].from_dict(d)
    except (KeyError, TypeError, ValueError) as exc:
        raise LibraryError(f"schema violation in {kind} entry: {exc}") from None


def signature(model):
    """``(inputs, outputs)`` in plan-variable names."""
    kind = model_kind(model)
    if kind == "correlation":
        return tuple(model.inputs), (model.output,)
    if kind == "weibull":
        return (), ("wind_ms",)
    if kind == "clearness":
        return (), ("kt",)
    if kind == "ar":
        return (), (model.variable,)
    return ("ghi_Whm2", "wind_ms"), tuple(model.outputs)


def model_rmse(model) -> float:
    kind = model_kind(model)
    if kind == "correlation":
        return float(model.rmse)
    if kind == "mlp":
        return float(model.val_rmse)
    return float("nan")


@dataclass(frozen=True, eq=False)
class LibraryEntry:
    id: str
    model: object
    path: Path | None = None

    @property
    def kind(self) -> str:
        return model_kind(self.model)

    @property
    def inputs(self) -> tuple:
        return signature(self.model)[0]

    @property
    def outputs(self) -> tuple:
        return signature(self.model)[1]

    @property
    def rmse(self) -> float:
        return model_rmse(self.model)

    @property
    def period(self) -> str:
        return getattr(self.model, "period", "")

    def describe(self) -> str:
        ins = ", ".join(self.inputs) or "-"
        r = self.rmse
        tail = "" if r != r else f" rmse={r:.4g}"
        return f"{self.id} [{self.kind}] {ins} -> {', '.join(self.outputs)}{tail}"


class ModelRegistry:
    """Read-only collection of library entries."""

    def __init__(self, entries=()):
        self.entries = list(entries)
        ids = [e.id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise LibraryError("duplicate entry ids in registry")

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, entry_id) -> LibraryEntry:
        for e in self.entries:
            if e.id == entry_id:
                return e
        raise KeyError(entry_id)

    def producers(self, variable: str) -> list:
        return [e for e in self.entries if variable in e.outputs]

    def filter(self, period=None, kind=None) -> "ModelRegistry":
        return ModelRegistry(e for e in self.entries
                             if (period is None or e.period == period) and (kind is None or e.kind == kind))


def load_library(directory=None, period=None) -> ModelRegistry:
    """Load every ``*.json`` entry of ``directory`` (sorted by name).

    Corrupt JSON and unknown kinds are skipped with a warning; a file whose
    kind is known but whose fields do not fit the schema raises LibraryError.
    """
    directory = directory or os.environ.get(ENV_LIBDIR)
    if not directory:
        raise LibraryError(f"no library directory given and {ENV_LIBDIR} is unset")
    d = Path(directory)
    if not d.is_dir():
        raise LibraryError(f"library directory {d} does not exist")
    entries = []
    for path in sorted(d.glob("*.json")):
        if path.name.endswith(MANIFEST_SUFFIX):
            continue
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise LibraryError(f"cannot read {path}: {exc}") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            warnings.warn(f"skipping corrupt library file {path.name}: {exc}", stacklevel=2)
            continue
        if not isinstance(data, dict) or data.get("kind") not in KINDS:
            kind = data.get("kind") if isinstance(data, dict) else None
            warnings.warn(f"skipping {path.name}: unknown model kind {kind!r}", stacklevel=2)
            continue
        try:
            model = model_from_entry(data)
        except LibraryError as exc:
            raise LibraryError(f"{path}: {exc}") from None
        entries.append(LibraryEntry(path.stem, model, path))
    reg = ModelRegistry(entries)
    return reg.filter(period=period) if period is not None else reg


def default_entry_name(model) -> str:
    kind = model_kind(model)
    if kind == "correlation":
        base = model.name
    elif kind == "mlp":
        base = "mlp"
    else:
        base = f"{kind}_{getattr(model, 'variable', '')}".rstrip("_")
    period = getattr(model, "period", "")
    name = f"{base}_{period}" if period else base
    return re.sub(r"[^A-Za-z0-9_.-]+", "-", name)


def save_entry(model, directory, name: str | None = None) -> Path:
    """Write ``model`` as ``<directory>/<name>.json``; the file stem is the entry id."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    path = d / f"{name or default_entry_name(model)}.json"
    text = json.dumps(model.to_dict(), indent=2, sort_keys=True)
    path.write_text(text + "\n", encoding="utf-8")
    return path

"""Command-line interface: describe, fit, classify, search, generate, simulate.

Every run writes its outputs plus a JSON manifest (arguments, seed, input
and output digests). Exit codes: 0 success, 1 data or runtime error,
2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as _dt
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import SynthmetError
from .weather import HUMID_SEASON, Indicator, Site, Var, daily_indicators, parse_weather_csv, slice_period

EXIT_OK, EXIT_ERROR, EXIT_USAGE = 0, 1, 2
MODEL_FAMILIES = ("weibull", "clearness", "ar", "mlp")


class UsageError(Exception):
    """Bad flag combination detected after parsing."""


# ------------------------------------------------------------------ helpers

def _var(text):
    try:
        return Var.parse(text)
    except SynthmetError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _indicator(text):
    try:
        return Indicator.parse(text)
    except SynthmetError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _months(text):
    if text.strip().lower() in ("humid", "wet"):
        return tuple(HUMID_SEASON)
    try:
        months = tuple(int(m) for m in text.split(",") if m.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad month list {text!r}") from None
    if not months or not all(1 <= m <= 12 for m in months):
        raise argparse.ArgumentTypeError(f"months must be in 1-12: {text!r}")
    return months


def _var_list(text):
    return tuple(_var(v) for v in text.split(",") if v.strip())


def _model_family(text):
    if text in MODEL_FAMILIES or (text.startswith("correlation:") and len(text) > len("correlation:")):
        return text
    raise argparse.ArgumentTypeError(f"model must be one of {', '.join(MODEL_FAMILIES)} or correlation:<name>")


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = _dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc) if epoch else _dt.datetime.now(_dt.timezone.utc)
    return t.replace(microsecond=0).isoformat()


def _echo(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k == "func":
            continue
        if isinstance(v, (list, tuple)):
            v = [x.value if isinstance(x, (Var, Indicator)) else str(x) if isinstance(x, Path) else x for x in v]
        elif isinstance(v, (Var, Indicator)):
            v = v.value
        elif isinstance(v, Path):
            v = str(v)
        out[k] = v
    return out


def write_manifest(path, command, args, inputs=(), outputs=(), extra=None) -> Path:
    """The run manifest: argument echo, seed, digests, timestamp, version."""
    m = {
        "subcommand": command,
        "arguments": _echo(args),
        "seed": getattr(args, "seed", None),
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "outputs": {str(p): sha256_file(p) for p in outputs},
        "timestamp": _timestamp(),
        "version": __version__,
    }
    if extra:
        m.update(extra)
    path = Path(path)
    path.write_text(json.dumps(m, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return Path(path)


def _out_dir(args) -> Path:
    d = Path(args.out)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _load_weather(args):
    series = parse_weather_csv(args.weather)
    if getattr(args, "months", None):
        series = slice_period(series, args.months)
    return series


def _period_tag(args) -> str:
    if getattr(args, "period", None):
        return args.period
    if getattr(args, "months", None):
        return "m" + "-".join(str(m) for m in args.months)
    return ""


# ------------------------------------------------------------------ describe

def cmd_describe(args) -> int:
    from .descstats import chi2_independence, histogram, summarize

    series = _load_weather(args)
    ind = daily_indicators(series, args.var, args.indicator, _period_tag(args))
    table = summarize(ind)
    out = _out_dir(args)
    report = table.format()
    if len(ind.excluded):
        report += f"excluded incomplete days: {len(ind.excluded)}\n"
    if args.against:
        var_b, _, kind_b = args.against.partition(":")
        other = daily_indicators(series, _var(var_b), _indicator(kind_b or "mean"))
        report += "\n" + chi2_independence(ind, other).format()
    hist = histogram(ind.values, bins=args.bins)
    rep_path = out / "report.txt"
    rep_path.write_text(report, encoding="utf-8")
    hist_path = out / "histogram.csv"
    hist.to_csv(hist_path)
    write_manifest(out / "describe.manifest.json", "describe", args, [args.weather], [rep_path, hist_path],
                   {"summary": table.to_dict()})
    sys.stdout.write(report)
    return EXIT_OK


# ------------------------------------------------------------------ fit

def _fit_model(args, series):
    from .solar import fit_correlation, solar_quantities
    from .stochmod import MlpSpec, fit_ar, fit_clearness_law, fit_mlp, fit_weibull

    period = _period_tag(args)
    fam = args.model
    if fam.startswith("correlation:"):
        name = fam.split(":", 1)[1]
        inputs = tuple(args.inputs.split(",")) if args.inputs else None
        return fit_correlation(name, series, inputs, args.output, args.degree, period=period)
    if fam == "mlp":
        return fit_mlp(series, MlpSpec(hidden=args.hidden), epochs=args.epochs, seed=args.seed, period=period)
    var = args.var or (Var.WIND if fam == "weibull" else "kt")
    if fam == "clearness" or (fam == "ar" and var == "kt"):
        kt = solar_quantities(series, {"kt"}).daily["kt"]
        law = fit_clearness_law(kt)
        model = law if fam == "clearness" else fit_ar(kt, args.max_order, law, variable="kt")
    elif fam == "weibull":
        if var != Var.WIND:
            raise UsageError("weibull fits wind_ms only")
        model = fit_weibull(series[Var.WIND][np.isfinite(series[Var.WIND])])
    else:
        x = series[var]
        transform = fit_weibull(x[np.isfinite(x)]) if var == Var.WIND else None
        if not np.all(np.isfinite(x)):
            raise SynthmetError(f"{var.value} has gaps; the ar model needs a contiguous series")
        model = fit_ar(x, args.max_order, transform, hours=series.hour_of_day, variable=var.value)
    repl = {"period": period}
    if "site" in {f.name for f in dataclasses.fields(model)}:
        repl["site"] = series.site.name
    return dataclasses.replace(model, **repl)


def _fit_var(text):
    if text.strip().lower() in ("kt", "clearness"):
        return "kt"
    return _var(text)


def cmd_fit(args) -> int:
    from .genengine import load_library, save_entry
    from .genengine.library import MANIFEST_SUFFIX, default_entry_name

    series = _load_weather(args)
    model = _fit_model(args, series)
    libdir = args.out or os.environ.get("SYNTHMET_LIBDIR")
    if not libdir:
        raise UsageError("give --out or set SYNTHMET_LIBDIR")
    name = args.name or default_entry_name(model)
    path = save_entry(model, libdir, name)
    entry = load_library(libdir)[path.stem]   # reload check
    write_manifest(Path(libdir) / f"{path.stem}{MANIFEST_SUFFIX}", "fit", args, [args.weather], [path],
                   {"entry": entry.describe()})
    print(entry.describe())
    return EXIT_OK


# ------------------------------------------------------------------ classify

def cmd_classify(args) -> int:
    from .classify import representative_days

    series = _load_weather(args)
    rep = representative_days(series, args.vars, k=args.k, variance_threshold=args.variance)
    out = _out_dir(args)
    js = out / "classes.json"
    js.write_text(json.dumps(rep.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    rows = []
    for key, r in rep.per_variable.items():
        rows += [[key] + row for row in r.csv_rows()]
    if rep.joint is not None:
        rows += [["joint"] + row for row in rep.joint.csv_rows()]
    cs = _write_csv(out / "classes.csv",
                    ["report", "class_id", "frequency", "representative_date", "variable"]
                    + [f"h{h:02d}" for h in range(24)], rows)
    write_manifest(out / "classify.manifest.json", "classify", args, [args.weather], [js, cs])
    for key, r in list(rep.per_variable.items()) + ([("joint", rep.joint)] if rep.joint else []):
        print(f"{key}: k={r.classification.k}")
        for c in r.classes:
            print(f"  class {c.label}: {len(c)} days, frequency {c.frequency:.3f}, "
                  f"representative {c.representative_date}")
    return EXIT_OK


# ------------------------------------------------------------------ search

def cmd_search(args) -> int:
    from .classify import SequenceCriteria, parse_criteria, search_sequences

    series = _load_weather(args)
    preds = parse_criteria(args.criteria) if args.criteria else ()
    crit = SequenceCriteria(args.len, preds, tuple(args.classify_vars or ()), not args.no_overlap, args.k)
    matches = search_sequences(series, crit)
    out = _out_dir(args)
    if preds:
        header = ["start", "length", "distance"] + [p.code for p in preds]
        rows = [m.to_row() for m in matches]
    else:
        header = ["start", "length", "distance", "class_id", "frequency"]
        rows = [[str(m.start), m.length, repr(float(m.distance)), m.class_id, repr(float(m.frequency))]
                for m in matches]
    path = _write_csv(out / "windows.csv", header, rows)
    write_manifest(out / "search.manifest.json", "search", args, [args.weather], [path],
                   {"n_matches": len(matches)})
    print(f"{len(matches)} matching window(s)")
    for row in rows[:10]:
        print("  " + "  ".join(str(x) for x in row))
    return EXIT_OK


# ------------------------------------------------------------------ generate

def prompt_chooser(stdin=None, stdout=None):
    """Chooser asking on the terminal which model to use for a variable."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout

    def choose(variable, entries):
        ranked = sorted(entries, key=lambda e: (np.inf if np.isnan(e.rmse) else e.rmse, e.id))
        stdout.write(f"{len(ranked)} models produce {variable}:\n")
        for i, e in enumerate(ranked, 1):
            stdout.write(f"  [{i}] {e.describe()}\n")
        stdout.write(f"choose 1-{len(ranked)} [1]: ")
        stdout.flush()
        line = stdin.readline().strip()
        if not line:
            return ranked[0]
        try:
            i = int(line)
        except ValueError:
            i = 0
        if not 1 <= i <= len(ranked):
            raise UsageError(f"invalid choice {line!r}")
        return ranked[i - 1]

    return choose


def _site(args) -> Site:
    from .sample import GILLOT
    if args.lat is None and args.lon is None:
        return GILLOT if args.alt is None else dataclasses.replace(GILLOT, altitude=args.alt)
    if args.lat is None or args.lon is None:
        raise UsageError("give both --lat and --lon")
    return Site(args.site_name, args.lat, args.lon, args.alt or 0.0)


def cmd_generate(args) -> int:
    from .genengine import GenerationRequest, Target, generate, load_library
    from .weather import write_weather_csv

    libdir = args.library or os.environ.get("SYNTHMET_LIBDIR")
    if not libdir:
        raise UsageError("give --library or set SYNTHMET_LIBDIR")
    registry = load_library(libdir, period=args.period)
    targets = tuple(Target.parse(t) for t in args.target or ())
    overrides = {}
    for o in args.override or ():
        var, sep, eid = o.partition("=")
        if not sep:
            raise UsageError(f"override {o!r} must be var=entry_id")
        overrides[var.strip()] = eid.strip()
    variables = tuple(v.value for v in args.vars) if args.vars else GenerationRequest.__dataclass_fields__[
        "variables"].default
    req = GenerationRequest(_site(args), args.days, args.start, variables, targets, args.seed, overrides)
    chooser = prompt_chooser() if args.interactive else None
    result = generate(req, registry, chooser)
    out = _out_dir(args)
    csv_path = write_weather_csv(result.series, out / "generated.csv")
    lib_files = sorted(p for p in Path(libdir).glob("*.json") if not p.name.endswith(".manifest.json"))
    write_manifest(out / "generate.manifest.json", "generate", args, lib_files, [csv_path],
                   {"generation": result.to_manifest()})
    for p in result.plan.steps:
        print("  " + p.describe())
    for var, blockers in result.plan.unreachable.items():
        print(f"unreachable {var}: {'; '.join(blockers)}")
    print("achieved: " + ", ".join(f"{k}={v:.4f}" for k, v in result.achieved.items()))
    return EXIT_OK


# ------------------------------------------------------------------ simulate

def cmd_simulate(args) -> int:
    from .buildsim import building_from_dict, comfort_fraction, demo_dwelling_dict, ideal_hvac_loads, load_zones
    from .buildsim.building import load_building

    building = load_building(args.building) if args.building else building_from_dict(demo_dwelling_dict())
    weather = parse_weather_csv(args.weather)
    zones = load_zones(args.comfort)
    res = ideal_hvac_loads(building.model, weather, building.loads, building.hvac)
    out = _out_dir(args)
    loads_path = _write_csv(out / "loads.csv", ["date", "sensible_kWh", "latent_kWh", "total_kWh"],
                            [[d, repr(s), repr(l), repr(t)] for d, s, l, t in res.rows()])
    T = res.thermal.zone_air()
    per_zone = {}
    for k, z in enumerate(building.model.zones):
        per_zone[z.name] = comfort_fraction((T[:, k], res.indoor_w[:, k]), zones)
    report = {"building": building.name, "days": len(res.dates), "MEAN": res.MEAN, "MAX": res.MAX,
              "comfort_fraction": per_zone}
    comfort_path = out / "comfort.json"
    comfort_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    inputs = [args.weather] + [p for p in (args.building, args.comfort) if p]
    write_manifest(out / "simulate.manifest.json", "simulate", args, inputs, [loads_path, comfort_path])
    print(f"mean daily cooling: sensible {res.MEAN['sensible_kWh']:.2f} kWh, "
          f"latent {res.MEAN['latent_kWh']:.2f} kWh, total {res.MEAN['total_kWh']:.2f} kWh")
    print(f"max daily cooling:  total {res.MAX['total_kWh']:.2f} kWh")
    for zname, fr in per_zone.items():
        print(f"  {zname}: " + ", ".join(f"{k} {v:.2f}" for k, v in fr.items()))
    return EXIT_OK


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="synthmet", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("describe", help="summary table and histogram of a daily indicator")
    d.add_argument("weather", type=Path)
    d.add_argument("--var", type=_var, required=True)
    d.add_argument("--indicator", type=_indicator, default=Indicator.MEAN)
    d.add_argument("--months", type=_months)
    d.add_argument("--bins", type=_positive_int, default=10)
    d.add_argument("--against", help="second indicator var:kind for a chi-square test")
    d.add_argument("--out", default="describe-out")
    d.set_defaults(func=cmd_describe)

    f = sub.add_parser("fit", help="fit a model and add it to a library")
    f.add_argument("weather", type=Path)
    f.add_argument("--model", type=_model_family, required=True)
    f.add_argument("--var", type=_fit_var, help="ar: kt, wind, temp or rh")
    f.add_argument("--inputs", help="polynomial correlation inputs, comma separated")
    f.add_argument("--output", help="polynomial correlation output")
    f.add_argument("--degree", type=int)
    f.add_argument("--max-order", type=int, default=3)
    f.add_argument("--epochs", type=_positive_int, default=30)
    f.add_argument("--hidden", type=_positive_int, default=8)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--months", type=_months)
    f.add_argument("--period", help="period tag recorded in the entry")
    f.add_argument("--name", help="entry id (file stem)")
    f.add_argument("--out", help="library directory (default $SYNTHMET_LIBDIR)")
    f.set_defaults(func=cmd_fit)

    c = sub.add_parser("classify", help="representative days by PCA and ascending classification")
    c.add_argument("weather", type=Path)
    c.add_argument("--vars", type=_var_list, required=True)
    c.add_argument("--k", type=_positive_int)
    c.add_argument("--variance", type=float, default=0.9)
    c.add_argument("--months", type=_months)
    c.add_argument("--out", default="classify-out")
    c.set_defaults(func=cmd_classify)

    s = sub.add_parser("search", help="find day sequences meeting criteria")
    s.add_argument("weather", type=Path)
    s.add_argument("--criteria", help='e.g. "tmean:30:32,wmean:0:3"')
    s.add_argument("--len", type=_positive_int, required=True)
    s.add_argument("--no-overlap", action="store_true")
    s.add_argument("--classify-vars", type=_var_list)
    s.add_argument("--k", type=_positive_int)
    s.add_argument("--months", type=_months)
    s.add_argument("--out", default="search-out")
    s.set_defaults(func=cmd_search)

    g = sub.add_parser("generate", help="generate a synthetic sequence from a model library")
    g.add_argument("--library", help="library directory (default $SYNTHMET_LIBDIR)")
    g.add_argument("--days", type=_positive_int, required=True)
    g.add_argument("--start", default="2021-01-01")
    g.add_argument("--vars", type=_var_list)
    g.add_argument("--target", action="append", help="var=value[:tolerance], repeatable")
    g.add_argument("--override", action="append", help="var=entry_id, repeatable")
    g.add_argument("--period", help="only use library entries with this period tag")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--lat", type=float)
    g.add_argument("--lon", type=float)
    g.add_argument("--alt", type=float)
    g.add_argument("--site-name", default="site")
    g.add_argument("--interactive", action="store_true", help="ask when several models produce a variable")
    g.add_argument("--out", default="generate-out")
    g.set_defaults(func=cmd_generate)

    m = sub.add_parser("simulate", help="cooling loads and comfort of a building under a weather file")
    m.add_argument("--building", type=Path, help="building JSON (default: packaged demo dwelling)")
    m.add_argument("--weather", type=Path, required=True)
    m.add_argument("--comfort", type=Path, help="comfort zones JSON (default: packaged Givoni zones)")
    m.add_argument("--out", default="simulate-out")
    m.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"synthmet {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SynthmetError, OSError) as exc:
        print(f"synthmet {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

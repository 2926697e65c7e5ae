import io
import json
import shutil

import numpy as np
import pytest

from synthmet.cli import main
from synthmet.genengine import load_library, save_entry
from synthmet.sample import planted_radiation_days, synthetic_year
from synthmet.solar import CorrelationModel, default_correlation
from synthmet.weather import Var, parse_weather_csv, write_weather_csv


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    year = synthetic_year(days=365, seed=0)
    write_weather_csv(year, d / "year.csv")
    planted, _ = planted_radiation_days(90, seed=1)
    write_weather_csv(planted, d / "planted.csv")
    hot = synthetic_year(days=10, seed=2, start="2021-01-15")
    write_weather_csv(hot, d / "hot.csv")
    wet = hot.with_columns(rh_pct=np.minimum(hot[Var.RH] + 15.0, 100.0))
    write_weather_csv(wet, d / "wet.csv")
    return d


def _run(*argv):
    return main([str(a) for a in argv])


# -- describe

def test_describe_smoke(files, tmp_path, capsys):
    assert _run("describe", files / "year.csv", "--var", "ghi", "--indicator", "daily-total",
                "--out", tmp_path) == 0
    out = capsys.readouterr().out
    assert "mean" in out and "max" in out
    hist = (tmp_path / "histogram.csv").read_text().splitlines()
    assert hist[0] == "bin_low,bin_high,count,frequency" and len(hist) == 11
    m = json.loads((tmp_path / "describe.manifest.json").read_text())
    assert m["subcommand"] == "describe" and len(next(iter(m["inputs"].values()))) == 64


def test_describe_humid_months(files, tmp_path):
    assert _run("describe", files / "year.csv", "--var", "temp", "--months", "11,12,1,2,3,4",
                "--out", tmp_path) == 0
    summary = json.loads((tmp_path / "describe.manifest.json").read_text())["summary"]
    assert summary["count"] == 31 + 28 + 31 + 30 + 30 + 31


def test_describe_usage_errors(files, tmp_path):
    assert _run("describe", files / "year.csv", "--var", "nonsense", "--out", tmp_path) == 2
    assert _run("describe", files / "year.csv", "--var", "temp", "--months", "13", "--out", tmp_path) == 2
    assert _run("frobnicate") == 2


def test_data_error_exit_1(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("garbage\n")
    assert _run("describe", bad, "--var", "temp", "--out", tmp_path / "o") == 1
    assert _run("describe", tmp_path / "missing.csv", "--var", "temp", "--out", tmp_path / "o") == 1


# -- fit

@pytest.mark.parametrize("family,extra", [
    ("weibull", []),
    ("ar", ["--var", "kt"]),
    ("correlation:erbs", []),
    ("clearness", []),
    ("ar", ["--var", "wind"]),
])
def test_fit_round_trip(files, tmp_path, family, extra):
    assert _run("fit", files / "year.csv", "--model", family, *extra, "--out", tmp_path) == 0
    reg = load_library(tmp_path)
    assert len(reg) == 1
    (entry,) = list(reg)
    again = load_library(tmp_path)[entry.id].model
    assert json.dumps(again.to_dict(), sort_keys=True) == json.dumps(entry.model.to_dict(), sort_keys=True)
    assert (tmp_path / f"{entry.id}.manifest.json").exists()


def test_fit_libdir_env(files, tmp_path, monkeypatch):
    monkeypatch.setenv("SYNTHMET_LIBDIR", str(tmp_path))
    assert _run("fit", files / "year.csv", "--model", "weibull", "--months", "humid") == 0
    (entry,) = list(load_library())
    assert entry.period == "m11-12-1-2-3-4"
    monkeypatch.delenv("SYNTHMET_LIBDIR")
    assert _run("fit", files / "year.csv", "--model", "weibull") == 2


def test_fit_bad_family(files, tmp_path):
    assert _run("fit", files / "year.csv", "--model", "spline", "--out", tmp_path) == 2
    assert _run("fit", files / "year.csv", "--model", "correlation:nope", "--out", tmp_path) == 1


# -- classify

def test_classify_planted(files, tmp_path):
    assert _run("classify", files / "planted.csv", "--vars", "ghi", "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "classes.json").read_text())["per_variable"]["ghi_Whm2"]
    assert rep["k"] == 3
    assert sum(c["frequency"] for c in rep["classes"]) == pytest.approx(1.0)


def test_classify_k1(files, tmp_path):
    assert _run("classify", files / "planted.csv", "--vars", "ghi", "--k", "1", "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "classes.json").read_text())["per_variable"]["ghi_Whm2"]
    assert len(rep["classes"]) == 1 and rep["classes"][0]["frequency"] == 1.0


# -- search

def _planted_year(files, tmp_path):
    year = parse_weather_csv(files / "year.csv")
    T = year[Var.TEMP].copy().reshape(-1, 24)
    T[200:205] += 31.0 - T[200:205].mean()
    path = tmp_path / "planted_year.csv"
    write_weather_csv(year.with_columns(temp_C=T.ravel()), path)
    return path, year.dates[0] + 200


def test_search_planted(files, tmp_path):
    path, start = _planted_year(files, tmp_path)
    assert _run("search", path, "--criteria", "tmean:30.5:31.5", "--len", "5", "--out", tmp_path / "o") == 0
    rows = (tmp_path / "o" / "windows.csv").read_text().splitlines()
    assert rows[0] == "start,length,distance,temp_C.mean"
    assert rows[1].split(",")[0] == str(start)


def test_search_empty_and_subset(files, tmp_path):
    assert _run("search", files / "year.csv", "--criteria", "tmean:45:50", "--len", "5", "--out", tmp_path / "e") == 0
    assert (tmp_path / "e" / "windows.csv").read_text().splitlines() == ["start,length,distance,temp_C.mean"]
    _run("search", files / "year.csv", "--criteria", "tmean:25:29", "--len", "3", "--out", tmp_path / "a")
    _run("search", files / "year.csv", "--criteria", "tmean:26:28", "--len", "3", "--out", tmp_path / "b")
    starts = [{r.split(",")[0] for r in (tmp_path / x / "windows.csv").read_text().splitlines()[1:]} for x in "ab"]
    assert starts[1] <= starts[0] and starts[1]


# -- generate

def test_generate_targets(library_dir, tmp_path):
    assert _run("generate", "--library", library_dir, "--days", 5, "--target", "kt=0.75", "--target", "wind=3",
                "--seed", 4, "--out", tmp_path) == 0
    m = json.loads((tmp_path / "generate.manifest.json").read_text())
    assert abs(m["generation"]["achieved"]["kt"] - 0.75) <= 0.02
    assert abs(m["generation"]["achieved"]["wind_ms"] - 3.0) <= 0.2
    series = parse_weather_csv(tmp_path / "generated.csv")
    assert len(series) == 120


def test_generate_env_library(library_dir, tmp_path, monkeypatch):
    monkeypatch.setenv("SYNTHMET_LIBDIR", str(library_dir))
    assert _run("generate", "--days", 2, "--out", tmp_path) == 0
    monkeypatch.delenv("SYNTHMET_LIBDIR")
    assert _run("generate", "--days", 2, "--out", tmp_path) == 2


def test_generate_unreachable_target(library_dir, tmp_path):
    assert _run("generate", "--library", library_dir, "--days", 5, "--target", "kt=0.95",
                "--out", tmp_path) == 1


def test_generate_interactive(tmp_path, library_dir, monkeypatch, capsys):
    lib = tmp_path / "lib"
    shutil.copytree(library_dir, lib)
    base = default_correlation("erbs")
    save_entry(CorrelationModel("erbs", ("kt_h",), "fd_h", base.params, rmse=0.5), lib, "erbs_worse")
    monkeypatch.setattr("sys.stdin", io.StringIO("1\n2\n"))
    assert _run("generate", "--library", lib, "--days", 2, "--vars", "dhi", "--interactive", "--out", tmp_path / "o") == 0
    out = capsys.readouterr().out
    assert "2 models produce kt" in out and "2 models produce fd_h" in out
    assert "wind_ms" not in out
    steps = json.loads((tmp_path / "o" / "generate.manifest.json").read_text())["generation"]["plan"]["steps"]
    assert "erbs_worse" in [s["id"] for s in steps]


# -- simulate

def test_simulate_loads_and_comfort(files, tmp_path):
    assert _run("simulate", "--weather", files / "hot.csv", "--out", tmp_path / "base") == 0
    rep = json.loads((tmp_path / "base" / "comfort.json").read_text())
    assert rep["MEAN"]["sensible_kWh"] > 0
    for fr in rep["comfort_fraction"].values():
        assert all(0.0 <= v <= 1.0 for v in fr.values())
    assert _run("simulate", "--weather", files / "wet.csv", "--out", tmp_path / "wet") == 0
    wet = json.loads((tmp_path / "wet" / "comfort.json").read_text())
    assert wet["MEAN"]["latent_kWh"] > rep["MEAN"]["latent_kWh"]
    rows = (tmp_path / "base" / "loads.csv").read_text().splitlines()
    assert rows[0] == "date,sensible_kWh,latent_kWh,total_kWh" and len(rows) == 11


# -- determinism

def _commands(files, library_dir):
    return {
        "describe": (["describe", files / "year.csv", "--var", "ghi", "--indicator", "total"],
                     ["report.txt", "histogram.csv"]),
        "fit": (["fit", files / "year.csv", "--model", "mlp", "--epochs", "3", "--seed", "5"], ["mlp.json"]),
        "classify": (["classify", files / "year.csv", "--vars", "ghi,temp", "--months", "1,2,3"], ["classes.json", "classes.csv"]),
        "search": (["search", files / "year.csv", "--criteria", "tmean:26:28", "--len", "3"], ["windows.csv"]),
        "generate": (["generate", "--library", library_dir, "--days", "20", "--seed", "9",
                      "--target", "kt=0.6"], ["generated.csv"]),
        "simulate": (["simulate", "--weather", files / "hot.csv"], ["loads.csv", "comfort.json"]),
    }


@pytest.mark.parametrize("name", ["describe", "fit", "classify", "search", "generate", "simulate"])
def test_rerun_byte_identical(files, library_dir, tmp_path, name):
    argv, outputs = _commands(files, library_dir)[name]
    blobs = []
    for run in ("a", "b"):
        assert _run(*argv, "--out", tmp_path / run) == 0
        blobs.append([(tmp_path / run / o).read_bytes() for o in outputs])
    assert blobs[0] == blobs[1]

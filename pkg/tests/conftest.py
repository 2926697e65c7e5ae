import numpy as np
import pytest

from synthmet.genengine import load_library, save_entry
from synthmet.sample import synthetic_year
from synthmet.solar import fit_correlation, geometry_for_dates
from synthmet.stochmod import fit_ar, fit_clearness_law, fit_mlp, fit_weibull
from synthmet.weather import Var


def fit_library(year, directory):
    """Fit every model kind the generator uses on ``year`` and save it."""
    dates, idx = year.whole_days()
    h0 = np.array([g.H0_daily for g in geometry_for_dates(year.site, dates)])
    kt = year[Var.GHI][idx].sum(axis=1) / h0
    law = fit_clearness_law(kt)
    wl = fit_weibull(year[Var.WIND])
    models = {
        "clearness_kt": law,
        "ar_kt": fit_ar(kt, transform=law, variable="kt"),
        "weibull_wind_ms": wl,
        "ar_wind_ms": fit_ar(year[Var.WIND], transform=wl, hours=year.hour_of_day, variable="wind_ms"),
        "erbs": fit_correlation("erbs", year),
        "angstrom_black_inverse": fit_correlation("angstrom_black_inverse", year),
        "okta_from_kt": fit_correlation("poly", year, ["kt"], "okta_d", 2),
        "mlp": fit_mlp(year, epochs=10, seed=0),
    }
    for name, m in models.items():
        save_entry(m, directory, name)
    return models


@pytest.fixture(scope="session")
def source_year():
    return synthetic_year(days=365, seed=0)


@pytest.fixture(scope="session")
def library_dir(tmp_path_factory, source_year):
    d = tmp_path_factory.mktemp("library")
    fit_library(source_year, d)
    return d


@pytest.fixture(scope="session")
def registry(library_dir):
    return load_library(library_dir)


ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """``record(n, ok, detail)`` stores one verdict per criterion, then asserts it."""
    store = request.config.stash.setdefault(ACCEPTANCE_KEY, {})

    def record(n, ok, detail):
        store[n] = (bool(ok), detail)
        print(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(ACCEPTANCE_KEY, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(store):
        ok, detail = store[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")

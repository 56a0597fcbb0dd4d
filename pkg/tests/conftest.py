import os

import pytest

from kpzmp import _backend

BUDGET = os.environ.get("KPZMP_BUDGET", "quick")
COMPILED = _backend.NAME == "cython"


def mc_samples(n):
    """Monte Carlo sample count, cut down when only the pure-Python kernels exist."""
    return n if COMPILED else max(n // 50, 2000)


def pytest_configure(config):
    config._acceptance = {}


def pytest_collection_modifyitems(config, items):
    if BUDGET == "full":
        return
    skip = pytest.mark.skip(reason="needs KPZMP_BUDGET=full")
    for item in items:
        if "full" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def criterion(request):
    """record(n, ok, detail) stores one acceptance line for the terminal summary."""

    def record(n, ok, detail=""):
        request.config._acceptance[n] = (bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    res = config._acceptance
    if not res:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, 13):
        if n in res:
            ok, detail = res[n]
            terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        else:
            terminalreporter.write_line(f"criterion {n:2d}: NOT RUN (budget {BUDGET} or deselected)")

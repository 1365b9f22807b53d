"""Shared, session-cached solves.  Value function iteration at n=2001 is the
expensive part of the suite, so every fixture is analyzed at most once."""
import functools

import numpy as np
import pytest

from steadyscope import analyze, load_fixture
from steadyscope.dp import Grid, solve_vfi

CASE_FIXTURES = ["ncg-a", "ncg-b", "ncg-c", "fit-a", "fit-b", "fit-c", "ie-a", "ie-b", "ie-c"]
ALL_FIXTURES = CASE_FIXTURES + ["textbook"]


@functools.lru_cache(maxsize=None)
def fixture_model(name):
    cfg = load_fixture(name)
    return cfg, cfg.build_model()


@functools.lru_cache(maxsize=None)
def fixture_report(name, n=2001):
    cfg, model = fixture_model(name)
    return analyze(model, cfg.delta, n=n, s0=cfg.s0)


@functools.lru_cache(maxsize=None)
def fixture_policy(name, n):
    """Policy only (no locator, no paths); used for the grid-refinement checks."""
    cfg, model = fixture_model(name)
    if n == 2001:
        return fixture_report(name).policy
    _, pol = solve_vfi(model, cfg.delta, Grid.for_model(model, n))
    return pol


@pytest.fixture
def report():
    return fixture_report


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda x: (int(x.split()[1].rstrip(":")), x)):
            terminalreporter.write_line(line)

"""Property-based checks (hypothesis) of the invariants every module relies on."""
import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from steadyscope import build_model, eval_locator, fd_partial, make_model
from steadyscope.dp import Grid, bellman_sweep, find_fixed_points, simulate_path, solve_vfi

SLOW = settings(max_examples=12, deadline=None, suppress_health_check=[HealthCheck.too_slow])


def textbook(alpha):
    return build_model("ncg", {"production": "textbook", "A": 1.0, "alpha": alpha, "gamma": 1.0, "d": 1.0})


@given(c=st.floats(0.5, 5.0), s=st.floats(0.3, 0.7), y=st.floats(0.3, 0.7))
@settings(max_examples=40, deadline=None)
def test_fd_error_is_second_order(c, s, y):
    # for pi = c s^3 + s y the central-difference error in pi_1 is exactly c h^2
    m = make_model("cubic", lambda a, b: c * a**3 + a * b, (0.0, 1.0), (0.0, 1.0))
    exact = 3 * c * s**2 + y
    e1 = abs(fd_partial(m, 1, s, y, h=1e-2) - exact)
    e2 = abs(fd_partial(m, 1, s, y, h=5e-3) - exact)
    assert e1 == pytest.approx(c * 1e-4, rel=1e-5)
    assert e1 / e2 == pytest.approx(4.0, rel=1e-3)


@given(xs=st.lists(st.floats(0.05, 0.95), min_size=1, max_size=20), delta=st.floats(0.0, 0.99))
@settings(max_examples=40, deadline=None)
def test_locator_is_pure(xs, delta):
    m = build_model("fitness", {"b": 9})
    s = np.array(xs)
    before = s.copy()
    a = eval_locator(m, s, delta)
    b = eval_locator(m, s, delta)
    assert np.array_equal(a, b)
    assert np.array_equal(s, before)


@given(seed=st.integers(0, 2**32 - 1), delta=st.floats(0.05, 0.98), alpha=st.floats(0.2, 0.6))
@SLOW
def test_bellman_operator_contracts(seed, delta, alpha):
    m = textbook(alpha)
    g = Grid.for_model(m, 121)
    r = np.random.default_rng(seed)
    V = r.normal(scale=3.0, size=g.n)
    W = V + r.normal(scale=1.0, size=g.n)
    gap_in = np.max(np.abs(V - W))
    gap_out = np.max(np.abs(bellman_sweep(m, delta, g, V) - bellman_sweep(m, delta, g, W)))
    assert gap_out <= delta * gap_in + 1e-9 * (1 + gap_in)


@given(delta=st.floats(0.3, 0.95), alpha=st.floats(0.2, 0.6))
@SLOW
def test_policy_monotone_and_paths_monotone(delta, alpha):
    m = textbook(alpha)
    _, pol = solve_vfi(m, delta, Grid.for_model(m, 201))
    slack = 1e-6 * (pol.grid.hi - pol.grid.lo)
    assert np.all(np.diff(pol.lower) >= -slack)
    assert np.all(np.diff(pol.upper) >= -slack)
    fps = find_fixed_points(pol)
    for s0 in (0.05, 0.5, 0.95):
        p = simulate_path(pol, s0 * pol.grid.hi, "lower", fixed_points=fps)
        d = np.diff(p.states)
        assert np.all(d >= -slack) or np.all(d <= slack)

import numpy as np
import pytest

from steadyscope import (
    StateSpace,
    build_model,
    check_constraint_monotone,
    check_payoff_monotone,
    check_scva_condition,
    check_strict_concavity,
    check_supermodularity,
    fd_partial,
    make_model,
)
from steadyscope.errors import ConfigError, DomainError
from steadyscope.models.fitness import fitness_admissible

UNIT = StateSpace(0.0, 1.0)


def _bilinear():
    return make_model("bilinear", lambda s, y: s * y, (0.0, 1.0), (0.0, 2.0))


# --- fd_partial -------------------------------------------------------------

def test_fd_cross_partial_bilinear():
    assert fd_partial(_bilinear(), 12, 0.7, 1.2, h=1e-4) == pytest.approx(1.0, abs=1e-6)


def test_fd_pi2_of_state_only_payoff():
    m = make_model("sq", lambda s, y: s**2 + 0 * y, (0.0, 2.0), (0.0, 2.0))
    assert fd_partial(m, 2, 1.0, 1.0) == pytest.approx(0.0, abs=1e-6)


def test_fd_ncg_matches_analytic():
    # oracle: u'(c) f'(s) with u'(c) = c^-gamma and the cubic technology
    a, b, c, g = 0.25, 1.0, 4.7, 0.3
    m = build_model("ncg", {"a": a, "b": b, "c": c, "gamma": g})
    s, y = 0.5, 0.4
    f = -(a / 3) * s**3 + (b / 2) * s**2 + c * s
    fp = -a * s**2 + b * s + c
    expect = (f - y) ** (-g) * fp
    assert fd_partial(m, 1, s, y) == pytest.approx(expect, abs=1e-5)
    assert float(m.partial(1, s, y)) == pytest.approx(expect, rel=1e-12)


def test_fd_stencil_outside_domain():
    with pytest.raises(DomainError):
        fd_partial(_bilinear(), 1, 0.0, 0.5, h=1e-3)


def test_fd_rejects_bad_step():
    with pytest.raises(ValueError):
        fd_partial(_bilinear(), 1, 0.5, 0.5, h=0.0)


# --- state space ------------------------------------------------------------

def test_state_space_invariants():
    with pytest.raises(ConfigError):
        StateSpace(1.0, 1.0)
    with pytest.raises(ConfigError):
        StateSpace(0.0, 1.0, interior_margin=0.3)
    sp = StateSpace(0.0, 2.0)
    lo, hi = sp.interior
    assert 0 < lo < hi < 2


# --- payoff monotone --------------------------------------------------------

def test_payoff_monotone_fitness_admissible_params():
    p = {"alpha": 0.5, "beta": 6, "b": 1.0, "d": 0.98, "k": 1}
    assert fitness_admissible(p)
    assert check_payoff_monotone(build_model("fitness", p)).passed


def test_payoff_monotone_decreasing_fails():
    m = make_model("dec", lambda s, y: -s + 0 * y, (0.0, 1.0), UNIT)
    rep = check_payoff_monotone(m)
    assert not rep.passed
    assert rep.worst_violation[2] == pytest.approx(1.0, rel=1e-6)


def test_payoff_monotone_fitness_b50_fails_at_large_s():
    m = build_model("fitness", {"b": 50.0})
    rep = check_payoff_monotone(m)
    assert not rep.passed
    # oracle: pi1 on a dense grid, computed from the formula directly
    al, be, b, c, d, a = 0.5, 6.0, 50.0, 0.6, 0.98, 1.0
    s = np.linspace(0.01, 1 / d, 400)[:, None]
    x = np.linspace(0, 1 - 1e-6, 400)[None, :]
    C1 = a * x + c * (1 / (1 - x) ** 2 + 1)
    pi1 = al * s ** (al - 1) + b * be * s ** (be - 1) * x - (1 - d) * b * s**be + (1 - d) * C1
    bad_s = np.broadcast_to(s, pi1.shape)[pi1 <= 0]
    assert bad_s.size > 0 and bad_s.min() > 0.5
    assert rep.worst_violation[0] > 0.5


def test_payoff_monotone_kink_orientation():
    # concave kink (slope drops): right derivative < left derivative violates the orientation rule
    kinked = build_model("ncg", {"production": "kinked", "breakpoints": [1.0], "slopes": [3.0, 1.5], "s_max": 2.0})
    assert not check_payoff_monotone(kinked).passed
    convex = build_model("ncg", {"production": "kinked", "breakpoints": [1.0], "slopes": [1.5, 3.0], "s_max": 2.0})
    rep = check_payoff_monotone(convex)
    assert rep.passed
    assert rep.details["kink_count"] > 0


# --- supermodularity --------------------------------------------------------

def test_supermodular_ncg():
    assert check_supermodularity(build_model("ncg", {"a": 0.25, "b": 1, "c": 4.7})).passed


def test_supermodular_intertemporal():
    m = build_model("intertemporal", {"theta": 0.5, "gamma": 5, "eps": 5, "alpha": 0.3, "b": 2})
    assert check_supermodularity(m).passed


def test_supermodular_negative_cross_fails():
    m = make_model("neg", lambda s, y: -s * y, (0.0, 1.0), UNIT)
    assert not check_supermodularity(m).passed


# --- constraint -------------------------------------------------------------

def test_constraint_constant():
    m = make_model("const", lambda s, y: s + y, (0.0, 1.0), UNIT)
    rep = check_constraint_monotone(m)
    assert rep.passed
    assert rep.details["inclusion"].passed


def test_constraint_fitness_inclusion_fails():
    rep = check_constraint_monotone(build_model("fitness", {"b": 1.0}))
    assert rep.passed
    assert not rep.details["inclusion"].passed


def test_constraint_decreasing_fails():
    m = make_model("dec", lambda s, y: s + y, (lambda s: -s, lambda s: 1 - s), StateSpace(-1.0, 1.0))
    assert not check_constraint_monotone(m).passed


# --- strict concavity -------------------------------------------------------

def test_concavity_textbook_ncg():
    m = build_model("ncg", {"production": "textbook", "A": 1.0, "alpha": 0.3, "gamma": 1.0, "d": 1.0})
    assert check_strict_concavity(m).passed


def test_concavity_fitness_b9_fails():
    assert not check_strict_concavity(build_model("fitness", {"b": 9.0})).passed


def test_concavity_linear_fails():
    m = make_model("lin", lambda s, y: s + y, (0.0, 1.0), UNIT)
    assert not check_strict_concavity(m).passed


# --- sign condition at the roots --------------------------------------------

def test_scva_ncg_sign_follows_locator():
    m = build_model("ncg", {"a": 0.25, "b": 1, "c": 4.7})
    rep = check_scva_condition(m, 0.18, [2 - np.sqrt(4 - 4 * (1 / 0.18 - 4.7)), 2 + np.sqrt(4 - 4 * (1 / 0.18 - 4.7))])
    assert rep.passed


def test_scva_multiplicative_form():
    # pi = exp(h(s) - s') gives pi1 = F*h'(s), pi2 = -F with F > 0, so the sign of
    # pi2 + delta*pi1 does not depend on s'.  h'(s) = 2 - s puts the root at 2 - 1/delta.
    m = make_model("mult", lambda s, y: np.exp(2 * s - s**2 / 2 - y), (0.0, 1.0), UNIT)
    delta = 0.6
    rep = check_scva_condition(m, delta, [2 - 1 / delta])
    assert rep.passed
    assert rep.samples_checked > 0


def test_scva_sufficient_fails():
    m = make_model("bad", lambda s, y: s * y + y**2, (0.0, 1.0), UNIT)
    rep = check_scva_condition(m, 1.0, [])
    assert not rep.details["sufficient"].passed


def test_scva_root_outside_interior():
    m = make_model("bad", lambda s, y: s * y + y**2, (0.0, 1.0), UNIT)
    with pytest.raises(DomainError):
        check_scva_condition(m, 0.5, [0.0])

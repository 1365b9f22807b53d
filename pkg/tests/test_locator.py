import numpy as np
import pytest

from steadyscope import (
    LocatorFunction,
    StateSpace,
    basin_from_locator,
    boundary_diagnostics,
    build_model,
    check_scva_condition,
    check_strict_concavity,
    classify_shape,
    eval_locator,
    find_roots,
    locator_profile,
    locator_slope,
    make_model,
)
from steadyscope.errors import DomainError, LocatorError
from steadyscope.locator import check_roots_admissible

NCG_B = {"a": 0.25, "b": 1.0, "c": 4.7, "gamma": 0.3, "d": 1.0}
TEXTBOOK = {"production": "textbook", "A": 1.0, "alpha": 0.3, "gamma": 1.0, "d": 1.0}
IE = {
    "a": {"theta": 0.5, "gamma": 5, "eps": 5, "alpha": 0.3, "b": 2, "beta": 1},
    "b": {"theta": 1.0, "gamma": 5, "eps": 5, "alpha": 0.35, "b": 2, "beta": 1},
    "c": {"theta": 1.0, "gamma": 8, "eps": 8, "alpha": 0.38, "b": 2.5, "beta": 0.68, "sector0": "power"},
}


def synthetic(L, dL=None, space=(0.0, 1.0)):
    """Model whose locator at delta=0 is L(s): pi = L(s) * s' + s, so pi2 = L and pi1 = 1 + L'(s) s'."""
    kw = {}
    if dL is not None:
        kw = {"pi1": lambda s, y: 1 + dL(s) * y, "pi2": lambda s, y: L(s) + 0 * y}
    return make_model("syn", lambda s, y: L(s) * y + s, (0.0, 1.0), StateSpace(*space), **kw)


# --- eval_locator -----------------------------------------------------------

def test_eval_ncg_closed_form():
    m = build_model("ncg", dict(NCG_B, d=0.5))
    s = np.linspace(0.2, 3.0, 29)
    f = -(0.25 / 3) * s**3 + 0.5 * s**2 + 4.7 * s
    fp = -0.25 * s**2 + s + 4.7
    c = f + 0.5 * s - s
    oracle = c ** (-0.3) * (0.4 * (fp + 0.5) - 1)
    assert eval_locator(m, s, 0.4) == pytest.approx(oracle, rel=1e-8, abs=1e-8)


def test_eval_delta_zero_is_pi2():
    m = build_model("ncg", NCG_B)
    s = np.linspace(0.5, 2.5, 7)
    assert np.array_equal(eval_locator(m, s, 0.0), m.partial(2, s, s))


def test_eval_fitness_closed_form():
    m = build_model("fitness", {"b": 9.0})
    s = np.linspace(0.05, 0.95, 19)
    al, be, b, a, c, d, dl = 0.5, 6.0, 9.0, 1.0, 0.6, 0.98, 0.8
    H = (1 - dl * (1 - d) + dl * be * d) * b * s**be + dl * al * s ** (al - 1)
    x = d * s
    oracle = H - (a * x + c * (1 / (1 - x) ** 2 + 1)) * (1 - dl * (1 - d))
    assert eval_locator(m, s, dl) == pytest.approx(oracle, rel=1e-8, abs=1e-8)


def test_eval_boundary_rejected():
    m = build_model("ncg", NCG_B)
    with pytest.raises(DomainError):
        eval_locator(m, 0.0, 0.18)


# --- slope ------------------------------------------------------------------

def test_slope_signs_case_b():
    m = build_model("ncg", NCG_B)
    lo, hi = 2 - np.sqrt(4 - 4 * (1 / 0.18 - 4.7)), 2 + np.sqrt(4 - 4 * (1 / 0.18 - 4.7))
    assert -2 * 0.25 * hi + 1 < 0 and -2 * 0.25 * lo + 1 > 0
    assert locator_slope(m, hi, 0.18) < 0
    assert locator_slope(m, lo, 0.18) > 0


def test_slope_linear_locator():
    m = synthetic(lambda s: 0.3 - 2.0 * s, lambda s: -2.0 + 0 * s)
    assert locator_slope(m, 0.4, 0.0) == pytest.approx(-2.0, abs=1e-8)


def test_slope_fd_agrees_with_analytic():
    m = build_model("ncg", NCG_B)
    s = np.linspace(0.5, 3.0, 11)
    an = locator_slope(m, s, 0.18)
    # five-point difference of the closed form
    h = 1e-5
    L = lambda x: m.closed_form_locator(x, 0.18)  # noqa: E731
    fd = (-L(s + 2 * h) + 8 * L(s + h) - 8 * L(s - h) + L(s - 2 * h)) / (12 * h)
    assert an == pytest.approx(fd, rel=1e-6, abs=1e-8)


# --- find_roots -------------------------------------------------------------

def test_roots_ie_case_a():
    roots = find_roots(build_model("intertemporal", IE["a"]), 0.32)
    assert [r.cls for r in roots] == ["stable"]
    assert roots[0].s == pytest.approx(0.4489, abs=1e-3)


def test_roots_none_when_inflection_slope_low():
    # delta * f'(s_I) < 1 with s_I = b / (2a) = 2 and f'(2) = 5.7
    assert 0.1 * (4.7 + 1.0**2 / (4 * 0.25)) < 1
    assert find_roots(build_model("ncg", NCG_B), 0.1) == []


def test_roots_ncg_case_a():
    m = build_model("ncg", {"a": 0.266, "b": 1.0, "c": 0.5, "gamma": 0.3, "d": 1.0})
    got = [r.s for r in find_roots(m, 0.7)]
    assert got == pytest.approx([1.674, 2.086], abs=1e-3)


def test_roots_tolerance():
    m = build_model("ncg", NCG_B)
    oracle = 2 + np.sqrt(4 - 4 * (1 / 0.18 - 4.7))
    r = find_roots(m, 0.18)[1]
    assert abs(r.s - oracle) <= 1e-9 * m.space.width


def test_roots_too_many():
    m = synthetic(lambda s: np.sin(200 * s))
    with pytest.raises(LocatorError):
        find_roots(m, 0.0, max_roots=8)


def test_kink_sign_flip_not_a_root():
    # slopes jump across delta*f' = 1 at the kink: L flips sign there without a zero
    m = build_model("ncg", {"production": "kinked", "breakpoints": [1.0], "slopes": [1.5, 3.0], "s_max": 2.0, "d": 1.0})
    prof = locator_profile(m, 0.5)
    roots = find_roots(m, 0.5, profile=prof)
    assert roots == []
    assert prof.kink_sign_changes == pytest.approx([1.0])


# --- admissibility ----------------------------------------------------------

@pytest.mark.parametrize(
    "name, params, delta",
    [
        ("ncg", NCG_B, 0.18),
        ("ncg", {"a": 0.266, "b": 1.0, "c": 0.5, "gamma": 0.3, "d": 1.0}, 0.7),
        ("ncg", {"a": 0.2, "b": 1.0, "c": 1.4, "gamma": 0.3, "d": 1.0}, 0.5),
        ("fitness", {"b": 1.0}, 0.8),
        ("fitness", {"b": 9.0}, 0.8),
        ("fitness", {"b": 15.0}, 0.8),
        ("intertemporal", IE["a"], 0.32),
        ("intertemporal", IE["b"], 0.32),
        ("intertemporal", IE["c"], 0.12),
    ],
)
def test_case_roots_admissible(name, params, delta):
    m = build_model(name, params)
    prof = locator_profile(m, delta)
    rep = check_roots_admissible(find_roots(m, delta, profile=prof), prof)
    assert rep.passed


def test_oscillating_profile_not_separated():
    m = synthetic(lambda s: s * np.sin(1 / np.maximum(s, 1e-3)), space=(0.0, 1.0))
    prof = locator_profile(m, 0.0, 4001)
    roots = find_roots(m, 0.0, max_roots=1000, profile=prof)
    assert not check_roots_admissible(roots, prof).passed


def test_tangent_root_nongeneric():
    e = 0.4
    m = synthetic(lambda s: (s - e) ** 2)
    prof = locator_profile(m, 0.0, 4001)
    # put a sample exactly on the tangency so the scan sees it
    prof.s = np.sort(np.append(prof.s, e))
    prof.L = (prof.s - e) ** 2
    prof.L1 = 2 * (prof.s - e)
    roots = find_roots(m, 0.0, profile=prof, tol_slope=1e-6)
    assert len(roots) == 1
    assert roots[0].cls == "nongeneric" and not roots[0].regular
    assert not check_roots_admissible(roots, prof).passed


# --- shape ------------------------------------------------------------------

def _shape(key, delta):
    m = build_model("intertemporal", IE[key])
    prof = locator_profile(m, delta)
    return classify_shape(prof, find_roots(m, delta, profile=prof), m)


def test_shape_ie_a():
    v = _shape("a", 0.32)
    assert v.shape == "single_crossing_above"
    assert "globally stable" in v.implications[0]


def test_shape_ie_b():
    v = _shape("b", 0.32)
    assert v.shape == "single_crossing_below"
    assert v.implications == ["no interior stable steady state"]


def test_shape_ie_c_inverted_u():
    v = _shape("c", 0.12)
    assert v.shape == "inverted_U_two_roots"
    assert v.endpoint_signs == (-1, -1)


def test_shape_no_roots():
    m = build_model("ncg", NCG_B)
    prof = locator_profile(m, 0.1)
    assert classify_shape(prof, [], m).shape == "no_roots"


# --- basins -----------------------------------------------------------------

def test_basin_textbook_full_interior():
    m = build_model("ncg", TEXTBOOK)
    prof = locator_profile(m, 0.95)
    roots = find_roots(m, 0.95, profile=prof)
    verified = check_strict_concavity(m).passed and check_scva_condition(m, 0.95, roots).passed
    b = basin_from_locator(prof, roots[0], verified)
    assert b.verified and b.label == "basin"
    assert (b.lo, b.hi) == (m.space.lo, m.space.hi)


def test_basin_unstable_root_is_point():
    m = build_model("ncg", NCG_B)
    prof = locator_profile(m, 0.18)
    u = find_roots(m, 0.18, profile=prof)[0]
    b = basin_from_locator(prof, u)
    assert b.lo == b.hi == u.s


def test_basin_fitness_unverified():
    m = build_model("fitness", {"b": 9.0})
    prof = locator_profile(m, 0.8)
    roots = find_roots(m, 0.8, profile=prof)
    verified = check_strict_concavity(m).passed
    assert not verified
    stable = [r for r in roots if r.cls == "stable"]
    assert stable
    for r in stable:
        b = basin_from_locator(prof, r, verified)
        assert b.label.startswith("candidate") and b.lo < r.s < b.hi


# --- boundary ---------------------------------------------------------------

def test_boundary_fitness_lower_positive():
    rep = boundary_diagnostics(build_model("fitness", {"b": 1.0}), 0.8)
    assert rep.L_lower > 0
    assert rep.lower_prediction == "Gamma(s) > s near the lower bound"


def test_boundary_ncg_low_marginal_product():
    # f'(0) = c = 0.5 and delta * 0.5 < 1
    rep = boundary_diagnostics(build_model("ncg", {"a": 0.266, "b": 1.0, "c": 0.5, "gamma": 0.3, "d": 1.0}), 0.7)
    assert rep.L_lower < 0


def test_boundary_ie_b_upper_positive():
    rep = boundary_diagnostics(build_model("intertemporal", IE["b"]), 0.32)
    assert rep.L_upper > 0
    assert "Gamma(s) > s" in rep.upper_prediction


# --- estimator --------------------------------------------------------------

def test_locator_estimator():
    est = LocatorFunction(delta=0.18).fit(build_model("ncg", NCG_B))
    assert [r.cls for r in est.roots_] == ["unstable", "stable"]
    assert est.transform([est.roots_[0].s]) == pytest.approx([0.0], abs=1e-8)
    assert est.get_params()["delta"] == 0.18

import numpy as np
import pytest

from conftest import fixture_model
from steadyscope import (
    StateSpace,
    build_model,
    dsteady_ddelta,
    dsteady_dparam,
    find_roots,
    linearization_check,
    make_model,
    track_branch,
    verify_correspondence_principle,
)
from steadyscope.dp import Grid
from steadyscope.errors import ClassificationError, ConfigError
from steadyscope.locator import Root

TEXTBOOK = {"production": "textbook", "A": 1.0, "alpha": 0.3, "gamma": 1.0, "d": 1.0}
NCG_B = {"a": 0.25, "b": 1.0, "c": 4.7, "gamma": 0.3, "d": 1.0}


def ncg_b_roots(delta):
    disc = np.sqrt(4 - 4 * (1 / delta - 4.7))
    return 2 - disc, 2 + disc


# --- delta sensitivity ------------------------------------------------------

def test_ddelta_signs_ncg_b():
    m = build_model("ncg", NCG_B)
    u, e = find_roots(m, 0.18)
    assert dsteady_ddelta(m, e, 0.18) > 0
    assert dsteady_ddelta(m, u, 0.18) < 0


def test_ddelta_textbook_closed_form():
    m = build_model("ncg", TEXTBOOK)
    delta, al = 0.95, 0.3
    s = (al * delta) ** (1 / (1 - al))
    oracle = s / ((1 - al) * delta)  # derivative of (A alpha delta)^(1/(1-alpha))
    (r,) = find_roots(m, delta)
    assert dsteady_ddelta(m, r, delta) == pytest.approx(oracle, rel=1e-4)


def test_ddelta_quadratic_oracle():
    m = build_model("ncg", NCG_B)
    d, eps = 0.18, 1e-6
    lo_p, hi_p = ncg_b_roots(d + eps)
    lo_m, hi_m = ncg_b_roots(d - eps)
    u, e = find_roots(m, d)
    assert dsteady_ddelta(m, u, d) == pytest.approx((lo_p - lo_m) / (2 * eps), rel=1e-5)
    assert dsteady_ddelta(m, e, d) == pytest.approx((hi_p - hi_m) / (2 * eps), rel=1e-5)


def test_ddelta_nongeneric_rejected():
    m = build_model("ncg", NCG_B)
    with pytest.raises(ClassificationError):
        dsteady_ddelta(m, Root(2.0, 0.0, "nongeneric", False), 0.18)


def test_sign_law_all_fixtures():
    for name in ["ncg-a", "ncg-b", "ncg-c", "fit-a", "fit-b", "fit-c", "ie-a", "ie-b", "ie-c", "textbook"]:
        cfg, m = fixture_model(name)
        for r in find_roots(m, cfg.delta):
            if r.regular:
                assert np.sign(dsteady_ddelta(m, r, cfg.delta)) == -np.sign(r.slope), (name, r.s)


# --- parameter sensitivity --------------------------------------------------

def test_dparam_ie_b_increases_steady_state():
    cfg, m = fixture_model("ie-a")
    (r,) = find_roots(m, cfg.delta)
    row = dsteady_dparam(m, r, cfg.delta, "b")
    assert row.dL_dxi > 0 and row.ds_dxi > 0
    # oracle: re-solve the closed-form root at b +- h
    h = 1e-5 * 2
    up = find_roots(m.with_params(b=2 + h), cfg.delta)[0].s
    dn = find_roots(m.with_params(b=2 - h), cfg.delta)[0].s
    assert row.ds_dxi == pytest.approx((up - dn) / (2 * h), rel=1e-4)


def test_dparam_fitness_endorphins():
    cfg, m = fixture_model("fit-a")
    stable = [r for r in find_roots(m, cfg.delta) if r.cls == "stable"]
    for r in stable:
        assert dsteady_dparam(m, r, cfg.delta, "b").ds_dxi > 0


def test_dparam_inert_parameter():
    def builder(p):
        return make_model("inert", lambda s, y: np.log(1 + s) - y**2 / 2 + 0 * p["k"], (0.0, 1.0),
                          StateSpace(0.0, 1.0), params=dict(p), builder=builder)

    m = builder({"k": 3.0})
    # L = -s + delta / (1 + s) has its root at s = (-1 + sqrt(1 + 4 delta)) / 2
    delta = 0.5
    (r,) = find_roots(m, delta)
    assert r.s == pytest.approx((-1 + np.sqrt(3)) / 2, abs=1e-9)
    row = dsteady_dparam(m, r, delta, "k")
    assert row.dL_dxi == 0.0 and row.ds_dxi == 0.0


def test_dparam_unknown_name():
    cfg, m = fixture_model("ie-a")
    with pytest.raises(ConfigError):
        dsteady_dparam(m, 0.45, cfg.delta, "nope")


# --- correspondence principle -----------------------------------------------

def test_correspondence_ncg_b():
    m = build_model("ncg", NCG_B)
    rep = verify_correspondence_principle(m, 0.18, 0.01, Grid.for_model(m, 2001))
    assert rep.status == "ok"
    moves = {mt["class"]: mt for mt in rep.matches}
    lo19, hi19 = ncg_b_roots(0.19)
    h = m.space.width / 2000
    assert moves["stable"]["moved"] > 0 and moves["unstable"]["moved"] < 0
    assert moves["stable"]["s_next"] == pytest.approx(hi19, abs=2 * h)
    assert moves["unstable"]["s_next"] == pytest.approx(lo19, abs=2 * h)


def test_correspondence_zero_step():
    cfg, m = fixture_model("ie-a")
    rep = verify_correspondence_principle(m, cfg.delta, 0.0, Grid.for_model(m, 401))
    assert rep.status == "ok"
    assert all(mt["moved"] == 0.0 for mt in rep.matches)


def test_correspondence_genericity_guard():
    m = build_model("ncg", NCG_B)
    # a separation constant wider than the gap between the two fixed points
    rep = verify_correspondence_principle(m, 0.18, 0.01, Grid.for_model(m, 401), separation_c=2.0)
    assert rep.status == "genericity at risk"
    assert rep.passed is None


def test_track_branch_first_order():
    m = build_model("ncg", NCG_B)
    _, e = find_roots(m, 0.18)
    slope = dsteady_ddelta(m, e, 0.18)
    errs = []
    for step in (0.004, 0.002, 0.001):
        bp = track_branch(m, e, [0.18, 0.18 + step])[-1]
        assert bp.s == pytest.approx(ncg_b_roots(0.18 + step)[1], abs=1e-9)
        errs.append(abs(bp.s - e.s - slope * step))
    assert errs[0] / errs[1] >= 2 and errs[1] / errs[2] >= 2


# --- linearization ----------------------------------------------------------

def test_linearization_textbook():
    m = build_model("ncg", TEXTBOOK)
    (r,) = find_roots(m, 0.95)
    rep = linearization_check(m, r, 0.95)
    assert rep.one_in_unit_interval and rep.locator_slope < 0 and rep.equivalence_holds
    assert rep.within_premises
    assert rep.vieta_product == pytest.approx(1 / 0.95, rel=1e-10)
    # independent quadratic solve from the closed-form partials of log(A s^a - s')
    s, al, d = r.s, 0.3, 0.95
    c = s**al - s
    fp, fpp = al * s ** (al - 1), al * (al - 1) * s ** (al - 2)
    p11 = -(fp**2) / c**2 + fpp / c
    p12 = fp / c**2
    p22 = -1 / c**2
    lam = np.sort(np.roots([1.0, (p22 + d * p11) / (d * p12), 1 / d]).real)
    assert np.sort(np.real(rep.eigenvalues)) == pytest.approx(lam, rel=1e-6)


def test_linearization_unstable_ncg_b():
    m = build_model("ncg", NCG_B)
    u, _ = find_roots(m, 0.18)
    rep = linearization_check(m, u, 0.18)
    assert not rep.one_in_unit_interval and rep.locator_slope > 0 and rep.equivalence_holds
    assert rep.vieta_product == pytest.approx(1 / 0.18, rel=1e-10)


def test_linearization_all_fixture_roots():
    for name in ["ncg-a", "ncg-b", "ncg-c", "fit-a", "fit-b", "fit-c", "ie-a", "ie-b", "ie-c", "textbook"]:
        cfg, m = fixture_model(name)
        for r in find_roots(m, cfg.delta):
            if r.regular:
                assert linearization_check(m, r, cfg.delta).equivalence_holds, (name, r.s)

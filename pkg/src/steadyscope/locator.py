"""Locator function L(s, delta) = pi2(s, s) + delta * pi1(s, s) and its roots.

Interior steady states are roots of L; the sign of the total derivative
L1 = pi21 + pi22 + delta (pi11 + pi12) at a root classifies it (negative:
stable, positive: unstable).  Everything here uses model primitives only.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from sklearn.base import BaseEstimator, TransformerMixin

from .core import AssumptionReport, graph_samples
from .errors import DomainError, LocatorError, NumericalError

SCAN_N = 4001
MAX_ROOTS = 32
TOL_SLOPE_REL = 1e-6


def _interior_check(model, s):
    lo, hi = model.space.interior
    s = np.asarray(s, float)
    # tiny slack so the interior bounds themselves are accepted after rounding
    slack = 1e-12 * model.space.width
    if np.any(s < lo - slack) or np.any(s > hi + slack):
        raise DomainError(f"locator is only defined on the interior [{lo:.6g}, {hi:.6g}]")


def _L(model, s, delta):
    s = np.asarray(s, float)
    return model.partial(2, s, s) + delta * model.partial(1, s, s)


def eval_locator(model, s, delta):
    """pi2(s, s) + delta * pi1(s, s) on the interior of the state space."""
    _interior_check(model, s)
    out = _L(model, s, delta)
    return float(out) if np.ndim(out) == 0 else out


def eval_locator_one_sided(model, s, delta):
    """(L+, L-) using the right and left derivatives of the payoff in the state."""
    _interior_check(model, s)
    s = np.asarray(s, float)
    p1p, p1m = model.one_sided_pi1(s, s)
    p2 = model.partial(2, s, s)
    return p2 + delta * p1p, p2 + delta * p1m


def locator_slope(model, s, delta, h=None):
    """Total derivative of the locator in s.

    Analytic from second partials when the model has them, otherwise a
    five-point central difference of L with step 1e-5 times the state width.
    """
    s = np.asarray(s, float)
    if model.has_second_partials:
        p12 = model.partial(12, s, s)
        out = p12 + model.partial(22, s, s) + delta * (model.partial(11, s, s) + p12)
    else:
        if h is None:
            h = 1e-5 * model.space.width
        L = lambda x: _L(model, x, delta)  # noqa: E731
        out = (-L(s + 2 * h) + 8 * L(s + h) - 8 * L(s - h) + L(s - 2 * h)) / (12 * h)
    return float(out) if np.ndim(out) == 0 else out


@dataclass
class LocatorProfile:
    delta: float
    s: np.ndarray
    L: np.ndarray
    L1: np.ndarray
    lo: float
    hi: float
    kink_sign_changes: list = field(default_factory=list)

    @property
    def samples(self):
        return list(zip(self.s.tolist(), self.L.tolist(), self.L1.tolist()))

    @property
    def width(self):
        return self.hi - self.lo


def locator_profile(model, delta, scan_n=SCAN_N):
    lo, hi = model.space.interior
    s = np.linspace(lo, hi, int(scan_n))
    L = np.asarray(_L(model, s, delta), float)
    L1 = np.asarray(locator_slope(model, s, delta), float)
    if not (np.all(np.isfinite(L)) and np.all(np.isfinite(L1))):
        bad = s[~(np.isfinite(L) & np.isfinite(L1))][0]
        raise NumericalError(f"locator not finite at s={bad:.6g}")
    return LocatorProfile(float(delta), s, L, L1, model.space.lo, model.space.hi)


@dataclass(frozen=True)
class Root:
    s: float
    slope: float
    cls: str  # 'stable', 'unstable', 'nongeneric'
    regular: bool
    separation_ok: bool = True

    def to_dict(self):
        return {
            "s": self.s,
            "slope": self.slope,
            "class": self.cls,
            "regular": self.regular,
            "separation_ok": self.separation_ok,
        }


def slope_tolerance(profile, rel=TOL_SLOPE_REL):
    scale = float(np.median(np.abs(profile.L1)))
    return rel * scale if scale > 0 else rel


def classify_slope(slope, tol_slope):
    if slope < -tol_slope:
        return "stable"
    if slope > tol_slope:
        return "unstable"
    return "nongeneric"


def find_roots(model, delta, scan_n=SCAN_N, max_roots=MAX_ROOTS, tol_root=None, tol_slope=None,
               profile=None, separation_c=None):
    """Sign-change scan of the locator over the interior, refined by Brent's method.

    Raises :class:`LocatorError` when more than ``max_roots`` sign changes are
    found, which points at roots that are not well separated.
    """
    if profile is None:
        profile = locator_profile(model, delta, scan_n)
    width = model.space.width
    if tol_root is None:
        tol_root = 1e-10 * width
    if tol_slope is None:
        tol_slope = slope_tolerance(profile)
    if separation_c is None:
        separation_c = 5 * width / len(profile.s)
    s, L = profile.s, profile.L
    sign = np.sign(L)
    brackets = []
    i = 0
    while i < len(s) - 1:
        if sign[i] == 0:
            brackets.append((s[i], s[i]))
        elif sign[i + 1] != 0 and sign[i] != sign[i + 1]:
            brackets.append((s[i], s[i + 1]))
        i += 1
    if sign[-1] == 0:
        brackets.append((s[-1], s[-1]))
    if len(brackets) > max_roots:
        raise LocatorError(
            f"{len(brackets)} sign changes exceed max_roots={max_roots}; "
            "roots are probably not well separated"
        )
    kinks = np.asarray(model.kinks, float)
    locs = []
    profile.kink_sign_changes = []
    for a, b in brackets:
        if a == b:
            locs.append(float(a))
            continue
        inside = kinks[(kinks > a) & (kinks < b)] if kinks.size else kinks
        if inside.size:
            k = float(inside[0])
            Lp, Lm = eval_locator_one_sided(model, k, delta)
            if np.sign(Lm) != np.sign(Lp):
                # the sign flips across the kink itself; neither one-sided
                # locator has a root there
                profile.kink_sign_changes.append(k)
                continue
        locs.append(float(brentq(lambda x: float(_L(model, x, delta)), a, b, xtol=tol_root)))
    roots = []
    for j, r in enumerate(locs):
        slope = float(locator_slope(model, r, delta))
        gaps = [abs(r - q) for q in locs if q is not r]
        sep = min(gaps) > separation_c if gaps else True
        cls = classify_slope(slope, tol_slope)
        roots.append(Root(r, slope, cls, cls != "nongeneric", bool(sep)))
    return roots


def check_roots_admissible(roots, profile, tol=None):
    """Regularity and separation of roots.

    Also checks the sufficient condition for separated roots: at every
    critical point of L on the profile the second derivative is non-zero.
    """
    s, L1 = profile.s, profile.L1
    L11 = np.gradient(L1, s)
    if tol is None:
        scale = float(np.median(np.abs(L11)))
        tol = 1e-6 * scale if scale > 0 else 1e-12
    worst = None
    worst_mag = -np.inf
    for r in roots:
        if not r.regular and -abs(r.slope) > worst_mag:
            worst, worst_mag = (r.s, r.s, abs(r.slope)), -abs(r.slope)
    bad_regular = any(not r.regular for r in roots)
    bad_sep = [r for r in roots if not r.separation_ok]
    crit = np.flatnonzero(np.sign(L1[:-1]) * np.sign(L1[1:]) < 0)
    bad_crit = []
    for i in crit:
        val = 0.5 * (abs(L11[i]) + abs(L11[i + 1]))
        if val <= tol:
            bad_crit.append((float(s[i]), val))
    if worst is None and bad_sep:
        worst = (bad_sep[0].s, bad_sep[0].s, 0.0)
    if worst is None and bad_crit:
        worst = (bad_crit[0][0], bad_crit[0][0], bad_crit[0][1])
    passed = not (bad_regular or bad_sep or bad_crit)
    return AssumptionReport(
        "roots well separated and regular",
        passed,
        worst,
        len(roots) + len(crit),
        float(tol),
        {
            "nonregular_roots": [r.s for r in roots if not r.regular],
            "unseparated_roots": [r.s for r in bad_sep],
            "critical_points": int(len(crit)),
            "flat_critical_points": [c for c, _ in bad_crit],
        },
    )


# ---------------------------------------------------------------------------
# shape


@dataclass
class ShapeVerdict:
    shape: str
    implications: list = field(default_factory=list)
    gate_satisfied: bool | None = None
    endpoint_signs: tuple = (0, 0)

    def to_dict(self):
        return {
            "shape": self.shape,
            "implications": list(self.implications),
            "gate_satisfied": self.gate_satisfied,
            "endpoint_signs": list(self.endpoint_signs),
        }


IMPLY_UNIQUE = "unique interior steady state, globally stable over the interior"
IMPLY_BELOW = "no interior stable steady state"
IMPLY_TWO = (
    "either the lower bound is globally stable or the higher root is the only "
    "locally stable interior steady state"
)
IMPLY_GATE = "the higher root is the only locally stable interior steady state (case 2 is the only possibility)"


def strengthening_gate(model, delta=None, n=201):
    """pi22 < 0 on the sampled graph and pi2(s, s) = 0 for some interior s."""
    S, S2 = graph_samples(model, n)
    p22 = model.partial(22, S, S2)
    fin = np.isfinite(p22)
    concave = bool(np.all(p22[fin] < 0))
    lo, hi = model.space.interior
    s = np.linspace(lo, hi, 4001)
    p2 = model.partial(2, s, s)
    p2 = p2[np.isfinite(p2)]
    crosses = bool(p2.size and (np.any(p2 == 0) or np.any(np.sign(p2[:-1]) != np.sign(p2[1:]))))
    return concave and crosses, {"pi22_negative": concave, "pi2_diag_zero": crosses}


def classify_shape(profile, roots, model=None):
    """Match the locator profile against the single-crossing and inverted-U shapes."""
    L = profile.L
    ends = (int(np.sign(L[0])), int(np.sign(L[-1])))
    gen = [r for r in roots]
    if not gen:
        return ShapeVerdict("no_roots", [], None, ends)
    if len(gen) == 1:
        r = gen[0].s
        left, right = L[profile.s < r], L[profile.s > r]
        if np.all(left > 0) and np.all(right < 0):
            return ShapeVerdict("single_crossing_above", [IMPLY_UNIQUE], None, ends)
        if np.all(left < 0) and np.all(right > 0):
            return ShapeVerdict("single_crossing_below", [IMPLY_BELOW], None, ends)
        return ShapeVerdict("other", [], None, ends)
    if len(gen) == 2:
        r0, r1 = gen[0].s, gen[1].s
        mid = L[(profile.s > r0) & (profile.s < r1)]
        if ends == (-1, -1) and np.all(mid > 0):
            impl = [IMPLY_TWO]
            gate = None
            if model is not None:
                gate, _ = strengthening_gate(model)
                if gate:
                    impl.append(IMPLY_GATE)
            return ShapeVerdict("inverted_U_two_roots", impl, gate, ends)
    return ShapeVerdict("other", [], None, ends)


# ---------------------------------------------------------------------------
# basins and boundary behaviour


@dataclass(frozen=True)
class LocatorBasin:
    root: float
    lo: float
    hi: float
    verified: bool

    @property
    def label(self):
        return "basin" if self.verified else "candidate basin (unverified premises)"


def basin_from_locator(profile, e, premises_verified=False):
    """Maximal interval with L > 0 left of ``e`` and L < 0 right of ``e``."""
    e = float(getattr(e, "s", e))
    s, L = profile.s, profile.L
    left_idx = np.flatnonzero(s < e)
    right_idx = np.flatnonzero(s > e)
    lo = e
    if left_idx.size and L[left_idx[-1]] > 0:
        bad = left_idx[L[left_idx] <= 0]
        lo = profile.lo if not bad.size else _root_between(s, L, bad[-1])
    hi = e
    if right_idx.size and L[right_idx[0]] < 0:
        bad = right_idx[L[right_idx] >= 0]
        hi = profile.hi if not bad.size else _root_between(s, L, bad[0] - 1)
    return LocatorBasin(e, lo, hi, bool(premises_verified))


def _root_between(s, L, i):
    """Linear estimate of the zero of L between samples i and i+1."""
    if L[i] == 0:
        return float(s[i])
    if L[i + 1] == 0:
        return float(s[i + 1])
    return float(s[i] - L[i] * (s[i + 1] - s[i]) / (L[i + 1] - L[i]))


@dataclass
class BoundaryReport:
    L_lower: float
    L_upper: float
    lower_prediction: str
    upper_prediction: str

    def to_dict(self):
        return dict(self.__dict__)


def boundary_diagnostics(model, delta):
    """Near-boundary direction of the policy implied by the sign of L at the interior bounds."""
    lo, hi = model.space.interior
    Llo = float(eval_locator(model, lo, delta))
    Lhi = float(eval_locator(model, hi, delta))
    if Llo > 0:
        lower = "Gamma(s) > s near the lower bound"
    elif Llo < 0:
        lower = "if the lower bound is a fixed point, Gamma(s) < s near it"
    else:
        lower = "no prediction"
    if Lhi < 0:
        upper = "Gamma(s) < s near the upper bound"
    elif Lhi > 0:
        upper = "if the upper bound is a fixed point, Gamma(s) > s near it"
    else:
        upper = "no prediction"
    return BoundaryReport(Llo, Lhi, lower, upper)


class LocatorFunction(BaseEstimator, TransformerMixin):
    """``fit(model)`` scans and classifies roots; ``transform(s)`` evaluates the locator."""

    def __init__(self, delta=0.9, scan_n=SCAN_N, max_roots=MAX_ROOTS):
        self.delta = delta
        self.scan_n = scan_n
        self.max_roots = max_roots

    def fit(self, model, y=None):
        self.model_ = model
        self.profile_ = locator_profile(model, self.delta, self.scan_n)
        self.roots_ = find_roots(model, self.delta, self.scan_n, self.max_roots, profile=self.profile_)
        self.shape_ = classify_shape(self.profile_, self.roots_, model)
        return self

    def transform(self, s):
        if not hasattr(self, "model_"):
            raise AttributeError("call fit before transform")
        return np.asarray(eval_locator(self.model_, np.asarray(s, float).ravel(), self.delta))

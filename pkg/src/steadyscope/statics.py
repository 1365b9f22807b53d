"""Comparative statics of steady states and the local linearization cross-check."""
from __future__ import annotations

from dataclasses import dataclass, field
from numbers import Real

import numpy as np

from .dp import Grid, detect_skiba, find_fixed_points, solve_vfi
from .errors import ClassificationError, ConfigError
from .locator import _L, locator_slope


@dataclass(frozen=True)
class BranchPoint:
    delta: float
    s: float
    dsdelta: float
    cls: str


@dataclass(frozen=True)
class SensitivityRow:
    param: str
    s: float
    dL_dxi: float
    ds_dxi: float


def _root_s(root):
    return float(getattr(root, "s", getattr(root, "location", root)))


def dsteady_ddelta(model, root, delta):
    """-pi1(s, s) / L1(s, delta) by the implicit function theorem."""
    if getattr(root, "regular", True) is False:
        raise ClassificationError(f"root at {_root_s(root):.6g} is non-generic; its branch has no IFT slope")
    s = _root_s(root)
    L1 = locator_slope(model, s, delta)
    if L1 == 0:
        raise ClassificationError(f"zero locator slope at {s:.6g}")
    return float(-model.partial(1, s, s) / L1)


def dsteady_dparam(model, root, delta, param_name, h=None):
    """Sensitivity of a steady state to one payoff parameter.

    The partial derivative of the locator in the parameter is a central
    difference with relative step; ds/dxi = -L_xi / L_s.
    """
    if param_name not in model.params:
        raise ConfigError(f"model {model.name!r} has no parameter {param_name!r}", "param_name")
    xi = model.params[param_name]
    if not isinstance(xi, Real):
        raise ConfigError(f"parameter {param_name!r} is not a real number", "param_name")
    if getattr(root, "regular", True) is False:
        raise ClassificationError("non-generic root")
    if h is None:
        h = 1e-5 * max(1.0, abs(xi))
    s = _root_s(root)
    up = model.with_params(**{param_name: xi + h})
    dn = model.with_params(**{param_name: xi - h})
    L3 = float((_L(up, s, delta) - _L(dn, s, delta)) / (2 * h))
    L1 = locator_slope(model, s, delta)
    return SensitivityRow(param_name, s, L3, float(-L3 / L1))


# ---------------------------------------------------------------------------
# correspondence principle


@dataclass
class CorrespondenceReport:
    delta: float
    delta_step: float
    status: str  # 'ok', 'violated', 'genericity at risk'
    matches: list = field(default_factory=list)
    created: list = field(default_factory=list)
    destroyed: list = field(default_factory=list)

    @property
    def passed(self):
        return None if self.status == "genericity at risk" else self.status == "ok"

    def to_dict(self):
        return {
            "delta": self.delta,
            "delta_step": self.delta_step,
            "status": self.status,
            "matches": self.matches,
            "created": self.created,
            "destroyed": self.destroyed,
        }


def _interior_fixed_points(model, delta, grid):
    _, pol = solve_vfi(model, delta, grid)
    fps = find_fixed_points(pol, skiba=detect_skiba(pol))
    return [f for f in fps if not f.boundary], pol


def verify_correspondence_principle(model, delta, delta_step=0.01, grid=None, separation_c=None,
                                    slack=None):
    """Re-solve at delta + delta_step and check that fixed points move as the IFT predicts.

    Stable fixed points must move weakly right and unstable ones weakly left.
    Fixed points are matched by stability class, choosing the candidate
    nearest to the first-order prediction s + ds/ddelta * delta_step within
    a radius of half the smallest gap between fixed points (never below
    ``separation_c``).  Unmatched points are reported as created or destroyed.
    """
    if grid is None:
        grid = Grid.for_model(model)
    elif isinstance(grid, int):
        grid = Grid.for_model(model, grid)
    width = model.space.width
    if separation_c is None:
        separation_c = 5 * width / 4001
    if slack is None:
        slack = grid.h
    fp0, _ = _interior_fixed_points(model, delta, grid)
    if delta_step == 0:
        fp1 = list(fp0)
    else:
        fp1, _ = _interior_fixed_points(model, delta + delta_step, grid)
    report = CorrespondenceReport(float(delta), float(delta_step), "ok")
    for fps in (fp0, fp1):
        locs = sorted(f.location for f in fps)
        if any(b - a <= separation_c for a, b in zip(locs, locs[1:])):
            report.status = "genericity at risk"
    locs0 = sorted(f.location for f in fp0)
    gaps = [b - a for a, b in zip(locs0, locs0[1:])]
    radius = max(separation_c, 0.5 * min(gaps)) if gaps else max(separation_c, 0.5 * width)
    used = set()
    for f in fp0:
        try:
            ift = dsteady_ddelta(model, f.location, delta)
        except ClassificationError:
            ift = float("nan")
        pred = f.location + (ift if np.isfinite(ift) else 0.0) * delta_step
        cands = [(abs(g.location - pred), k) for k, g in enumerate(fp1) if k not in used and g.crossing == f.crossing]
        cands = [c for c in cands if c[0] <= radius]
        if not cands:
            report.destroyed.append({"s": f.location, "class": f.crossing})
            continue
        _, k = min(cands)
        used.add(k)
        g = fp1[k]
        moved = g.location - f.location
        if f.crossing == "stable":
            direction_ok = moved >= -slack
        else:
            direction_ok = moved <= slack
        report.matches.append(
            {
                "class": f.crossing,
                "s": f.location,
                "s_next": g.location,
                "moved": moved,
                "ift_slope": ift,
                "first_order_error": abs(moved - ift * delta_step) if np.isfinite(ift) else float("nan"),
                "direction_ok": bool(direction_ok),
            }
        )
        if not direction_ok and report.status == "ok":
            report.status = "violated"
    for k, g in enumerate(fp1):
        if k not in used:
            report.created.append({"s": g.location, "class": g.crossing})
    return report


def track_branch(model, root, deltas):
    """IFT slopes along a root branch followed by Newton steps on the locator."""
    s = _root_s(root)
    out = []
    for d in deltas:
        for _ in range(50):
            L = float(_L(model, s, d))
            L1 = locator_slope(model, s, d)
            step = L / L1
            s -= step
            if abs(step) <= 1e-12 * model.space.width:
                break
        L1 = locator_slope(model, s, d)
        cls = "stable" if L1 < 0 else "unstable" if L1 > 0 else "nongeneric"
        out.append(BranchPoint(float(d), float(s), float(-model.partial(1, s, s) / L1), cls))
    return out


# ---------------------------------------------------------------------------
# linearization


@dataclass
class LinearizationReport:
    s: float
    eigenvalues: tuple
    one_in_unit_interval: bool
    locator_slope: float
    equivalence_holds: bool
    vieta_product: float
    within_premises: bool

    @property
    def label(self):
        return "within premises" if self.within_premises else "outside premises (payoff not strictly concave)"

    def to_dict(self):
        return {
            "s": self.s,
            "eigenvalues": [str(complex(z)) for z in self.eigenvalues],
            "one_in_unit_interval": self.one_in_unit_interval,
            "locator_slope": self.locator_slope,
            "equivalence_holds": self.equivalence_holds,
            "vieta_product": self.vieta_product,
            "label": self.label,
        }


def linearization_check(model, root, delta):
    """Roots of lambda^2 - G2 lambda - G1 at the steady state and the locator-slope equivalence.

    G1 = -pi21 / (delta pi12), G2 = -(pi22 + delta pi11) / (delta pi12).
    Exactly one root in (0, 1) should coincide with a negative locator slope.
    """
    s = _root_s(root)
    p11 = float(model.partial(11, s, s))
    p12 = float(model.partial(12, s, s))
    p22 = float(model.partial(22, s, s))
    if p12 == 0 or delta == 0:
        raise ClassificationError("linearization needs pi12 != 0 and delta > 0")
    G1 = -p12 / (delta * p12)
    G2 = -(p22 + delta * p11) / (delta * p12)
    lam = np.roots([1.0, -G2, -G1])
    real = [float(z.real) for z in lam if abs(z.imag) <= 1e-12 * max(1.0, abs(z))]
    one = sum(1 for z in real if 0 < z < 1) == 1
    L1 = locator_slope(model, s, delta)
    concave = p11 < 0 and p22 < 0 and p11 * p22 - p12**2 > 0
    return LinearizationReport(
        s,
        tuple(complex(z) for z in lam),
        bool(one),
        float(L1),
        bool(one == (L1 < 0)),
        float(np.real(np.prod(lam))),
        bool(concave),
    )

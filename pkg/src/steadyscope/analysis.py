"""End-to-end analysis: assumptions, locator predictions and the DP oracle, merged."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from . import core, dp, locator
from .errors import PropertyViolationError

MATCH_CELLS = 2
PROBE_CELLS = 3


@dataclass
class Candidate:
    s: float
    source: str  # 'locator', 'policy' or 'both'
    slope: float | None
    cls: str | None  # locator class
    policy_stability: str | None  # from simulation
    basin_locator: tuple | None = None
    basin_locator_verified: bool = False
    basin_policy: tuple | None = None
    false_positive: bool = False
    s_policy: float | None = None

    def to_dict(self):
        return {
            "s": self.s,
            "s_policy": self.s_policy,
            "source": self.source,
            "slope": self.slope,
            "class": self.cls,
            "policy_stability": self.policy_stability,
            "basin_locator": None if self.basin_locator is None else list(self.basin_locator),
            "basin_locator_verified": self.basin_locator_verified,
            "basin_policy": None if self.basin_policy is None else list(self.basin_policy),
            "false_positive": self.false_positive,
        }


@dataclass
class SteadyStateReport:
    model: str
    params: dict
    delta: float
    settings: dict
    candidates: list
    boundary_steady_states: list
    skiba_points: list
    assumptions: dict
    shape: locator.ShapeVerdict
    roots_admissible: core.AssumptionReport
    boundary: locator.BoundaryReport
    boundary_check: dict
    verdicts: list = field(default_factory=list)
    paths: list = field(default_factory=list)
    vfi: dict = field(default_factory=dict)
    # raw objects for CSV emission; not serialized
    profile: locator.LocatorProfile | None = None
    roots: list = field(default_factory=list)
    policy: dp.PolicyCorrespondence | None = None
    value: dp.ValueTable | None = None
    fixed_points: list = field(default_factory=list)

    @property
    def assumption_hard_fail(self):
        return not self.assumptions["payoff_monotone"].passed

    @property
    def interior_steady_states(self):
        return [c for c in self.candidates if c.source in ("both", "policy")]

    @property
    def stable_interior(self):
        return [c for c in self.interior_steady_states if c.policy_stability == "stable"]

    @property
    def false_positives(self):
        return [c for c in self.candidates if c.false_positive]

    def to_dict(self):
        return {
            "model": self.model,
            "params": self.params,
            "delta": self.delta,
            "settings": self.settings,
            "candidates": [c.to_dict() for c in self.candidates],
            "boundary_steady_states": self.boundary_steady_states,
            "skiba_points": [
                {"location": k.location, "lower_branch": k.lower_branch, "upper_branch": k.upper_branch}
                for k in self.skiba_points
            ],
            "assumptions": {k: v.to_dict() for k, v in self.assumptions.items()},
            "shape": self.shape.to_dict(),
            "roots_admissible": self.roots_admissible.to_dict(),
            "boundary": self.boundary.to_dict(),
            "boundary_check": self.boundary_check,
            "verdicts": self.verdicts,
            "vfi": self.vfi,
            "paths": self.paths,
        }


def _simulated_stability(policy, e, fixed_points):
    """Stability of a fixed point judged by paths started a few cells away on each side."""
    h = policy.grid.h
    lo, hi = policy.grid.lo, policy.grid.hi
    tol = MATCH_CELLS * h
    out = []
    for start, sel in ((e - PROBE_CELLS * h, "lower"), (e + PROBE_CELLS * h, "upper")):
        if not lo <= start <= hi:
            out.append(None)
            continue
        try:
            p = dp.simulate_path(policy, start, sel, fixed_points=fixed_points)
        except PropertyViolationError:
            out.append(False)
            continue
        out.append(bool(p.converged and p.limit is not None and abs(p.limit - e) <= tol))
    left, right = out
    sides = [x for x in out if x is not None]
    if sides and all(sides):
        return "stable"
    if sides and not any(sides):
        return "unstable"
    return "semistable"


def analyze(model, delta, n=2001, tol_V=1e-10, max_iter=100000, eps_tie=None, scan_n=locator.SCAN_N,
            max_roots=locator.MAX_ROOTS, tol_root=None, tol_slope=None, s0=None, T_max=10000):
    """Run the full pipeline and merge locator predictions with the DP oracle."""
    width = model.space.width
    # assumptions and locator
    assumptions = core.check_all(model)
    profile = locator.locator_profile(model, delta, scan_n)
    roots = locator.find_roots(model, delta, scan_n, max_roots, tol_root, tol_slope, profile=profile)
    admissible = locator.check_roots_admissible(roots, profile)
    shape = locator.classify_shape(profile, roots, model)
    assumptions["scva"] = core.check_scva_condition(model, delta, [r.s for r in roots])
    premises = assumptions["strict_concavity"].passed and assumptions["scva"].passed
    boundary = locator.boundary_diagnostics(model, delta)

    # DP oracle
    grid = dp.Grid.for_model(model, n)
    table, policy = dp.solve_vfi(model, delta, grid, tol_V, max_iter, eps_tie)
    skiba = dp.detect_skiba(policy)
    fps = dp.find_fixed_points(policy, skiba=skiba)
    interior_fps = [f for f in fps if not f.boundary]
    h = grid.h
    tol_match = MATCH_CELLS * h

    candidates = []
    used = set()
    for r in roots:
        near = [(abs(f.location - r.s), k) for k, f in enumerate(interior_fps) if k not in used]
        near = [x for x in near if x[0] <= tol_match]
        b = locator.basin_from_locator(profile, r, premises)
        c = Candidate(r.s, "locator", r.slope, r.cls, None, (b.lo, b.hi), b.verified)
        if near:
            _, k = min(near)
            used.add(k)
            f = interior_fps[k]
            c.source = "both"
            c.s_policy = f.location
            c.policy_stability = _simulated_stability(policy, f.location, fps)
            c.basin_policy = dp.basin_from_policy(policy, f.location)
        else:
            c.false_positive = True
        candidates.append(c)
    for k, f in enumerate(interior_fps):
        if k in used:
            continue
        c = Candidate(f.location, "policy", None, None, _simulated_stability(policy, f.location, fps))
        c.s_policy = f.location
        c.basin_policy = dp.basin_from_policy(policy, f.location)
        candidates.append(c)
    candidates.sort(key=lambda c: c.s)

    boundary_ss = []
    for f in fps:
        if f.boundary:
            side = "lower" if f.location == grid.lo else "upper"
            boundary_ss.append({"s": f.location, "side": side, "basin_policy": list(dp.basin_from_policy(policy, f.location))})

    # near-boundary cross-check of the locator predictions
    interior_nodes = slice(1, grid.n - 1)
    gap_lo = policy.lower - grid.nodes
    gap_hi = policy.upper - grid.nodes
    k_lo = 1 + int(np.ceil(model.space.interior_margin / h))
    k_hi = grid.n - 2 - int(np.ceil(model.space.interior_margin / h))
    check = {}
    if boundary.L_lower > 0:
        check["lower"] = bool(gap_lo[k_lo] > 0)
    elif boundary.L_lower < 0 and any(b["side"] == "lower" for b in boundary_ss):
        check["lower"] = bool(gap_hi[k_lo] < 0)
    if boundary.L_upper < 0:
        check["upper"] = bool(gap_hi[k_hi] < 0)
    elif boundary.L_upper > 0 and any(b["side"] == "upper" for b in boundary_ss):
        check["upper"] = bool(gap_lo[k_hi] > 0)

    verdicts = []
    if not interior_fps and np.all(gap_hi[interior_nodes] < 0) and any(b["side"] == "lower" for b in boundary_ss):
        verdicts.append("lower bound globally stable")
    if not interior_fps and np.all(gap_lo[interior_nodes] > 0) and any(b["side"] == "upper" for b in boundary_ss):
        verdicts.append("upper bound globally stable")
    stable = [c for c in candidates if c.policy_stability == "stable"]
    if len(stable) == 1 and not skiba and not any(
        b["side"] == "lower" and b["basin_policy"][1] > b["s"] for b in boundary_ss
    ):
        verdicts.append(f"unique locally stable interior steady state at {stable[0].s:.6g}")
    if any(c.source == "policy" for c in candidates):
        verdicts.append("interior fixed point without a locator root (numerical inconsistency)")

    # paths: requested starts, then both branches from every Skiba point
    paths = []
    starts = [] if s0 is None else [(float(x), sel) for x in np.atleast_1d(s0) for sel in ("lower", "upper")]
    for sp in skiba:
        starts += [(sp.location, "lower"), (sp.location, "upper")]
    for x, sel in starts:
        try:
            p = dp.simulate_path(policy, x, sel, T_max=T_max, fixed_points=fps)
            paths.append({"s0": x, "selection": sel, "limit": p.limit, "converged": p.converged,
                          "states": p.states.tolist()})
        except PropertyViolationError as exc:
            paths.append({"s0": x, "selection": sel, "limit": None, "converged": False,
                          "states": [], "error": str(exc)})

    settings = {
        "grid_n": grid.n,
        "grid_lo": grid.lo,
        "grid_hi": grid.hi,
        "tol_V": tol_V,
        "max_iter": max_iter,
        "eps_tie": policy.eps_tie,
        "scan_n": scan_n,
        "max_roots": max_roots,
        "tol_root": tol_root if tol_root is not None else 1e-10 * width,
        "tol_slope": tol_slope if tol_slope is not None else locator.slope_tolerance(profile),
        "interior_margin": model.space.interior_margin,
        "match_cells": MATCH_CELLS,
    }
    return SteadyStateReport(
        model=model.name,
        params=dict(model.params),
        delta=float(delta),
        settings=settings,
        candidates=candidates,
        boundary_steady_states=boundary_ss,
        skiba_points=skiba,
        assumptions=assumptions,
        shape=shape,
        roots_admissible=admissible,
        boundary=boundary,
        boundary_check=check,
        verdicts=verdicts,
        paths=paths,
        vfi={"iterations": table.iterations, "sup_norm_gap": table.sup_norm_gap, "stop_tol": table.stop_tol},
        profile=profile,
        roots=roots,
        policy=policy,
        value=table,
        fixed_points=fps,
    )


class SteadyStateAnalyzer(BaseEstimator):
    """``fit(model)`` runs :func:`analyze`; the report is stored in ``report_``."""

    def __init__(self, delta=0.9, n=2001, tol_V=1e-10, scan_n=locator.SCAN_N):
        self.delta = delta
        self.n = n
        self.tol_V = tol_V
        self.scan_n = scan_n

    def fit(self, model, y=None):
        self.report_ = analyze(model, self.delta, n=self.n, tol_V=self.tol_V, scan_n=self.scan_n)
        return self

    def predict(self, s):
        """Lower policy branch at ``s``."""
        return self.report_.policy.branch(np.asarray(s, float), "lower")

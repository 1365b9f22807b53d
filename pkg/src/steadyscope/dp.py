"""Value function iteration oracle.

The Bellman operator maximizes ``pi(s, s') + delta * V(s')`` over the feasible
interval by a discrete scan of the grid nodes (plus the two interval
endpoints), followed by golden-section refinement around the winner with V
linearly interpolated.  The payoff matrix is computed once per solve.

From the converged value the policy correspondence is extracted with a tie
tolerance; fixed points, Skiba points, paths and basins are then read off the
policy.
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator
from scipy.optimize import brentq
from sklearn.base import BaseEstimator

from .core import AssumptionReport
from .errors import ConfigError, NonConvergenceError, PropertyViolationError

log = logging.getLogger(__name__)

GOLDEN_ITER = 48
POLISH_ITER = 500
FOC_BRACKET_CELLS = 0.05
FOC_BISECT_ITER = 60
_INVPHI = (np.sqrt(5.0) - 1) / 2
EPS_TIE_REL = 1e-9
CHUNK_ROWS = 256


def n_threads():
    try:
        return max(1, int(os.environ.get("STEADYSCOPE_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True, eq=False)
class Grid:
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, float)
        if nodes.ndim != 1 or nodes.size < 2 or np.any(np.diff(nodes) <= 0):
            raise ConfigError("grid nodes must be strictly increasing with at least two nodes", "grid")
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, lo, hi, n):
        if n < 2:
            raise ConfigError("grid needs n >= 2", "grid.n")
        return cls(np.linspace(lo, hi, int(n)))

    @classmethod
    def for_model(cls, model, n=2001):
        return cls.uniform(model.space.lo, model.space.hi, n)

    @property
    def n(self):
        return self.nodes.size

    @property
    def lo(self):
        return float(self.nodes[0])

    @property
    def hi(self):
        return float(self.nodes[-1])

    @property
    def h(self):
        """Largest cell width."""
        return float(np.max(np.diff(self.nodes)))


@dataclass(eq=False)
class ValueTable:
    grid: Grid
    values: np.ndarray
    delta: float
    iterations: int
    sup_norm_gap: float
    gap_history: list = field(default_factory=list)
    stop_tol: float = 0.0
    polish_iterations: int = 0


def _golden(f, a, b, iters=GOLDEN_ITER):
    """Vectorized golden-section maximization of ``f`` on ``[a, b]``."""
    a = np.array(a, float)
    b = np.array(b, float)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        left = fc >= fd  # keep [a, d]
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = b - _INVPHI * (b - a)
        new_d = a + _INVPHI * (b - a)
        # reuse one interior point per branch
        c_next = np.where(left, new_c, d)
        d_next = np.where(left, c, new_d)
        fnew = f(np.where(left, c_next, d_next))
        fc, fd = np.where(left, fnew, fd), np.where(left, fc, fnew)
        c, d = c_next, d_next
    x = np.where(fc >= fd, c, d)
    fx = np.maximum(fc, fd)
    # the bracket ends themselves are candidates
    fa, fb = f(a), f(b)
    x = np.where(fa > fx, a, x)
    fx = np.maximum(fx, fa)
    x = np.where(fb > fx, b, x)
    fx = np.maximum(fx, fb)
    return x, fx


def _finite_or_neg_inf(x):
    x = np.asarray(x, float)
    return np.where(np.isfinite(x), x, -np.inf)


class BellmanOperator:
    """Bellman operator for one model, discount factor and grid."""

    def __init__(self, model, delta, grid, golden_iter=GOLDEN_ITER, threads=None):
        if not 0 <= delta < 1:
            raise ConfigError("delta must lie in [0, 1)", "delta")
        self.model = model
        self.delta = float(delta)
        self.grid = grid
        self.golden_iter = golden_iter
        self.threads = threads or n_threads()
        x = grid.nodes
        raw_lo = np.asarray(model.upsilon_lo(x), float)
        raw_hi = np.asarray(model.upsilon_hi(x), float)
        if np.any(raw_hi < grid.lo - 1e-12 * (grid.hi - grid.lo)) or np.any(raw_lo > grid.hi):
            bad = x[(raw_hi < grid.lo) | (raw_lo > grid.hi)][0]
            raise ConfigError(f"feasible set empty inside the state space at s={bad}", "upsilon")
        self.lo, self.hi = model.upsilon(x)
        self.lo = np.maximum(self.lo, grid.lo)
        self.hi = np.minimum(self.hi, grid.hi)
        self.P = self._payoff_rows(x, self.lo, self.hi)
        self.P_lo = self._pi(x, self.lo)
        self.P_hi = self._pi(x, self.hi)

    # -- payoff evaluation ------------------------------------------------
    def _pi(self, s, y):
        with np.errstate(all="ignore"):
            return _finite_or_neg_inf(self.model.pi(s, y))

    def _payoff_rows(self, s, lo, hi):
        x = self.grid.nodes
        out = np.empty((s.size, x.size))

        def work(k0):
            k1 = min(k0 + CHUNK_ROWS, s.size)
            S = s[k0:k1, None]
            l, h = lo[k0:k1, None], hi[k0:k1, None]
            X = np.clip(x[None, :], l, h)
            block = self._pi(np.broadcast_to(S, X.shape), X)
            block[(x[None, :] < l) | (x[None, :] > h)] = -np.inf
            out[k0:k1] = block

        self._map(work, range(0, s.size, CHUNK_ROWS))
        return out

    def _map(self, fn, items):
        items = list(items)
        if self.threads > 1 and len(items) > 1:
            with ThreadPoolExecutor(self.threads) as ex:
                list(ex.map(fn, items))
        else:
            for it in items:
                fn(it)

    def interp(self, V, y):
        return np.interp(y, self.grid.nodes, V)

    def continuation(self, V, kind="linear"):
        """Interpolant of V used for off-node choices.

        ``linear`` is what the main sweeps use.  A smooth interpolant is used
        for polishing and policy extraction: the kinks of the linear one make
        the argmax stick to grid nodes, which biases fixed points by several
        cells where the locator is flat.  ``cubic`` (not-a-knot spline, the
        default) is fourth-order accurate where V is smooth; ``pchip`` is
        shape preserving but its slopes are less accurate.  Smooth
        interpolants carry a ``deriv`` attribute.
        """
        if kind == "linear":
            return lambda y: np.interp(y, self.grid.nodes, V)
        if kind in ("pchip", "cubic"):
            if kind == "pchip":
                f = PchipInterpolator(self.grid.nodes, V, extrapolate=True)
            else:
                f = CubicSpline(self.grid.nodes, V)
            df = f.derivative()
            lo, hi = self.grid.lo, self.grid.hi
            vfun = lambda y: f(np.clip(y, lo, hi))  # noqa: E731
            vfun.deriv = lambda y: df(np.clip(y, lo, hi))
            return vfun
        raise ConfigError(f"unknown interpolation {kind!r}", "interp")

    def _foc_polish(self, s, x, lo, hi, vfun):
        """Sharpen interior maximizers by bisection on pi2(s, y) + delta V'(y) = 0.

        Golden section finds a flat maximum only to about sqrt(eps) times the
        scale; with a differentiable continuation the first-order condition
        pins it down to rounding.  The bracket is a small fraction of a cell
        around the golden-section point, and a root replaces it only when the
        derivative changes sign from + to - and the objective does not drop.
        """
        deriv = getattr(vfun, "deriv", None)
        if deriv is None or self.delta == 0:
            return x
        w = FOC_BRACKET_CELLS * self.grid.h
        a = np.maximum(lo, x - w)
        b = np.minimum(hi, x + w)

        def g(y):
            with np.errstate(all="ignore"):
                return np.asarray(self.model.partial(2, s, y), float) + self.delta * deriv(y)

        try:
            ga, gb = g(a), g(b)
            ok = (ga > 0) & (gb < 0) & (x > lo) & (x < hi)
            if not np.any(ok):
                return x
            for _ in range(FOC_BISECT_ITER):
                m = 0.5 * (a + b)
                pos = g(m) > 0
                a = np.where(pos, m, a)
                b = np.where(pos, b, m)
        except (ValueError, ArithmeticError):
            return x
        r = np.where(ok, 0.5 * (a + b), x)
        f_old = self._pi(s, x) + self.delta * vfun(x)
        f_new = self._pi(s, r) + self.delta * vfun(r)
        keep = f_new >= f_old - 1e-13 * (1 + np.abs(f_old))
        return np.where(ok & keep, r, x)

    # -- maximization -----------------------------------------------------
    def _discrete(self, P, V):
        """Row-wise argmax over the grid columns."""
        m = P.shape[0]
        jstar = np.empty(m, dtype=np.intp)
        qstar = np.empty(m)
        dV = self.delta * V

        def work(k0):
            k1 = min(k0 + CHUNK_ROWS, m)
            Q = P[k0:k1] + dV[None, :]
            j = np.argmax(Q, axis=1)
            jstar[k0:k1] = j
            qstar[k0:k1] = Q[np.arange(k1 - k0), j]

        self._map(work, range(0, m, CHUNK_ROWS))
        return jstar, qstar

    def _best(self, s, lo, hi, P, P_lo, P_hi, V, vfun=None):
        """Value and refined argmax per row."""
        x = self.grid.nodes
        if vfun is None:
            vfun = self.continuation(V)
        jstar, qd = self._discrete(P, V)
        q_lo = P_lo + self.delta * vfun(lo)
        q_hi = P_hi + self.delta * vfun(hi)
        xd = x[jstar]
        best_x = np.where(q_lo > qd, lo, xd)
        best_q = np.maximum(qd, q_lo)
        best_x = np.where(q_hi > best_q, hi, best_x)
        best_q = np.maximum(best_q, q_hi)
        h = self.grid.h
        a = np.maximum(lo, best_x - h)
        b = np.minimum(hi, best_x + h)

        def obj(y):
            return self._pi(s, y) + self.delta * vfun(y)

        xg, qg = _golden(obj, a, b, self.golden_iter)
        better = qg > best_q
        best_x = np.where(better, xg, best_x)
        best_q = np.where(better, qg, best_q)
        if getattr(vfun, "deriv", None) is not None:
            best_x = self._foc_polish(s, best_x, lo, hi, vfun)
            best_q = np.maximum(best_q, obj(best_x))
        return best_q, best_x

    def __call__(self, V):
        q, _ = self._best(self.grid.nodes, self.lo, self.hi, self.P, self.P_lo, self.P_hi, V)
        return q

    def argmax_set(self, s, V, eps_tie, vfun=None):
        """Optimal set at arbitrary states: (value, lower, upper, n_clusters)."""
        s = np.atleast_1d(np.asarray(s, float))
        if np.any(s < self.grid.lo) or np.any(s > self.grid.hi):
            raise ConfigError("state outside the grid", "s")
        lo, hi = self.model.upsilon(s)
        lo = np.maximum(lo, self.grid.lo)
        hi = np.minimum(hi, self.grid.hi)
        P = self._payoff_rows(s, lo, hi)
        P_lo, P_hi = self._pi(s, lo), self._pi(s, hi)
        return self._ties(s, lo, hi, P, P_lo, P_hi, V, eps_tie, vfun)

    def _ties(self, s, lo, hi, P, P_lo, P_hi, V, eps_tie, vfun=None):
        x = self.grid.nodes
        if vfun is None:
            vfun = self.continuation(V)
        q, xr = self._best(s, lo, hi, P, P_lo, P_hi, V, vfun)
        lower = xr.copy()
        upper = xr.copy()
        nclus = np.ones(s.size, dtype=int)
        Q = P + self.delta * V[None, :]
        near = Q >= (q - eps_tie)[:, None]
        # Node values sit below the refined maximum by up to the curvature
        # times h^2, far more than eps_tie, so a second local peak of the row
        # can be an exact tie off the grid.  Peaks within the adjacent-node
        # variation of the best value are refined before ties are decided.
        with np.errstate(invalid="ignore"):
            dl = np.abs(np.diff(Q, axis=1, prepend=-np.inf))
            dr = np.abs(np.diff(Q, axis=1, append=-np.inf))
            Qm = np.pad(Q, ((0, 0), (1, 1)), constant_values=-np.inf)
            peak = np.isfinite(Q) & (Q >= Qm[:, :-2]) & (Q >= Qm[:, 2:])
            var = np.where(np.isfinite(dl), dl, 0.0)
            var = np.maximum(var, np.where(np.isfinite(dr), dr, 0.0))
            near |= peak & (Q >= q[:, None] - 2 * var - eps_tie)
        q_lo = P_lo + self.delta * vfun(lo)
        q_hi = P_hi + self.delta * vfun(hi)
        h = self.grid.h
        multi = np.flatnonzero(near.sum(axis=1) > 1)
        for i in multi:
            idx = np.flatnonzero(near[i])
            runs = np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1)
            if len(runs) < 2:
                continue

            def refine(run, i=i):
                a = max(lo[i], x[run[0]] - h)
                b = min(hi[i], x[run[-1]] + h)
                obj = lambda y: self._pi(np.full_like(y, s[i]), y) + self.delta * vfun(y)  # noqa: E731
                xx, _ = _golden(obj, np.array([a]), np.array([b]), self.golden_iter)
                xx = self._foc_polish(np.array([s[i]]), xx, np.array([lo[i]]), np.array([hi[i]]), vfun)
                return float(xx[0]), float(obj(xx)[0])

            cands = [refine(r) for r in runs]
            best = max(v for _, v in cands)
            if best > q[i]:
                # a peak outside the best node's cell wins once refined
                q[i] = best
            kept = [xx for xx, v in cands if v >= q[i] - eps_tie]
            if not kept:
                continue
            nclus[i] = len(kept)
            lower[i] = min(kept)
            upper[i] = max(kept)
        # endpoint candidates tied with an interior optimum
        lo_tie = (q_lo >= q - eps_tie) & (lo < lower - h)
        hi_tie = (q_hi >= q - eps_tie) & (hi > upper + h)
        lower = np.where(lo_tie, lo, lower)
        upper = np.where(hi_tie, hi, upper)
        nclus = nclus + lo_tie + hi_tie
        return q, lower, upper, nclus


def bellman_sweep(model, delta, grid, V_in, operator=None):
    """One application of the Bellman operator to ``V_in`` on ``grid``."""
    V_in = np.asarray(V_in, float)
    if V_in.shape != (grid.n,):
        raise ConfigError("V_in must have one value per grid node", "V_in")
    op = operator if operator is not None else BellmanOperator(model, delta, grid)
    return op(V_in)


def stopping_tolerance(tol_V, delta, V):
    """Sup-norm gap at which iteration stops.

    The contraction rule ``tol_V (1-delta) / (2 delta)`` guarantees the
    returned value is within ``tol_V`` of the fixed point; it is floored at a
    small multiple of machine precision times the value scale, below which
    the gap only measures rounding.
    """
    floor = 64 * np.finfo(float).eps * max(1.0, float(np.max(np.abs(V))))
    if delta == 0:
        return np.inf
    return max(tol_V * (1 - delta) / (2 * delta), floor)


def solve_vfi(model, delta, grid=None, tol_V=1e-10, max_iter=100000, eps_tie=None, V0=None,
              policy_interp="cubic", polish_iter=POLISH_ITER):
    """Iterate the Bellman operator to convergence and extract the policy.

    Sweeps interpolate V linearly until the stopping rule holds.  With a
    smooth ``policy_interp`` the converged table is then polished by further
    sweeps that use that interpolant, so that V and the extracted policy are
    consistent; this matters near boundaries where V is steep.  Polishing
    stops under the same rule, or after ``polish_iter`` sweeps, keeping the
    linear table if it fails to settle.
    """
    if grid is None:
        grid = Grid.for_model(model)
    elif isinstance(grid, int):
        grid = Grid.for_model(model, grid)
    op = BellmanOperator(model, delta, grid)
    V = np.zeros(grid.n) if V0 is None else np.asarray(V0, float).copy()
    gaps = []
    tol = np.inf
    for it in range(1, max_iter + 1):
        V_new = op(V)
        if not np.all(np.isfinite(V_new)):
            raise NonConvergenceError("non-finite value during iteration", iterations=it)
        gap = float(np.max(np.abs(V_new - V)))
        gaps.append(gap)
        V = V_new
        tol = stopping_tolerance(tol_V, delta, V)
        if gap <= tol:
            break
    else:
        raise NonConvergenceError(
            f"value iteration did not converge in {max_iter} sweeps (gap {gaps[-1]:.3e})",
            last_gap=gaps[-1],
            iterations=max_iter,
        )
    n_polish = 0
    if policy_interp != "linear" and delta > 0 and polish_iter > 0:
        W = V
        for k in range(1, polish_iter + 1):
            W_new, _ = op._best(grid.nodes, op.lo, op.hi, op.P, op.P_lo, op.P_hi, W,
                                op.continuation(W, policy_interp))
            if not np.all(np.isfinite(W_new)):
                break
            gap = float(np.max(np.abs(W_new - W)))
            W = W_new
            if gap <= stopping_tolerance(tol_V, delta, W):
                V, n_polish = W, k
                gaps.append(gap)
                break
        else:
            log.warning("polishing sweeps did not settle; keeping the linearly interpolated table")
    table = ValueTable(grid, V, float(delta), it, gaps[-1], gaps, tol, n_polish)
    if eps_tie is None:
        eps_tie = EPS_TIE_REL * (1 + float(np.max(np.abs(V))))
    vfun = op.continuation(V, policy_interp)
    _, lower, upper, nclus = op._ties(grid.nodes, op.lo, op.hi, op.P, op.P_lo, op.P_hi, V, eps_tie, vfun)
    policy = PolicyCorrespondence(grid, lower, upper, V, solver=op, eps_tie=eps_tie, clusters=nclus,
                                  vfun=vfun)
    return table, policy


# ---------------------------------------------------------------------------
# policy


class PolicyCorrespondence:
    """Optimal next states per grid node, possibly two-valued.

    ``lower`` and ``upper`` are the extreme optimal choices.  With a solver
    attached, :meth:`at` maximizes the Bellman objective directly at off-grid
    states; hand-built tables fall back to linear interpolation.
    """

    def __init__(self, grid, lower, upper=None, values=None, solver=None, eps_tie=0.0, clusters=None,
                 vfun=None):
        self.grid = grid if isinstance(grid, Grid) else Grid(grid)
        self.lower = np.asarray(lower, float)
        self.upper = self.lower.copy() if upper is None else np.asarray(upper, float)
        if self.lower.shape != (self.grid.n,) or self.upper.shape != (self.grid.n,):
            raise ConfigError("policy arrays must match the grid", "policy")
        self.values = None if values is None else np.asarray(values, float)
        self.solver = solver
        self.eps_tie = eps_tie
        self.clusters = np.ones(self.grid.n, int) if clusters is None else np.asarray(clusters)
        self.vfun = vfun

    @property
    def nodes(self):
        return self.grid.nodes

    @property
    def delta(self):
        return None if self.solver is None else self.solver.delta

    @property
    def model(self):
        return None if self.solver is None else self.solver.model

    def at(self, s):
        """(lower, upper) optimal choices at states ``s``."""
        s = np.asarray(s, float)
        scalar = s.ndim == 0
        s1 = np.atleast_1d(s)
        if self.solver is not None and self.values is not None:
            _, lo, hi, _ = self.solver.argmax_set(s1, self.values, self.eps_tie, self.vfun)
        else:
            lo = np.interp(s1, self.nodes, self.lower)
            hi = np.interp(s1, self.nodes, self.upper)
        if scalar:
            return float(lo[0]), float(hi[0])
        return lo, hi

    def branch(self, s, selection="lower"):
        lo, hi = self.at(s)
        if selection == "lower":
            return lo
        if selection == "upper":
            return hi
        raise ConfigError("selection must be 'lower' or 'upper'", "selection")

    def gap(self, selection="lower"):
        """Gamma(s) - s on the grid for the chosen branch."""
        return (self.lower if selection == "lower" else self.upper) - self.nodes


@dataclass(frozen=True)
class FixedPoint:
    location: float
    boundary: bool
    crossing: str  # 'stable', 'unstable' or 'boundary'


@dataclass(frozen=True)
class SkibaPoint:
    location: float
    lower_branch: float
    upper_branch: float


def _bisect_switch(policy, a, b, iters=80, width_tol=None):
    """Shrink [a, b] around the point where the upper branch crosses the diagonal.

    Requires upper(a) < a and lower(b) > b.
    """
    if width_tol is None:
        width_tol = 1e-12 * (policy.grid.hi - policy.grid.lo)
    for _ in range(iters):
        if b - a <= width_tol:
            break
        m = 0.5 * (a + b)
        lo, hi = policy.at(m)
        if hi - m < 0:
            a = m
        elif lo - m > 0:
            b = m
        else:
            # the optimal set at m straddles the diagonal: m itself is the switch
            return m, m
    return a, b


def detect_skiba(policy, jump_threshold=10.0):
    """States whose optimal set (or the adjacent-node policy jump) straddles the diagonal.

    A candidate interval is refined by bisection; if the jump survives
    refinement it is a genuine discontinuity of the policy and reported as a
    Skiba point, otherwise it is a steep continuous crossing (an unstable
    fixed point) and ignored.
    """
    x = policy.nodes
    lower, upper = policy.lower, policy.upper
    out = []
    jumps = lower[1:] - upper[:-1]
    pos = jumps[jumps > 0]
    med = float(np.median(pos)) if pos.size else 0.0
    cand = []
    # tie sets straddling the diagonal at a node
    for i in np.flatnonzero((lower < x) & (upper > x) & (upper - lower > policy.grid.h)):
        cand.append((max(i - 1, 0), min(i + 1, x.size - 1)))
    for i in np.flatnonzero(jumps > jump_threshold * med):
        if upper[i] < x[i] and lower[i + 1] > x[i + 1]:
            cand.append((i, i + 1))
    seen = set()
    for i, j in sorted(cand):
        if (i, j) in seen:
            continue
        seen.add((i, j))
        a, b = x[i], x[j]
        jump0 = lower[j] - upper[i]
        if policy.solver is None:
            if jump0 > jump_threshold * max(med, 0.0) and upper[i] < a and lower[j] > b:
                out.append(SkibaPoint(0.5 * (a + b), float(upper[i]), float(lower[j])))
            continue
        la, ha = policy.at(a)
        lb, hb = policy.at(b)
        if not (ha < a and lb > b):
            # the node itself has a straddling tie set
            for node in (a, b):
                ln, hn = policy.at(node)
                if ln < node < hn:
                    out.append(SkibaPoint(float(node), float(ln), float(hn)))
                    break
            continue
        a, b = _bisect_switch(policy, a, b)
        if a == b:
            ln, hn = policy.at(a)
            out.append(SkibaPoint(float(a), float(ln), float(hn)))
            continue
        _, ha = policy.at(a)
        lb, _ = policy.at(b)
        if lb - ha > 0.5 * max(jump0, 0.0) and ha < a and lb > b:
            out.append(SkibaPoint(float(0.5 * (a + b)), float(ha), float(lb)))
    # one report per location
    out.sort(key=lambda k: k.location)
    merged = []
    for sp in out:
        if merged and abs(sp.location - merged[-1].location) <= policy.grid.h:
            continue
        merged.append(sp)
    return merged


def find_fixed_points(policy, tol_fp=None, skiba=None):
    """Fixed points of the policy: interior crossings plus boundary steady states.

    Sign changes of ``lower - s`` between nodes are refined with Brent's
    method on the off-grid policy.  Crossings that are Skiba jumps are not
    fixed points and are skipped.
    """
    x = policy.nodes
    width = policy.grid.hi - policy.grid.lo
    if tol_fp is None:
        tol_fp = 1e-10 * width
    if skiba is None:
        skiba = detect_skiba(policy)
    sk_locs = np.array([sp.location for sp in skiba])
    g = policy.gap("lower")
    out = []
    # boundary steady states
    bt = max(1e-9 * width, 10 * tol_fp)
    lo_fixed = abs(policy.lower[0] - x[0]) <= bt
    hi_fixed = abs(policy.upper[-1] - x[-1]) <= bt
    if lo_fixed:
        out.append(FixedPoint(float(x[0]), True, "boundary"))
    pos = g > 0
    for i in np.flatnonzero(pos[:-1] != pos[1:]):
        a, b = x[i], x[i + 1]
        # a sign change next to a boundary steady state is that steady state
        if i == 0 and lo_fixed and abs(g[0]) <= bt:
            continue
        if i + 1 == x.size - 1 and hi_fixed and abs(policy.upper[-1] - x[-1]) <= bt:
            continue
        if sk_locs.size and np.any((sk_locs >= a - 1e-12 * width) & (sk_locs <= b + 1e-12 * width)):
            continue
        crossing = "stable" if pos[i] else "unstable"
        if policy.solver is None:
            ga, gb = g[i], g[i + 1]
            loc = a - ga * (b - a) / (gb - ga)
        else:
            f = lambda s: policy.branch(s, "lower") - s  # noqa: E731
            fa, fb = f(a), f(b)
            if fa == 0:
                loc = a
            elif fb == 0:
                loc = b
            elif (fa > 0) == (fb > 0):
                # off-grid policy disagrees with the node table; use the table crossing
                ga, gb = g[i], g[i + 1]
                loc = a - ga * (b - a) / (gb - ga)
            else:
                loc = brentq(f, a, b, xtol=tol_fp)
                # a jump hidden inside a cell is not a fixed point
                lo_, hi_ = policy.at(loc)
                if hi_ - lo_ > 0.5 * policy.grid.h and lo_ < loc < hi_:
                    continue
        out.append(FixedPoint(float(loc), False, crossing))
    if hi_fixed:
        out.append(FixedPoint(float(x[-1]), True, "boundary"))
    return out


@dataclass
class OptimalPath:
    s0: float
    selection: str
    states: np.ndarray
    limit: Optional[float]
    converged: bool


ARGMAX_NOISE_REL = 1e-6


def simulate_path(policy, s0, selection="lower", T_max=10000, tol_limit=None, fixed_points=None):
    """Iterate the selected policy branch from ``s0``.

    Raises :class:`PropertyViolationError` if the path is not monotone.
    """
    if selection not in ("lower", "upper"):
        raise ConfigError("selection must be 'lower' or 'upper'", "selection")
    width = policy.grid.hi - policy.grid.lo
    if tol_limit is None:
        tol_limit = 1e-9 * width
    # golden-section argmax carries noise of order sqrt(eps) times the scale;
    # a reversal smaller than that is the path settling, not a violation
    slack = max(tol_limit, ARGMAX_NOISE_REL * width)
    s = float(s0)
    if not policy.grid.lo <= s <= policy.grid.hi:
        raise ConfigError(f"s0={s0} outside the state space", "s0")
    states = [s]
    direction = 0
    converged = False
    for _ in range(T_max):
        nxt = float(policy.branch(s, selection))
        step = nxt - s
        if abs(step) <= tol_limit:
            states.append(nxt)
            converged = True
            break
        if direction == 0:
            direction = 1 if step > 0 else -1
        elif step * direction < 0:
            if step * direction < -slack:
                raise PropertyViolationError(
                    f"non-monotone optimal path from s0={s0}: step {step:.3e} at s={s:.6g}"
                )
            states.append(nxt)
            converged = True
            break
        states.append(nxt)
        s = nxt
    states = np.array(states)
    limit = float(states[-1]) if converged else None
    if converged:
        if fixed_points is None:
            fixed_points = find_fixed_points(policy)
        locs = [fp.location for fp in fixed_points]
        if locs:
            k = int(np.argmin([abs(limit - l) for l in locs]))
            if abs(limit - locs[k]) <= policy.grid.h:
                limit = float(locs[k])
    return OptimalPath(float(s0), selection, states, limit, converged)


@dataclass(frozen=True)
class EulerResidual:
    s: float
    value: Optional[float]
    status: str  # 'interior' or 'boundary, FOC not required'


EULER_MARGIN_CELLS = 2


def euler_residual(model, policy, delta, s, selection="lower"):
    """pi2(s, G(s)) + delta * pi1(G(s), G(G(s))) with both choices maximized directly.

    The first-order condition needs G(s) interior, and the envelope term
    needs V differentiable at G(s), i.e. G(G(s)) interior as well.  A choice
    counts as interior when it lies more than ``EULER_MARGIN_CELLS`` cells
    inside its feasible set: closer to a bound the interpolated V is shaped
    mostly by the boundary node, where V can have an unbounded derivative.
    """
    h = EULER_MARGIN_CELLS * policy.grid.h
    s = float(s)
    g1 = float(policy.branch(s, selection))
    lo1, hi1 = model.upsilon(np.array([s]))
    if g1 - lo1[0] <= h or hi1[0] - g1 <= h:
        return EulerResidual(s, None, "boundary, FOC not required")
    g2 = float(policy.branch(g1, selection))
    lo2, hi2 = model.upsilon(np.array([g1]))
    if g2 - lo2[0] <= h or hi2[0] - g2 <= h:
        return EulerResidual(s, None, "boundary, FOC not required")
    r = model.partial(2, s, g1) + delta * model.partial(1, g1, g2)
    return EulerResidual(s, float(r), "interior")


def basin_from_policy(policy, e):
    """Maximal interval around ``e`` with Gamma > s to the left and Gamma < s to the right.

    The lower branch is used on the left and the upper branch on the right,
    so every optimal selection moves towards ``e``.  Endpoints are the first
    failing node (or the state-space bound).
    """
    e = float(getattr(e, "location", e))
    x = policy.nodes
    left_ok = policy.lower - x > 0
    right_ok = policy.upper - x < 0
    left = e
    i = int(np.searchsorted(x, e, side="left")) - 1
    if i >= 0 and left_ok[i]:
        while i >= 0 and left_ok[i]:
            i -= 1
        left = float(x[i]) if i >= 0 else float(x[0])
    right = e
    j = int(np.searchsorted(x, e, side="right"))
    if j < x.size and right_ok[j]:
        while j < x.size and right_ok[j]:
            j += 1
        right = float(x[j]) if j < x.size else float(x[-1])
    return left, right


def check_policy_monotone(policy, policy_next=None, slack=None):
    """Set-order monotonicity of the policy in s and, given a second solve, in delta."""
    x = policy.nodes
    if slack is None:
        slack = policy.grid.h
    viol = policy.upper[:-1] - policy.lower[1:] - slack
    k = int(np.argmax(viol))
    worst = (float(x[k]), float(x[k + 1]), float(viol[k] + slack))
    passed = bool(viol[k] <= 0)
    details = {}
    samples = x.size - 1
    if policy_next is not None:
        if policy_next.grid.n != policy.grid.n or not np.allclose(policy_next.nodes, x):
            raise ConfigError("policies across delta must share a grid", "grid")
        vd = policy.upper - policy_next.lower - slack
        kd = int(np.argmax(vd))
        details["across_delta"] = {
            "passed": bool(vd[kd] <= 0),
            "worst_violation": [float(x[kd]), float(x[kd]), float(vd[kd] + slack)],
        }
        samples += x.size
        if vd[kd] > 0:
            passed = False
            if viol[k] <= 0 or vd[kd] > viol[k]:
                worst = (float(x[kd]), float(x[kd]), float(vd[kd] + slack))
    return AssumptionReport("policy monotone", passed, worst, samples, float(slack), details)


class ValueFunctionIteration(BaseEstimator):
    """Estimator wrapper: ``fit(model)`` solves, ``predict(s)`` returns the lower policy branch."""

    def __init__(self, delta=0.9, n=2001, tol_V=1e-10, max_iter=100000, eps_tie=None):
        self.delta = delta
        self.n = n
        self.tol_V = tol_V
        self.max_iter = max_iter
        self.eps_tie = eps_tie

    def fit(self, model, y=None):
        self.value_, self.policy_ = solve_vfi(
            model, self.delta, Grid.for_model(model, self.n), self.tol_V, self.max_iter, self.eps_tie
        )
        self.skiba_points_ = detect_skiba(self.policy_)
        self.fixed_points_ = find_fixed_points(self.policy_, skiba=self.skiba_points_)
        return self

    def predict(self, s):
        if not hasattr(self, "policy_"):
            raise AttributeError("call fit before predict")
        return self.policy_.branch(np.asarray(s, float), "lower")

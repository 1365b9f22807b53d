"""Model interface and grid checks of the standing assumptions on payoff and constraint.

A model is a per-period payoff ``pi(s, s')`` on a bounded interval state space
together with an interval-valued constraint ``upsilon(s) = [lo(s), hi(s)]``.
All callables are expected to broadcast over numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Optional

import numpy as np

from .errors import ConfigError, DomainError

DEFAULT_SIGN_TOL = 1e-8
DEFAULT_CHECK_N = 201

PARTIALS = (1, 2, 11, 12, 22)


@dataclass(frozen=True)
class StateSpace:
    lo: float
    hi: float
    interior_margin: Optional[float] = None

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)) or not self.lo < self.hi:
            raise ConfigError(f"state space needs lo < hi, got [{self.lo}, {self.hi}]", "space")
        if self.interior_margin is None:
            object.__setattr__(self, "interior_margin", 1e-4 * (self.hi - self.lo))
        if not 0 < self.interior_margin < (self.hi - self.lo) / 4:
            raise ConfigError("interior_margin must lie in (0, (hi-lo)/4)", "interior_margin")

    @property
    def width(self):
        return self.hi - self.lo

    @property
    def interior(self):
        """Closed interval used for interior claims."""
        return self.lo + self.interior_margin, self.hi - self.interior_margin

    def contains(self, s):
        s = np.asarray(s, dtype=float)
        return (s >= self.lo) & (s <= self.hi)


@dataclass(frozen=True, eq=False)
class ModelFunctions:
    """A registered model: payoff, its partials, constraint endpoints and parameters.

    ``pi1``/``pi2`` and the second partials may be ``None``; :meth:`partial`
    then falls back to central finite differences.  ``pi1_plus``/``pi1_minus``
    give one-sided derivatives in the first argument for payoffs with kinks.
    ``builder`` rebuilds the model from a modified parameter map, which is what
    parameter sensitivities use.
    """

    name: str
    pi: Callable
    upsilon_lo: Callable
    upsilon_hi: Callable
    space: StateSpace
    params: Mapping = field(default_factory=dict)
    pi1: Optional[Callable] = None
    pi2: Optional[Callable] = None
    pi11: Optional[Callable] = None
    pi12: Optional[Callable] = None
    pi22: Optional[Callable] = None
    pi1_plus: Optional[Callable] = None
    pi1_minus: Optional[Callable] = None
    kinks: tuple = ()
    closed_form_locator: Optional[Callable] = None
    builder: Optional[Callable] = None
    fd_step: Optional[float] = None

    def __post_init__(self):
        if self.fd_step is None:
            object.__setattr__(self, "fd_step", 1e-6 * self.space.width)

    def upsilon(self, s):
        """Feasible interval at ``s`` clipped to the state space."""
        s = np.asarray(s, dtype=float)
        lo = np.clip(self.upsilon_lo(s), self.space.lo, self.space.hi)
        hi = np.clip(self.upsilon_hi(s), self.space.lo, self.space.hi)
        return lo, np.maximum(hi, lo)

    def with_params(self, **changes):
        if self.builder is None:
            raise ConfigError(f"model {self.name!r} has no parameter builder")
        params = dict(self.params)
        unknown = set(changes) - set(params)
        if unknown:
            raise ConfigError(f"unknown parameter(s) {sorted(unknown)} for model {self.name!r}")
        params.update(changes)
        return self.builder(params)

    @property
    def has_second_partials(self):
        return all(f is not None for f in (self.pi11, self.pi12, self.pi22))

    def partial(self, which, s, s2):
        """Partial derivative of the payoff, analytic when available."""
        analytic = {1: self.pi1, 2: self.pi2, 11: self.pi11, 12: self.pi12, 22: self.pi22}
        if which not in analytic:
            raise ValueError(f"which must be one of {PARTIALS}")
        f = analytic[which]
        s = np.asarray(s, dtype=float)
        s2 = np.asarray(s2, dtype=float)
        if f is not None:
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                return np.broadcast_to(f(s, s2), np.broadcast(s, s2).shape).astype(float)
        h = self.fd_step
        # second partials from analytic first partials are much better conditioned
        if which in (11, 12) and self.pi1 is not None:
            if which == 11:
                return _central(lambda x: self.pi1(x, s2), s, h)
            return _central(lambda y: self.pi1(s, y), s2, h)
        if which == 22 and self.pi2 is not None:
            return _central(lambda y: self.pi2(s, y), s2, h)
        return _fd(self.pi, which, s, s2, max(h, 1e-4 * self.space.width) if which > 2 else h)

    def one_sided_pi1(self, s, s2):
        """Right and left derivatives in the first argument."""
        if self.pi1_plus is not None and self.pi1_minus is not None:
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.asarray(self.pi1_plus(s, s2), float), np.asarray(self.pi1_minus(s, s2), float)
        d = self.partial(1, s, s2)
        return d, d


def _central(f, x, h):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return (np.asarray(f(x + h), float) - np.asarray(f(x - h), float)) / (2 * h)


def _fd(pi, which, s, s2, h):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if which == 1:
            return (pi(s + h, s2) - pi(s - h, s2)) / (2 * h)
        if which == 2:
            return (pi(s, s2 + h) - pi(s, s2 - h)) / (2 * h)
        if which == 11:
            return (pi(s + h, s2) - 2 * pi(s, s2) + pi(s - h, s2)) / h**2
        if which == 22:
            return (pi(s, s2 + h) - 2 * pi(s, s2) + pi(s, s2 - h)) / h**2
        return (pi(s + h, s2 + h) - pi(s + h, s2 - h) - pi(s - h, s2 + h) + pi(s - h, s2 - h)) / (4 * h**2)


def _check_stencil(model, s, s2, h, first=True, second=True):
    lo, hi = model.space.lo, model.space.hi
    s = np.asarray(s, float)
    s2 = np.asarray(s2, float)
    if first and (np.any(s - h < lo) or np.any(s + h > hi)):
        raise DomainError(f"finite-difference stencil leaves the state space at s={s}")
    if second and (np.any(s2 - h < lo) or np.any(s2 + h > hi)):
        raise DomainError(f"finite-difference stencil leaves the state space at s'={s2}")


def fd_partial(model, which, s, s2, h=1e-5):
    """Central finite-difference partial of ``model.pi``.

    ``which`` is one of 1, 2, 11, 12, 22.  Raises :class:`DomainError` when
    the stencil leaves the square state space.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    if which not in PARTIALS:
        raise ValueError(f"which must be one of {PARTIALS}")
    _check_stencil(model, s, s2, h, first=which in (1, 11, 12), second=which in (2, 22, 12))
    return _fd(model.pi, which, np.asarray(s, float), np.asarray(s2, float), h)


def fd_partial_one_sided(model, s, s2, h=1e-5):
    """Right and left difference quotients in the first argument."""
    if h <= 0:
        raise ValueError("h must be positive")
    s = np.asarray(s, float)
    s2 = np.asarray(s2, float)
    lo, hi = model.space.lo, model.space.hi
    if np.any(s + h > hi) or np.any(s - h < lo):
        raise DomainError(f"one-sided stencil leaves the state space at s={s}")
    with np.errstate(divide="ignore", invalid="ignore"):
        base = model.pi(s, s2)
        return (model.pi(s + h, s2) - base) / h, (base - model.pi(s - h, s2)) / h


# ---------------------------------------------------------------------------
# assumption checks


@dataclass(frozen=True)
class AssumptionReport:
    assumption: str
    passed: bool
    worst_violation: Optional[tuple]
    samples_checked: int
    tolerance: float = DEFAULT_SIGN_TOL
    details: dict = field(default_factory=dict)

    def to_dict(self):
        d = {
            "assumption": self.assumption,
            "passed": bool(self.passed),
            "worst_violation": None
            if self.worst_violation is None
            else [float(x) for x in self.worst_violation],
            "samples_checked": int(self.samples_checked),
            "tolerance": float(self.tolerance),
        }
        extra = {}
        for k, v in self.details.items():
            extra[k] = v.to_dict() if isinstance(v, AssumptionReport) else v
        if extra:
            d["details"] = extra
        return d


def graph_samples(model, n=DEFAULT_CHECK_N):
    """Tensor samples over the graph of the constraint: ``n`` states times ``n`` choices."""
    s = np.linspace(model.space.lo, model.space.hi, n)
    lo, hi = model.upsilon(s)
    t = np.linspace(0.0, 1.0, n)
    S = np.repeat(s[:, None], n, axis=1)
    S2 = lo[:, None] + (hi - lo)[:, None] * t[None, :]
    return S, S2


def _resolve_grid(model, grid):
    if grid is None:
        return graph_samples(model)
    if isinstance(grid, int):
        return graph_samples(model, grid)
    S, S2 = grid
    return np.asarray(S, float), np.asarray(S2, float)


def _violation_report(name, violation, S, S2, tol, details=None):
    """Build a report from per-sample violation amounts (positive means violated).

    Non-finite samples are skipped and counted.
    """
    violation = np.asarray(violation, float)
    S = np.broadcast_to(S, violation.shape)
    S2 = np.broadcast_to(S2, violation.shape)
    finite = np.isfinite(violation)
    details = dict(details or {})
    details.setdefault("nonfinite_samples", int((~finite).sum()))
    if not finite.any():
        return AssumptionReport(name, True, None, 0, tol, details)
    v = np.where(finite, violation, -np.inf)
    k = int(np.argmax(v))  # lowest flat index wins ties
    worst = (float(S.flat[k]), float(S2.flat[k]), float(v.flat[k]))
    return AssumptionReport(name, bool(worst[2] <= tol), worst, int(finite.sum()), tol, details)


def check_payoff_monotone(model, grid=None, tol=DEFAULT_SIGN_TOL):
    """Payoff increasing in the current state, with admissible kink orientation."""
    S, S2 = _resolve_grid(model, grid)
    h = model.fd_step
    if model.pi1_plus is not None or model.pi1 is not None:
        dplus, dminus = model.one_sided_pi1(S, S2)
    else:
        # one-sided quotients; the boundary rows only have one side
        with np.errstate(divide="ignore", invalid="ignore"):
            base = model.pi(S, S2)
            right = np.where(S + h <= model.space.hi, (model.pi(np.minimum(S + h, model.space.hi), S2) - base) / h, np.nan)
            left = np.where(S - h >= model.space.lo, (base - model.pi(np.maximum(S - h, model.space.lo), S2)) / h, np.nan)
        dplus = np.where(np.isnan(right), left, right)
        dminus = np.where(np.isnan(left), right, left)
    with np.errstate(invalid="ignore"):
        positivity = -np.minimum(dplus, dminus)
        orientation = dminus - dplus
        kink = np.abs(dplus - dminus) > 10 * h
    kinks = int(np.sum(kink & np.isfinite(orientation)))
    orient = _violation_report("kink orientation", orientation, S, S2, tol)
    rep = _violation_report(
        "payoff increasing in s", positivity, S, S2, tol,
        {"kink_count": kinks, "orientation": orient},
    )
    if rep.passed and not orient.passed:
        rep = replace(rep, passed=False, worst_violation=orient.worst_violation)
    return rep


def check_supermodularity(model, grid=None, tol=DEFAULT_SIGN_TOL):
    """Increasing differences: the cross partial is positive on the sampled graph."""
    S, S2 = _resolve_grid(model, grid)
    d12 = model.partial(12, S, S2)
    return _violation_report("supermodular payoff", -d12, S, S2, tol)


def check_constraint_monotone(model, grid=None, tol=DEFAULT_SIGN_TOL):
    """Strong-set-order monotonicity of the constraint (endpoints non-decreasing).

    The inclusion-order check and the non-empty-interior check are attached
    under ``details``; only the latter also fails this report.
    """
    if grid is None or isinstance(grid, int):
        s = np.linspace(model.space.lo, model.space.hi, grid or DEFAULT_CHECK_N)
    else:
        s = np.unique(np.asarray(grid[0], float).ravel())
    lo, hi = model.upsilon(s)
    dlo, dhi = np.diff(lo), np.diff(hi)
    mid = s[:-1]
    sso = _violation_report(
        "strong set order", np.maximum(-dlo, -dhi), mid, mid, tol
    )
    inclusion = _violation_report("inclusion in the state space", np.maximum(dlo, -dhi), mid, mid, tol)
    width = hi - lo
    interior = (s > model.space.lo) & (s < model.space.hi)
    degenerate = np.where(interior, -width, -np.inf)
    nonempty = _violation_report("non-empty interior", degenerate, s, s, 0.0)
    details = {"inclusion": inclusion, "nonempty_interior": nonempty}
    passed = sso.passed and nonempty.passed
    worst = sso.worst_violation if not sso.passed or nonempty.passed else nonempty.worst_violation
    return AssumptionReport("strong set order", passed, worst, sso.samples_checked, tol, details)


def check_strict_concavity(model, grid=None, tol=DEFAULT_SIGN_TOL):
    """``pi11 < 0``, ``pi22 < 0`` and ``pi11*pi22 - pi12**2 > 0`` on every sample.

    Strict inequalities: a sample passes only with margin ``tol``.
    """
    S, S2 = _resolve_grid(model, grid)
    p11 = model.partial(11, S, S2)
    p22 = model.partial(22, S, S2)
    p12 = model.partial(12, S, S2)
    with np.errstate(invalid="ignore", over="ignore"):
        worst = np.maximum(np.maximum(p11, p22), -(p11 * p22 - p12**2))
    return _violation_report("strict concavity", worst, S, S2, -tol)


def check_scva_condition(model, delta, roots, grid=None, tol=DEFAULT_SIGN_TOL):
    """Sign condition linking ``pi2(s,a) + delta*pi1(s,a)`` to the locator at each root.

    For every root ``s`` the sign must be non-positive for feasible ``a > s``
    and non-negative for ``a < s``.  Signs are taken relative to the scale
    ``|pi2| + delta*|pi1|`` so that steep payoffs do not turn rounding into
    violations.  The sufficient condition ``pi22 + delta*pi12 <= 0`` over the
    whole sampled graph is attached under ``details['sufficient']``.
    """
    n = DEFAULT_CHECK_N if grid is None or not isinstance(grid, int) else grid
    roots = [float(getattr(r, "s", r)) for r in roots]
    lo_i, hi_i = model.space.interior
    for r in roots:
        if not lo_i <= r <= hi_i:
            raise DomainError(f"root {r} is not in the interior of the state space")
    t = np.linspace(0.0, 1.0, n)
    viol, SS, AA = [], [], []
    for r in roots:
        lo, hi = model.upsilon(np.array([r]))
        a = lo[0] + (hi[0] - lo[0]) * t
        s = np.full_like(a, r)
        p1 = model.partial(1, s, a)
        p2 = model.partial(2, s, a)
        with np.errstate(invalid="ignore", over="ignore"):
            q = (p2 + delta * p1) / (np.abs(p2) + delta * np.abs(p1) + 1e-300)
        v = np.where(a > r, q, np.where(a < r, -q, -np.inf))
        viol.append(v)
        SS.append(s)
        AA.append(a)
    S, S2 = _resolve_grid(model, grid if not isinstance(grid, int) else n)
    with np.errstate(invalid="ignore", over="ignore"):
        suff = model.partial(22, S, S2) + delta * model.partial(12, S, S2)
    sufficient = _violation_report("sufficient: pi22 + delta*pi12 <= 0", suff, S, S2, tol)
    if not viol:
        return AssumptionReport("sign condition at the roots", True, None, 0, tol, {"sufficient": sufficient})
    return _violation_report(
        "sign condition at the roots",
        np.concatenate(viol),
        np.concatenate(SS),
        np.concatenate(AA),
        tol,
        {"sufficient": sufficient, "roots": roots},
    )


def check_all(model, grid=None, tol=DEFAULT_SIGN_TOL):
    """The standing-assumption checks that do not depend on the discount factor."""
    g = _resolve_grid(model, grid)
    return {
        "payoff_monotone": check_payoff_monotone(model, g, tol),
        "supermodularity": check_supermodularity(model, g, tol),
        "constraint_monotone": check_constraint_monotone(model, g, tol),
        "strict_concavity": check_strict_concavity(model, g, tol),
    }


def make_model(name, pi, upsilon, space, **kw):
    """Convenience constructor for ad-hoc models.

    ``upsilon`` is either a pair ``(lo_fn, hi_fn)`` or a pair of constants.
    """
    lo_fn, hi_fn = upsilon
    if not callable(lo_fn):
        c_lo = float(lo_fn)
        lo_fn = lambda s, c=c_lo: np.full(np.shape(s), c)  # noqa: E731
    if not callable(hi_fn):
        c_hi = float(hi_fn)
        hi_fn = lambda s, c=c_hi: np.full(np.shape(s), c)  # noqa: E731
    if not isinstance(space, StateSpace):
        space = StateSpace(*space)
    return ModelFunctions(name=name, pi=pi, upsilon_lo=lo_fn, upsilon_hi=hi_fn, space=space, **kw)

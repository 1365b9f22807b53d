"""Learning-by-doing small open economy.

Employment s in sector 1 this period raises next period's productivity via
H(s) = s**theta.  Output of sector 1 is Y = H(s) F(s') with F(s') = s'**alpha,
split between home consumption c and exports e = Y - c sold at
p(e) = b e**(-1/eps).  Sector 0 contributes G(1 - s') = (1-s')**beta / beta
by default (``sector0="power_over_beta"``) or (1-s')**beta with
``sector0="power"``; the two coincide for beta = 1.

When gamma == eps the inner consumption problem has the closed form
c = mu * Y; otherwise it is solved numerically per evaluation.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..core import ModelFunctions, StateSpace
from ..errors import ConfigError, DomainError, InnerSolverError

INNER_TOL = 1e-12
SECTOR0_FORMS = ("power_over_beta", "power")


@dataclass(frozen=True)
class IntertemporalParams:
    theta: float = 0.5
    alpha: float = 0.3
    gamma: float = 5.0
    eps: float = 5.0
    b: float = 2.0
    beta: float = 1.0
    sector0: str = "power_over_beta"

    def __post_init__(self):
        if self.sector0 not in SECTOR0_FORMS:
            raise ConfigError(f"sector0 must be one of {SECTOR0_FORMS}", "sector0")
        if not 0 < self.theta <= 1:
            raise ConfigError("theta must lie in (0, 1]", "theta")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)", "alpha")
        if not self.gamma > 1:
            raise ConfigError("gamma must exceed 1", "gamma")
        if not self.eps > 1:
            raise ConfigError("eps must exceed 1", "eps")
        if not self.b > 0:
            raise ConfigError("b must be positive", "b")
        if not 0 < self.beta <= 1:
            raise ConfigError("beta must lie in (0, 1]", "beta")

    @classmethod
    def from_dict(cls, params):
        try:
            return cls(**dict(params))
        except TypeError as exc:
            raise ConfigError(f"bad intertemporal parameters: {exc}") from exc

    @property
    def closed_form(self):
        return self.gamma == self.eps

    @property
    def mu(self):
        """Consumption share of sector-1 output (closed-form branch)."""
        return 1.0 / (1.0 + (self.b * (1 - 1 / self.gamma)) ** self.gamma)


def solve_inner(Y, gamma, eps, b, tol=INNER_TOL, max_iter=200):
    """Home consumption c solving c**(-1/gamma) = b (1 - 1/eps) (Y - c)**(-1/eps).

    Works on the share t = c/Y in (0, 1).  Bisection on the log of the
    monotone residual, then Newton polishing with the bracket as safeguard.
    Returns c (zero where Y == 0).
    """
    Y = np.asarray(Y, float)
    kappa = b * (1 - 1 / eps)
    pos = Y > 0
    Yp = np.where(pos, Y, 1.0)

    def resid(t):
        # log u'(c) - log MR(e), decreasing in t
        return -np.log(t * Yp) / gamma + np.log(Yp * (1 - t)) / eps - np.log(kappa)

    lo = np.zeros_like(Yp)
    hi = np.ones_like(Yp)
    t = np.full_like(Yp, 0.5)
    for _ in range(max_iter):
        with np.errstate(divide="ignore", invalid="ignore"):
            r = resid(t)
        lo = np.where(r > 0, t, lo)
        hi = np.where(r > 0, hi, t)
        t = 0.5 * (lo + hi)
        if np.all(hi - lo <= tol * np.maximum(t, 1e-300)):
            break
    # Newton polish inside the bracket
    for _ in range(3):
        r = resid(t)
        dr = -1 / (gamma * t) - 1 / (eps * (1 - t))
        tn = t - r / dr
        t = np.where((tn > lo) & (tn < hi), tn, t)
    r = resid(t)
    bad = pos & ~(np.abs(r) <= 1e-9)
    if np.any(bad):
        raise InnerSolverError(
            "inner consumption solve did not converge",
            bracket=(float(np.min(lo[bad])), float(np.max(hi[bad]))),
        )
    return np.where(pos, t * Yp, 0.0)


def make_intertemporal(p) -> ModelFunctions:
    if not isinstance(p, IntertemporalParams):
        p = IntertemporalParams.from_dict(p)
    th, al, ga, ep, b, be = p.theta, p.alpha, p.gamma, p.eps, p.b, p.beta
    space = StateSpace(0.0, 1.0)
    # G(x) = scale * x**beta / beta
    scale = 1.0 if p.sector0 == "power_over_beta" else be

    def G(x):
        return scale * np.maximum(x, 0.0) ** be / be

    def G1(x):
        with np.errstate(divide="ignore"):
            return scale * np.maximum(x, 0.0) ** (be - 1)

    def G2(x):
        with np.errstate(divide="ignore", invalid="ignore"):
            return scale * (be - 1) * np.maximum(x, 0.0) ** (be - 2)

    def pw(x, e):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.maximum(np.asarray(x, float), 0.0) ** e

    common = dict(name="intertemporal", upsilon_lo=lambda s: np.zeros(np.shape(s)),
                  upsilon_hi=lambda s: np.ones(np.shape(s)), space=space, params=asdict(p),
                  builder=make_intertemporal)

    if p.closed_form:
        rho = 1 - 1 / ga
        K0 = (1 + (b * rho) ** ga) ** (1 / ga)

        def pi(s, s2):
            return K0 * pw(pw(s, th) * pw(s2, al), rho) / rho + G(1 - np.asarray(s2, float))

        def pi1(s, s2):
            return K0 * th * pw(s, th * rho - 1) * pw(s2, al * rho)

        def pi2(s, s2):
            return K0 * al * pw(s, th * rho) * pw(s2, al * rho - 1) - G1(1 - np.asarray(s2, float))

        def pi11(s, s2):
            return K0 * th * (th * rho - 1) * pw(s, th * rho - 2) * pw(s2, al * rho)

        def pi12(s, s2):
            return K0 * th * al * rho * pw(s, th * rho - 1) * pw(s2, al * rho - 1)

        def pi22(s, s2):
            return K0 * al * (al * rho - 1) * pw(s, th * rho) * pw(s2, al * rho - 2) + G2(1 - np.asarray(s2, float))

        def locator(s, delta):
            s = np.asarray(s, float)
            if np.any(s <= 0) or np.any(s >= 1):
                raise DomainError("locator needs s in (0, 1)")
            return K0 * (al + delta * th) * s ** ((th + al) * rho - 1) - scale * (1 - s) ** (be - 1)

        return ModelFunctions(pi=pi, pi1=pi1, pi2=pi2, pi11=pi11, pi12=pi12, pi22=pi22,
                              closed_form_locator=locator, **common)

    rho_c = 1 - 1 / ga
    rho_e = 1 - 1 / ep

    def inner(s, s2):
        Y = pw(s, th) * pw(s2, al)
        return Y, solve_inner(Y, ga, ep, b)

    def pi(s, s2):
        Y, c = inner(s, s2)
        return pw(c, rho_c) / rho_c + b * pw(Y - c, rho_e) + G(1 - np.asarray(s2, float))

    def marginal(Y, c):
        # marginal value of sector-1 output = u'(c) by the envelope theorem
        with np.errstate(divide="ignore"):
            return pw(c, -1 / ga)

    def pi1(s, s2):
        Y, c = inner(s, s2)
        return marginal(Y, c) * th * pw(s, th - 1) * pw(s2, al)

    def pi2(s, s2):
        Y, c = inner(s, s2)
        return marginal(Y, c) * al * pw(s, th) * pw(s2, al - 1) - G1(1 - np.asarray(s2, float))

    return ModelFunctions(pi=pi, pi1=pi1, pi2=pi2, **common)


def ie_locator(p, s, delta):
    if not isinstance(p, IntertemporalParams):
        p = IntertemporalParams.from_dict(p)
    if not p.closed_form:
        raise ConfigError("closed-form locator needs gamma == eps", "eps")
    return make_intertemporal(p).closed_form_locator(s, delta)


def ie_threshold(p, delta=None):
    """Shape verdict from the learning-elasticity threshold (linear sector 0 only).

    ``single_crossing_above`` when theta < 1/(gamma-1) + 1 - alpha;
    ``single_crossing_below`` when theta exceeds it and the locator is positive
    at the upper end (needs ``delta``); ``indeterminate`` otherwise.
    """
    if not isinstance(p, IntertemporalParams):
        p = IntertemporalParams.from_dict(p)
    if p.beta != 1 or not p.closed_form:
        return "indeterminate"
    thr = 1 / (p.gamma - 1) + 1 - p.alpha
    if p.theta < thr:
        return "single_crossing_above"
    if p.theta > thr and delta is not None:
        rho = 1 - 1 / p.gamma
        K0 = (1 + (p.b * rho) ** p.gamma) ** (1 / p.gamma)
        if K0 * (p.alpha + delta * p.theta) - 1 > 0:
            return "single_crossing_below"
    return "indeterminate"

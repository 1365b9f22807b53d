"""Neoclassical growth with a possibly convex-concave technology.

pi(s, s') = u(f(s) + (1-d) s - s') with CRRA utility u(c) = c**(1-g)/(1-g),
g being the coefficient of relative risk aversion (log utility when g == 1).  Consumption below the floor ``c_min`` uses the
second-order Taylor extension of u at the floor, which keeps u increasing and
concave so that the locator keeps its sign where output falls short of the
capital stock.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ..core import ModelFunctions, StateSpace
from ..errors import ConfigError, DomainError

C_MIN_REL = 1e-9


@dataclass(frozen=True)
class NcgParams:
    production: str = "cubic"
    a: float = 0.25
    b: float = 1.0
    c: float = 4.7
    A: float = 1.0
    alpha: float = 0.3
    breakpoints: tuple = field(default_factory=tuple)
    slopes: tuple = field(default_factory=tuple)
    gamma: float = 0.3
    d: float = 1.0
    s_max: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", tuple(float(x) for x in self.breakpoints))
        object.__setattr__(self, "slopes", tuple(float(x) for x in self.slopes))
        if self.production == "cubic":
            for k in ("a", "b", "c"):
                if not getattr(self, k) > 0:
                    raise ConfigError(f"cubic production needs {k} > 0", k)
        elif self.production == "textbook":
            if not self.A > 0:
                raise ConfigError("textbook production needs A > 0", "A")
            if not 0 < self.alpha < 1:
                raise ConfigError("textbook production needs 0 < alpha < 1", "alpha")
        elif self.production == "kinked":
            bp, sl = self.breakpoints, self.slopes
            if len(sl) != len(bp) + 1 or not sl:
                raise ConfigError("kinked production needs len(slopes) == len(breakpoints) + 1", "slopes")
            if any(x <= 0 for x in bp) or any(np.diff(bp) <= 0):
                raise ConfigError("breakpoints must be positive and strictly increasing", "breakpoints")
            if sl[0] <= 0:
                raise ConfigError("first slope must be positive", "slopes")
        else:
            raise ConfigError(f"unknown production {self.production!r}", "production")
        if not self.gamma > 0:
            raise ConfigError("crra gamma must be positive", "gamma")
        if not 0 <= self.d <= 1:
            raise ConfigError("depreciation d must lie in [0, 1]", "d")
        if self.s_max is not None and not self.s_max > 0:
            raise ConfigError("s_max must be positive", "s_max")

    @classmethod
    def from_dict(cls, params):
        params = dict(params)
        try:
            return cls(**params)
        except TypeError as exc:
            raise ConfigError(f"bad ncg parameters: {exc}") from exc

    def to_dict(self):
        out = {
            "production": self.production,
            "gamma": self.gamma,
            "d": self.d,
            "s_max": self.s_max,
        }
        if self.production == "cubic":
            out.update(a=self.a, b=self.b, c=self.c)
        elif self.production == "textbook":
            out.update(A=self.A, alpha=self.alpha)
        else:
            out.update(breakpoints=list(self.breakpoints), slopes=list(self.slopes))
        return out


# ---------------------------------------------------------------------------
# technology


class _Production:
    """f, f' (one-sided where kinked) and f''."""

    def __init__(self, p: NcgParams):
        self.p = p
        self.kinks = ()
        if p.production == "kinked":
            self.kinks = p.breakpoints
            bp = np.array((0.0,) + p.breakpoints)
            sl = np.array(p.slopes)
            # f at each breakpoint, f(0) = 0
            self._f_at = np.concatenate([[0.0], np.cumsum(sl[:-1] * np.diff(bp))])
            self._bp = bp
            self._sl = sl

    def f(self, s):
        p = self.p
        s = np.asarray(s, float)
        if p.production == "cubic":
            return -(p.a / 3) * s**3 + (p.b / 2) * s**2 + p.c * s
        if p.production == "textbook":
            with np.errstate(invalid="ignore"):
                return p.A * np.maximum(s, 0.0) ** p.alpha
        i = np.clip(np.searchsorted(self._bp, s, side="right") - 1, 0, len(self._sl) - 1)
        return self._f_at[i] + self._sl[i] * (s - self._bp[i])

    def df(self, s, side=+1):
        p = self.p
        s = np.asarray(s, float)
        if p.production == "cubic":
            return -p.a * s**2 + p.b * s + p.c
        if p.production == "textbook":
            with np.errstate(divide="ignore", invalid="ignore"):
                return p.A * p.alpha * np.maximum(s, 0.0) ** (p.alpha - 1)
        which = "right" if side > 0 else "left"
        i = np.clip(np.searchsorted(self._bp, s, side=which) - 1, 0, len(self._sl) - 1)
        return self._sl[i]

    def d2f(self, s):
        p = self.p
        s = np.asarray(s, float)
        if p.production == "cubic":
            return -2 * p.a * s + p.b
        if p.production == "textbook":
            with np.errstate(divide="ignore", invalid="ignore"):
                return p.A * p.alpha * (p.alpha - 1) * np.maximum(s, 0.0) ** (p.alpha - 2)
        return np.zeros_like(s)


def default_s_max(p: NcgParams):
    """Upper end of the state space.

    Smallest state beyond the inflection where gross output no longer exceeds
    the state, capped at the peak of gross output so the payoff stays
    increasing in the state on the whole space.
    """
    prod = _Production(p)
    fbar = lambda s: prod.f(s) + (1 - p.d) * s  # noqa: E731
    dfbar = lambda s: prod.df(s) + (1 - p.d)  # noqa: E731
    if p.production == "cubic":
        s_inf = p.b / (2 * p.a)
        # -(a/3) s^2 + (b/2) s + c - d = 0, larger root
        qa, qb, qc = -p.a / 3, p.b / 2, p.c - p.d
        disc = qb**2 - 4 * qa * qc
        cross = (-qb - np.sqrt(disc)) / (2 * qa) if disc >= 0 else np.inf
        # peak of gross output: -a s^2 + b s + c + 1 - d = 0
        pa, pc = -p.a, p.c + 1 - p.d
        peak = (-p.b - np.sqrt(p.b**2 - 4 * pa * pc)) / (2 * pa)
        cross = max(cross, s_inf) if np.isfinite(cross) else cross
        out = min(cross, peak)
    elif p.production == "textbook":
        if p.d > 0:
            out = (p.A / p.d) ** (1 / (1 - p.alpha))
        else:
            raise ConfigError("textbook production with d = 0 needs an explicit s_max", "s_max")
    else:
        g = lambda s: fbar(s) - s  # noqa: E731
        hi = max(p.breakpoints[-1], 1.0)
        lo = p.breakpoints[-1]
        while g(hi) > 0:
            hi *= 2
            if hi > 1e12:
                raise ConfigError("kinked production never falls below the diagonal; give s_max", "s_max")
        out = brentq(g, lo, hi) if g(lo) > 0 else lo
        if dfbar(out) <= 0:
            neg = [b for b, m in zip(p.breakpoints, p.slopes[1:]) if m + 1 - p.d <= 0]
            out = min(out, neg[0]) if neg else out
    if not np.isfinite(out) or out <= 0:
        raise ConfigError("could not determine a default s_max; give it explicitly", "s_max")
    return float(out)


# ---------------------------------------------------------------------------
# utility


class _Utility:
    def __init__(self, gamma, c_min):
        self.g = gamma
        self.cm = c_min
        self.u0, self.u1, self.u2 = self._raw(np.float64(c_min))

    def _raw(self, c):
        g = self.g
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if g == 1:
                return np.log(c), 1 / c, -1 / c**2
            return c ** (1 - g) / (1 - g), c ** (-g), -g * c ** (-g - 1)

    def __call__(self, c, order=0):
        c = np.asarray(c, float)
        safe = np.maximum(c, self.cm)
        raw = self._raw(safe)[order]
        dc = c - self.cm
        if order == 0:
            ext = self.u0 + self.u1 * dc + 0.5 * self.u2 * dc**2
        elif order == 1:
            ext = self.u1 + self.u2 * dc
        else:
            ext = np.full_like(c, self.u2)
        return np.where(c >= self.cm, raw, ext)


def make_ncg(p) -> ModelFunctions:
    """Build the growth model from :class:`NcgParams` or a parameter dict."""
    if not isinstance(p, NcgParams):
        p = NcgParams.from_dict(p)
    s_max = p.s_max if p.s_max is not None else default_s_max(p)
    space = StateSpace(0.0, s_max)
    c_min = C_MIN_REL * space.width
    prod = _Production(p)
    u = _Utility(p.gamma, c_min)
    d = p.d
    if np.any(prod.f(np.linspace(0, s_max, 1001)) < -1e-12):
        raise ConfigError("production is negative somewhere on the state space", "production")

    def fbar(s):
        return prod.f(s) + (1 - d) * s

    def cons(s, s2):
        return fbar(s) - s2

    def pi(s, s2):
        return u(cons(s, s2))

    def pi1(s, s2):
        return u(cons(s, s2), 1) * (prod.df(s) + 1 - d)

    def pi1_plus(s, s2):
        return u(cons(s, s2), 1) * (prod.df(s, +1) + 1 - d)

    def pi1_minus(s, s2):
        return u(cons(s, s2), 1) * (prod.df(s, -1) + 1 - d)

    def pi2(s, s2):
        return -u(cons(s, s2), 1)

    def pi11(s, s2):
        fb1 = prod.df(s) + 1 - d
        c = cons(s, s2)
        return u(c, 2) * fb1**2 + u(c, 1) * prod.d2f(s)

    def pi12(s, s2):
        return -u(cons(s, s2), 2) * (prod.df(s) + 1 - d)

    def pi22(s, s2):
        return u(cons(s, s2), 2)

    def ups_lo(s):
        return (1 - d) * np.asarray(s, float)

    def ups_hi(s):
        # degenerate {(1-d) s} where output cannot cover the consumption floor
        return np.maximum(fbar(s) - c_min, ups_lo(s))

    def locator(s, delta):
        s = np.asarray(s, float)
        c = fbar(s) - s
        if np.any(c <= c_min):
            raise DomainError("consumption at or below the floor on the diagonal")
        return u(c, 1) * (delta * (prod.df(s) + 1 - d) - 1)

    kinked = p.production == "kinked"
    params = p.to_dict()
    params["s_max"] = s_max
    return ModelFunctions(
        name="ncg",
        pi=pi,
        upsilon_lo=ups_lo,
        upsilon_hi=ups_hi,
        space=space,
        params=params,
        pi1=pi1,
        pi2=pi2,
        pi11=None if kinked else pi11,
        pi12=pi12,
        pi22=pi22,
        pi1_plus=pi1_plus if kinked else None,
        pi1_minus=pi1_minus if kinked else None,
        kinks=prod.kinks,
        closed_form_locator=locator,
        builder=make_ncg,
    )


def ncg_locator(p, s, delta):
    """Closed-form locator u'(fbar(s) - s) * (delta * fbar'(s) - 1)."""
    return make_ncg(p).closed_form_locator(s, delta)


def inflection(p):
    if not isinstance(p, NcgParams):
        p = NcgParams.from_dict(p)
    if p.production != "cubic":
        raise ConfigError("inflection point only defined for cubic production", "production")
    return p.b / (2 * p.a)

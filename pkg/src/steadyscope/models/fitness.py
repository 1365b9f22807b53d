"""Rational (un)fitness: exercise builds fitness, and fitness makes exercise pleasant.

State s is fitness, exercise is x = s' - (1-d) s, and the payoff is
pi(s, s') = s**alpha + b * s**beta * x - C(x) with
C(x) = (a/2) x**2 + c (1/(1-x) + x).
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..core import ModelFunctions, StateSpace
from ..errors import ConfigError, DomainError

X_MARGIN = 1e-6
_X_SLACK = 1e-12


@dataclass(frozen=True)
class FitnessParams:
    alpha: float = 0.5
    beta: float = 6.0
    b: float = 1.0
    a: float = 1.0
    c: float = 0.6
    d: float = 0.98
    k: float = 1.0

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)", "alpha")
        if not self.beta > 0:
            raise ConfigError("beta must be positive", "beta")
        if not self.b >= 0:
            raise ConfigError("b must be non-negative", "b")
        if not self.a > 0:
            raise ConfigError("a must be positive", "a")
        if not self.c > 0:
            raise ConfigError("c must be positive", "c")
        if not 0 < self.d < 1:
            raise ConfigError("d must lie in (0, 1)", "d")
        if not self.k >= 1:
            raise ConfigError("k must be at least 1", "k")

    @classmethod
    def from_dict(cls, params):
        try:
            return cls(**dict(params))
        except TypeError as exc:
            raise ConfigError(f"bad fitness parameters: {exc}") from exc


def fitness_admissible(p):
    """Sufficient parameter restriction for the standing assumptions."""
    if not isinstance(p, FitnessParams):
        p = FitnessParams.from_dict(p)
    return bool(p.b * (1 - p.d) <= p.alpha * (p.d / p.k) ** (1 + p.beta - p.alpha) and 1 + p.beta - p.alpha >= 0)


def make_fitness(p) -> ModelFunctions:
    if not isinstance(p, FitnessParams):
        p = FitnessParams.from_dict(p)
    al, be, b, a, c, d = p.alpha, p.beta, p.b, p.a, p.c, p.d
    space = StateSpace(0.0, p.k / d)

    def C(x):
        return 0.5 * a * x**2 + c * (1 / (1 - x) + x)

    def C1(x):
        return a * x + c * (1 / (1 - x) ** 2 + 1)

    def C2(x):
        return a + 2 * c / (1 - x) ** 3

    def exercise(s, s2):
        x = np.asarray(s2, float) - (1 - d) * np.asarray(s, float)
        if np.any(x < -_X_SLACK) or np.any(x > 1 - X_MARGIN + _X_SLACK):
            bad = x[(x < -_X_SLACK) | (x > 1 - X_MARGIN + _X_SLACK)] if x.ndim else x
            raise DomainError(f"exercise outside [0, 1 - x_margin]: {np.ravel(bad)[:3]}")
        return x

    def pw(s, e):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.asarray(s, float) ** e

    def pi(s, s2):
        x = exercise(s, s2)
        return pw(s, al) + b * pw(s, be) * x - C(x)

    def pi1(s, s2):
        x = exercise(s, s2)
        return al * pw(s, al - 1) + b * be * pw(s, be - 1) * x - (1 - d) * b * pw(s, be) + (1 - d) * C1(x)

    def pi2(s, s2):
        x = exercise(s, s2)
        return b * pw(s, be) - C1(x)

    def pi11(s, s2):
        x = exercise(s, s2)
        return (
            al * (al - 1) * pw(s, al - 2)
            + b * be * (be - 1) * pw(s, be - 2) * x
            - 2 * (1 - d) * b * be * pw(s, be - 1)
            - (1 - d) ** 2 * C2(x)
        )

    def pi12(s, s2):
        x = exercise(s, s2)
        return b * be * pw(s, be - 1) + (1 - d) * C2(x)

    def pi22(s, s2):
        x = exercise(s, s2)
        return -C2(x)

    def ups_lo(s):
        return (1 - d) * np.asarray(s, float)

    def ups_hi(s):
        return (1 - d) * np.asarray(s, float) + 1 - X_MARGIN

    def locator(s, delta):
        s = np.asarray(s, float)
        if np.any(s <= 0) or np.any(d * s >= 1):
            raise DomainError("locator needs 0 < s < 1/d")
        H = (1 - delta * (1 - d) + delta * be * d) * b * s**be + delta * al * s ** (al - 1)
        return H - C1(d * s) * (1 - delta * (1 - d))

    return ModelFunctions(
        name="fitness",
        pi=pi,
        upsilon_lo=ups_lo,
        upsilon_hi=ups_hi,
        space=space,
        params=asdict(p),
        pi1=pi1,
        pi2=pi2,
        pi11=pi11,
        pi12=pi12,
        pi22=pi22,
        closed_form_locator=locator,
        builder=make_fitness,
    )


def fitness_locator(p, s, delta):
    """H(s) - C'(d s)(1 - delta (1 - d))."""
    return make_fitness(p).closed_form_locator(s, delta)

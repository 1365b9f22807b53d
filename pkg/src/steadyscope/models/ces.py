"""Closed learning-by-doing economy with CES preferences over the two goods.

pi(s, s') = g/(g-1) * (G(1-s')**q + (H(s) F(s'))**q) ** ((g-1)/g / q),
q = (sigma-1)/sigma, with H(s) = s**theta, F(s') = s'**alpha and sector-0
output G(x) = x**beta.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..core import ModelFunctions, StateSpace
from ..errors import ConfigError


@dataclass(frozen=True)
class CesParams:
    gamma: float = 2.0
    sigma: float = 5.0
    theta: float = 0.5
    alpha: float = 0.3
    beta: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0 or self.gamma == 1:
            raise ConfigError("gamma must be positive and different from 1", "gamma")
        if not self.sigma > 0 or self.sigma == 1:
            raise ConfigError("sigma must be positive and different from 1", "sigma")
        if not 0 < self.theta <= 1:
            raise ConfigError("theta must lie in (0, 1]", "theta")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)", "alpha")
        if not 0 < self.beta <= 1:
            raise ConfigError("beta must lie in (0, 1]", "beta")

    @classmethod
    def from_dict(cls, params):
        try:
            return cls(**dict(params))
        except TypeError as exc:
            raise ConfigError(f"bad ces parameters: {exc}") from exc


def ces_admissible(p):
    if not isinstance(p, CesParams):
        p = CesParams.from_dict(p)
    return bool(1 < p.gamma < p.sigma)


def make_ces(p) -> ModelFunctions:
    if not isinstance(p, CesParams):
        p = CesParams.from_dict(p)
    ga, sg, th, al, be = p.gamma, p.sigma, p.theta, p.alpha, p.beta
    q = (sg - 1) / sg
    kappa = ((ga - 1) / ga) / q
    lead = ga / (ga - 1)

    def pw(x, e):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return np.maximum(np.asarray(x, float), 0.0) ** e

    def parts(s, s2):
        s = np.asarray(s, float)
        s2 = np.asarray(s2, float)
        Y = pw(s, th) * pw(s2, al)
        G = pw(1 - s2, be)
        return s, s2, Y, G, pw(G, q) + pw(Y, q)

    def pi(s, s2):
        *_, Z = parts(s, s2)
        return lead * pw(Z, kappa)

    def pi1(s, s2):
        s, s2, Y, G, Z = parts(s, s2)
        return pw(Z, kappa - 1) * pw(Y, -1 / sg) * th * pw(s, th - 1) * pw(s2, al)

    def pi2(s, s2):
        s, s2, Y, G, Z = parts(s, s2)
        dY = pw(Y, -1 / sg) * pw(s, th) * al * pw(s2, al - 1)
        dG = pw(G, -1 / sg) * be * pw(1 - s2, be - 1)
        return pw(Z, kappa - 1) * (dY - dG)

    return ModelFunctions(
        name="ces",
        pi=pi,
        upsilon_lo=lambda s: np.zeros(np.shape(s)),
        upsilon_hi=lambda s: np.ones(np.shape(s)),
        space=StateSpace(0.0, 1.0),
        params=asdict(p),
        pi1=pi1,
        pi2=pi2,
        builder=make_ces,
    )

"""Built-in models and the name registry used by configuration files."""
from ..errors import ConfigError
from .ces import CesParams, ces_admissible, make_ces
from .fitness import FitnessParams, fitness_admissible, fitness_locator, make_fitness
from .intertemporal import (
    IntertemporalParams,
    ie_locator,
    ie_threshold,
    make_intertemporal,
    solve_inner,
)
from .ncg import NcgParams, default_s_max, make_ncg, ncg_locator

REGISTRY = {
    "ncg": make_ncg,
    "fitness": make_fitness,
    "intertemporal": make_intertemporal,
    "ces": make_ces,
}


def build_model(name, params=None):
    """Instantiate a registered model from a flat parameter map."""
    try:
        factory = REGISTRY[name]
    except KeyError:
        raise ConfigError(f"unknown model {name!r}; choose from {sorted(REGISTRY)}", "model") from None
    return factory(dict(params or {}))


__all__ = [
    "REGISTRY",
    "build_model",
    "CesParams",
    "ces_admissible",
    "make_ces",
    "FitnessParams",
    "fitness_admissible",
    "fitness_locator",
    "make_fitness",
    "IntertemporalParams",
    "ie_locator",
    "ie_threshold",
    "make_intertemporal",
    "solve_inner",
    "NcgParams",
    "default_s_max",
    "make_ncg",
    "ncg_locator",
]

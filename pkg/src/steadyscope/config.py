"""JSON run configuration: parsing, defaults, validation and the bundled fixtures."""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .core import StateSpace
from .errors import ConfigError
from .models import REGISTRY, build_model

CONFIG_VERSION = 1
EXIT_MALFORMED = 64
EXIT_INVALID = 65

# alternative names accepted for the bundled fitness cases
ALIASES = {
    "fitness-b1": "fit-a",
    "fitness-b9": "fit-b",
    "fitness-b15": "fit-c",
}

_GRID_KEYS = {"n", "lo", "hi"}
_TOL_KEYS = {"tol_V", "tol_root", "tol_slope", "eps_tie", "max_iter"}
_LOC_KEYS = {"scan_n", "max_roots"}
_OPT_KEYS = {"s0", "selection", "param_name", "delta_step", "T_max"}
_TOP_KEYS = {"model", "params", "delta", "grid", "tolerances", "locator", "options", "version", "description"}


class MalformedConfig(ConfigError):
    """The file is not valid JSON (or cannot be read)."""

    def __init__(self, msg, line=None, column=None):
        super().__init__(msg)
        self.line = line
        self.column = column


@dataclass
class AnalysisConfig:
    model: str
    params: dict = field(default_factory=dict)
    delta: float = 0.9
    grid_n: int = 2001
    grid_lo: float | None = None
    grid_hi: float | None = None
    tol_V: float = 1e-10
    tol_root: float | None = None
    tol_slope: float | None = None
    eps_tie: float | None = None
    max_iter: int = 100000
    scan_n: int = 4001
    max_roots: int = 32
    s0: list | None = None
    selection: str = "both"
    param_name: str | None = None
    delta_step: float = 0.01
    T_max: int = 10000
    version: int = CONFIG_VERSION
    description: str = ""
    source: str | None = None

    def validate(self):
        if self.model not in REGISTRY:
            raise ConfigError(f"model {self.model!r} is not registered; choose from {sorted(REGISTRY)}", "model")
        if not isinstance(self.params, dict):
            raise ConfigError("params must be an object", "params")
        _real(self.delta, "delta")
        if not 0 <= self.delta < 1:
            raise ConfigError(f"delta must lie in [0, 1), got {self.delta}", "delta")
        if not isinstance(self.grid_n, int) or isinstance(self.grid_n, bool) or self.grid_n < 101:
            raise ConfigError(f"grid.n must be an integer >= 101, got {self.grid_n!r}", "grid.n")
        for name in ("grid_lo", "grid_hi", "tol_root", "tol_slope", "eps_tie"):
            v = getattr(self, name)
            if v is not None:
                _real(v, name.replace("_", ".", 1) if name.startswith("grid") else f"tolerances.{name}")
        if self.grid_lo is not None and self.grid_hi is not None and not self.grid_lo < self.grid_hi:
            raise ConfigError("grid.lo must be below grid.hi", "grid.lo")
        _positive(self.tol_V, "tolerances.tol_V")
        for name in ("tol_root", "tol_slope"):
            if getattr(self, name) is not None:
                _positive(getattr(self, name), f"tolerances.{name}")
        if self.eps_tie is not None and self.eps_tie < 0:
            raise ConfigError("eps_tie must be non-negative", "tolerances.eps_tie")
        _count(self.max_iter, 1, "tolerances.max_iter")
        _count(self.scan_n, 101, "locator.scan_n")
        _count(self.max_roots, 1, "locator.max_roots")
        _count(self.T_max, 1, "options.T_max")
        if self.selection not in ("lower", "upper", "both"):
            raise ConfigError("selection must be 'lower', 'upper' or 'both'", "options.selection")
        _real(self.delta_step, "options.delta_step")
        if not 0 <= self.delta + self.delta_step < 1:
            raise ConfigError("delta + delta_step must stay in [0, 1)", "options.delta_step")
        if self.s0 is not None:
            if not isinstance(self.s0, list) or not self.s0:
                raise ConfigError("s0 must be a non-empty list of reals", "options.s0")
            for v in self.s0:
                _real(v, "options.s0")
        if self.param_name is not None and not isinstance(self.param_name, str):
            raise ConfigError("param_name must be a string", "options.param_name")
        if not isinstance(self.version, int) or self.version > CONFIG_VERSION:
            raise ConfigError(f"unsupported config version {self.version!r}", "version")
        return self

    def build_model(self):
        """Instantiate the model; an explicit grid.lo/grid.hi narrows its state space."""
        model = build_model(self.model, self.params)
        if self.grid_lo is None and self.grid_hi is None:
            return model
        sp = model.space
        lo = sp.lo if self.grid_lo is None else float(self.grid_lo)
        hi = sp.hi if self.grid_hi is None else float(self.grid_hi)
        if lo < sp.lo or hi > sp.hi:
            raise ConfigError(f"grid [{lo}, {hi}] leaves the state space [{sp.lo}, {sp.hi}]", "grid.lo" if lo < sp.lo else "grid.hi")
        if not lo < hi:
            raise ConfigError("grid.lo must be below grid.hi", "grid.lo")
        return dataclasses.replace(model, space=StateSpace(lo, hi), fd_step=1e-6 * (hi - lo))

    def with_overrides(self, grid_n=None, delta=None):
        out = dataclasses.replace(self)
        if grid_n is not None:
            out.grid_n = grid_n
        if delta is not None:
            out.delta = delta
        return out.validate()

    def to_dict(self):
        """Effective settings, defaults filled in."""
        return {
            "version": self.version,
            "model": self.model,
            "params": self.params,
            "delta": self.delta,
            "grid": {"n": self.grid_n, "lo": self.grid_lo, "hi": self.grid_hi},
            "tolerances": {
                "tol_V": self.tol_V,
                "tol_root": self.tol_root,
                "tol_slope": self.tol_slope,
                "eps_tie": self.eps_tie,
                "max_iter": self.max_iter,
            },
            "locator": {"scan_n": self.scan_n, "max_roots": self.max_roots},
            "options": {
                "s0": self.s0,
                "selection": self.selection,
                "param_name": self.param_name,
                "delta_step": self.delta_step,
                "T_max": self.T_max,
            },
        }


def _real(v, name):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{name} must be a finite real number, got {v!r}", name)


def _positive(v, name):
    _real(v, name)
    if not v > 0:
        raise ConfigError(f"{name} must be positive", name)


def _count(v, least, name):
    if isinstance(v, bool) or not isinstance(v, int) or v < least:
        raise ConfigError(f"{name} must be an integer >= {least}, got {v!r}", name)


def _section(doc, key, allowed):
    sec = doc.get(key, {})
    if sec is None:
        return {}
    if not isinstance(sec, dict):
        raise ConfigError(f"{key} must be an object", key)
    unknown = set(sec) - allowed
    if unknown:
        bad = sorted(unknown)[0]
        raise ConfigError(f"unknown key {key}.{bad}", f"{key}.{bad}")
    return sec


def config_from_dict(doc, source=None):
    """Build and validate an :class:`AnalysisConfig` from a parsed JSON object."""
    if not isinstance(doc, dict):
        raise ConfigError("top level must be a JSON object", "config")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        bad = sorted(unknown)[0]
        raise ConfigError(f"unknown key {bad}", bad)
    if "model" not in doc:
        raise ConfigError("missing required key 'model'", "model")
    if "delta" not in doc:
        raise ConfigError("missing required key 'delta'", "delta")
    grid = _section(doc, "grid", _GRID_KEYS)
    tol = _section(doc, "tolerances", _TOL_KEYS)
    loc = _section(doc, "locator", _LOC_KEYS)
    opt = _section(doc, "options", _OPT_KEYS)
    cfg = AnalysisConfig(model=doc["model"], params=doc.get("params", {}) or {}, delta=doc["delta"], source=source)
    cfg.version = doc.get("version", CONFIG_VERSION)
    cfg.description = doc.get("description", "")
    if "n" in grid:
        cfg.grid_n = grid["n"]
    cfg.grid_lo = grid.get("lo")
    cfg.grid_hi = grid.get("hi")
    for k in _TOL_KEYS:
        if k in tol:
            setattr(cfg, k, tol[k])
    for k in _LOC_KEYS:
        if k in loc:
            setattr(cfg, k, loc[k])
    for k in _OPT_KEYS:
        if k in opt:
            setattr(cfg, k, opt[k])
    if isinstance(cfg.s0, (int, float)) and not isinstance(cfg.s0, bool):
        cfg.s0 = [cfg.s0]
    return cfg.validate()


def parse_config_text(text, source=None):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedConfig(f"malformed JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})",
                              exc.lineno, exc.colno) from None
    return config_from_dict(doc, source)


def fixture_names():
    files = resources.files("steadyscope").joinpath("fixtures")
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".json"))


def fixture_text(name):
    name = ALIASES.get(name, name)
    res = resources.files("steadyscope").joinpath("fixtures", f"{name}.json")
    if not res.is_file():
        raise MalformedConfig(f"no such fixture {name!r}; available: {', '.join(fixture_names())}")
    return res.read_text(encoding="utf-8")


def load_fixture(name):
    return parse_config_text(fixture_text(name), source=f"fixture:{ALIASES.get(name, name)}")


def load_config(path):
    """Load a config file, or a bundled fixture when ``path`` names one."""
    p = Path(path)
    if p.is_file():
        try:
            text = p.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise MalformedConfig(f"cannot read {path}: {exc}") from None
        return parse_config_text(text, source=str(p))
    name = str(path)
    if "/" not in name and not name.endswith(".json"):
        return load_fixture(name)
    raise MalformedConfig(f"config file {path} not found")

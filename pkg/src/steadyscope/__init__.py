"""Steady-state analysis for one-dimensional dynamic optimization.

The locator function L(s, delta) = pi2(s, s) + delta * pi1(s, s) predicts
interior steady states and their stability; value function iteration on a
grid checks every prediction independently.
"""
from .analysis import SteadyStateAnalyzer, SteadyStateReport, analyze
from .config import AnalysisConfig, load_config, load_fixture
from .core import (
    AssumptionReport,
    ModelFunctions,
    StateSpace,
    check_all,
    check_constraint_monotone,
    check_payoff_monotone,
    check_scva_condition,
    check_strict_concavity,
    check_supermodularity,
    fd_partial,
    make_model,
)
from .dp import (
    Grid,
    PolicyCorrespondence,
    ValueFunctionIteration,
    ValueTable,
    basin_from_policy,
    bellman_sweep,
    check_policy_monotone,
    detect_skiba,
    euler_residual,
    find_fixed_points,
    simulate_path,
    solve_vfi,
)
from .errors import (
    ClassificationError,
    ConfigError,
    DomainError,
    NonConvergenceError,
    NumericalError,
    PropertyViolationError,
    SteadyScopeError,
)
from .locator import (
    LocatorFunction,
    basin_from_locator,
    boundary_diagnostics,
    classify_shape,
    eval_locator,
    find_roots,
    locator_profile,
    locator_slope,
)
from .models import build_model
from .statics import (
    dsteady_ddelta,
    dsteady_dparam,
    linearization_check,
    track_branch,
    verify_correspondence_principle,
)

__version__ = "0.1.0"

"""Command-line interface.

    steadyscope analyze|locator|solve|paths|cs --config FILE_OR_FIXTURE --out DIR
                [--grid-n N] [--delta X] [--full-precision]

Exit codes: 0 success, 2 assumption failure (report still written),
3 numerical failure, 64 malformed config, 65 invalid config value.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import dp, locator, statics
from .analysis import analyze
from .config import EXIT_INVALID, EXIT_MALFORMED, MalformedConfig, fixture_names, load_config
from .errors import ClassificationError, ConfigError, DomainError, NumericalError, PropertyViolationError
from .io import write_csv, write_json

log = logging.getLogger("steadyscope")

EXIT_OK = 0
EXIT_ASSUMPTION = 2
EXIT_NUMERIC = 3

LOCATOR_HEADER = ["s", "L", "L1"]
POLICY_HEADER = ["s", "gamma_min", "gamma_max", "V"]
VALUE_HEADER = ["s", "V"]
ROOTS_HEADER = ["root_id", "s", "s_policy", "source", "slope", "class", "policy_stability", "false_positive"]
BASINS_HEADER = ["steady_state", "kind", "lo", "hi", "verified"]
PATHS_HEADER = ["path_id", "t", "s"]
SENS_HEADER = ["root_id", "s", "class", "ds_ddelta", "param", "dL_dxi", "ds_dxi"]
BRANCH_HEADER = ["root_id", "delta", "s", "ds_ddelta", "class"]


# ---------------------------------------------------------------------------
# table builders


def _locator_rows(profile):
    return zip(profile.s, profile.L, profile.L1)


def _policy_rows(policy):
    vals = policy.values if policy.values is not None else np.full(policy.grid.n, np.nan)
    return zip(policy.grid.nodes, policy.lower, policy.upper, vals)


def _candidate_rows(candidates):
    for k, c in enumerate(candidates):
        yield (k, c.s, c.s_policy, c.source, c.slope, c.cls, c.policy_stability, c.false_positive)


def _basin_rows(report):
    for c in report.candidates:
        if c.basin_locator is not None:
            yield (c.s, "locator", c.basin_locator[0], c.basin_locator[1], c.basin_locator_verified)
        if c.basin_policy is not None:
            yield (c.s_policy, "policy", c.basin_policy[0], c.basin_policy[1], True)
    for b in report.boundary_steady_states:
        yield (b["s"], "policy", b["basin_policy"][0], b["basin_policy"][1], True)


def _path_rows(paths):
    for pid, p in enumerate(paths):
        for t, s in enumerate(p["states"]):
            yield (pid, t, s)


def _selections(cfg):
    return ("lower", "upper") if cfg.selection == "both" else (cfg.selection,)


# ---------------------------------------------------------------------------
# commands


def cmd_analyze(cfg, out, full_precision=False):
    model = cfg.build_model()
    rep = analyze(
        model,
        cfg.delta,
        n=cfg.grid_n,
        tol_V=cfg.tol_V,
        max_iter=cfg.max_iter,
        eps_tie=cfg.eps_tie,
        scan_n=cfg.scan_n,
        max_roots=cfg.max_roots,
        tol_root=cfg.tol_root,
        tol_slope=cfg.tol_slope,
        s0=cfg.s0,
        T_max=cfg.T_max,
    )
    code = EXIT_ASSUMPTION if rep.assumption_hard_fail else EXIT_OK
    doc = rep.to_dict()
    doc["config"] = cfg.to_dict()
    doc["exit_code"] = code
    write_json(out / "report.json", doc)
    fp = full_precision
    write_csv(out / "locator.csv", LOCATOR_HEADER, _locator_rows(rep.profile), fp)
    write_csv(out / "policy.csv", POLICY_HEADER, _policy_rows(rep.policy), fp)
    write_csv(out / "roots.csv", ROOTS_HEADER, _candidate_rows(rep.candidates), fp)
    write_csv(out / "basins.csv", BASINS_HEADER, _basin_rows(rep), fp)
    if rep.paths:
        write_csv(out / "paths.csv", PATHS_HEADER, _path_rows(rep.paths), fp)
    n_int = len(rep.interior_steady_states)
    print(f"{model.name}: {n_int} interior steady state(s), {len(rep.stable_interior)} stable, "
          f"{len(rep.skiba_points)} Skiba point(s), {len(rep.false_positives)} false-positive root(s)")
    for v in rep.verdicts:
        print(f"verdict: {v}")
    if code == EXIT_ASSUMPTION:
        print("assumption failure: payoff not increasing in the state somewhere", file=sys.stderr)
    return code, rep


def cmd_locator(cfg, out, full_precision=False):
    model = cfg.build_model()
    prof = locator.locator_profile(model, cfg.delta, cfg.scan_n)
    roots = locator.find_roots(model, cfg.delta, cfg.scan_n, cfg.max_roots, cfg.tol_root, cfg.tol_slope, profile=prof)
    shape = locator.classify_shape(prof, roots, model)
    write_csv(out / "locator.csv", LOCATOR_HEADER, _locator_rows(prof), full_precision)
    rows = [(k, r.s, None, "locator", r.slope, r.cls, None, None) for k, r in enumerate(roots)]
    write_csv(out / "roots.csv", ROOTS_HEADER, rows, full_precision)
    print(f"{len(roots)} root(s); shape {shape.shape}")
    return EXIT_OK, (prof, roots, shape)


def _solve(cfg, model):
    grid = dp.Grid.for_model(model, cfg.grid_n)
    return dp.solve_vfi(model, cfg.delta, grid, cfg.tol_V, cfg.max_iter, cfg.eps_tie)


def cmd_solve(cfg, out, full_precision=False):
    model = cfg.build_model()
    table, policy = _solve(cfg, model)
    write_csv(out / "value.csv", VALUE_HEADER, zip(table.grid.nodes, table.values), full_precision)
    write_csv(out / "policy.csv", POLICY_HEADER, _policy_rows(policy), full_precision)
    print(f"converged after {table.iterations} iteration(s), sup-norm gap {table.sup_norm_gap:.3g}")
    return EXIT_OK, (table, policy)


def cmd_paths(cfg, out, full_precision=False):
    model = cfg.build_model()
    _, policy = _solve(cfg, model)
    skiba = dp.detect_skiba(policy)
    fps = dp.find_fixed_points(policy, skiba=skiba)
    if cfg.s0 is not None:
        starts = [float(x) for x in cfg.s0]
    elif skiba:
        starts = [k.location for k in skiba]
    else:
        lo_i, hi_i = model.space.interior
        starts = list(np.linspace(lo_i, hi_i, 9))
    paths = []
    for x in starts:
        for sel in _selections(cfg):
            p = dp.simulate_path(policy, x, sel, T_max=cfg.T_max, fixed_points=fps)
            paths.append({"s0": x, "selection": sel, "limit": p.limit, "converged": p.converged,
                          "states": p.states.tolist()})
    write_csv(out / "paths.csv", PATHS_HEADER, _path_rows(paths), full_precision)
    for pid, p in enumerate(paths):
        lim = "not converged" if p["limit"] is None else f"{p['limit']:.6g}"
        print(f"path {pid}: s0={p['s0']:.6g} ({p['selection']}) -> {lim}")
    return EXIT_OK, paths


def cmd_cs(cfg, out, full_precision=False):
    model = cfg.build_model()
    roots = locator.find_roots(model, cfg.delta, cfg.scan_n, cfg.max_roots, cfg.tol_root, cfg.tol_slope)
    names = [cfg.param_name] if cfg.param_name else [
        k for k, v in model.params.items() if isinstance(v, (int, float)) and not isinstance(v, bool) and k != "s_max"
    ]
    rows, branch = [], []
    deltas = np.linspace(cfg.delta, cfg.delta + cfg.delta_step, 11)
    for k, r in enumerate(roots):
        try:
            sd = statics.dsteady_ddelta(model, r, cfg.delta)
        except ClassificationError:
            sd = float("nan")
        for name in names:
            try:
                row = statics.dsteady_dparam(model, r, cfg.delta, name)
                rows.append((k, r.s, r.cls, sd, name, row.dL_dxi, row.ds_dxi))
            except (ClassificationError, DomainError, ConfigError) as exc:
                log.warning("sensitivity to %s at root %d skipped: %s", name, k, exc)
                rows.append((k, r.s, r.cls, sd, name, None, None))
        if r.regular:
            for bp in statics.track_branch(model, r, deltas):
                branch.append((k, bp.delta, bp.s, bp.dsdelta, bp.cls))
    write_csv(out / "sensitivity.csv", SENS_HEADER, rows, full_precision)
    write_csv(out / "branch.csv", BRANCH_HEADER, branch, full_precision)
    grid = dp.Grid.for_model(model, cfg.grid_n)
    corr = statics.verify_correspondence_principle(model, cfg.delta, cfg.delta_step, grid)
    lin = [statics.linearization_check(model, r, cfg.delta).to_dict() for r in roots if r.regular]
    write_json(out / "statics.json", {"correspondence": corr.to_dict(), "linearization": lin, "config": cfg.to_dict()})
    print(f"{len(roots)} root(s); correspondence principle: {corr.status}")
    return EXIT_OK, (rows, branch, corr)


COMMANDS = {
    "analyze": cmd_analyze,
    "locator": cmd_locator,
    "solve": cmd_solve,
    "paths": cmd_paths,
    "cs": cmd_cs,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="steadyscope",
        description="Locate and classify steady states of one-dimensional dynamic optimization problems.",
        epilog="Bundled fixtures: " + ", ".join(fixture_names()),
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON config file or bundled fixture name")
    parser.add_argument("--out", required=True, help="output directory (created if missing)")
    parser.add_argument("--grid-n", type=int, default=None, help="override grid.n")
    parser.add_argument("--delta", type=float, default=None, help="override the discount factor")
    parser.add_argument("--full-precision", action="store_true", help="write floats with repr precision")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config).with_overrides(args.grid_n, args.delta)
    except MalformedConfig as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except ConfigError as exc:
        print(f"error: invalid config field {exc.field!r}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        code, _ = COMMANDS[args.command](cfg, out, args.full_precision)
    except ConfigError as exc:
        print(f"error: invalid config field {exc.field!r}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalError, DomainError, PropertyViolationError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return code


if __name__ == "__main__":
    sys.exit(main())

"""Batch command-line interface.

Subcommands: check-params, bound, optimize-bound, simulate, verify-gn,
verify-embed, verify-equivalence, verify-odi, region, sweep.  Exit codes:
0 success (or admissible), 1 negative domain result (inadmissible),
2 usage/config error, 3 runtime failure.

Every emitted JSON carries the resolved config hash; wall-clock timestamps
live in a separate `metadata` field so payloads stay byte-reproducible for
a fixed config and seed.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import datetime
import itertools
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import exponents, odi, pde, verify
from .errors import ChemoboundError, ConfigError

OUTPUT_ROOT_ENV = "CHEMOBOUND_OUTPUT_ROOT"

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2
EXIT_RUNTIME = 3


def _load_config(args) -> tuple[dict, dict]:
    text = Path(args.config).read_text() if args.config else ""
    cfg, sweep_axes = cfgmod.parse_config_text(text)
    cfgmod.apply_overrides(cfg, args.set or [])
    if getattr(args, "dim", None) is not None:
        cfg["model.dim"] = args.dim
    for flag, key in (("p", "indices.p"), ("q", "indices.q"),
                      ("s1", "indices.s1"), ("s2", "indices.s2"),
                      ("E0", "bound.E0"), ("corollary", "bound.corollary"),
                      ("seed", "seed")):
        value = getattr(args, flag, None)
        if value is not None:
            cfg[key] = value
    if getattr(args, "output", None):
        cfg["output.dir"] = args.output
    return cfg, sweep_axes


def _output_dir(cfg: dict) -> Path | None:
    target = cfg["output.dir"]
    if not target:
        root = os.environ.get(OUTPUT_ROOT_ENV)
        if not root:
            return None
        target = root
    path = Path(target)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _emit(payload: dict, cfg: dict, out_dir: Path | None, name: str) -> None:
    payload = dict(payload)
    payload["config_hash"] = cfgmod.config_hash(cfg)
    text = json.dumps(payload, sort_keys=True, indent=2)
    print(text)
    if out_dir is not None:
        payload["metadata"] = {
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat()}
        (out_dir / name).write_text(
            json.dumps(payload, sort_keys=True, indent=2) + "\n")


# --- shared pipeline pieces -------------------------------------------------

def resolve_indices(cfg: dict) -> exponents.EnergyIndices:
    n = cfg["model.dim"]
    corollary = cfg["bound.corollary"]
    if corollary == 1:
        p = cfgmod.require(cfg, "indices.p")
        q, s1, s2 = exponents.corollary1_parameters(p, n)
        return exponents.EnergyIndices(float(p), float(q), float(s1), float(s2))
    if corollary == 2:
        p, q, s1, s2 = exponents.corollary2_parameters(n)
        return exponents.EnergyIndices(float(p), float(q), float(s1), float(s2))
    if corollary != 0:
        raise ConfigError(f"bound.corollary must be 0, 1 or 2, got {corollary}")
    return exponents.EnergyIndices(
        cfgmod.require(cfg, "indices.p"), cfgmod.require(cfg, "indices.q"),
        cfgmod.require(cfg, "indices.s1"), cfgmod.require(cfg, "indices.s2"))


def resolve_gn_constant(cfg: dict, indices: exponents.EnergyIndices,
                        grid: pde.RadialGrid) -> tuple[float, dict]:
    """Configured constant, or the per-eta estimated maximum times the
    safety factor."""
    configured = cfg["bound.C_GN"]
    if not math.isnan(configured):
        return configured, {"C_GN_source": "configured"}
    sampler = cfgmod.build_sampler(cfg)
    safety = cfg["bound.gn_safety"]
    per_eta = {float(e): verify.estimate_gn_constant(
        grid, 2.0 * float(e), 2.0, 2.0, 2.0, sampler)
        for e in set(indices.eta)}
    value = safety * max(per_eta.values())
    return value, {"C_GN_source": "estimated", "C_GN_safety": safety,
                   "C_GN_per_eta": {str(k): v for k, v in per_eta.items()}}


def simulate_from_config(cfg: dict) -> tuple[pde.Trajectory, pde.RadialGrid,
                                             exponents.ModelParams]:
    params = cfgmod.build_model(cfg)
    grid = cfgmod.build_grid(cfg)
    state0 = pde.init_state(grid, cfgmod.build_profile(cfg))
    indices = resolve_indices(cfg)
    traj = pde.run(grid, params, state0, float(indices.p), float(indices.q),
                   cfgmod.build_solver(cfg))
    return traj, grid, params


def bound_from_config(cfg: dict, E0: float | None = None
                      ) -> tuple[odi.BoundResult, dict]:
    params = cfgmod.build_model(cfg)
    grid = cfgmod.build_grid(cfg)
    indices = resolve_indices(cfg)
    if E0 is None:
        E0 = cfgmod.require(cfg, "bound.E0")
    C_GN, meta = resolve_gn_constant(cfg, indices, grid)
    eps = cfg["indices.epsilon"]
    if math.isnan(eps):
        eps = 0.5 * odi.max_admissible_epsilon(params, indices)
    coeffs = odi.odi_coefficients(params, indices, eps, C_GN)
    result = odi.lower_bound_integral(coeffs, E0, cfgmod.build_quad(cfg))
    from dataclasses import replace
    return replace(result, indices=indices), meta


# --- subcommand handlers ----------------------------------------------------

def cmd_check_params(args) -> int:
    cfg, _ = _load_config(args)
    n = cfg["model.dim"]
    report = exponents.check_condition_C(
        n, cfgmod.require(cfg, "indices.p"), cfgmod.require(cfg, "indices.q"),
        cfgmod.require(cfg, "indices.s1"), cfgmod.require(cfg, "indices.s2"))
    _emit(report.to_json_dict(), cfg, _output_dir(cfg), "admissibility.json")
    return EXIT_OK if report.admissible else EXIT_NEGATIVE


def cmd_bound(args) -> int:
    cfg, _ = _load_config(args)
    result, meta = bound_from_config(cfg)
    _emit({**result.to_json_dict(), **meta}, cfg, _output_dir(cfg), "bound.json")
    return EXIT_OK


def cmd_optimize_bound(args) -> int:
    cfg, _ = _load_config(args)
    params = cfgmod.build_model(cfg)
    grid = cfgmod.build_grid(cfg)
    p = cfgmod.require(cfg, "indices.p")
    q = cfgmod.require(cfg, "indices.q")
    E0 = cfgmod.require(cfg, "bound.E0")
    indices_seed = exponents.EnergyIndices(
        p, q, *(_feasible_center(cfg["model.dim"], p, q)))
    C_GN, meta = resolve_gn_constant(cfg, indices_seed, grid)
    s1, s2, eps, result = odi.optimize_bound(params, p, q, E0, C_GN,
                                             cfgmod.build_opt(cfg))
    payload = {**result.to_json_dict(), **meta,
               "optimized": {"s1": s1, "s2": s2, "epsilon": eps}}
    _emit(payload, cfg, _output_dir(cfg), "optimize_bound.json")
    return EXIT_OK


def _feasible_center(n: int, p: float, q: float) -> tuple[float, float]:
    (a, b), (c, d) = odi._feasible_box(n, p, q)
    if b <= a or d <= c:
        raise ConfigError(f"empty admissible box for n={n}, p={p}, q={q}")
    return (0.5 * (a + b), 0.5 * (c + d))


def cmd_simulate(args) -> int:
    cfg, _ = _load_config(args)
    traj, _, _ = simulate_from_config(cfg)
    out_dir = _output_dir(cfg)
    payload = {**traj.report.to_json_dict(), "steps": traj.steps,
               "clip_count": traj.clip_count,
               "solver": traj.solver.to_json_dict()}
    if out_dir is not None:
        with open(out_dir / "trajectory.csv", "w") as stream:
            traj.to_csv(stream)
    _emit(payload, cfg, out_dir, "report.json")
    return EXIT_OK


def cmd_verify_gn(args) -> int:
    cfg, _ = _load_config(args)
    grid = cfgmod.build_grid(cfg)
    eta = cfgmod.require(cfg, "verify.eta")
    sampler = cfgmod.build_sampler(cfg)
    estimate = verify.estimate_gn_constant(grid, 2.0 * eta, 2.0, 2.0, 2.0,
                                           sampler)
    safety = cfg["bound.gn_safety"]
    _emit({"eta": eta, "estimate": estimate, "safety": safety,
           "inflated": safety * estimate, "seed": sampler.seed},
          cfg, _output_dir(cfg), "gn_estimate.json")
    return EXIT_OK


def cmd_verify_embed(args) -> int:
    cfg, _ = _load_config(args)
    grid = cfgmod.build_grid(cfg)
    eta = cfgmod.require(cfg, "verify.eta")
    sampler = cfgmod.build_sampler(cfg)
    C_GN = cfg["bound.C_GN"]
    if math.isnan(C_GN):
        C_GN = cfg["bound.gn_safety"] * verify.estimate_gn_constant(
            grid, 2.0 * eta, 2.0, 2.0, 2.0, sampler)
    report = verify.check_embed_inequality(grid, eta, cfg["verify.epsilon"],
                                           C_GN, sampler)
    _emit(report.to_json_dict(), cfg, _output_dir(cfg), "embed.json")
    return EXIT_OK if report.violations == 0 else EXIT_NEGATIVE


def cmd_verify_equivalence(args) -> int:
    cfg, _ = _load_config(args)
    report = verify.equivalence_bruteforce(cfg["model.dim"],
                                           cfg["verify.trials"], cfg["seed"])
    _emit(report.to_json_dict(), cfg, _output_dir(cfg), "equivalence.json")
    return EXIT_OK if report.violations == 0 else EXIT_NEGATIVE


def cmd_verify_odi(args) -> int:
    cfg, _ = _load_config(args)
    traj, grid, params = simulate_from_config(cfg)
    indices = resolve_indices(cfg)
    C_GN, meta = resolve_gn_constant(cfg, indices, grid)
    eps = cfg["indices.epsilon"]
    if math.isnan(eps):
        eps = 0.5 * odi.max_admissible_epsilon(params, indices)
    coeffs = odi.odi_coefficients(params, indices, eps, C_GN)
    mon = verify.MonitorConfig(slack=cfg["monitor.slack"],
                               t_max=traj.report.t_detect)
    report = verify.odi_monitor(traj, coeffs, mon)
    _emit({**report.to_json_dict(), **meta}, cfg, _output_dir(cfg),
          "odi_monitor.json")
    return EXIT_OK if report.violations == 0 else EXIT_NEGATIVE


def cmd_region(args) -> int:
    cfg, _ = _load_config(args)
    n = cfg["model.dim"]
    p_min = cfg["region.p_min"]
    p_max = cfg["region.p_max"]
    step = cfg["region.p_step"]
    if math.isnan(p_min):
        p_min = n / 2.0 + step
    if math.isnan(p_max):
        p_max = 3.0 * n
    grid = np.arange(p_min, p_max + 0.5 * step, step)
    rows = exponents.feasible_region_samples(n, grid.tolist())
    out_dir = _output_dir(cfg)
    if out_dir is not None:
        with open(out_dir / "region.csv", "w") as stream:
            exponents.write_region_csv(rows, stream)
    exponents.write_region_csv(rows, sys.stdout)
    return EXIT_OK


def run_sweep(cfg: dict, sweep_axes: dict, out_dir: Path,
              jobs: int | None = None) -> list[dict]:
    """Cartesian sweep: simulate each cell, attach the configured bound,
    and write one subdirectory per cell plus summary.csv.

    Individual cell failures are recorded and do not stop the sweep."""
    if not sweep_axes:
        raise ConfigError("sweep requires at least one sweep.<key> axis")
    keys = sorted(sweep_axes)
    cells = list(itertools.product(*(sweep_axes[k] for k in keys)))
    jobs = jobs or cfg["sweep.jobs"]

    def run_cell(idx_values):
        idx, values = idx_values
        cell_cfg = dict(cfg)
        for key, value in zip(keys, values):
            cell_cfg[key] = value
        cell_cfg["seed"] = cfg["seed"] + idx
        run_id = f"run_{idx:03d}"
        cell_dir = out_dir / run_id
        cell_dir.mkdir(parents=True, exist_ok=True)
        try:
            traj, grid, params = simulate_from_config(cell_cfg)
            state0 = pde.init_state(grid, cfgmod.build_profile(cell_cfg))
            indices = resolve_indices(cell_cfg)
            E0 = pde.energy(state0, float(indices.p), float(indices.q), grid)
            bound, meta = bound_from_config(cell_cfg, E0=E0)
            with open(cell_dir / "trajectory.csv", "w") as stream:
                traj.to_csv(stream)
            report = {**traj.report.to_json_dict(),
                      "solver": traj.solver.to_json_dict(),
                      "config_hash": cfgmod.config_hash(cell_cfg)}
            (cell_dir / "report.json").write_text(
                json.dumps(report, sort_keys=True, indent=2) + "\n")
            (cell_dir / "bound.json").write_text(
                json.dumps({**bound.to_json_dict(), **meta,
                            "config_hash": cfgmod.config_hash(cell_cfg)},
                           sort_keys=True, indent=2) + "\n")
            t_detect = traj.report.t_detect
            margin = (t_detect - bound.t_lower) if t_detect is not None else ""
            return {"run_id": run_id, "blew_up": str(traj.report.blew_up).lower(),
                    "t_detect": "" if t_detect is None else repr(t_detect),
                    "t_lower": repr(bound.t_lower),
                    "margin": "" if margin == "" else repr(margin)}
        except ChemoboundError as exc:
            (cell_dir / "error.txt").write_text(f"{type(exc).__name__}: {exc}\n")
            return {"run_id": run_id, "blew_up": "error", "t_detect": "",
                    "t_lower": "", "margin": ""}

    with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
        rows = list(pool.map(run_cell, enumerate(cells)))

    with open(out_dir / "summary.csv", "w") as stream:
        writer = csv.DictWriter(
            stream, fieldnames=["run_id", "blew_up", "t_detect", "t_lower",
                                "margin"], lineterminator="\n")
        writer.writeheader()
        for row in sorted(rows, key=lambda r: r["run_id"]):
            writer.writerow(row)
    return rows


def cmd_sweep(args) -> int:
    cfg, sweep_axes = _load_config(args)
    out_dir = _output_dir(cfg)
    if out_dir is None:
        raise ConfigError("sweep requires an output directory "
                          f"(output.dir or ${OUTPUT_ROOT_ENV})")
    jobs = args.jobs if getattr(args, "jobs", None) else None
    rows = run_sweep(cfg, sweep_axes, out_dir, jobs)
    print(json.dumps({"cells": len(rows),
                      "failures": sum(r["blew_up"] == "error" for r in rows),
                      "summary": str(out_dir / "summary.csv")}, sort_keys=True))
    return EXIT_OK


# --- argument parsing -------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chemobound",
        description="Blow-up bound toolkit for an attraction-repulsion "
                    "chemotaxis system")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, flags=()):
        sp.add_argument("--config", help="flat key=value config file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config entry")
        sp.add_argument("-o", "--output", help="output directory")
        if "dim" in flags:
            sp.add_argument("-n", "--dim", type=int)
        if "pq" in flags:
            sp.add_argument("-p", type=float)
            sp.add_argument("-q", type=float)
            sp.add_argument("--s1", type=float)
            sp.add_argument("--s2", type=float)
        if "bound" in flags:
            sp.add_argument("--E0", type=float)
            sp.add_argument("--corollary", type=int, choices=(0, 1, 2))
        sp.add_argument("--seed", type=int)

    sp = sub.add_parser("check-params", help="evaluate the admissibility condition")
    common(sp, ("dim", "pq"))
    sp.set_defaults(func=cmd_check_params)

    sp = sub.add_parser("bound", help="blow-up time lower bound")
    common(sp, ("dim", "pq", "bound"))
    sp.set_defaults(func=cmd_bound)

    sp = sub.add_parser("optimize-bound", help="search (s1, s2, epsilon)")
    common(sp, ("dim", "pq", "bound"))
    sp.set_defaults(func=cmd_optimize_bound)

    sp = sub.add_parser("simulate", help="run the radial solver")
    common(sp, ("dim", "pq", "bound"))
    sp.set_defaults(func=cmd_simulate)

    for name, handler in (("verify-gn", cmd_verify_gn),
                          ("verify-embed", cmd_verify_embed),
                          ("verify-equivalence", cmd_verify_equivalence),
                          ("verify-odi", cmd_verify_odi)):
        sp = sub.add_parser(name)
        common(sp, ("dim", "pq", "bound"))
        sp.add_argument("--eta", type=float)
        sp.set_defaults(func=handler, eta_flag=True)

    sp = sub.add_parser("region", help="admissible (p, q) region table")
    common(sp, ("dim",))
    sp.set_defaults(func=cmd_region)

    sp = sub.add_parser("sweep", help="cartesian experiment sweep")
    common(sp, ("dim", "pq", "bound"))
    sp.add_argument("--jobs", type=int)
    sp.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "eta", None) is not None:
        args.set = (args.set or []) + [f"verify.eta={args.eta}"]
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ChemoboundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

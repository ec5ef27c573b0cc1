"""Command-line interface.

Subcommands: simulate, estimate, bounds, sweep, montecarlo, certify.  Exit
codes: 0 success, 1 validation failure, 2 infeasible/resource errors, 64
usage errors.  The environment variable ``SWITCHID_SEED`` overrides the
config seed; an explicit ``--seed`` flag overrides both.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, load_config, preset_config
from .error_bounds import ErrorBoundParams, class_composed_bound
from .errors import (
    CertificationError,
    InfeasibleSpecError,
    InvalidInputError,
    NoDataError,
    ResourceLimitError,
    SwitchIdError,
)
from .estimator import estimates_to_json, fit, partition
from .experiments import build_bound_context, run_monte_carlo, sweep_gramian
from .signals import generate
from .stability import (
    certify_average_class,
    find_stability_horizon,
    fit_decay_envelope,
    minimum_dwell_time,
)
from .system import SwitchedSystem, simulate, write_signal_csv, write_trajectory_csv

USAGE_EXIT = 64


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems with exit code 64."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def _build_parser() -> _Parser:
    parser = _Parser(prog="switchid", description="Switched-system identification workbench")
    parser.add_argument("--version", action="version", version=f"switchid {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        src = p.add_mutually_exclusive_group()
        src.add_argument("--config", help="experiment config file (INI with JSON arrays)")
        src.add_argument("--preset", help="named built-in config, e.g. 'fig1'")
        p.add_argument("--seed", type=int, help="override config seed")
        p.add_argument("--output-dir", help="override config output directory")
        p.add_argument("--out", help="output file path")

    p = sub.add_parser("simulate", help="simulate one trajectory and write its CSV")
    common(p)
    p.add_argument("--horizon", type=int, help="override config horizon")
    p.add_argument("--signal-out", help="also write the switching signal CSV here")

    p = sub.add_parser("estimate", help="simulate, fit per-mode LS estimates, write JSON")
    common(p)
    p.add_argument("--horizon", type=int, help="override config horizon")

    p = sub.add_parser("bounds", help="evaluate Gramian and error bounds at the horizon")
    common(p)
    p.add_argument("--horizon", type=int, help="override config horizon")

    p = sub.add_parser("sweep", help="Gramian spectrum vs class bounds over a T grid")
    common(p)
    p.add_argument("--grid", help="comma list '4,8,12' or range 'start:stop[:step]'")

    p = sub.add_parser("montecarlo", help="replicate, fit at checkpoints, write error stats CSV")
    common(p)
    p.add_argument("--horizon", type=int, help="override config horizon")
    p.add_argument("--replications", type=int, help="override config replication count")

    p = sub.add_parser("certify", help="emit stability/envelope certificates as JSON")
    common(p)
    p.add_argument("--system", help="JSON file with {\"modes\": [...]} (alternative to --config)")
    p.add_argument("--class", dest="klass", choices=["arbitrary", "min_dwell", "average"],
                   help="which class section to emphasise")
    p.add_argument("--m-max", type=int, default=6, help="horizon search cap for product norms")
    return parser


def _load(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
    elif args.preset:
        cfg = preset_config(args.preset)
    else:
        raise InvalidInputError("either --config or --preset is required")
    seed = cfg.seed
    env_seed = os.environ.get("SWITCHID_SEED")
    if env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError as exc:
            raise InvalidInputError(f"SWITCHID_SEED={env_seed!r} is not an integer") from exc
    if args.seed is not None:
        seed = args.seed
    overrides = {"seed": seed}
    if getattr(args, "horizon", None):
        overrides["horizon"] = args.horizon
    if getattr(args, "replications", None):
        overrides["replications"] = args.replications
    if args.output_dir:
        overrides["output_dir"] = Path(args.output_dir)
    if seed != cfg.seed and cfg.noise is not None:
        overrides["noise"] = type(cfg.noise)(family=cfg.noise.family, seed=seed)
    return cfg.with_overrides(**overrides)


def _out_path(args, cfg: ExperimentConfig, default_name: str) -> Path:
    path = Path(args.out) if args.out else cfg.output_dir / default_name
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _cmd_simulate(args) -> int:
    cfg = _load(args)
    signal = generate(cfg.signal_spec, cfg.horizon, cfg.seed, cfg.system.stable_set)
    traj = simulate(cfg.system, signal, cfg.noise, cfg.noise_scale, cfg.x0)
    path = _out_path(args, cfg, "trajectory.csv")
    write_trajectory_csv(traj, path)
    if args.signal_out:
        write_signal_csv(signal, args.signal_out)
    print(path)
    return 0


def _cmd_estimate(args) -> int:
    cfg = _load(args)
    signal = generate(cfg.signal_spec, cfg.horizon, cfg.seed, cfg.system.stable_set)
    traj = simulate(cfg.system, signal, cfg.noise, cfg.noise_scale, cfg.x0)
    estimates = fit(traj)
    records = estimates_to_json(estimates, partition(traj))
    path = _out_path(args, cfg, "estimates.json")
    path.write_text(json.dumps(records, indent=2) + "\n")
    print(path)
    return 0


def _cmd_bounds(args) -> int:
    cfg = _load(args)
    signal = generate(cfg.signal_spec, cfg.horizon, cfg.seed, cfg.system.stable_set)
    ctx = build_bound_context(cfg, signal)
    from .experiments import _class_bounds_at, _signal_counts  # shared internals
    from .linalg import min_singular_value

    sigma_min = min(min_singular_value(a) for a in cfg.system.modes)
    lower, upper, ok = _class_bounds_at(cfg, ctx, cfg.horizon, sigma_min)
    gram = {
        "T": cfg.horizon,
        "kind": cfg.bound_class,
        "lower": lower,
        "upper": upper,
        "assumptions_ok": ok and ctx.class_ok,
        "reasons": list(ctx.reasons),
    }
    cps = np.array([cfg.horizon], dtype=np.int64)
    counts, last = _signal_counts(signal, cfg.system.s, cps)
    per_mode = {}
    for mode in range(1, cfg.system.s + 1):
        if counts[mode][0] < 1:
            per_mode[str(mode)] = None
            continue
        params = ErrorBoundParams(
            n=cfg.system.n, delta=cfg.delta, count=int(counts[mode][0]),
            N_i=int(last[mode][0]), K=cfg.K, variant=cfg.variant,
        )
        per_mode[str(mode)] = class_composed_bound(ctx.switching_class, params).to_json()
    path = _out_path(args, cfg, "bounds.json")
    path.write_text(json.dumps({"gramian_bound": gram, "error_bounds": per_mode}, indent=2) + "\n")
    print(path)
    return 0


def _parse_grid(text: str | None, cfg: ExperimentConfig) -> list[int]:
    if not text:
        h = cfg.average_params.h if cfg.average_params else 4
        return list(range(1, 40 * h + 1))
    if ":" in text:
        parts = [int(v) for v in text.split(":")]
        if len(parts) == 2:
            parts.append(1)
        start, stop, step = parts
        return list(range(start, stop + 1, step))
    return [int(v) for v in text.split(",") if v.strip()]


def _cmd_sweep(args) -> int:
    cfg = _load(args)
    table = sweep_gramian(cfg, _parse_grid(args.grid, cfg))
    path = _out_path(args, cfg, "sweep.csv")
    table.to_csv(path)
    print(path)
    return 0


def _cmd_montecarlo(args) -> int:
    cfg = _load(args)
    stats = run_monte_carlo(cfg)
    path = _out_path(args, cfg, "montecarlo.csv")
    stats.to_csv(path)
    print(path)
    return 0


def _cmd_certify(args) -> int:
    if args.system:
        spec_path = Path(args.system)
        if not spec_path.exists():
            raise InvalidInputError(f"system file {spec_path} does not exist")
        system = SwitchedSystem(json.loads(spec_path.read_text())["modes"])
        cfg = None
    else:
        cfg = _load(args)
        system = cfg.system
    envelope = cfg.envelope if cfg is not None else fit_decay_envelope(system)
    horizon = find_stability_horizon(system, m_max=args.m_max)
    doc = {
        "n": system.n,
        "s": system.s,
        "stable_set": sorted(system.stable_set),
        "envelope": envelope.as_dict(),
        "stability_horizon": horizon,
    }
    if len(system.stable_set) == system.s:
        md = minimum_dwell_time(envelope)
        doc["min_dwell"] = {"tau_star": md.tau_star, "a": md.a}
    else:
        doc["min_dwell"] = None
    average: dict = {"C": envelope.C, "case": "i" if envelope.C <= 1.0 + 1e-12 else "ii"}
    if cfg is not None and cfg.average_params is not None:
        average.update(certify_average_class(cfg.average_params).as_dict())
    doc["average"] = average
    if args.out:
        path = Path(args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(doc, indent=2) + "\n")
        print(path)
    else:
        print(json.dumps(doc, indent=2))
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "estimate": _cmd_estimate,
    "bounds": _cmd_bounds,
    "sweep": _cmd_sweep,
    "montecarlo": _cmd_montecarlo,
    "certify": _cmd_certify,
}


def cli_dispatch(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (InfeasibleSpecError, ResourceLimitError, CertificationError) as exc:
        print(f"switchid: {exc}", file=sys.stderr)
        return 2
    except (InvalidInputError, NoDataError, SwitchIdError) as exc:
        print(f"switchid: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))

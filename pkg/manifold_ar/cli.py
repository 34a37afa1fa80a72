"""
Command-line entry point: simulate, estimate, sweep and check-grad.

Exit codes: 0 success, 1 invalid configuration, 2 numerical failure,
3 I/O error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
from colorama import Fore, Style, init
from pydantic import ValidationError

from manifold_ar.arproc import (
    initial_point,
    load_trajectory,
    sample_system_parameter,
    save_trajectory,
    simulate_ar1,
)
from manifold_ar.config import ManifoldKind, OutputFormat, load_app_config
from manifold_ar.core.matcore import check_orthogonal, derive_rng, derive_seed
from manifold_ar.errors import ConfigError, ManifoldARError
from manifold_ar.harness.export import emit
from manifold_ar.harness.gradcheck import DEFAULT_STEP, check_gradients
from manifold_ar.harness.sweep import load_sweep_config, run_sweep
from manifold_ar.models import CGSettings, ProcessSpec
from manifold_ar.sysid.core import estimate
from manifold_ar.utils import configure_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3


def _write(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text + "\n")
        return
    try:
        Path(out).write_text(text + "\n")
    except OSError as e:
        raise OSError(f"Failed to write {out}: {e}") from e


def _load_phi0(path: str) -> np.ndarray:
    """A bare JSON matrix or a document with a `phi_hat` entry."""
    try:
        with open(path) as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Failed to parse {path}: {e}") from e
    if isinstance(data, dict):
        data = data.get("phi_hat")
    if data is None:
        raise ConfigError(f"{path} holds no matrix")
    return check_orthogonal(np.array(data, dtype=np.float64))


def cmd_simulate(args: argparse.Namespace) -> int:
    kind = ManifoldKind(args.manifold)
    k = args.n if kind == ManifoldKind.ORTHOGONAL else args.k
    if k is None:
        raise ConfigError("--k is required for stiefel and grassmann")
    phi = sample_system_parameter(args.n, args.phi_scale, derive_rng(args.seed, 0))
    spec = ProcessSpec(
        manifold=kind,
        phi=phi,
        sigma=args.sigma,
        steps=args.steps,
        initial_point=initial_point(kind, args.n, k),
        seed=derive_seed(args.seed, 1),
    )
    trajectory = simulate_ar1(spec)
    if args.out:
        save_trajectory(trajectory, args.out)
    else:
        _write(trajectory.model_dump_json(), None)
    return EXIT_OK


def cmd_estimate(args: argparse.Namespace) -> int:
    trajectory = load_trajectory(args.trajectory)
    phi0 = _load_phi0(args.phi0) if args.phi0 else None
    settings = CGSettings(tol=args.tol) if args.tol is not None else CGSettings()
    report = estimate(trajectory, phi0=phi0, cg=settings)
    _write(json.dumps(report.to_json_dict(), indent=2), args.out)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    overrides = {
        "manifold": args.manifold,
        "n": args.n,
        "k": args.k,
        "steps": args.steps,
        "sigma": args.sigma,
        "trials": args.trials,
        "master_seed": args.seed,
        "output": args.out,
        "format": args.format,
        "workers": args.workers,
    }
    cfg = load_sweep_config(args.config, overrides, defaults={"workers": args.default_workers})
    if args.tol is not None:
        cfg = cfg.model_copy(update={"cg": cfg.cg.model_copy(update={"tol": args.tol})})
    rows = run_sweep(cfg, progress=not args.quiet)
    emit(rows, cfg.format, cfg.output)
    return EXIT_OK


def cmd_check_grad(args: argparse.Namespace) -> int:
    kinds = (
        [ManifoldKind(args.manifold)]
        if args.manifold
        else [ManifoldKind.STIEFEL, ManifoldKind.GRASSMANN]
    )
    failures = 0
    for kind in kinds:
        results = check_gradients(
            kind,
            n=args.n,
            k=args.k,
            steps=args.steps,
            configs=args.configs,
            h=args.h,
            seed=args.seed,
        )
        failed = [r for r in results if not r.passed]
        failures += len(failed)
        worst = max(r.relative_error for r in results)
        if failed:
            status = f"{Fore.RED}FAIL" if args.colors else "FAIL"
        else:
            status = f"{Fore.GREEN}PASS" if args.colors else "PASS"
        reset = Style.RESET_ALL if args.colors else ""
        print(
            f"{status}{reset} {kind.value}({args.n},{args.k}) N={args.steps}: "
            f"{len(results) - len(failed)}/{len(results)} passed, "
            f"worst relative error {worst:.3e}"
        )
    return EXIT_NUMERICAL if failures else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="manifold-ar",
        description="AR(1) processes on O(n), Stiefel and Grassmann manifolds",
    )
    parser.add_argument("--quiet", action="store_true", help="Only log warnings and errors")
    parser.add_argument("--app-config", help="Path to config.json (default: repository root)")
    subparsers = parser.add_subparsers(dest="command", required=True)
    manifolds = [m.value for m in ManifoldKind]

    simulate = subparsers.add_parser("simulate", help="Simulate a trajectory (JSON)")
    simulate.add_argument("--manifold", required=True, choices=manifolds)
    simulate.add_argument("--n", type=int, required=True)
    simulate.add_argument("--k", type=int, help="Frame width (ignored on orthogonal)")
    simulate.add_argument("--steps", type=int, required=True, help="Number of transitions N")
    simulate.add_argument("--sigma", type=float, required=True, help="Noise scale")
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument(
        "--phi-scale", type=float, default=0.01, help="Scale of dist(Phi, I) (default: 0.01)"
    )
    simulate.add_argument("--out", help="Output path (default: stdout)")
    simulate.set_defaults(func=cmd_simulate)

    est = subparsers.add_parser("estimate", help="Estimate Phi from a trajectory JSON")
    est.add_argument("trajectory", help="Path to a trajectory JSON")
    est.add_argument("--phi0", help="JSON matrix used as the CG start point")
    est.add_argument("--tol", type=float, help="CG step tolerance (default: 1e-8)")
    est.add_argument("--out", help="Output path (default: stdout)")
    est.set_defaults(func=cmd_estimate)

    sweep = subparsers.add_parser("sweep", help="Run a seeded experiment grid")
    sweep.add_argument("--config", required=True, help="Sweep config JSON")
    sweep.add_argument("--manifold", choices=manifolds)
    sweep.add_argument("--n", type=int, nargs="+")
    sweep.add_argument("--k", type=int, nargs="+")
    sweep.add_argument("--steps", type=int, nargs="+")
    sweep.add_argument("--sigma", type=float, nargs="+")
    sweep.add_argument("--trials", type=int)
    sweep.add_argument("--seed", type=int, help="Master seed")
    sweep.add_argument("--tol", type=float, help="CG step tolerance")
    sweep.add_argument("--workers", type=int)
    sweep.add_argument("--format", choices=[f.value for f in OutputFormat])
    sweep.add_argument("--out", help="Output path (default: stdout)")
    sweep.set_defaults(func=cmd_sweep)

    grad = subparsers.add_parser("check-grad", help="Finite-difference gradient audit")
    grad.add_argument(
        "--manifold", choices=[ManifoldKind.STIEFEL.value, ManifoldKind.GRASSMANN.value]
    )
    grad.add_argument("--n", type=int, default=6)
    grad.add_argument("--k", type=int, default=2)
    grad.add_argument("--steps", type=int, default=5)
    grad.add_argument(
        "--configs", type=int, default=20, help="Random configurations per manifold"
    )
    grad.add_argument("--seed", type=int, default=0)
    grad.add_argument(
        "--h", type=float, default=DEFAULT_STEP, help="Central-difference step (default: 1e-5)"
    )
    grad.set_defaults(func=cmd_check_grad)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        app_config = load_app_config(args.app_config)
    except ConfigError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    level = logging.WARNING if args.quiet else app_config.log_level
    configure_logging(app_config.paths.log_dir, level)
    args.colors = app_config.globals.enable_colors and sys.stdout.isatty()
    if args.colors:
        init(autoreset=True)
    args.default_workers = app_config.defaults.workers

    try:
        return args.func(args)
    except (ConfigError, ValidationError) as e:
        logger.error("Invalid configuration: %s", e)
        return EXIT_CONFIG
    except ManifoldARError as e:
        logger.error("Numerical failure: %s", e)
        return EXIT_NUMERICAL
    except OSError as e:
        logger.error("I/O error: %s", e)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

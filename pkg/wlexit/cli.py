"""Command-line entry point: `wlexit <command> [flags]`.

Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.
Experiment commands write raw.csv, summary.csv and manifest.json into --out;
a manifest can be passed back through --config to rerun the same experiment.
"""

import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from pydantic import ValidationError

from helpers.artifacts import (
    BIASED_GRID_FILE,
    FIT_FILE,
    FIT_TABLE_FILE,
    MANIFEST_FILE,
    THETA_STAR_FILE,
    ArtifactWriter,
    load_config_json,
    utc_now,
    write_csv,
    write_json,
    write_manifest,
)
from helpers.grids import parse_grid
from wlexit import __version__
from wlexit.common.entities import RunManifest, StepSchedule
from wlexit.common.errors import ExitNotReached, QuadratureNotConverged
from wlexit.exitlab.graph import run_grid
from wlexit.exitlab.state import ExperimentConfig
from wlexit.graph import run_study
from wlexit.models.landscape2d import Landscape, biased_potential_grid, free_energy_profile, theta_star_quadrature
from wlexit.scalefit.fits import FitRequest, fit_points, load_summary_points
from wlexit.scalefit.report import table_report

logger = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.5
DEFAULT_GAMMA_STAR = 1.0
FIT_KINDS = {"exp-beta": "exp-in-beta", "power-beta": "power-in-beta", "power-logeps": "power-in-logeps"}


class UsageError(ValueError):
    pass


def _add_experiment_flags(parser: argparse.ArgumentParser, grid_flag: str) -> None:
    parser.add_argument("--config", help="JSON experiment config or run manifest; flags override its values")
    parser.add_argument(grid_flag, dest="grid", help="Grid: lo:hi:logN, lo:hi:linN or a comma-separated list")
    parser.add_argument("--alpha", type=float, help=f"Step-size decay exponent (default {DEFAULT_ALPHA})")
    parser.add_argument("--gamma-star", type=float, help=f"Step-size prefactor, 0 for the plain chain (default {DEFAULT_GAMMA_STAR})")
    parser.add_argument("--update", choices=["nonlinear", "linearized"], help="Weight update rule (default nonlinear)")
    parser.add_argument("--replicas", type=int, help="Independent replicas M per grid point")
    parser.add_argument("--seed", type=int, help="Root seed (default 0)")
    parser.add_argument("--out", help="Output directory")
    parser.add_argument("--step-cap", type=int, help="Steps per exit before a replica is flagged as capped (default 1e10)")
    parser.add_argument("--successive", type=int, help="Record k successive exit durations per replica")
    parser.add_argument("--workers", type=int, help="Worker processes, 0 for all CPUs (default 1)")
    parser.add_argument("--no-progress", action="store_true", help="Hide the progress bar")


def _add_geometry_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--R", type=float, help="Half-width of the x1 domain (default 1.1)")
    parser.add_argument("--d", type=int, help="Number of strata (default 22)")
    parser.add_argument("--upsilon", type=float, help="Proposal standard deviation (default 0.1)")


def _add_fit_flags(parser: argparse.ArgumentParser, required: bool) -> None:
    parser.add_argument("--kind", choices=sorted(FIT_KINDS), required=required, help="Scaling law to fit")
    parser.add_argument("--expected", type=float, help="Theoretical slope to compare against")
    parser.add_argument("--min-x", type=float, help="Drop points with beta (or |ln eps|) below this value")
    parser.add_argument("--exit-index", type=int, default=1, help="Successive exit to fit (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wlexit", description="Wang-Landau exit-time experiments and scaling fits")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    toy = commands.add_parser("toy-exit", help="Exit times of the three-state chain over an epsilon grid")
    _add_experiment_flags(toy, "--eps-grid")
    toy.add_argument("--toy-sampler", choices=["adaptive", "direct", "decomposition"], help="Toy sampler (default adaptive)")

    wl2d = commands.add_parser("wl2d-exit", help="Exit times of the 2D double well over a beta grid")
    _add_experiment_flags(wl2d, "--beta-grid")
    _add_geometry_flags(wl2d)

    fit = commands.add_parser("fit", help="Fit a summary CSV to a scaling law")
    fit.add_argument("--in", dest="input", required=True, help="summary.csv (or raw.csv) of an experiment")
    _add_fit_flags(fit, required=True)
    fit.add_argument("--alpha", type=float, default=1.0, help="Schedule exponent; selects the power-logeps transform")
    fit.add_argument("--gamma-star", type=float, help="Schedule prefactor; sets the expected slope")
    fit.add_argument("--out", help="Directory for fit.json and fit.txt (default: print only)")

    theta = commands.add_parser("theta-star", help="Quadrature weights theta* and free-energy profile of the 2D landscape")
    theta.add_argument("--beta", type=float, required=True, help="Inverse temperature")
    _add_geometry_flags(theta)
    theta.add_argument("--x2-window", default="-3,3.5", help="x2 truncation window lo,hi (default -3,3.5)")
    theta.add_argument("--resolution", type=int, default=16, help="Gauss-Legendre panels per unit length (default 16)")
    theta.add_argument("--rtol", type=float, default=1e-6, help="Tolerance between resolution and twice it")
    theta.add_argument("--grid-out", action="store_true", help="Also write the biased potential on a tensor grid")
    theta.add_argument("--grid-points", type=int, default=111, help="Points per axis of the biased potential grid")
    theta.add_argument("--out", required=True, help="Output directory")

    study = commands.add_parser("study", help="Run an experiment grid and fit its summaries in one workflow")
    study.add_argument("--model", choices=["toy", "landscape2d"], help="Model (required without --config)")
    _add_experiment_flags(study, "--grid")
    _add_geometry_flags(study)
    study.add_argument("--toy-sampler", choices=["adaptive", "direct", "decomposition"])
    _add_fit_flags(study, required=True)
    return parser


def _set(data: Dict[str, Any], key: str, value: Any) -> None:
    if value is not None:
        data[key] = value


def experiment_config(args: argparse.Namespace, model: Optional[str]) -> ExperimentConfig:
    """Merge --config (if any) with the flags; flags win."""
    data: Dict[str, Any] = dict(load_config_json(args.config)) if args.config else {}
    _set(data, "model", model)
    if "model" not in data:
        raise UsageError("--model is required without --config")
    if args.grid is not None:
        try:
            data["grid"] = parse_grid(args.grid)
        except ValueError as e:
            raise UsageError(str(e)) from None
    if "grid" not in data:
        raise UsageError("a grid is required (grid flag or --config)")

    schedule = dict(data.get("schedule", {}))
    _set(schedule, "alpha", args.alpha)
    _set(schedule, "gamma_star", args.gamma_star)
    schedule.setdefault("alpha", DEFAULT_ALPHA)
    schedule.setdefault("gamma_star", DEFAULT_GAMMA_STAR)
    data["schedule"] = schedule

    _set(data, "update_rule", args.update)
    _set(data, "replicas", args.replicas)
    if "replicas" not in data:
        raise UsageError("--replicas is required")
    _set(data, "seed", args.seed)
    data.setdefault("seed", 0)
    _set(data, "output_path", args.out)
    if "output_path" not in data:
        raise UsageError("--out is required")
    _set(data, "step_cap", args.step_cap)
    _set(data, "successive", args.successive)
    _set(data, "workers", args.workers)
    _set(data, "toy_sampler", getattr(args, "toy_sampler", None))
    if args.no_progress:
        data["progress"] = False

    geometry = dict(data.get("geometry", {}))
    for key in ("R", "d", "upsilon"):
        _set(geometry, key, getattr(args, key, None))
    data["geometry"] = geometry
    return ExperimentConfig.model_validate(data)


def cmd_toy_exit(args: argparse.Namespace) -> int:
    config = experiment_config(args, "toy")
    with ArtifactWriter(config.output_path):
        run_grid(config)
    return 0


def cmd_wl2d_exit(args: argparse.Namespace) -> int:
    config = experiment_config(args, "landscape2d")
    with ArtifactWriter(config.output_path):
        run_grid(config)
    return 0


def cmd_study(args: argparse.Namespace) -> int:
    config = experiment_config(args, args.model)
    request = FitRequest(kind=FIT_KINDS[args.kind], expected=args.expected, min_x=args.min_x, exit_index=args.exit_index)
    with ArtifactWriter(config.output_path):
        fit = run_study(config, request)
    print(fit.model_dump_json(indent=2))
    return 0


def cmd_fit(args: argparse.Namespace) -> int:
    points = load_summary_points(args.input, args.exit_index)
    request = FitRequest(kind=FIT_KINDS[args.kind], expected=args.expected, min_x=args.min_x, exit_index=args.exit_index)
    schedule = None
    if args.gamma_star is not None or args.alpha != 1.0:
        schedule = StepSchedule(alpha=args.alpha, gamma_star=args.gamma_star if args.gamma_star is not None else 0.0)
    fit = fit_points(points, request, schedule)
    report = table_report([(args.exit_index, fit)], label="exit_index")
    print(fit.model_dump_json(indent=2))
    print(report.text)
    if args.out:
        with ArtifactWriter(args.out) as out_dir:
            write_json(fit.model_dump(), out_dir / FIT_FILE)
            (out_dir / FIT_TABLE_FILE).write_text(report.text + "\n")
    return 0


def _parse_window(text: str) -> tuple:
    try:
        parts = parse_grid(text)
    except ValueError as e:
        raise UsageError(str(e)) from None
    if len(parts) != 2:
        raise UsageError(f"--x2-window expects lo,hi, got {text!r}")
    return parts[0], parts[1]


def cmd_theta_star(args: argparse.Namespace) -> int:
    geometry = {k: getattr(args, k) for k in ("R", "d", "upsilon") if getattr(args, k) is not None}
    landscape = Landscape(beta=args.beta, **geometry)
    window = _parse_window(args.x2_window)
    started = utc_now()
    with ArtifactWriter(args.out) as out_dir:
        theta = theta_star_quadrature(landscape, window, args.resolution, rtol=args.rtol)
        edges = landscape.edges()
        frame = pd.DataFrame(
            {
                "stratum": np.arange(1, landscape.d + 1),
                "x1_lo": edges[:-1],
                "x1_hi": edges[1:],
                "theta_star": theta.as_array(),
                "free_energy": free_energy_profile(landscape, theta),
            }
        )
        outputs = {"theta_star": write_csv(frame, out_dir / THETA_STAR_FILE)}
        if args.grid_out:
            x1s = np.linspace(-landscape.R, landscape.R, args.grid_points)
            x2s = np.linspace(window[0], window[1], args.grid_points)
            values = biased_potential_grid(landscape, theta, x1s, x2s)
            grid_x1, grid_x2 = np.meshgrid(x1s, x2s, indexing="ij")
            grid = pd.DataFrame({"x1": grid_x1.ravel(), "x2": grid_x2.ravel(), "biased_potential": values.ravel()})
            outputs["biased_potential"] = write_csv(grid, out_dir / BIASED_GRID_FILE)
        outputs["manifest"] = str(out_dir / MANIFEST_FILE)
        config = {
            **landscape.model_dump(),
            "x2_window": list(window),
            "resolution": args.resolution,
            "rtol": args.rtol,
            "grid_out": args.grid_out,
            "grid_points": args.grid_points,
        }
        manifest = RunManifest(
            command="theta-star", version=__version__, config=config,
            started_at=started, finished_at=utc_now(), outputs=outputs,
        )
        write_manifest(manifest, outputs["manifest"])
    return 0


COMMANDS = {
    "toy-exit": cmd_toy_exit,
    "wl2d-exit": cmd_wl2d_exit,
    "fit": cmd_fit,
    "theta-star": cmd_theta_star,
    "study": cmd_study,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ValidationError) as e:
        print(f"wlexit {args.command}: error: {e}", file=sys.stderr)
        return 2
    except (ExitNotReached, QuadratureNotConverged, ValueError, OSError) as e:
        logger.error("%s failed: %s", args.command, e)
        return 1


if __name__ == "__main__":
    sys.exit(main())

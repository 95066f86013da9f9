#!/usr/bin/env python3
"""Rerun the published scaling tables at desk scale and compare the fitted slopes.

--table prefactor sweeps the stratum count d and the proposal width upsilon at
alpha = 0.125, checks the beta^(1/(1 - alpha)) law in every cell and regresses
the prefactor of that law on d, one regression per upsilon.
"""
import argparse
import logging
from pathlib import Path
from typing import Dict, List, Tuple

from helpers.artifacts import write_json
from wlexit.common.entities import ScalingFit, StepSchedule
from wlexit.exitlab.state import ExperimentConfig, Geometry
from wlexit.graph import run_study
from wlexit.scalefit.fits import FitRequest, fit_prefactor_in_d
from wlexit.scalefit.report import REFERENCE_TABLES, table_report

logger = logging.getLogger(__name__)

ALPHA_ONE_BETAS = [4.0, 5.0, 6.0, 7.0, 8.0]
REFERENCE_BETAS = [3.0, 4.0, 5.0, 6.0, 6.5]
POWER_BETAS = [5.0, 7.0, 9.0, 11.0, 13.0, 15.0]
R = 1.1
PREFACTOR_BETAS = [5.0, 10.0, 20.0, 40.0]
PREFACTOR_STRATA = [11, 22, 44, 88]
PREFACTOR_UPSILONS = [0.025, 0.05, 0.1, 0.2]
PREFACTOR_SCHEDULE = StepSchedule(gamma_star=1.0, alpha=0.125)


def bin_width_rows(replicas: int) -> List[Tuple[float, ExperimentConfig, FitRequest]]:
    rows = []
    for dx in REFERENCE_TABLES["bin-width"]:
        geometry = Geometry(R=R, d=round(2 * R / dx))
        config = _config(ALPHA_ONE_BETAS, StepSchedule(gamma_star=8.0, alpha=1.0), replicas, geometry)
        rows.append((dx, config, FitRequest(kind="exp-in-beta")))
    return rows


def gamma_star_rows(replicas: int) -> List[Tuple[float, ExperimentConfig, FitRequest]]:
    rows = []
    for gamma_star in REFERENCE_TABLES["gamma-star"]:
        betas = REFERENCE_BETAS if gamma_star == 0.0 else ALPHA_ONE_BETAS
        config = _config(betas, StepSchedule(gamma_star=gamma_star, alpha=1.0), replicas)
        rows.append((gamma_star, config, FitRequest(kind="exp-in-beta")))
    return rows


def alpha_rows(replicas: int) -> List[Tuple[float, ExperimentConfig, FitRequest]]:
    rows = []
    for alpha in REFERENCE_TABLES["alpha"]:
        config = _config(POWER_BETAS, StepSchedule(gamma_star=1.0, alpha=alpha), replicas)
        rows.append((alpha, config, FitRequest(kind="power-in-beta")))
    return rows


TABLES = {"bin-width": (bin_width_rows, 300), "gamma-star": (gamma_star_rows, 300), "alpha": (alpha_rows, 500)}


def _config(betas, schedule, replicas, geometry=None) -> ExperimentConfig:
    return ExperimentConfig(
        model="landscape2d",
        grid=betas,
        schedule=schedule,
        replicas=replicas,
        seed=0,
        output_path="",
        geometry=geometry or Geometry(),
        workers=0,
    )


def reproduce(table: str, out_dir: Path, replicas: int, seed: int) -> str:
    build_rows, default_replicas = TABLES[table]
    fits: List[Tuple[float, ScalingFit]] = []
    for key, config, request in build_rows(replicas or default_replicas):
        row_dir = out_dir / table / f"{key:g}"
        config = config.model_copy(update={"output_path": str(row_dir), "seed": seed})
        logger.info("%s table, row %g", table, key)
        fits.append((key, run_study(config, request)))
    references: Dict[float, float] = REFERENCE_TABLES[table]
    report = table_report(fits, references, label=table)
    write_json(report.rows, out_dir / f"{table}.json")
    (out_dir / f"{table}.txt").write_text(report.text + "\n")
    return report.text


def reproduce_prefactor(out_dir: Path, replicas: int, seed: int) -> str:
    """Power-in-beta fit per (upsilon, d) cell, then ln C against ln d per upsilon (expected slope 1)."""
    sections = []
    prefactor_fits: List[Tuple[float, ScalingFit]] = []
    for upsilon in PREFACTOR_UPSILONS:
        fits: List[Tuple[int, ScalingFit]] = []
        for d in PREFACTOR_STRATA:
            geometry = Geometry(R=R, d=d, upsilon=upsilon)
            config = _config(PREFACTOR_BETAS, PREFACTOR_SCHEDULE, replicas or 200, geometry)
            row_dir = out_dir / "prefactor" / f"upsilon{upsilon:g}" / f"d{d}"
            config = config.model_copy(update={"output_path": str(row_dir), "seed": seed})
            logger.info("prefactor study, upsilon %g, d %d", upsilon, d)
            fits.append((d, run_study(config, FitRequest(kind="power-in-beta"))))
        report = table_report(fits, label="d")
        write_json(report.rows, out_dir / f"prefactor_upsilon{upsilon:g}.json")
        sections.append(f"upsilon = {upsilon:g}\n{report.text}")
        prefactor_fits.append((upsilon, fit_prefactor_in_d(fits)))
    summary = table_report(prefactor_fits, label="upsilon")
    write_json(summary.rows, out_dir / "prefactor.json")
    text = "\n\n".join(sections + [f"ln C against ln d\n{summary.text}"])
    (out_dir / "prefactor.txt").write_text(text + "\n")
    return text


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--table", choices=sorted([*TABLES, "prefactor"]), required=True)
    parser.add_argument("--out", default="runs/tables")
    parser.add_argument("--replicas", type=int, default=0, help="Replicas per grid point (default: per-table choice)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.table == "prefactor":
        print(reproduce_prefactor(out_dir, args.replicas, args.seed))
    else:
        print(reproduce(args.table, out_dir, args.replicas, args.seed))


if __name__ == '__main__':
    main()

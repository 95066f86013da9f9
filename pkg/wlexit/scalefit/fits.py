"""Least-squares fits of exit-time summaries onto the predicted scaling laws.

    exp-in-beta      ln t  = slope * beta          + intercept
    power-in-beta    ln t  = slope * ln beta       + intercept
    power-in-logeps  ln T  = slope * ln(1/eps)     + intercept   (alpha = 1)
                     ln T  = slope * ln |ln eps|   + intercept   (alpha < 1)
    prefactor-in-d   ln C  = slope * ln d          + intercept   (C = exp of a power-in-beta intercept)

Points are weighted equally. min_x drops points below a cutoff on beta, or
on |ln eps| for the epsilon fits, to keep preasymptotic points out.
"""

import logging
import math
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field
from scipy.stats import linregress

from wlexit.common.entities import ExitSummary, FitKind, ScalingFit, StepSchedule
from wlexit.scalefit.report import MU0

logger = logging.getLogger(__name__)

Points = Sequence[Tuple[float, float]]
MIN_POINTS = 3


class FitRequest(BaseModel):
    kind: FitKind = Field(description="Which scaling law to regress")
    expected: Optional[float] = Field(None, description="Theoretical slope; derived from the schedule when omitted")
    min_x: Optional[float] = Field(None, description="Cutoff on beta, or on |ln eps| for power-in-logeps")
    exit_index: int = Field(1, ge=1, description="Which successive exit to fit")


def _split(points: Points) -> Tuple[np.ndarray, np.ndarray]:
    data = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    return data[:, 0], data[:, 1]


def _ols(
    kind: FitKind,
    x: np.ndarray,
    t: np.ndarray,
    expected: Optional[float],
    cutoffs: dict,
) -> ScalingFit:
    if x.size < MIN_POINTS:
        raise ValueError(f"{kind} fit needs at least {MIN_POINTS} points after cutoffs, got {x.size}")
    if np.any(t <= 0.0) or not np.all(np.isfinite(t)):
        raise ValueError("exit times must be positive and finite")
    if np.ptp(x) == 0.0:
        raise ValueError(f"{kind} fit has degenerate abscissae")
    result = linregress(x, np.log(t))
    fit = ScalingFit(
        kind=kind,
        slope=float(result.slope),
        intercept=float(result.intercept),
        r_squared=float(np.clip(result.rvalue**2, 0.0, 1.0)),
        slope_stderr=float(result.stderr),
        expected=expected,
        n_points=int(x.size),
        cutoffs=cutoffs,
    )
    logger.debug("%s fit: slope %.4g +- %.2g, R^2 %.4f", kind, fit.slope, fit.slope_stderr, fit.r_squared)
    return fit


def fit_exp_in_beta(points: Points, expected: Optional[float] = None, min_x: Optional[float] = None) -> ScalingFit:
    beta, t = _split(points)
    keep = beta >= min_x if min_x is not None else np.ones(beta.size, dtype=bool)
    return _ols("exp-in-beta", beta[keep], t[keep], expected, {"min_x": min_x})


def fit_power_in_beta(
    points: Points,
    alpha: Optional[float] = None,
    expected: Optional[float] = None,
    min_x: Optional[float] = None,
) -> ScalingFit:
    """Slope is the exponent mu_alpha; expected defaults to 1/(1 - alpha) when alpha < 1 is given."""
    beta, t = _split(points)
    if np.any(beta <= 0.0):
        raise ValueError("power-in-beta needs beta > 0")
    if expected is None and alpha is not None and alpha < 1.0:
        expected = 1.0 / (1.0 - alpha)
    keep = beta >= min_x if min_x is not None else np.ones(beta.size, dtype=bool)
    return _ols("power-in-beta", np.log(beta[keep]), t[keep], expected, {"min_x": min_x})


def fit_power_in_logeps(
    points: Points,
    alpha: float = 1.0,
    gamma_star: Optional[float] = None,
    expected: Optional[float] = None,
    min_x: Optional[float] = None,
) -> ScalingFit:
    """Toy-model scaling in eps: power of 1/eps when alpha = 1, power of |ln eps| when alpha < 1."""
    eps, t = _split(points)
    if np.any((eps <= 0.0) | (eps >= 1.0)):
        raise ValueError("power-in-logeps needs eps in (0, 1)")
    log_inv = -np.log(eps)
    keep = log_inv >= min_x if min_x is not None else np.ones(eps.size, dtype=bool)
    if alpha == 1.0:
        if expected is None and gamma_star is not None:
            expected = 1.0 / (1.0 + gamma_star)
        x = log_inv
    else:
        if expected is None:
            expected = 1.0 / (1.0 - alpha)
        x = np.log(log_inv)
    return _ols("power-in-logeps", x[keep], t[keep], expected, {"min_x": min_x})


def fit_prefactor_in_d(fits: Sequence[Tuple[int, ScalingFit]], expected: Optional[float] = 1.0) -> ScalingFit:
    """Regress the prefactors C = exp(intercept) of power-in-beta fits on the stratum count d."""
    if any(fit.kind != "power-in-beta" for _, fit in fits):
        raise ValueError("prefactor-in-d takes power-in-beta fits")
    d = np.array([count for count, _ in fits], dtype=np.float64)
    if np.any(d < 1.0):
        raise ValueError("prefactor-in-d needs d >= 1")
    prefactors = np.array([math.exp(fit.intercept) for _, fit in fits])
    return _ols("prefactor-in-d", np.log(d), prefactors, expected, {})


def fit_summaries(summaries: List[ExitSummary], request: FitRequest, schedule: Optional[StepSchedule] = None) -> ScalingFit:
    """Fit the mean exit times of one exit index with the law named by the request."""
    points = [
        (s.grid_value, s.mean)
        for s in summaries
        if s.exit_index == request.exit_index and s.m_effective > 0 and math.isfinite(s.mean)
    ]
    return fit_points(points, request, schedule)


def fit_points(points: Points, request: FitRequest, schedule: Optional[StepSchedule] = None) -> ScalingFit:
    alpha = schedule.alpha if schedule is not None else None
    if request.kind == "prefactor-in-d":
        raise ValueError("prefactor-in-d fits take scaling fits, not exit-time points; use fit_prefactor_in_d")
    if request.kind == "exp-in-beta":
        expected = request.expected
        if expected is None and schedule is not None and schedule.alpha == 1.0:
            expected = MU0 / (1.0 + schedule.gamma_star)
        return fit_exp_in_beta(points, expected, request.min_x)
    if request.kind == "power-in-beta":
        return fit_power_in_beta(points, alpha, request.expected, request.min_x)
    return fit_power_in_logeps(
        points,
        alpha if alpha is not None else 1.0,
        schedule.gamma_star if schedule is not None else None,
        request.expected,
        request.min_x,
    )


def _raw_means(frame: pd.DataFrame) -> pd.DataFrame:
    keys = ["grid_value", "exit_index"] if "exit_index" in frame.columns else ["grid_value"]
    done = frame.dropna(subset=["exit_time"])
    return done.groupby(keys, sort=False, as_index=False)["exit_time"].mean().rename(columns={"exit_time": "mean"})


def load_summary_points(path: Union[str, Path], exit_index: int = 1) -> List[Tuple[float, float]]:
    """(grid_value, mean) pairs of a summary CSV, rows without exited replicas dropped.

    A raw sample CSV is averaged per grid point over its non-capped replicas.
    """
    frame = pd.read_csv(path)
    if "mean" not in frame.columns and {"grid_value", "exit_time"} <= set(frame.columns):
        frame = _raw_means(frame)
    missing = {"grid_value", "mean"} - set(frame.columns)
    if missing:
        raise ValueError(f"{path} is not a summary file: missing columns {sorted(missing)}")
    if "exit_index" in frame.columns:
        frame = frame[frame["exit_index"] == exit_index]
    frame = frame.dropna(subset=["mean"])
    if "m_effective" in frame.columns:
        frame = frame[frame["m_effective"] > 0]
    return list(zip(frame["grid_value"].astype(float), frame["mean"].astype(float)))

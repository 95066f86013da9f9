import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import chi2_contingency, kstest

from wlexit.common.entities import ExitSummary

DEFAULT_C_GRID = np.arange(0.0, 6.0 + 1e-9, 0.25)


def summarize(grid_value: float, samples: Sequence[float], capped: int = 0, exit_index: int = 1) -> ExitSummary:
    """Moments and quantiles of the replicas that exited; capped ones are only counted."""
    values = np.asarray(samples, dtype=np.float64)
    m = int(values.size)
    if m == 0:
        nan = math.nan
        return ExitSummary(
            grid_value=grid_value, exit_index=exit_index, mean=nan, stderr=nan, median=nan,
            q10=nan, q90=nan, m_effective=0, capped_count=capped,
        )
    stderr = float(values.std(ddof=1) / math.sqrt(m)) if m > 1 else math.nan
    q10, median, q90 = np.quantile(values, [0.1, 0.5, 0.9])
    return ExitSummary(
        grid_value=grid_value,
        exit_index=exit_index,
        mean=float(values.mean()),
        stderr=stderr,
        median=float(median),
        q10=float(q10),
        q90=float(q90),
        m_effective=m,
        capped_count=capped,
    )


def summarize_durations(grid_value: float, exit_times: List[List[Optional[int]]]) -> List[ExitSummary]:
    """One ExitSummary per exit index from per-replica duration lists."""
    k = len(exit_times[0]) if exit_times else 1
    summaries = []
    for j in range(k):
        column = [row[j] for row in exit_times]
        done = [t for t in column if t is not None]
        summaries.append(summarize(grid_value, done, capped=len(column) - len(done), exit_index=j + 1))
    return summaries


def survival_curve(
    samples: Sequence[float], scale: float, c_grid: Optional[Sequence[float]] = None
) -> List[Tuple[float, float]]:
    """Empirical P(scale * T > c) on c_grid (default 0, 0.25, ..., 6)."""
    values = np.asarray(samples, dtype=np.float64)
    if values.size == 0:
        raise ValueError("survival curve of an empty sample")
    if scale <= 0.0:
        raise ValueError(f"scale must be positive, got {scale}")
    grid = DEFAULT_C_GRID if c_grid is None else np.asarray(c_grid, dtype=np.float64)
    scaled = np.sort(scale * values)
    above = scaled.size - np.searchsorted(scaled, grid, side="right")
    return [(float(c), float(n) / scaled.size) for c, n in zip(grid, above)]


def ks_to_exp1(scaled_samples: Sequence[float]) -> float:
    """Kolmogorov-Smirnov distance between the sample and Exp(1)."""
    values = np.asarray(scaled_samples, dtype=np.float64)
    if values.size == 0:
        raise ValueError("KS distance of an empty sample")
    return float(kstest(values, "expon").statistic)


def two_sample_chi2(a: Sequence[float], b: Sequence[float], bins: int = 20) -> Tuple[float, float]:
    """Contingency chi^2 on pooled-quantile bins; returns (statistic, p-value)."""
    first = np.asarray(a, dtype=np.float64)
    second = np.asarray(b, dtype=np.float64)
    if first.size == 0 or second.size == 0:
        raise ValueError("two_sample_chi2 needs two nonempty samples")
    edges = np.unique(np.quantile(np.concatenate([first, second]), np.linspace(0.0, 1.0, bins + 1)))
    if edges.size < 3:
        raise ValueError("samples are too concentrated to form two bins")
    table = np.vstack([np.histogram(first, edges)[0], np.histogram(second, edges)[0]])
    table = table[:, table.sum(axis=0) > 0]
    result = chi2_contingency(table, correction=False)
    return float(result[0]), float(result[1])

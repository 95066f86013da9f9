"""Deterministic step-size sequences gamma_n = gamma_star * n^-alpha and their products Xi_n.

Xi_n = prod_{k<=n} (1 + gamma_k) is the weight a stratum accumulates when the chain
sits in it for n consecutive steps. It overflows quickly for alpha <= 1/2, so
everything here is carried in log domain.
"""

import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import gammaln

from wlexit.common.entities import StepSchedule

_CHUNK = 1 << 20


class XiEnvelope(BaseModel):
    model_config = ConfigDict(frozen=True)

    lower: float = Field(description="Lower value on ln Xi_n")
    upper: float = Field(description="Upper value on ln Xi_n")
    is_bound: bool = Field(description="False when lower/upper are an asymptotic reference rather than a bound")


def gamma(schedule: StepSchedule, n: int) -> float:
    if n < 1:
        raise ValueError(f"step index must be >= 1, got {n}")
    return schedule.gamma_star * float(n) ** (-schedule.alpha)


def gamma_sequence(schedule: StepSchedule, n: int, start: int = 1) -> np.ndarray:
    """gamma_start, ..., gamma_{start+n-1} as an array."""
    if start < 1:
        raise ValueError(f"step index must be >= 1, got {start}")
    k = np.arange(start, start + n, dtype=np.float64)
    return schedule.gamma_star * k ** (-schedule.alpha)


def log_xi(schedule: StepSchedule, n: int) -> float:
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    if n == 0 or not schedule.is_adaptive:
        return 0.0
    total = 0.0
    for start in range(1, n + 1, _CHUNK):
        size = min(_CHUNK, n + 1 - start)
        total += float(np.sum(np.log1p(gamma_sequence(schedule, size, start))))
    return total


def log_xi_path(schedule: StepSchedule, n: int) -> np.ndarray:
    """ln Xi_0, ln Xi_1, ..., ln Xi_n."""
    path = np.zeros(n + 1)
    if n > 0:
        path[1:] = np.cumsum(np.log1p(gamma_sequence(schedule, n)))
    return path


def xi_bounds(schedule: StepSchedule, n: int) -> XiEnvelope:
    """Envelope of ln Xi_n from the integral comparison and ln(1+x) >= x - x^2/2.

    For alpha = 1 there is no bound of this kind; the Stirling asymptote
    ln(n^gamma_star / Gamma(1 + gamma_star)) is returned as a reference value.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    g, a = schedule.gamma_star, schedule.alpha
    if g == 0.0:
        return XiEnvelope(lower=0.0, upper=0.0, is_bound=True)
    if a == 1.0:
        reference = g * math.log(n) - float(gammaln(1.0 + g))
        return XiEnvelope(lower=reference, upper=reference, is_bound=False)

    growth = g / (1.0 - a) * n ** (1.0 - a)
    if a > 0.5:
        log_c = -g / (1.0 - a) - g * g * a / (2.0 * a - 1.0)
        lower = growth + log_c
    elif a == 0.5:
        log_c = -2.0 * g - g * g / 2.0
        lower = 2.0 * g * math.sqrt(n) - g * g / 2.0 * math.log(n) + log_c
    else:
        square_sum = 1.0 + (n ** (1.0 - 2.0 * a) - 1.0) / (1.0 - 2.0 * a)
        lower = g / (1.0 - a) * (n ** (1.0 - a) - 1.0) - g * g / 2.0 * square_sum
    return XiEnvelope(lower=lower, upper=growth, is_bound=True)


def in_convergence_regime(schedule: StepSchedule) -> bool:
    return schedule.is_adaptive and 0.5 < schedule.alpha <= 1.0

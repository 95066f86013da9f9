import math

import numpy as np
from scipy.special import logsumexp

from wlexit.wl_core.state import LogWeightVector, WeightVector

_TINY = np.finfo(np.float64).tiny
_BELOW_ONE = np.nextafter(1.0, 0.0)


def _check_stratum(label: int, d: int) -> int:
    if not 1 <= label <= d:
        raise ValueError(f"stratum label must be in 1..{d}, got {label}")
    return label - 1


def normalize(lw: LogWeightVector) -> WeightVector:
    """theta(i) = theta~(i) / sum_j theta~(j), computed with a log-sum-exp shift.

    Once the spread of the log weights passes about 37 the largest entry rounds
    to 1 and the smallest ones underflow; entries are kept inside the open
    interval (tiny, 1 - ulp) so the result stays a valid WeightVector.
    """
    values = lw.as_array()
    theta = np.exp(values - logsumexp(values))
    return WeightVector.from_array(np.clip(theta, _TINY, _BELOW_ONE))


def update_nonlinear(theta: WeightVector, hit: int, gamma: float) -> WeightVector:
    """Multiplicative update: the visited stratum gains a factor (1 + gamma), then renormalize."""
    k = _check_stratum(hit, theta.d)
    values = theta.as_array()
    scaled = values.copy()
    scaled[k] *= 1.0 + gamma
    return WeightVector.from_array(scaled / (1.0 + gamma * values[k]))


def update_unnormalized(lw: LogWeightVector, hit: int, gamma: float) -> LogWeightVector:
    k = _check_stratum(hit, lw.d)
    values = lw.as_array()
    values[k] += math.log1p(gamma)
    return LogWeightVector.from_array(values)


def update_linearized(theta: WeightVector, hit: int, gamma: float) -> WeightVector:
    """First-order version of update_nonlinear; the sum is preserved exactly.

    Leaves the simplex (and raises) when gamma * theta(hit) >= 1.
    """
    k = _check_stratum(hit, theta.d)
    values = theta.as_array()
    hit_weight = values[k]
    updated = values - gamma * values * hit_weight
    updated[k] = hit_weight + gamma * hit_weight * (1.0 - hit_weight)
    return WeightVector.from_array(updated)


def update_linearized_log(lw: LogWeightVector, hit: int, gamma: float) -> LogWeightVector:
    """update_linearized carried out on log weights; returns normalized ln theta'.

    ln theta'(k) = ln theta(k) + ln(1 - gamma theta(hit)) for k != hit and
    ln theta'(hit) = ln theta(hit) + ln(1 + gamma (1 - theta(hit))), with
    1 - theta(hit) summed over the other strata so it keeps its precision near
    saturation.
    """
    k = _check_stratum(hit, lw.d)
    values = lw.as_array()
    log_theta = values - logsumexp(values)
    hit_weight = math.exp(log_theta[k])
    complement = math.exp(logsumexp(np.delete(log_theta, k)))
    shrink = (1.0 - gamma) + gamma * complement
    if shrink <= 0.0:
        raise ValueError(f"linearized update left the simplex: gamma * theta(hit) = {gamma * hit_weight!r}")
    updated = log_theta + math.log(shrink)
    updated[k] = log_theta[k] + math.log1p(gamma * complement)
    return LogWeightVector.from_array(updated)


def acceptance_ratio(pi_ratio: float, theta: WeightVector, from_stratum: int, to_stratum: int) -> float:
    """Metropolis ratio for the biased target pi_theta with a symmetric proposal."""
    if pi_ratio < 0.0:
        raise ValueError(f"pi ratio must be nonnegative, got {pi_ratio}")
    i = _check_stratum(from_stratum, theta.d)
    j = _check_stratum(to_stratum, theta.d)
    if pi_ratio == 0.0:
        return 0.0
    return min(1.0, pi_ratio * theta.weights[i] / theta.weights[j])


def log_acceptance_ratio(log_pi_ratio: float, lw: LogWeightVector, from_stratum: int, to_stratum: int) -> float:
    """ln of acceptance_ratio, on unnormalized log weights (normalization cancels)."""
    if log_pi_ratio == -math.inf:
        return -math.inf
    i = _check_stratum(from_stratum, lw.d)
    j = _check_stratum(to_stratum, lw.d)
    return min(0.0, log_pi_ratio + lw.log_weights[i] - lw.log_weights[j])

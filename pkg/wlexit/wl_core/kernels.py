"""Compiled building blocks shared by the model inner loops.

Strata are 0-based here; the public API speaks 1-based labels.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def gamma_at(gamma_star, alpha, n):
    return gamma_star * float(n) ** (-alpha)


@njit(cache=True)
def apply_update(log_weights, hit, gamma, linearized):
    """In-place weight update on the stratum hit after the move."""
    if gamma == 0.0:
        return
    if not linearized:
        log_weights[hit] += math.log1p(gamma)
        return
    shift = log_weights.max()
    scaled = np.exp(log_weights - shift)
    total = scaled.sum()
    log_norm = shift + math.log(total)
    log_hit = log_weights[hit] - log_norm
    others = 0.0
    for j in range(scaled.shape[0]):
        if j != hit:
            others += scaled[j]
    # 1 - theta(hit) summed over the other strata, exact even when theta(hit) rounds to 1
    complement = others / total
    shrink = (1.0 - gamma) + gamma * complement
    if shrink <= 0.0:
        raise ValueError("linearized update left the simplex")
    log_weights -= log_norm - math.log(shrink)
    log_weights[hit] = log_hit + math.log1p(gamma * complement)


@njit(cache=True)
def metropolis_accept(log_ratio, rng):
    """Accept with probability min(1, exp(log_ratio)); draws only when needed."""
    if log_ratio >= 0.0:
        return True
    if log_ratio == -np.inf:
        return False
    return rng.random() < math.exp(log_ratio)

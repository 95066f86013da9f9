"""Two-dimensional double-well landscape on [-R, R] x R.

The wells sit near (-1, 0) and (1, 0), separated along x1 by a saddle; x1 is
the reaction coordinate and the strata are d slabs of equal width in x1.
Chains start in the left well and exit when x1 first exceeds 1.
"""

import logging
import math
from typing import List, Optional, Tuple

import numpy as np
from numba import njit
from numpy.polynomial.legendre import leggauss
from pydantic import BaseModel, ConfigDict, Field

from wlexit.common.entities import StepSchedule, UpdateRule
from wlexit.common.errors import ExitNotReached, QuadratureNotConverged
from wlexit.wl_core.chain import wl_step
from wlexit.wl_core.kernels import apply_update, gamma_at, metropolis_accept
from wlexit.wl_core.state import ChainState, LogWeightVector, StrataIndexer, WeightVector

logger = logging.getLogger(__name__)

DEFAULT_STEP_CAP = 10**10
EXIT_THRESHOLD = 1.0
START = (-1.0, 0.0)


class Landscape(BaseModel):
    model_config = ConfigDict(frozen=True)

    beta: float = Field(gt=0.0, description="Inverse temperature")
    R: float = Field(1.1, gt=0.0, description="Half-width of the x1 domain")
    d: int = Field(22, ge=2, description="Number of strata along x1")
    upsilon: float = Field(0.1, gt=0.0, description="Standard deviation of the Gaussian proposal")

    @property
    def dx(self) -> float:
        return 2.0 * self.R / self.d

    def edges(self) -> np.ndarray:
        """a_1, ..., a_{d+1}."""
        return np.linspace(-self.R, self.R, self.d + 1)


class Position2D(BaseModel):
    model_config = ConfigDict(frozen=True)

    x1: float = Field(description="Reaction coordinate")
    x2: float = Field(description="Transverse coordinate")


@njit(cache=True)
def _potential(x1, x2):
    return (
        3.0 * np.exp(-(x1**2) - (x2 - 1.0 / 3.0) ** 2)
        - 3.0 * np.exp(-(x1**2) - (x2 - 5.0 / 3.0) ** 2)
        - 5.0 * np.exp(-((x1 - 1.0) ** 2) - x2**2)
        - 5.0 * np.exp(-((x1 + 1.0) ** 2) - x2**2)
        + 0.2 * x1**4
        + 0.2 * (x2 - 1.0 / 3.0) ** 4
    )


@njit(cache=True)
def _stratum(x1, R, d):
    k = int(math.floor((x1 + R) / (2.0 * R) * d))
    return min(k, d - 1)


def potential(p: Position2D) -> float:
    return float(_potential(p.x1, p.x2))


def potential_grid(x1s: np.ndarray, x2s: np.ndarray) -> np.ndarray:
    """U on the tensor grid, indexed [i, j] -> (x1s[i], x2s[j])."""
    grid_x1, grid_x2 = np.meshgrid(np.asarray(x1s, dtype=np.float64), np.asarray(x2s, dtype=np.float64), indexing="ij")
    return _potential(grid_x1, grid_x2)


def stratum_index(x1: float, landscape: Landscape) -> int:
    """Label l with x1 in [a_l, a_{l+1}); the last stratum is closed at R."""
    if abs(x1) > landscape.R:
        raise ValueError(f"x1={x1} lies outside [-{landscape.R}, {landscape.R}]")
    return _stratum(x1, landscape.R, landscape.d) + 1


@njit(cache=True)
def _landscape_step(x1, x2, energy, log_weights, beta, R, d, upsilon, rng):
    y1 = x1 + upsilon * rng.standard_normal()
    y2 = x2 + upsilon * rng.standard_normal()
    if abs(y1) > R:
        return x1, x2, energy
    proposed = _potential(y1, y2)
    log_ratio = (
        -beta * (proposed - energy)
        + log_weights[_stratum(x1, R, d)]
        - log_weights[_stratum(y1, R, d)]
    )
    if metropolis_accept(log_ratio, rng):
        return y1, y2, proposed
    return x1, x2, energy


@njit(cache=True)
def _exit_run(x1, x2, step, log_weights, threshold, direction, beta, R, d, upsilon, gamma_star, alpha, linearized, cap, rng):
    """Run until direction * (x1 - threshold) > 0; elapsed is -1 if the cap comes first."""
    energy = _potential(x1, x2)
    elapsed = 0
    while elapsed < cap:
        elapsed += 1
        step += 1
        x1, x2, energy = _landscape_step(x1, x2, energy, log_weights, beta, R, d, upsilon, rng)
        if gamma_star > 0.0:
            apply_update(log_weights, _stratum(x1, R, d), gamma_at(gamma_star, alpha, step), linearized)
        if direction * (x1 - threshold) > 0.0:
            return x1, x2, step, elapsed
    return x1, x2, step, -1


@njit(cache=True)
def _occupancy_run(x1, x2, step, log_weights, counts, hits, beta, R, d, upsilon, gamma_star, alpha, linearized, n_steps, rng):
    """Counts visits per stratum; hits, when it has n_steps slots, also records the stratum of every step."""
    energy = _potential(x1, x2)
    record = hits.shape[0] == n_steps
    for i in range(n_steps):
        step += 1
        x1, x2, energy = _landscape_step(x1, x2, energy, log_weights, beta, R, d, upsilon, rng)
        k = _stratum(x1, R, d)
        counts[k] += 1
        if record:
            hits[i] = k
        if gamma_star > 0.0:
            apply_update(log_weights, k, gamma_at(gamma_star, alpha, step), linearized)
    return x1, x2, step


class LandscapeHooks:
    """Gaussian random-walk proposal against pi ∝ 1_{|x1| <= R} exp(-beta U)."""

    def __init__(self, landscape: Landscape):
        self.landscape = landscape
        self.strata = StrataIndexer(n_strata=landscape.d, index_of=lambda p: stratum_index(p.x1, landscape))

    def propose(self, position: Position2D, rng: np.random.Generator) -> Position2D:
        step = self.landscape.upsilon * rng.standard_normal(2)
        return Position2D(x1=position.x1 + step[0], x2=position.x2 + step[1])

    def log_pi_ratio(self, position: Position2D, proposal: Position2D) -> float:
        if abs(proposal.x1) > self.landscape.R:
            return -math.inf
        return -self.landscape.beta * (potential(proposal) - potential(position))


def landscape_hooks(landscape: Landscape) -> LandscapeHooks:
    return LandscapeHooks(landscape)


def initial_state(landscape: Landscape) -> ChainState:
    return ChainState(position=Position2D(x1=START[0], x2=START[1]), log_weights=LogWeightVector.ones(landscape.d))


def wl2d_step(
    state: ChainState,
    landscape: Landscape,
    schedule: StepSchedule,
    rng: np.random.Generator,
    update_rule: UpdateRule = "nonlinear",
) -> ChainState:
    return wl_step(state, landscape_hooks(landscape), schedule, rng, update_rule)


def _run_exit(
    landscape: Landscape,
    schedule: StepSchedule,
    rng: np.random.Generator,
    position: Tuple[float, float],
    step: int,
    log_weights: np.ndarray,
    direction: float,
    update_rule: UpdateRule,
    step_cap: int,
) -> Tuple[Tuple[float, float], int, int]:
    x1, x2, step, elapsed = _exit_run(
        position[0],
        position[1],
        step,
        log_weights,
        direction * EXIT_THRESHOLD,
        direction,
        landscape.beta,
        landscape.R,
        landscape.d,
        landscape.upsilon,
        schedule.gamma_star,
        schedule.alpha,
        update_rule == "linearized",
        step_cap,
        rng,
    )
    if elapsed < 0:
        raise ExitNotReached(step_cap, step_cap)
    return (float(x1), float(x2)), int(step), int(elapsed)


def run_exit_2d(
    landscape: Landscape,
    schedule: StepSchedule,
    rng: np.random.Generator,
    update_rule: UpdateRule = "nonlinear",
    step_cap: int = DEFAULT_STEP_CAP,
) -> int:
    """First n with X_{n,1} > 1, from (-1, 0) with uniform weights."""
    _, _, elapsed = _run_exit(landscape, schedule, rng, START, 0, np.zeros(landscape.d), 1.0, update_rule, step_cap)
    return elapsed


def run_successive_exits_2d(
    landscape: Landscape,
    schedule: StepSchedule,
    k: int,
    rng: np.random.Generator,
    update_rule: UpdateRule = "nonlinear",
    step_cap: int = DEFAULT_STEP_CAP,
) -> List[int]:
    """Durations between alternating crossings of x1 = 1 and x1 = -1 along one trajectory."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    log_weights = np.zeros(landscape.d)
    position, step = START, 0
    durations = []
    for j in range(k):
        direction = 1.0 if j % 2 == 0 else -1.0
        position, step, elapsed = _run_exit(
            landscape, schedule, rng, position, step, log_weights, direction, update_rule, step_cap
        )
        durations.append(elapsed)
    return durations


def _occupancy(
    landscape: Landscape,
    schedule: StepSchedule,
    n_steps: int,
    rng: np.random.Generator,
    log_weights: Optional[LogWeightVector],
    update_rule: UpdateRule,
    record: bool,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    weights = np.zeros(landscape.d) if log_weights is None else log_weights.as_array()
    if weights.shape != (landscape.d,):
        raise ValueError(f"expected {landscape.d} log weights, got {weights.shape[0]}")
    if n_steps < 0:
        raise ValueError(f"n_steps must be >= 0, got {n_steps}")
    counts = np.zeros(landscape.d, dtype=np.int64)
    hits = np.zeros(n_steps if record else 0, dtype=np.int32)
    _occupancy_run(
        START[0],
        START[1],
        0,
        weights,
        counts,
        hits,
        landscape.beta,
        landscape.R,
        landscape.d,
        landscape.upsilon,
        schedule.gamma_star,
        schedule.alpha,
        update_rule == "linearized",
        n_steps,
        rng,
    )
    return counts, hits, weights


def stratum_occupancy(
    landscape: Landscape,
    schedule: StepSchedule,
    n_steps: int,
    rng: np.random.Generator,
    log_weights: Optional[LogWeightVector] = None,
    update_rule: UpdateRule = "nonlinear",
) -> np.ndarray:
    """Visit counts per stratum over n_steps steps from (-1, 0)."""
    counts, _, _ = _occupancy(landscape, schedule, n_steps, rng, log_weights, update_rule, record=False)
    return counts


def stratum_trace(
    landscape: Landscape,
    schedule: StepSchedule,
    n_steps: int,
    rng: np.random.Generator,
    log_weights: Optional[LogWeightVector] = None,
    update_rule: UpdateRule = "nonlinear",
) -> Tuple[np.ndarray, LogWeightVector]:
    """Stratum label (1-based) after each of n_steps steps, and the log weights the run ends with."""
    _, hits, weights = _occupancy(landscape, schedule, n_steps, rng, log_weights, update_rule, record=True)
    return hits.astype(np.int64) + 1, LogWeightVector.from_array(weights)


def _panel_nodes(lo: float, hi: float, panels: int, order: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)[:, None]
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    return (mid + half * nodes).ravel(), (half * weights).ravel()


def _stratum_masses(
    landscape: Landscape, x2_window: Tuple[float, float], resolution: int, order: int
) -> np.ndarray:
    """Unnormalized integrals of exp(-beta (U - min U)) over each stratum, window-truncated in x2."""
    per_stratum = max(1, math.ceil(resolution * landscape.dx))
    x1_nodes, x1_weights = [], []
    for lo, hi in zip(landscape.edges()[:-1], landscape.edges()[1:]):
        nodes, weights = _panel_nodes(lo, hi, per_stratum, order)
        x1_nodes.append(nodes)
        x1_weights.append(weights)
    x1s = np.concatenate(x1_nodes)
    x2_panels = max(1, math.ceil(resolution * (x2_window[1] - x2_window[0])))
    x2s, x2_weights = _panel_nodes(x2_window[0], x2_window[1], x2_panels, order)

    energy = potential_grid(x1s, x2s)
    density = np.exp(-landscape.beta * (energy - energy.min()))
    by_x1 = density @ x2_weights * np.concatenate(x1_weights)
    return by_x1.reshape(landscape.d, per_stratum * order).sum(axis=1)


def theta_star_quadrature(
    landscape: Landscape,
    x2_window: Tuple[float, float] = (-3.0, 3.5),
    resolution: int = 16,
    order: int = 8,
    rtol: float = 1e-6,
) -> WeightVector:
    """theta*(l) = mass of stratum l under exp(-beta U) / total mass.

    Composite Gauss-Legendre with `resolution` panels per unit length; the
    result is recomputed at twice the resolution and must agree within rtol.
    """
    if x2_window[0] >= x2_window[1]:
        raise ValueError(f"empty x2 window {x2_window}")
    if resolution < 1:
        raise ValueError(f"resolution must be >= 1, got {resolution}")
    coarse = _stratum_masses(landscape, x2_window, resolution, order)
    fine = _stratum_masses(landscape, x2_window, 2 * resolution, order)
    coarse /= coarse.sum()
    fine /= fine.sum()
    with np.errstate(divide="ignore", invalid="ignore"):
        change = float(np.max(np.abs(fine - coarse) / fine))
    # strata whose mass underflows give inf/nan here, or a weight that rounds to 1
    if not math.isfinite(change) or change > rtol or fine.max() >= 1.0:
        raise QuadratureNotConverged(change, rtol)
    logger.debug("theta* quadrature at beta=%g converged (relative change %.2e)", landscape.beta, change)
    return WeightVector.from_array(fine)


def effective_epsilon(landscape: Landscape, theta_star: Optional[WeightVector] = None) -> float:
    """theta*(stratum of x1 = 0) / theta*(stratum of x1 = -1), the barrier seen by the chain."""
    theta = theta_star if theta_star is not None else theta_star_quadrature(landscape)
    return theta.weights[stratum_index(0.0, landscape) - 1] / theta.weights[stratum_index(-1.0, landscape) - 1]


def free_energy_profile(landscape: Landscape, theta_star: Optional[WeightVector] = None) -> np.ndarray:
    """-beta^{-1} ln theta*(l) per stratum."""
    theta = theta_star if theta_star is not None else theta_star_quadrature(landscape)
    return -np.log(theta.as_array()) / landscape.beta


def biased_potential_grid(
    landscape: Landscape, theta: WeightVector, x1s: np.ndarray, x2s: np.ndarray
) -> np.ndarray:
    """U + beta^{-1} ln theta(I(x1)) on the tensor grid, indexed [i, j] -> (x1s[i], x2s[j])."""
    if theta.d != landscape.d:
        raise ValueError(f"expected {landscape.d} weights, got {theta.d}")
    labels = np.array([stratum_index(float(x1), landscape) for x1 in x1s]) - 1
    bias = np.log(theta.as_array())[labels] / landscape.beta
    return potential_grid(x1s, x2s) + bias[:, None]

import logging
import math

import numpy as np

from wlexit.common.entities import StepSchedule, UpdateRule
from wlexit.schedule import gamma
from wlexit.wl_core.state import ChainState, SamplerHooks
from wlexit.wl_core.weights import log_acceptance_ratio, update_linearized_log, update_unnormalized

logger = logging.getLogger(__name__)


def wl_step(
    state: ChainState,
    hooks: SamplerHooks,
    schedule: StepSchedule,
    rng: np.random.Generator,
    update_rule: UpdateRule = "nonlinear",
) -> ChainState:
    """One Wang-Landau iteration: Metropolis move against pi_theta_n, then reweighting.

    The weights are updated with gamma_{n+1} on the stratum of the position
    after the move, whether or not the proposal was accepted.
    """
    position = state.position
    proposal = hooks.propose(position, rng)
    log_ratio = hooks.log_pi_ratio(position, proposal)
    if log_ratio != -math.inf:
        log_ratio = log_acceptance_ratio(
            log_ratio, state.log_weights, hooks.strata(position), hooks.strata(proposal)
        )
    if log_ratio >= 0.0 or (log_ratio != -math.inf and rng.random() < math.exp(log_ratio)):
        position = proposal

    n = state.step_index + 1
    hit = hooks.strata(position)
    log_weights = state.log_weights
    if schedule.is_adaptive:
        g = gamma(schedule, n)
        if update_rule == "nonlinear":
            log_weights = update_unnormalized(log_weights, hit, g)
        else:
            log_weights = update_linearized_log(log_weights, hit, g)
    return ChainState(position=position, log_weights=log_weights, step_index=n)


def run_chain(
    state: ChainState,
    hooks: SamplerHooks,
    schedule: StepSchedule,
    rng: np.random.Generator,
    n_steps: int,
    update_rule: UpdateRule = "nonlinear",
) -> list[ChainState]:
    """Trajectory of n_steps wl_step calls, initial state excluded."""
    trajectory = []
    for _ in range(n_steps):
        state = wl_step(state, hooks, schedule, rng, update_rule)
        trajectory.append(state)
    logger.debug("ran %d generic steps, now at step %d", n_steps, state.step_index)
    return trajectory

"""Three-state chain 1 <-> 2 <-> 3 with target (1, eps, 1) / (2 + eps).

State 2 is the low-probability transition state between the two metastable
states 1 and 3. Strata are the states themselves, so theta~ holds one weight
per state. Exact kernels and closed forms live next to the samplers they
check.
"""

import logging
import math
from typing import List, Literal, Optional, Tuple

import numpy as np
from numba import njit
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.special import gammaln

from wlexit.common.entities import StepSchedule, UpdateRule
from wlexit.common.errors import ExitNotReached
from wlexit.schedule import gamma, gamma_sequence, log_xi_path
from wlexit.wl_core.kernels import apply_update, gamma_at
from wlexit.wl_core.state import LogWeightVector, StrataIndexer, WeightVector
from wlexit.wl_core.weights import update_unnormalized

logger = logging.getLogger(__name__)

DEFAULT_STEP_CAP = 10**10
_CHUNK = 1 << 16


class ToyModel(BaseModel):
    model_config = ConfigDict(frozen=True)

    epsilon: float = Field(gt=0.0, lt=1.0, description="Relative weight of the transition state 2")


class ExitDecomposition(BaseModel):
    """Split of one exit time T_{1->3} by the state each step departs from."""

    t0_12: int = Field(ge=1, description="First passage time from 1 to 2")
    returns_21: int = Field(ge=0, description="Number of falls back from 2 to 1 before the exit")
    sojourns_12: List[int] = Field(default_factory=list, description="Return times from 1 to 2 after each fall back")
    n2: int = Field(ge=1, description="Number of steps spent in state 2 before the exit")

    @model_validator(mode="after")
    def _consistent(self) -> "ExitDecomposition":
        if len(self.sojourns_12) != self.returns_21:
            raise ValueError(f"{self.returns_21} returns to 1 but {len(self.sojourns_12)} sojourns recorded")
        if self.returns_21 > self.n2:
            raise ValueError(f"returns_21={self.returns_21} exceeds n2={self.n2}")
        return self

    @property
    def total(self) -> int:
        return self.t0_12 + sum(self.sojourns_12) + self.n2


class PredictedWindow(BaseModel):
    a_eps: float = Field(description="Lower end of the window where T_{1->3} concentrates")
    b_eps: float = Field(description="Upper end of the window")
    scale: float = Field(description="Predicted order of T_{1->3}")


class HeuristicScale(BaseModel):
    n_eps: int = Field(ge=1, description="Smallest n with sum_{k<n} Xi_k >= 1/eps")
    asymptote: Optional[float] = Field(None, description="Closed-form large-n equivalent, alpha = 1 only")


def target_weights(model: ToyModel) -> WeightVector:
    eps = model.epsilon
    return WeightVector(weights=(1.0 / (2.0 + eps), eps / (2.0 + eps), 1.0 / (2.0 + eps)))


def nonadaptive_kernel(model: ToyModel) -> np.ndarray:
    eps = model.epsilon
    return np.array(
        [
            [1.0 - eps / 3.0, eps / 3.0, 0.0],
            [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            [0.0, eps / 3.0, 1.0 - eps / 3.0],
        ]
    )


def _kernel_from_log_weights(log_theta: np.ndarray, log_eps: float) -> np.ndarray:
    p12 = min(1.0, math.exp(log_eps + log_theta[0] - log_theta[1])) / 3.0
    p21 = min(1.0, math.exp(log_theta[1] - log_theta[0] - log_eps)) / 3.0
    p23 = min(1.0, math.exp(log_theta[1] - log_theta[2] - log_eps)) / 3.0
    p32 = min(1.0, math.exp(log_eps + log_theta[2] - log_theta[1])) / 3.0
    return np.array(
        [
            [1.0 - p12, p12, 0.0],
            [p21, 1.0 - p21 - p23, p23],
            [0.0, p32, 1.0 - p32],
        ]
    )


def adaptive_kernel(theta: WeightVector, model: ToyModel) -> np.ndarray:
    """Metropolis kernel targeting pi_theta(i) ∝ pi(i) / theta(i) with the nearest-neighbour proposal."""
    if theta.d != 3:
        raise ValueError(f"the toy model has 3 strata, got weights of length {theta.d}")
    return _kernel_from_log_weights(np.log(theta.as_array()), math.log(model.epsilon))


def expected_exit_nonadaptive(model: ToyModel) -> float:
    return 6.0 / model.epsilon + 3.0


@njit(cache=True)
def _nonadaptive_exit(eps, cap, rng):
    p12 = eps / 3.0
    state = 0
    t = 0
    while t < cap:
        t += 1
        u = rng.random()
        if state == 0:
            if u < p12:
                state = 1
        elif u < 1.0 / 3.0:
            state = 0
        elif u < 2.0 / 3.0:
            return t
    return -1


@njit(cache=True)
def _toy_run(state, step, log_weights, target, log_eps, gamma_star, alpha, linearized, cap, rng):
    """Advance the adaptive chain until it reaches `target` (0-based).

    Returns (state, step, elapsed, visits to state 2); elapsed is -1 when the
    cap was hit first. log_weights is updated in place.
    """
    elapsed = 0
    visits = 0
    while elapsed < cap:
        elapsed += 1
        step += 1
        u = rng.random()
        if state == 0:
            p12 = min(1.0, math.exp(log_eps + log_weights[0] - log_weights[1])) / 3.0
            if u < p12:
                state = 1
        elif state == 1:
            p21 = min(1.0, math.exp(log_weights[1] - log_weights[0] - log_eps)) / 3.0
            p23 = min(1.0, math.exp(log_weights[1] - log_weights[2] - log_eps)) / 3.0
            if u < p21:
                state = 0
            elif u < p21 + p23:
                state = 2
        else:
            p32 = min(1.0, math.exp(log_eps + log_weights[2] - log_weights[1])) / 3.0
            if u < p32:
                state = 1
        if state == 1:
            visits += 1
        if gamma_star > 0.0:
            apply_update(log_weights, state, gamma_at(gamma_star, alpha, step), linearized)
        if state == target:
            return state, step, elapsed, visits
    return state, step, -1, visits


def sample_exit_nonadaptive(
    model: ToyModel, rng: np.random.Generator, step_cap: int = DEFAULT_STEP_CAP
) -> int:
    """Hitting time of 3 from 1 for the plain Metropolis chain, by direct simulation."""
    t = int(_nonadaptive_exit(model.epsilon, step_cap, rng))
    if t < 0:
        raise ExitNotReached(step_cap, step_cap)
    return t


def sample_exit_decomposition(
    model: ToyModel,
    rng: np.random.Generator,
    representation: Literal["sojourns", "marginals"] = "sojourns",
) -> int:
    """Same law as sample_exit_nonadaptive, assembled from geometric variables on {1, 2, ...}.

    "sojourns" draws N ~ Geo(1/2) excursions, each a Geo(eps/3) stay in 1 plus a
    Geo(2/3) stay in 2. "marginals" draws the two aggregated times
    Geo(eps/6) + Geo(1/3) independently, which only matches in mean.
    """
    eps = model.epsilon
    if representation == "marginals":
        return int(rng.geometric(eps / 6.0) + rng.geometric(1.0 / 3.0))
    n = int(rng.geometric(0.5))
    return int(rng.geometric(eps / 3.0, size=n).sum() + rng.geometric(2.0 / 3.0, size=n).sum())


def _run_to(
    model: ToyModel,
    schedule: StepSchedule,
    rng: np.random.Generator,
    state: int,
    step: int,
    log_weights: np.ndarray,
    target: int,
    update_rule: UpdateRule,
    step_cap: int,
) -> Tuple[int, int, int, int]:
    state, step, elapsed, visits = _toy_run(
        state,
        step,
        log_weights,
        target,
        math.log(model.epsilon),
        schedule.gamma_star,
        schedule.alpha,
        update_rule == "linearized",
        step_cap,
        rng,
    )
    if elapsed < 0:
        raise ExitNotReached(step_cap, step_cap)
    return int(state), int(step), int(elapsed), int(visits)


def sample_exit_adaptive(
    model: ToyModel,
    schedule: StepSchedule,
    rng: np.random.Generator,
    update_rule: UpdateRule = "nonlinear",
    step_cap: int = DEFAULT_STEP_CAP,
) -> Tuple[int, LogWeightVector]:
    """T_{1->3} of the Wang-Landau chain from X_0 = 1 and theta~_0 = (1, 1, 1)."""
    log_weights = np.zeros(3)
    _, _, elapsed, _ = _run_to(model, schedule, rng, 0, 0, log_weights, 2, update_rule, step_cap)
    return elapsed, LogWeightVector.from_array(log_weights)


def n2_statistic(
    model: ToyModel,
    schedule: StepSchedule,
    rng: np.random.Generator,
    update_rule: UpdateRule = "nonlinear",
    step_cap: int = DEFAULT_STEP_CAP,
) -> int:
    """Number of indices n <= T_{1->3} with X_n = 2."""
    _, _, _, visits = _run_to(model, schedule, rng, 0, 0, np.zeros(3), 2, update_rule, step_cap)
    return visits


def sample_successive_exits(
    model: ToyModel,
    schedule: StepSchedule,
    k: int,
    rng: np.random.Generator,
    update_rule: UpdateRule = "nonlinear",
    step_cap: int = DEFAULT_STEP_CAP,
) -> List[int]:
    """Durations of the transitions 1->3, 3->1, 1->3, ... along one chain."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    log_weights = np.zeros(3)
    state, step = 0, 0
    durations = []
    for j in range(k):
        target = 2 if j % 2 == 0 else 0
        state, step, elapsed, _ = _run_to(model, schedule, rng, state, step, log_weights, target, update_rule, step_cap)
        durations.append(elapsed)
    return durations


def trace_exit_adaptive(
    model: ToyModel,
    schedule: StepSchedule,
    rng: np.random.Generator,
    step_cap: int = DEFAULT_STEP_CAP,
) -> Tuple[int, ExitDecomposition, LogWeightVector]:
    """Step-by-step T_{1->3} through the rows of adaptive_kernel, recording its decomposition.

    Uses the nonlinear update. Slow; meant for checking the compiled samplers.
    """
    log_eps = math.log(model.epsilon)
    log_weights = LogWeightVector.ones(3)
    state, step = 1, 0
    t0_12 = 0
    sojourns: List[int] = []
    n2 = 0
    reached_two = False
    while state != 3:
        if step >= step_cap:
            raise ExitNotReached(step, step_cap)
        row = _kernel_from_log_weights(log_weights.as_array(), log_eps)[state - 1]
        new_state = int(np.searchsorted(np.cumsum(row), rng.random(), side="right")) + 1
        new_state = min(new_state, 3)
        if state == 1:
            if reached_two:
                sojourns[-1] += 1
            else:
                t0_12 += 1
        elif state == 2:
            n2 += 1
            if new_state == 1:
                sojourns.append(0)
        if new_state == 2:
            reached_two = True
        step += 1
        state = new_state
        if schedule.is_adaptive:
            log_weights = update_unnormalized(log_weights, state, gamma(schedule, step))
    decomposition = ExitDecomposition(t0_12=t0_12, returns_21=len(sojourns), sojourns_12=sojourns, n2=n2)
    return step, decomposition, log_weights


def first_passage_survival(model: ToyModel, schedule: StepSchedule, n: int) -> float:
    """P(T^0_{1->2} > n) while the chain is stuck in 1 and theta~(1) grows like Xi_m."""
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    if n == 0:
        return 1.0
    log_xi = log_xi_path(schedule, n - 1)
    exit_prob = np.minimum(np.exp(math.log(model.epsilon) + log_xi), 1.0) / 3.0
    return float(np.exp(np.sum(np.log1p(-exit_prob))))


def heuristic_exit_scale(model: ToyModel, schedule: StepSchedule) -> HeuristicScale:
    """Time by which the accumulated weight of state 1 compensates the 1/eps barrier."""
    eps = model.epsilon
    asymptote = None
    if schedule.alpha == 1.0:
        g = schedule.gamma_star
        asymptote = math.exp((float(gammaln(2.0 + g)) - math.log(eps)) / (1.0 + g))
    if not schedule.is_adaptive:
        return HeuristicScale(n_eps=math.ceil(1.0 / eps), asymptote=asymptote)

    target = -math.log(eps)
    log_total = -math.inf
    start, last = 0, 0.0
    while True:
        increments = np.log1p(gamma_sequence(schedule, _CHUNK, start + 1))
        path = last + np.concatenate(([0.0], np.cumsum(increments[:-1])))
        running = np.logaddexp(log_total, np.logaddexp.accumulate(path))
        hits = np.flatnonzero(running >= target)
        if hits.size:
            return HeuristicScale(n_eps=start + int(hits[0]) + 1, asymptote=asymptote)
        log_total = float(running[-1])
        last = float(path[-1] + increments[-1])
        start += _CHUNK


def predicted_window(model: ToyModel, schedule: StepSchedule, slack: float = 10.0) -> PredictedWindow:
    """Window [a(eps), b(eps)] in which T_{1->3} concentrates for small eps.

    alpha in [1/2, 1): scale ((1 - alpha) |ln eps| / gamma_star)^{1/(1-alpha)}, window [scale/2, 2 scale].
    alpha = 1: scale eps^{-1/(1+gamma_star)}, window [scale/slack, scale*slack].
    """
    a = schedule.alpha
    if a < 0.5:
        raise ValueError(f"no predicted window for alpha < 1/2, got {a}")
    if slack <= 1.0:
        raise ValueError(f"slack must exceed 1, got {slack}")
    if a == 1.0:
        scale = model.epsilon ** (-1.0 / (1.0 + schedule.gamma_star))
        return PredictedWindow(a_eps=scale / slack, b_eps=scale * slack, scale=scale)
    if not schedule.is_adaptive:
        raise ValueError("alpha < 1 windows need gamma_star > 0")
    scale = _log_scale(model, schedule)
    return PredictedWindow(a_eps=scale / 2.0, b_eps=2.0 * scale, scale=scale)


def _log_scale(model: ToyModel, schedule: StepSchedule) -> float:
    a = schedule.alpha
    return ((1.0 - a) * abs(math.log(model.epsilon)) / schedule.gamma_star) ** (1.0 / (1.0 - a))


def predicted_successive_orders(model: ToyModel, schedule: StepSchedule) -> Tuple[float, ...]:
    """Orders of magnitude of the first successive exit durations.

    Two values for alpha in [1/2, 1), four for alpha = 1.
    """
    a, g, eps = schedule.alpha, schedule.gamma_star, model.epsilon
    if a < 0.5:
        raise ValueError(f"no predicted orders for alpha < 1/2, got {a}")
    if a == 1.0:
        return (
            eps ** (-1.0 / (1.0 + g)),
            eps ** (-(1.0 + 2.0 * g) / (1.0 + g) ** 2),
            eps ** (-(1.0 + 2.0 * g + 2.0 * g * g) / (1.0 + g) ** 3),
            eps ** (-(1.0 + 2.0 * g) / (1.0 + g) ** 2),
        )
    if not schedule.is_adaptive:
        raise ValueError("alpha < 1 orders need gamma_star > 0")
    s = _log_scale(model, schedule)
    return s, 2.0 ** (1.0 / (1.0 - a)) * s


class ToyHooks:
    """The toy chain seen through the generic stepper: states 1, 2, 3 are their own strata."""

    def __init__(self, model: ToyModel):
        self.model = model
        self.strata = StrataIndexer(n_strata=3, index_of=int)
        self._log_pi = np.log([1.0, model.epsilon, 1.0])

    def propose(self, position: int, rng: np.random.Generator) -> int:
        u = rng.random()
        if position == 2:
            return 1 if u < 1.0 / 3.0 else (3 if u < 2.0 / 3.0 else 2)
        if u < 1.0 / 3.0:
            return 2
        return position

    def log_pi_ratio(self, position: int, proposal: int) -> float:
        return float(self._log_pi[proposal - 1] - self._log_pi[position - 1])


def toy_hooks(model: ToyModel) -> ToyHooks:
    return ToyHooks(model)

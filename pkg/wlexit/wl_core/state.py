from typing import Any, Callable, Protocol, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

SIMPLEX_TOLERANCE = 1e-12


class WeightVector(BaseModel):
    """Normalized stratum weights theta: a non-degenerate probability vector."""

    model_config = ConfigDict(frozen=True)

    weights: Tuple[float, ...] = Field(description="theta(1), ..., theta(d)")

    @field_validator("weights")
    @classmethod
    def _on_simplex(cls, weights: Tuple[float, ...]) -> Tuple[float, ...]:
        if len(weights) < 2:
            raise ValueError("a weight vector needs at least two strata")
        values = np.asarray(weights)
        if not np.all((values > 0.0) & (values < 1.0)):
            raise ValueError(f"weights must lie strictly in (0, 1), got {weights}")
        if abs(values.sum() - 1.0) > SIMPLEX_TOLERANCE:
            raise ValueError(f"weights must sum to 1, got sum {values.sum()!r}")
        return weights

    @classmethod
    def uniform(cls, d: int) -> "WeightVector":
        return cls(weights=tuple([1.0 / d] * d))

    @classmethod
    def from_array(cls, values: np.ndarray) -> "WeightVector":
        return cls(weights=tuple(float(v) for v in values))

    @property
    def d(self) -> int:
        return len(self.weights)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=np.float64)


class LogWeightVector(BaseModel):
    """Unnormalized weights in log domain, ln theta~(i)."""

    model_config = ConfigDict(frozen=True)

    log_weights: Tuple[float, ...] = Field(description="ln theta~(1), ..., ln theta~(d)")

    @field_validator("log_weights")
    @classmethod
    def _finite(cls, log_weights: Tuple[float, ...]) -> Tuple[float, ...]:
        if len(log_weights) < 2:
            raise ValueError("a weight vector needs at least two strata")
        if not np.all(np.isfinite(log_weights)):
            raise ValueError(f"log weights must be finite, got {log_weights}")
        return log_weights

    @classmethod
    def ones(cls, d: int) -> "LogWeightVector":
        """theta~_0 = (1, ..., 1)."""
        return cls(log_weights=tuple([0.0] * d))

    @classmethod
    def from_array(cls, values: np.ndarray) -> "LogWeightVector":
        return cls(log_weights=tuple(float(v) for v in values))

    @property
    def d(self) -> int:
        return len(self.log_weights)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.log_weights, dtype=np.float64)


class StrataIndexer(BaseModel):
    """Total map I from states to stratum labels 1..d."""

    model_config = ConfigDict(frozen=True)

    n_strata: int = Field(ge=2, description="Number of strata d")
    index_of: Callable[[Any], int] = Field(description="Maps a state to its stratum label in 1..d")

    def __call__(self, state: Any) -> int:
        label = self.index_of(state)
        if not 1 <= label <= self.n_strata:
            raise ValueError(f"state {state!r} mapped to stratum {label}, outside 1..{self.n_strata}")
        return label


class ChainState(BaseModel):
    """(X_n, theta~_n, n) for one replica."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    position: Any = Field(description="Current model state X_n")
    log_weights: LogWeightVector = Field(description="Unnormalized weights theta~_n")
    step_index: int = Field(0, ge=0, description="n, the number of steps taken so far")


class SamplerHooks(Protocol):
    """What a model must provide to be driven by wl_step.

    The proposal must be symmetric. log_pi_ratio returns ln(pi(proposal)/pi(current)),
    -inf for proposals outside the support.
    """

    strata: StrataIndexer

    def propose(self, position: Any, rng: np.random.Generator) -> Any: ...

    def log_pi_ratio(self, position: Any, proposal: Any) -> float: ...

from typing import Any, Dict, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

UpdateRule = Literal["nonlinear", "linearized"]
FitKind = Literal["exp-in-beta", "power-in-beta", "power-in-logeps", "prefactor-in-d"]


class StepSchedule(BaseModel):
    model_config = ConfigDict(frozen=True)

    gamma_star: float = Field(ge=0.0, description="Gain prefactor; 0 gives the non-adaptive dynamics")
    alpha: float = Field(gt=0.0, le=1.0, description="Decay exponent of gamma_n = gamma_star * n^-alpha")

    @property
    def is_adaptive(self) -> bool:
        return self.gamma_star > 0.0

    @property
    def square_sum_diverges(self) -> bool:
        """True when sum(gamma_n^2) diverges, i.e. the convergence assumptions do not cover the run."""
        return self.is_adaptive and self.alpha <= 0.5


class ExitSummary(BaseModel):
    grid_value: float = Field(description="Grid coordinate (epsilon for the toy model, beta for the landscape)")
    exit_index: int = Field(1, ge=1, description="Which successive exit the row summarizes (1 = first exit)")
    mean: float = Field(description="Sample mean over non-capped replicas")
    stderr: float = Field(description="Sample standard deviation / sqrt(m_effective)")
    median: float = Field(description="Sample median over non-capped replicas")
    q10: float = Field(description="10% sample quantile")
    q90: float = Field(description="90% sample quantile")
    m_effective: int = Field(ge=0, description="Number of replicas that exited before the step cap")
    capped_count: int = Field(ge=0, description="Number of replicas stopped by the step cap")


class ScalingFit(BaseModel):
    kind: FitKind = Field(description="Which transform of the data was regressed")
    slope: float = Field(description="Fitted slope of the transformed law")
    intercept: float = Field(description="Fitted intercept of the transformed law")
    r_squared: float = Field(ge=0.0, le=1.0, description="Coefficient of determination of the fit")
    slope_stderr: float = Field(description="Standard OLS error of the slope")
    expected: Optional[float] = Field(None, description="Theoretical slope, when one is known")
    rel_err: Optional[float] = Field(None, description="|slope - expected| / |expected|")
    n_points: int = Field(ge=0, description="Number of points kept after cutoffs")
    cutoffs: Dict[str, Optional[float]] = Field(default_factory=dict, description="Cutoffs applied before fitting")

    @model_validator(mode="after")
    def _fill_relative_error(self) -> "ScalingFit":
        if self.expected is not None and self.rel_err is None and self.expected != 0.0:
            self.rel_err = abs(self.slope - self.expected) / abs(self.expected)
        return self


class RunManifest(BaseModel):
    """Record of one command run; `config` can be fed back as --config."""

    command: str = Field(description="CLI command that produced the outputs")
    version: str = Field(description="Library version")
    seed: Optional[int] = Field(None, description="Root seed of the run, when it draws random numbers")
    config: Dict[str, Any] = Field(description="Full configuration echo")
    started_at: str = Field(description="UTC start time, ISO 8601")
    finished_at: str = Field(description="UTC end time, ISO 8601")
    outputs: Dict[str, str] = Field(default_factory=dict, description="Output files keyed by role")
    square_sum_diverges: bool = Field(False, description="Schedule has sum(gamma_n^2) = infinity")
    capped_replicas: int = Field(0, ge=0, description="Replicas stopped by the step cap, all grid points together")

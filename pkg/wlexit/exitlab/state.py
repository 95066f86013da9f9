import operator
from typing import Annotated, Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from wlexit.common.entities import ExitSummary, StepSchedule, UpdateRule

ModelName = Literal["toy", "landscape2d"]
ToySampler = Literal["adaptive", "direct", "decomposition"]


class Geometry(BaseModel):
    R: float = Field(1.1, gt=0.0, description="Half-width of the x1 domain of the 2D landscape")
    d: int = Field(22, ge=2, description="Number of strata along x1")
    upsilon: float = Field(0.1, gt=0.0, description="Standard deviation of the Gaussian proposal")


class ExperimentConfig(BaseModel):
    model: ModelName = Field(description="Which model the replicas simulate")
    grid: List[float] = Field(description="Epsilon values (toy) or beta values (landscape2d), strictly monotone")
    schedule: StepSchedule = Field(description="Step-size schedule of the Wang-Landau weights")
    update_rule: UpdateRule = Field("nonlinear", description="Weight update rule")
    replicas: int = Field(ge=1, description="Number M of independent replicas per grid point")
    seed: int = Field(ge=0, lt=2**64, description="Root seed; replica streams are keyed on (seed, grid index, replica index)")
    step_cap: int = Field(10**10, ge=1, description="Maximum number of steps per exit before a replica is flagged as capped")
    output_path: str = Field(description="Directory receiving raw.csv, summary.csv and manifest.json")
    successive: int = Field(1, ge=1, description="Number k of successive exit durations recorded per replica")
    toy_sampler: ToySampler = Field("adaptive", description="Toy sampler: adaptive chain, direct plain chain or geometric decomposition")
    geometry: Geometry = Field(default_factory=Geometry, description="Landscape geometry (ignored by the toy model)")
    workers: int = Field(1, ge=0, description="Worker processes for the replica map; 0 uses every CPU")
    progress: bool = Field(True, description="Show a progress bar over replicas")

    @field_validator("grid")
    @classmethod
    def _monotone(cls, grid: List[float]) -> List[float]:
        if not grid:
            raise ValueError("grid must not be empty")
        steps = np.diff(grid)
        if len(grid) > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
            raise ValueError(f"grid must be strictly monotone, got {grid}")
        return grid

    @model_validator(mode="after")
    def _compatible(self) -> "ExperimentConfig":
        if self.model == "toy" and not all(0.0 < eps < 1.0 for eps in self.grid):
            raise ValueError("toy grid values are epsilons and must lie in (0, 1)")
        if self.model == "landscape2d" and not all(beta > 0.0 for beta in self.grid):
            raise ValueError("landscape2d grid values are inverse temperatures and must be positive")
        if self.update_rule == "linearized" and self.schedule.gamma_star > 1.0:
            raise ValueError("the linearized update needs gamma_star <= 1")
        if self.model == "toy" and self.toy_sampler != "adaptive":
            if self.schedule.is_adaptive:
                raise ValueError(f"toy_sampler={self.toy_sampler} simulates the plain chain; set gamma_star to 0")
            if self.successive > 1:
                raise ValueError("successive exits need toy_sampler=adaptive")
        return self


class ReplicaBatch(BaseModel):
    """Exit durations of every replica at one grid point, in replica order."""

    grid_index: int = Field(ge=0, description="Position of the grid point in the config grid")
    grid_value: float = Field(description="Epsilon or beta")
    exit_times: List[List[Optional[int]]] = Field(
        description="exit_times[r][j] is duration j+1 of replica r, None when the replica was capped"
    )


class ExperimentState(BaseModel):
    config: ExperimentConfig
    current_grid_idx: int = Field(0, description="Index of the grid point being simulated")
    started_at: Optional[str] = Field(None, description="UTC timestamp of the start of the run")
    current_batch: Optional[ReplicaBatch] = Field(None, description="Replicas of the current grid point")
    batches: Annotated[List[ReplicaBatch], operator.add] = Field(default_factory=list, description="All grid points simulated so far")
    summaries: Annotated[List[ExitSummary], operator.add] = Field(default_factory=list, description="Summary rows, one per grid point and exit index")
    outputs: Dict[str, str] = Field(default_factory=dict, description="Files written by the run, keyed by role")

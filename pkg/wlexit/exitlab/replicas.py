"""Independent replicas of one grid point.

Every replica owns a PCG64 stream keyed on (seed, grid index, replica index),
so results do not depend on the number of workers or on completion order.
"""

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Sequence

import numpy as np
from tqdm import tqdm

from wlexit.common.errors import ExitNotReached
from wlexit.exitlab.state import ExperimentConfig, ReplicaBatch
from wlexit.models.landscape2d import Landscape, run_exit_2d, run_successive_exits_2d
from wlexit.models.toy3 import (
    ToyModel,
    sample_exit_adaptive,
    sample_exit_decomposition,
    sample_exit_nonadaptive,
    sample_successive_exits,
)

logger = logging.getLogger(__name__)

_CHUNKS_PER_WORKER = 8


def replica_seed(seed: int, grid_index: int, replica_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=(grid_index, replica_index))


def replica_rng(seed: int, grid_index: int, replica_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(replica_seed(seed, grid_index, replica_index)))


def _simulate(config: ExperimentConfig, grid_value: float, rng: np.random.Generator) -> List[int]:
    k, cap, rule = config.successive, config.step_cap, config.update_rule
    if config.model == "toy":
        model = ToyModel(epsilon=grid_value)
        if k > 1:
            return sample_successive_exits(model, config.schedule, k, rng, rule, cap)
        if config.toy_sampler == "direct":
            return [sample_exit_nonadaptive(model, rng, cap)]
        if config.toy_sampler == "decomposition":
            return [sample_exit_decomposition(model, rng)]
        return [sample_exit_adaptive(model, config.schedule, rng, rule, cap)[0]]

    landscape = Landscape(beta=grid_value, **config.geometry.model_dump())
    if k > 1:
        return run_successive_exits_2d(landscape, config.schedule, k, rng, rule, cap)
    return [run_exit_2d(landscape, config.schedule, rng, rule, cap)]


def simulate_replica(config: ExperimentConfig, grid_index: int, replica_index: int) -> List[Optional[int]]:
    """Exit durations of one replica; all None when the step cap was hit."""
    rng = replica_rng(config.seed, grid_index, replica_index)
    try:
        return list(_simulate(config, config.grid[grid_index], rng))
    except ExitNotReached as e:
        logger.warning(
            "replica %d at grid point %g capped: %s", replica_index, config.grid[grid_index], e
        )
        return [None] * config.successive


def _simulate_chunk(config: ExperimentConfig, grid_index: int, replica_indices: Sequence[int]) -> List[List[Optional[int]]]:
    return [simulate_replica(config, grid_index, r) for r in replica_indices]


def _worker_count(config: ExperimentConfig) -> int:
    return config.workers or os.cpu_count() or 1


def run_replicas(config: ExperimentConfig, grid_index: int) -> ReplicaBatch:
    grid_value = config.grid[grid_index]
    workers = min(_worker_count(config), config.replicas)
    bar = tqdm(
        total=config.replicas,
        desc=f"{config.model} @ {grid_value:g}",
        disable=not config.progress,
        leave=False,
    )
    results: List[List[Optional[int]]] = []
    with bar:
        if workers == 1:
            for r in range(config.replicas):
                results.append(simulate_replica(config, grid_index, r))
                bar.update(1)
        else:
            chunks = np.array_split(np.arange(config.replicas), workers * _CHUNKS_PER_WORKER)
            chunks = [c.tolist() for c in chunks if c.size]
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for chunk_result in pool.map(_simulate_chunk, [config] * len(chunks), [grid_index] * len(chunks), chunks):
                    results.extend(chunk_result)
                    bar.update(len(chunk_result))
    return ReplicaBatch(grid_index=grid_index, grid_value=grid_value, exit_times=results)

import logging
from pathlib import Path
from typing import List

from langgraph.graph import END, START, StateGraph

from helpers.artifacts import (
    MANIFEST_FILE,
    RAW_FILE,
    SUMMARY_FILE,
    raw_frame,
    summary_frame,
    utc_now,
    write_csv,
    write_manifest,
)
from wlexit import __version__
from wlexit.common.entities import ExitSummary, RunManifest
from wlexit.exitlab.replicas import run_replicas
from wlexit.exitlab.state import ExperimentConfig, ExperimentState
from wlexit.exitlab.stats import summarize_durations

logger = logging.getLogger(__name__)


def start_experiment(state: ExperimentState):
    config = state.config
    logger.info(
        "starting %s experiment: %d grid points x %d replicas, gamma_star=%g alpha=%g",
        config.model, len(config.grid), config.replicas, config.schedule.gamma_star, config.schedule.alpha,
    )
    if config.schedule.square_sum_diverges:
        logger.warning("alpha=%g <= 1/2: the schedule lies outside the convergence assumptions", config.schedule.alpha)
    return {"current_grid_idx": 0, "started_at": utc_now()}


def prepare_grid_point(state: ExperimentState):
    logger.info("grid point %d/%d: %g", state.current_grid_idx + 1, len(state.config.grid), state.config.grid[state.current_grid_idx])
    return {"current_batch": None}


def run_grid_point_replicas(state: ExperimentState):
    batch = run_replicas(state.config, state.current_grid_idx)
    return {"current_batch": batch, "batches": [batch]}


def summarize_grid_point(state: ExperimentState):
    batch = state.current_batch
    summaries = summarize_durations(batch.grid_value, batch.exit_times)
    for summary in summaries:
        if summary.capped_count:
            logger.warning(
                "%d of %d replicas capped at grid point %g (exit %d)",
                summary.capped_count, state.config.replicas, batch.grid_value, summary.exit_index,
            )
    first = summaries[0]
    logger.info("grid point %g: mean %.6g +- %.2g over %d replicas", batch.grid_value, first.mean, first.stderr, first.m_effective)
    return {"summaries": summaries}


def proceed_to_next_grid_point(state: ExperimentState):
    return {"current_grid_idx": state.current_grid_idx + 1}


def is_grid_complete(state: ExperimentState):
    return "write_artifacts" if state.current_grid_idx >= len(state.config.grid) else "continue"


def write_artifacts(state: ExperimentState):
    config = state.config
    out_dir = Path(config.output_path)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = {
        "raw": write_csv(
            raw_frame([b.grid_value for b in state.batches], [b.exit_times for b in state.batches], config.successive),
            out_dir / RAW_FILE,
        ),
        "summary": write_csv(summary_frame(state.summaries, config.successive), out_dir / SUMMARY_FILE),
    }
    outputs["manifest"] = str(out_dir / MANIFEST_FILE)
    manifest = RunManifest(
        command=f"{config.model}-exit",
        version=__version__,
        seed=config.seed,
        config=config.model_dump(mode="json"),
        started_at=state.started_at or utc_now(),
        finished_at=utc_now(),
        outputs=outputs,
        square_sum_diverges=config.schedule.square_sum_diverges,
        capped_replicas=_capped_replicas(state.summaries),
    )
    write_manifest(manifest, outputs["manifest"])
    logger.info("wrote %s", ", ".join(outputs.values()))
    return {"outputs": outputs}


def _capped_replicas(summaries: List[ExitSummary]) -> int:
    return sum(s.capped_count for s in summaries if s.exit_index == 1)


def create_experiment_graph():
    graph_builder = StateGraph(ExperimentState)

    graph_builder.add_node("start_experiment", start_experiment)
    graph_builder.add_node("prepare_grid_point", prepare_grid_point)
    graph_builder.add_node("run_replicas", run_grid_point_replicas)
    graph_builder.add_node("summarize_grid_point", summarize_grid_point)
    graph_builder.add_node("proceed_to_next_grid_point", proceed_to_next_grid_point)
    graph_builder.add_node("write_artifacts", write_artifacts)

    graph_builder.add_edge(START, "start_experiment")
    graph_builder.add_edge("start_experiment", "prepare_grid_point")
    graph_builder.add_edge("prepare_grid_point", "run_replicas")
    graph_builder.add_edge("run_replicas", "summarize_grid_point")
    graph_builder.add_edge("summarize_grid_point", "proceed_to_next_grid_point")
    # Loop over the grid, then persist everything once
    graph_builder.add_conditional_edges(
        "proceed_to_next_grid_point",
        is_grid_complete,
        {
            "continue": "prepare_grid_point",
            "write_artifacts": "write_artifacts",
        },
    )
    graph_builder.add_edge("write_artifacts", END)
    return graph_builder


experiment_graph = create_experiment_graph().compile()


def recursion_limit(config: ExperimentConfig) -> int:
    return 4 * len(config.grid) + 10


def run_grid(config: ExperimentConfig) -> List[ExitSummary]:
    """Simulate every grid point, write raw.csv, summary.csv and manifest.json, return the summaries."""
    result = experiment_graph.invoke({"config": config}, {"recursion_limit": recursion_limit(config)})
    return result["summaries"]

import logging
from pathlib import Path
from typing import Dict, List, Optional

from langgraph.graph import END, START, StateGraph
from pydantic import BaseModel, Field

from helpers.artifacts import FIT_FILE, FIT_TABLE_FILE, MANIFEST_FILE, utc_now, write_json, write_manifest
from wlexit.common.entities import ExitSummary, RunManifest, ScalingFit
from wlexit.exitlab.graph import experiment_graph, recursion_limit
from wlexit.exitlab.state import ExperimentConfig
from wlexit.scalefit.fits import FitRequest, fit_summaries
from wlexit.scalefit.report import table_report

logger = logging.getLogger(__name__)


class ScalingStudyState(BaseModel):
    config: ExperimentConfig
    fit_request: FitRequest = Field(description="Scaling law to fit once the grid is simulated")
    summaries: List[ExitSummary] = Field(default_factory=list, description="Summary rows produced by the experiment")
    outputs: Dict[str, str] = Field(default_factory=dict, description="Files written so far, keyed by role")
    fit: Optional[ScalingFit] = Field(None, description="The fitted scaling law")


def run_experiment(state: ScalingStudyState):
    result = experiment_graph.invoke({"config": state.config}, {"recursion_limit": recursion_limit(state.config)})
    return {"summaries": result["summaries"], "outputs": result["outputs"]}


def fit_scaling_law(state: ScalingStudyState):
    fit = fit_summaries(state.summaries, state.fit_request, state.config.schedule)
    logger.info("%s slope %.4g +- %.2g (expected %s)", fit.kind, fit.slope, fit.slope_stderr, fit.expected)
    out_dir = Path(state.config.output_path)
    outputs = dict(state.outputs)
    outputs["fit"] = write_json(fit.model_dump(), out_dir / FIT_FILE)
    report = table_report([(state.fit_request.exit_index, fit)], label="exit_index")
    table_path = out_dir / FIT_TABLE_FILE
    table_path.write_text(report.text + "\n")
    outputs["fit_table"] = str(table_path)

    manifest_path = Path(outputs.get("manifest", out_dir / MANIFEST_FILE))
    manifest = RunManifest.model_validate_json(manifest_path.read_text())
    manifest = manifest.model_copy(
        update={"command": "study", "outputs": outputs, "finished_at": utc_now()}
    )
    write_manifest(manifest, manifest_path)
    return {"fit": fit, "outputs": outputs}


def create_study_graph():
    """Create the scaling study: the experiment graph followed by a fit of its summaries"""
    graph_builder = StateGraph(ScalingStudyState)

    graph_builder.add_node("run_experiment", run_experiment)
    graph_builder.add_node("fit_scaling_law", fit_scaling_law)
    graph_builder.add_edge(START, "run_experiment")
    graph_builder.add_edge("run_experiment", "fit_scaling_law")
    graph_builder.add_edge("fit_scaling_law", END)

    return graph_builder


scaling_study = create_study_graph().compile().with_config({"tags": ["scaling-study"]})


def run_study(config: ExperimentConfig, request: FitRequest) -> ScalingFit:
    result = scaling_study.invoke({"config": config, "fit_request": request})
    return result["fit"]

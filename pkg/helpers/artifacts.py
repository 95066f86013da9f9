import json
import logging
import shutil
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import pandas as pd

from wlexit.common.entities import ExitSummary, RunManifest

logger = logging.getLogger(__name__)

RAW_FILE = "raw.csv"
SUMMARY_FILE = "summary.csv"
MANIFEST_FILE = "manifest.json"
FIT_FILE = "fit.json"
FIT_TABLE_FILE = "fit.txt"
THETA_STAR_FILE = "theta_star.csv"
BIASED_GRID_FILE = "biased_potential.csv"

RAW_COLUMNS = ["grid_value", "replica", "exit_time", "capped"]
SUMMARY_COLUMNS = ["grid_value", "mean", "stderr", "median", "q10", "q90", "m_effective", "capped_count"]


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def raw_frame(grid_values: List[float], exit_times: List[List[List[Optional[int]]]], successive: int) -> pd.DataFrame:
    """Rows ordered by grid point, then replica, then exit index."""
    rows = []
    for grid_value, replicas in zip(grid_values, exit_times):
        for replica, durations in enumerate(replicas):
            for j, t in enumerate(durations):
                rows.append((grid_value, j + 1, replica, t, t is None))
    frame = pd.DataFrame(rows, columns=["grid_value", "exit_index", "replica", "exit_time", "capped"])
    frame["exit_time"] = frame["exit_time"].astype("Int64")
    frame["capped"] = frame["capped"].astype(int)
    if successive == 1:
        return frame[RAW_COLUMNS]
    return frame[["grid_value", "exit_index"] + RAW_COLUMNS[1:]]


def summary_frame(summaries: List[ExitSummary], successive: int) -> pd.DataFrame:
    frame = pd.DataFrame([s.model_dump() for s in summaries])
    if successive == 1:
        return frame[SUMMARY_COLUMNS]
    return frame[["exit_index"] + SUMMARY_COLUMNS]


def write_csv(frame: pd.DataFrame, path: Union[str, Path]) -> str:
    frame.to_csv(path, index=False)
    return str(path)


def write_json(data: Any, path: Union[str, Path]) -> str:
    Path(path).write_text(json.dumps(data, indent=2) + "\n")
    return str(path)


def write_manifest(manifest: RunManifest, path: Union[str, Path]) -> str:
    Path(path).write_text(manifest.model_dump_json(indent=2) + "\n")
    return str(path)


def load_config_json(path: Union[str, Path]) -> Dict[str, Any]:
    """Read an experiment config; a run manifest yields the config it echoes."""
    with open(path, "r") as f:
        data = json.load(f)
    if isinstance(data, dict) and "command" in data and "config" in data:
        return data["config"]
    return data


class ArtifactWriter:
    """Removes the files a failing command created in its output directory."""

    def __init__(self, out_dir: Union[str, Path]):
        self.out_dir = Path(out_dir)
        self._created_dir = False
        self._existing: set = set()

    def __enter__(self) -> Path:
        if not self.out_dir.exists():
            self.out_dir.mkdir(parents=True)
            self._created_dir = True
        self._existing = set(self.out_dir.iterdir())
        return self.out_dir

    def __exit__(self, exc_type, exc, tb) -> bool:
        if exc_type is None:
            return False
        if self._created_dir:
            shutil.rmtree(self.out_dir, ignore_errors=True)
            logger.info("removed partial output directory %s", self.out_dir)
            return False
        for path in set(self.out_dir.iterdir()) - self._existing:
            if path.is_file():
                path.unlink()
                logger.info("removed partial output %s", path)
        return False

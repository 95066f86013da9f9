import json

import pandas as pd
import pytest

from helpers.artifacts import (
    ArtifactWriter,
    load_config_json,
    raw_frame,
    summary_frame,
    write_manifest,
)
from helpers.grids import parse_grid
from wlexit.common.entities import ExitSummary, RunManifest


def test_parse_log_grid():
    grid = parse_grid("1e-2:1e-6:log5")
    assert grid == pytest.approx([1e-2, 1e-3, 1e-4, 1e-5, 1e-6])


def test_parse_lin_grid_and_lists():
    assert parse_grid("3:6:lin4") == pytest.approx([3.0, 4.0, 5.0, 6.0])
    assert parse_grid("0.5, 0.1,0.02") == [0.5, 0.1, 0.02]
    assert parse_grid("-3,3.5") == [-3.0, 3.5]
    assert parse_grid("2:9:lin1") == [2.0]


@pytest.mark.parametrize("text", ["", " , ", "a,b", "0:1:log3", "1:2:lin0"])
def test_parse_grid_rejects(text):
    with pytest.raises(ValueError):
        parse_grid(text)


def _summary(grid_value, exit_index=1):
    return ExitSummary(
        grid_value=grid_value, exit_index=exit_index, mean=2.0, stderr=0.5, median=2.0,
        q10=1.0, q90=3.0, m_effective=2, capped_count=1,
    )


def test_raw_frame_layout():
    frame = raw_frame([0.5, 0.2], [[[3], [None]], [[5], [7]]], successive=1)
    assert list(frame.columns) == ["grid_value", "replica", "exit_time", "capped"]
    assert frame["capped"].tolist() == [0, 1, 0, 0]
    assert frame["exit_time"].isna().tolist() == [False, True, False, False]

    successive = raw_frame([0.5], [[[3, 4], [None, None]]], successive=2)
    assert list(successive.columns) == ["grid_value", "exit_index", "replica", "exit_time", "capped"]
    assert successive["exit_index"].tolist() == [1, 2, 1, 2]


def test_summary_frame_layout():
    assert "exit_index" not in summary_frame([_summary(0.5)], successive=1).columns
    frame = summary_frame([_summary(0.5, 1), _summary(0.5, 2)], successive=2)
    assert frame.columns[0] == "exit_index"


def test_manifest_is_refeedable(tmp_path):
    manifest = RunManifest(
        command="toy-exit", version="0.1.0", seed=3, config={"model": "toy", "replicas": 4},
        started_at="2026-01-01T00:00:00+00:00", finished_at="2026-01-01T00:00:01+00:00",
    )
    path = write_manifest(manifest, tmp_path / "manifest.json")
    assert load_config_json(path) == {"model": "toy", "replicas": 4}

    plain = tmp_path / "config.json"
    plain.write_text(json.dumps({"model": "landscape2d"}))
    assert load_config_json(plain) == {"model": "landscape2d"}


def test_artifact_writer_removes_created_directory(tmp_path):
    out = tmp_path / "new"
    with pytest.raises(RuntimeError):
        with ArtifactWriter(out) as out_dir:
            (out_dir / "raw.csv").write_text("partial")
            raise RuntimeError("boom")
    assert not out.exists()


def test_artifact_writer_keeps_existing_files(tmp_path):
    (tmp_path / "keep.txt").write_text("old")
    with pytest.raises(RuntimeError):
        with ArtifactWriter(tmp_path) as out_dir:
            pd.DataFrame({"a": [1]}).to_csv(out_dir / "raw.csv", index=False)
            raise RuntimeError("boom")
    assert [p.name for p in tmp_path.iterdir()] == ["keep.txt"]


def test_artifact_writer_success_keeps_outputs(tmp_path):
    with ArtifactWriter(tmp_path / "ok") as out_dir:
        (out_dir / "fit.json").write_text("{}")
    assert (tmp_path / "ok" / "fit.json").exists()

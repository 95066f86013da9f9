import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

from helpers.artifacts import MANIFEST_FILE, RAW_COLUMNS, RAW_FILE, SUMMARY_COLUMNS, SUMMARY_FILE
from wlexit.exitlab.graph import recursion_limit, run_grid
from wlexit.exitlab.replicas import replica_rng, run_replicas, simulate_replica
from wlexit.exitlab.state import ExperimentConfig

CONFIGS = sorted((Path(__file__).parents[1] / "configs").glob("*.json"))


def test_config_validation(make_config):
    with pytest.raises(ValidationError):
        make_config(grid=[])
    with pytest.raises(ValidationError):
        make_config(grid=[0.1, 0.5, 0.2])
    with pytest.raises(ValidationError):
        make_config(grid=[2.0, 3.0])
    with pytest.raises(ValidationError):
        make_config(model="landscape2d", grid=[-1.0, 2.0])
    with pytest.raises(ValidationError):
        make_config(replicas=0)
    with pytest.raises(ValidationError):
        make_config(schedule={"gamma_star": 2.0, "alpha": 1.0}, update_rule="linearized")
    with pytest.raises(ValidationError):
        make_config(schedule={"gamma_star": 1.0, "alpha": 1.0}, toy_sampler="direct")
    with pytest.raises(ValidationError):
        make_config(toy_sampler="decomposition", successive=2)
    assert make_config(model="landscape2d", grid=[6.0, 5.0, 4.0]).geometry.d == 22


@pytest.mark.parametrize("path", CONFIGS, ids=lambda p: p.stem)
def test_shipped_configs_validate(path):
    config = ExperimentConfig.model_validate_json(path.read_text())
    assert config.output_path.startswith("runs/")


def test_replica_streams_are_keyed_and_distinct():
    base = replica_rng(3, 0, 0).random(10**4)
    np.testing.assert_array_equal(base, replica_rng(3, 0, 0).random(10**4))
    for key in [(3, 0, 1), (3, 1, 0), (4, 0, 0)]:
        assert not np.array_equal(base, replica_rng(*key).random(10**4))


def test_capped_replica_is_flagged_not_raised(make_config):
    config = make_config(grid=[0.01], step_cap=1)
    assert simulate_replica(config, 0, 0) == [None]
    successive = make_config(
        grid=[0.01], step_cap=1, successive=3, schedule={"gamma_star": 1.0, "alpha": 0.75}
    )
    assert simulate_replica(successive, 0, 0) == [None, None, None]


@pytest.mark.parametrize("sampler", ["adaptive", "direct", "decomposition"])
def test_toy_samplers_run(make_config, sampler):
    batch = run_replicas(make_config(toy_sampler=sampler), 1)
    assert batch.grid_value == 0.2
    assert len(batch.exit_times) == 50
    assert all(len(row) == 1 and row[0] >= 2 for row in batch.exit_times)


def test_replicas_do_not_depend_on_worker_count(make_config):
    serial = run_replicas(make_config(replicas=12), 0)
    parallel = run_replicas(make_config(replicas=12, workers=3), 0)
    assert serial.exit_times == parallel.exit_times


def test_landscape_replicas_record_successive_exits(make_config):
    config = make_config(
        model="landscape2d",
        grid=[2.0],
        schedule={"gamma_star": 1.0, "alpha": 0.6},
        replicas=3,
        successive=2,
    )
    batch = run_replicas(config, 0)
    assert all(len(row) == 2 and None not in row for row in batch.exit_times)


def test_run_grid_writes_the_file_trio(make_config, tmp_path):
    config = make_config(replicas=40)
    summaries = run_grid(config)
    assert [s.grid_value for s in summaries] == [0.5, 0.2]

    out = tmp_path / "run"
    raw = pd.read_csv(out / RAW_FILE)
    assert list(raw.columns) == RAW_COLUMNS
    assert len(raw) == 80
    assert list(raw["replica"][:3]) == [0, 1, 2]
    summary = pd.read_csv(out / SUMMARY_FILE)
    assert list(summary.columns) == SUMMARY_COLUMNS
    assert summary["m_effective"].tolist() == [40, 40]

    manifest = json.loads((out / MANIFEST_FILE).read_text())
    assert manifest["command"] == "toy-exit"
    assert manifest["seed"] == 7
    assert manifest["config"]["grid"] == [0.5, 0.2]
    assert set(manifest["outputs"]) == {"raw", "summary", "manifest"}


def test_run_grid_is_deterministic(make_config, tmp_path):
    first = make_config(output_path=str(tmp_path / "a"), schedule={"gamma_star": 1.0, "alpha": 0.75})
    second = first.model_copy(update={"output_path": str(tmp_path / "b")})
    run_grid(first)
    run_grid(second)
    assert (tmp_path / "a" / RAW_FILE).read_bytes() == (tmp_path / "b" / RAW_FILE).read_bytes()


def test_run_grid_flags_capped_replicas(make_config, tmp_path):
    run_grid(make_config(grid=[0.01], replicas=5, step_cap=1))
    raw = pd.read_csv(tmp_path / "run" / RAW_FILE)
    assert raw["capped"].tolist() == [1] * 5
    assert raw["exit_time"].isna().all()
    manifest = json.loads((tmp_path / "run" / MANIFEST_FILE).read_text())
    assert manifest["capped_replicas"] == 5


def test_successive_summaries_carry_exit_index(make_config, tmp_path):
    config = make_config(schedule={"gamma_star": 1.0, "alpha": 0.75}, successive=3, replicas=20)
    summaries = run_grid(config)
    assert [(s.grid_value, s.exit_index) for s in summaries] == [
        (0.5, 1), (0.5, 2), (0.5, 3), (0.2, 1), (0.2, 2), (0.2, 3)
    ]
    summary = pd.read_csv(tmp_path / "run" / SUMMARY_FILE)
    assert list(summary.columns) == ["exit_index"] + SUMMARY_COLUMNS
    raw = pd.read_csv(tmp_path / "run" / RAW_FILE)
    assert len(raw) == 2 * 20 * 3


def test_square_sum_diverges_is_recorded(make_config, tmp_path):
    run_grid(make_config(schedule={"gamma_star": 0.5, "alpha": 0.25}, replicas=5))
    manifest = json.loads((tmp_path / "run" / MANIFEST_FILE).read_text())
    assert manifest["square_sum_diverges"] is True


def test_recursion_limit_grows_with_the_grid(make_config):
    assert recursion_limit(make_config(grid=[0.5, 0.4, 0.3])) > recursion_limit(make_config(grid=[0.5]))

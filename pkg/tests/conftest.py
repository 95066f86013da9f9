import numpy as np
import pytest

from wlexit.common.entities import StepSchedule
from wlexit.exitlab.state import ExperimentConfig


@pytest.fixture
def rng():
    return np.random.default_rng(20140301)


@pytest.fixture
def plain():
    return StepSchedule(gamma_star=0.0, alpha=1.0)


@pytest.fixture
def make_config(tmp_path):
    """ExperimentConfig factory with quiet single-process defaults."""

    def _make(**overrides):
        data = {
            "model": "toy",
            "grid": [0.5, 0.2],
            "schedule": {"gamma_star": 0.0, "alpha": 1.0},
            "replicas": 50,
            "seed": 7,
            "output_path": str(tmp_path / "run"),
            "progress": False,
        }
        data.update(overrides)
        return ExperimentConfig.model_validate(data)

    return _make

"""Long runs of the 2D double well (tens of minutes each). Run with `pytest -m slow`."""

import numpy as np
import pytest

from wlexit.common.entities import StepSchedule
from wlexit.exitlab.graph import run_grid
from wlexit.exitlab.replicas import replica_rng
from wlexit.exitlab.state import ExperimentConfig
from wlexit.models.landscape2d import Landscape, run_exit_2d, stratum_occupancy, theta_star_quadrature
from wlexit.scalefit.fits import FitRequest, fit_summaries
from wlexit.wl_core import LogWeightVector

pytestmark = pytest.mark.slow

ALPHA_ONE_BETAS = [4.0, 5.0, 6.0, 7.0, 8.0]
POWER_BETAS = [5.0, 7.0, 9.0, 11.0, 13.0, 15.0]


def _landscape_config(make_config, grid, gamma_star, alpha, replicas, **overrides):
    return make_config(
        model="landscape2d",
        grid=grid,
        schedule={"gamma_star": gamma_star, "alpha": alpha},
        replicas=replicas,
        workers=0,
        **overrides,
    )


@pytest.fixture(scope="module")
def reference_rate(tmp_path_factory):
    config = ExperimentConfig(
        model="landscape2d",
        grid=[3.0, 4.0, 5.0, 6.0, 6.5],
        schedule=StepSchedule(gamma_star=0.0, alpha=1.0),
        replicas=200,
        seed=20140305,
        output_path=str(tmp_path_factory.mktemp("reference")),
        workers=0,
        progress=False,
    )
    return fit_summaries(run_grid(config), FitRequest(kind="exp-in-beta"), config.schedule)


def test_plain_chain_exit_grows_exponentially(reference_rate):
    assert reference_rate.r_squared >= 0.98
    assert 1.5 <= reference_rate.slope <= 3.2


@pytest.mark.parametrize("alpha, expected", [(0.5, 2.0), (0.25, 4.0 / 3.0)])
def test_power_law_in_beta(make_config, alpha, expected):
    config = _landscape_config(make_config, POWER_BETAS, 1.0, alpha, 500)
    fit = fit_summaries(run_grid(config), FitRequest(kind="power-in-beta"), config.schedule)
    assert fit.expected == pytest.approx(expected)
    assert abs(fit.slope - expected) <= 0.3


def test_alpha_one_rates_decrease_with_gain(make_config, tmp_path, reference_rate):
    rates = []
    for gamma_star in [1.0, 2.0, 4.0]:
        config = _landscape_config(
            make_config, ALPHA_ONE_BETAS, gamma_star, 1.0, 300, output_path=str(tmp_path / f"g{gamma_star:g}")
        )
        fit = fit_summaries(run_grid(config), FitRequest(kind="exp-in-beta"), config.schedule)
        assert fit.slope > reference_rate.slope / (1.0 + gamma_star)
        rates.append(fit.slope)
    assert rates[0] > rates[1] > rates[2]


def test_successive_exits_at_beta_ten(make_config):
    config = _landscape_config(make_config, [10.0], 1.0, 0.6, 500, successive=8)
    summaries = run_grid(config)
    medians = [s.median for s in summaries]
    assert 1.0 / 3.0 <= medians[1] / medians[0] <= 3.0
    assert all(m < medians[0] for m in medians[3:])


def test_plain_exit_slows_down_with_beta():
    plain = StepSchedule(gamma_star=0.0, alpha=1.0)
    cold = [run_exit_2d(Landscape(beta=7.0), plain, replica_rng(1, 0, r)) for r in range(200)]
    warm = [run_exit_2d(Landscape(beta=4.0), plain, replica_rng(1, 1, r)) for r in range(200)]
    assert np.mean(cold) > np.mean(warm)


def test_adaptive_speedup_at_beta_ten():
    landscape = Landscape(beta=10.0)
    adaptive = [run_exit_2d(landscape, StepSchedule(gamma_star=1.0, alpha=0.5), replica_rng(2, 0, r)) for r in range(50)]
    plain = [run_exit_2d(landscape, StepSchedule(gamma_star=0.0, alpha=1.0), replica_rng(2, 1, r)) for r in range(50)]
    assert np.mean(adaptive) < np.mean(plain) / 5.0


def test_flat_occupancy_under_converged_weights():
    landscape = Landscape(beta=10.0)
    theta = theta_star_quadrature(landscape)
    counts = stratum_occupancy(
        landscape,
        StepSchedule(gamma_star=0.0, alpha=1.0),
        2 * 10**7,
        replica_rng(3, 0, 0),
        LogWeightVector.from_array(np.log(theta.as_array())),
    )
    share = counts / counts.sum()
    assert np.max(np.abs(share * landscape.d - 1.0)) < 0.3


def test_plain_successive_exits_share_the_mean(make_config):
    config = _landscape_config(make_config, [5.0], 0.0, 1.0, 300, successive=3)
    summaries = run_grid(config)
    first = summaries[0]
    for later in summaries[1:]:
        spread = 3.0 * np.hypot(first.stderr, later.stderr)
        assert abs(later.mean - first.mean) <= spread


def test_runs_are_byte_identical(make_config, tmp_path):
    first = _landscape_config(make_config, [3.0, 4.0], 1.0, 0.75, 50, output_path=str(tmp_path / "a"))
    second = first.model_copy(update={"output_path": str(tmp_path / "b")})
    run_grid(first)
    run_grid(second)
    assert (tmp_path / "a" / "raw.csv").read_bytes() == (tmp_path / "b" / "raw.csv").read_bytes()

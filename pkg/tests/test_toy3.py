import math

import numpy as np
import pytest
from pydantic import ValidationError

from wlexit.common.entities import StepSchedule
from wlexit.common.errors import ExitNotReached
from wlexit.exitlab.stats import two_sample_chi2
from wlexit.models.toy3 import (
    ExitDecomposition,
    ToyModel,
    adaptive_kernel,
    expected_exit_nonadaptive,
    first_passage_survival,
    heuristic_exit_scale,
    n2_statistic,
    nonadaptive_kernel,
    predicted_successive_orders,
    predicted_window,
    sample_exit_adaptive,
    sample_exit_decomposition,
    sample_exit_nonadaptive,
    sample_successive_exits,
    target_weights,
    trace_exit_adaptive,
)
from wlexit.wl_core import WeightVector, normalize


def _within_three_se(samples, expected):
    values = np.asarray(samples, dtype=float)
    stderr = values.std(ddof=1) / math.sqrt(values.size)
    return abs(values.mean() - expected) <= 3.0 * stderr


def test_model_rejects_out_of_range_epsilon():
    with pytest.raises(ValidationError):
        ToyModel(epsilon=1.0)
    with pytest.raises(ValidationError):
        ToyModel(epsilon=0.0)


def test_target_weights():
    theta = target_weights(ToyModel(epsilon=0.5))
    assert theta.weights == pytest.approx((0.4, 0.2, 0.4))
    assert theta.weights[0] == theta.weights[2]


def test_nonadaptive_kernel_rows():
    kernel = nonadaptive_kernel(ToyModel(epsilon=0.3))
    assert kernel[0] == pytest.approx((0.9, 0.1, 0.0))
    assert kernel.sum(axis=1) == pytest.approx(np.ones(3))
    assert kernel[1] == pytest.approx(nonadaptive_kernel(ToyModel(epsilon=0.01))[1])


def test_adaptive_kernel_example():
    kernel = adaptive_kernel(WeightVector(weights=(0.6, 0.2, 0.2)), ToyModel(epsilon=0.5))
    assert kernel[0, 1] == pytest.approx(1 / 3)
    assert kernel[1, 0] == pytest.approx(2 / 9)
    assert kernel[1, 2] == pytest.approx(1 / 3)
    assert kernel[2, 1] == pytest.approx(1 / 6)
    assert kernel[0, 2] == kernel[2, 0] == 0.0


def test_adaptive_kernel_is_stochastic_and_reduces_to_plain(rng):
    for _ in range(10**4):
        model = ToyModel(epsilon=float(rng.uniform(1e-6, 0.999)))
        theta = WeightVector.from_array(rng.dirichlet(np.ones(3)))
        kernel = adaptive_kernel(theta, model)
        assert np.all(kernel >= 0.0)
        np.testing.assert_allclose(kernel.sum(axis=1), 1.0, atol=1e-12)
        np.testing.assert_allclose(
            adaptive_kernel(WeightVector.uniform(3), model), nonadaptive_kernel(model), atol=1e-12
        )


def test_adaptive_kernel_needs_three_strata():
    with pytest.raises(ValueError):
        adaptive_kernel(WeightVector.uniform(4), ToyModel(epsilon=0.5))


def test_expected_exit_nonadaptive():
    assert expected_exit_nonadaptive(ToyModel(epsilon=0.5)) == 15.0
    assert expected_exit_nonadaptive(ToyModel(epsilon=0.01)) == pytest.approx(603.0)
    eps = 0.04
    assert eps / 6 * expected_exit_nonadaptive(ToyModel(epsilon=eps)) == pytest.approx(1 + eps / 2)


def test_direct_sampler_mean(rng):
    samples = [sample_exit_nonadaptive(ToyModel(epsilon=0.1), rng) for _ in range(20000)]
    assert min(samples) >= 2
    assert _within_three_se(samples, 63.0)


def test_direct_sampler_hits_step_cap(rng):
    with pytest.raises(ExitNotReached) as info:
        sample_exit_nonadaptive(ToyModel(epsilon=1e-6), rng, step_cap=5)
    assert info.value.step_cap == 5


@pytest.mark.parametrize("representation", ["sojourns", "marginals"])
def test_decomposition_mean(representation, rng):
    model = ToyModel(epsilon=0.2)
    samples = [sample_exit_decomposition(model, rng, representation) for _ in range(20000)]
    assert min(samples) >= 2
    assert _within_three_se(samples, 33.0)


def test_decomposition_matches_direct_simulation(rng):
    model = ToyModel(epsilon=0.2)
    direct = [sample_exit_nonadaptive(model, rng) for _ in range(20000)]
    decomposed = [sample_exit_decomposition(model, rng) for _ in range(20000)]
    _, p_value = two_sample_chi2(direct, decomposed)
    assert p_value > 1e-3


def test_adaptive_sampler_without_gain_is_the_plain_chain(plain, rng):
    model = ToyModel(epsilon=0.1)
    samples = []
    for _ in range(10000):
        t, weights = sample_exit_adaptive(model, plain, rng)
        samples.append(t)
    assert weights.log_weights == (0.0, 0.0, 0.0)
    assert _within_three_se(samples, 63.0)


def test_adaptive_final_weights_record_the_visits(rng):
    schedule = StepSchedule(gamma_star=1.0, alpha=1.0)
    t, weights = sample_exit_adaptive(ToyModel(epsilon=0.01), schedule, rng)
    # every step multiplies one theta~ by (1 + 1/n): the log weights add up to ln Xi_T = ln(T + 1)
    assert sum(weights.log_weights) == pytest.approx(math.log(t + 1.0))
    assert weights.log_weights[2] == pytest.approx(math.log1p(1.0 / t))


def test_adaptive_alpha_one_median_in_window(rng):
    model = ToyModel(epsilon=1e-4)
    schedule = StepSchedule(gamma_star=1.0, alpha=1.0)
    samples = [sample_exit_adaptive(model, schedule, rng)[0] for _ in range(500)]
    window = predicted_window(model, schedule)
    assert window.scale == pytest.approx(100.0)
    assert window.a_eps <= np.median(samples) <= window.b_eps


def test_adaptive_linearized_rule_runs(rng):
    schedule = StepSchedule(gamma_star=0.5, alpha=0.75)
    t, weights = sample_exit_adaptive(ToyModel(epsilon=1e-3), schedule, rng, update_rule="linearized")
    assert t >= 2
    assert sum(normalize(weights).weights) == pytest.approx(1.0)


def test_n2_is_at_least_one_with_mean_three(rng):
    model = ToyModel(epsilon=1e-3)
    schedule = StepSchedule(gamma_star=1.0, alpha=0.75)
    counts = np.array([n2_statistic(model, schedule, rng) for _ in range(10000)])
    assert counts.min() >= 1
    assert _within_three_se(counts, 3.0)
    for n in range(1, 6):
        p = (2 / 3) ** (n - 1)
        se = math.sqrt(p * (1 - p) / counts.size) if p < 1 else 0.0
        assert abs(np.mean(counts >= n) - p) <= 3.0 * se + 1e-12


def test_trace_reconstructs_exit_time(rng):
    model = ToyModel(epsilon=0.05)
    schedule = StepSchedule(gamma_star=1.0, alpha=0.75)
    for _ in range(300):
        t, decomposition, _ = trace_exit_adaptive(model, schedule, rng)
        assert decomposition.total == t
        assert decomposition.returns_21 <= decomposition.n2
        assert all(s >= 1 for s in decomposition.sojourns_12)


def test_trace_of_plain_chain_has_the_closed_form_mean(plain, rng):
    model = ToyModel(epsilon=0.2)
    samples = [trace_exit_adaptive(model, plain, rng)[0] for _ in range(5000)]
    assert _within_three_se(samples, 33.0)


def test_exit_decomposition_validation():
    with pytest.raises(ValidationError):
        ExitDecomposition(t0_12=3, returns_21=2, sojourns_12=[4], n2=3)
    with pytest.raises(ValidationError):
        ExitDecomposition(t0_12=3, returns_21=2, sojourns_12=[4, 1], n2=1)
    assert ExitDecomposition(t0_12=3, returns_21=1, sojourns_12=[4], n2=2).total == 9


def test_successive_exits_of_plain_chain(plain, rng):
    model = ToyModel(epsilon=0.2)
    runs = np.array([sample_successive_exits(model, plain, 3, rng) for _ in range(5000)])
    assert runs.shape == (5000, 3)
    assert runs.min() >= 2
    for j in range(3):
        assert _within_three_se(runs[:, j], 33.0)


def test_successive_exits_rejects_zero(plain, rng):
    with pytest.raises(ValueError):
        sample_successive_exits(ToyModel(epsilon=0.5), plain, 0, rng)


def test_predicted_window_examples():
    window = predicted_window(ToyModel(epsilon=math.exp(-10.0)), StepSchedule(gamma_star=1.0, alpha=0.5))
    assert window.scale == pytest.approx(25.0)
    assert (window.a_eps, window.b_eps) == pytest.approx((12.5, 50.0))

    wide = predicted_window(ToyModel(epsilon=1e-4), StepSchedule(gamma_star=1.0, alpha=1.0), slack=4.0)
    assert (wide.a_eps, wide.b_eps) == pytest.approx((25.0, 400.0))

    tiny_gain = predicted_window(ToyModel(epsilon=1e-4), StepSchedule(gamma_star=1e-9, alpha=1.0))
    assert tiny_gain.scale == pytest.approx(1e4, rel=1e-6)

    with pytest.raises(ValueError):
        predicted_window(ToyModel(epsilon=1e-4), StepSchedule(gamma_star=1.0, alpha=0.4))


def test_predicted_successive_orders():
    model = ToyModel(epsilon=1e-4)
    first, second = predicted_successive_orders(model, StepSchedule(gamma_star=1.0, alpha=0.75))
    assert second / first == pytest.approx(16.0)
    orders = predicted_successive_orders(model, StepSchedule(gamma_star=1.0, alpha=1.0))
    assert orders == pytest.approx((100.0, 1e4**0.75, 1e4**0.625, 1e4**0.75))


def test_heuristic_exit_scale():
    model = ToyModel(epsilon=0.01)
    assert heuristic_exit_scale(model, StepSchedule(gamma_star=0.0, alpha=1.0)).n_eps == 100
    scale = heuristic_exit_scale(model, StepSchedule(gamma_star=1.0, alpha=1.0))
    # sum_{k<n} (k + 1) = n (n + 1) / 2 first exceeds 100 at n = 14
    assert scale.n_eps == 14
    assert scale.asymptote == pytest.approx(math.sqrt(200.0))


def test_first_passage_survival():
    model = ToyModel(epsilon=0.3)
    assert first_passage_survival(model, StepSchedule(gamma_star=0.0, alpha=1.0), 0) == 1.0
    assert first_passage_survival(model, StepSchedule(gamma_star=0.0, alpha=1.0), 5) == pytest.approx(0.9**5)
    adaptive = first_passage_survival(ToyModel(epsilon=0.1), StepSchedule(gamma_star=1.0, alpha=1.0), 3)
    assert adaptive == pytest.approx((1 - 0.1 / 3) * (1 - 0.2 / 3) * (1 - 0.3 / 3))

import numpy as np
import pytest
from randstop.exceptions import ConfigurationError, NumericFault
from randstop.optimize import AdamState, OptimizerConfig, adam_step
from randstop.optimize.ascent import maximize


def _reference_adam(gradients, cfg):
    theta, m, v = 0.0, 0.0, 0.0
    for t, g in enumerate(gradients, start=1):
        m = cfg.beta1 * m + (1 - cfg.beta1) * g
        v = cfg.beta2 * v + (1 - cfg.beta2) * g * g
        m_hat = m / (1 - cfg.beta1**t)
        v_hat = v / (1 - cfg.beta2**t)
        theta += cfg.step_size * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
    return theta


def test_matches_scalar_reference():
    cfg = OptimizerConfig(step_size=0.05)
    gradients = [2.0, -1.0, 0.5, 3.0]
    state = AdamState(np.zeros(1))
    for t, g in enumerate(gradients, start=1):
        adam_step(state, np.array([g]), t, cfg)
    assert state.params[0] == pytest.approx(_reference_adam(gradients, cfg), rel=1e-14)


def test_first_step_size():
    state = AdamState(np.zeros(2))
    adam_step(state, np.array([2.0, -7.0]), 1, OptimizerConfig(step_size=0.05))
    np.testing.assert_allclose(state.params, [0.05, -0.05], rtol=1e-7)


def test_rejects_bad_gradients():
    state = AdamState(np.zeros(2))
    with pytest.raises(NumericFault):
        adam_step(state, np.array([np.nan, 0.0]), 1, OptimizerConfig())
    with pytest.raises(ValueError):
        adam_step(state, np.zeros(3), 1, OptimizerConfig())


def _quadratic(theta, indices=None):
    return -float(np.sum((theta - 3.0) ** 2)), -2.0 * (theta - 3.0)


def test_maximize_concave_quadratic():
    cfg = OptimizerConfig(step_size=0.1, max_iters=2000, tol_rel=0.0)
    theta, report = maximize(_quadratic, np.zeros(2), 1, cfg, stream_key=0)
    np.testing.assert_allclose(theta, 3.0, atol=0.05)
    assert report.final_objective >= report.objective_trace[0]
    assert report.final_objective == max(report.objective_trace)


def test_restarts_pick_best():
    cfg = OptimizerConfig(step_size=0.1, max_iters=50, restarts=3, init_noise=0.5)
    _, report = maximize(_quadratic, np.zeros(2), 1, cfg, stream_key=0)
    assert len(report.restart_objectives) == 3
    assert report.final_objective == max(report.restart_objectives)
    assert report.restart_objectives[report.restart_index_selected] == report.final_objective


def test_nan_objective_faults():
    cfg = OptimizerConfig(max_iters=10, restarts=2)
    with pytest.raises(NumericFault):
        maximize(lambda theta, idx: (float("nan"), np.zeros(1)), np.zeros(1), 1, cfg, 0)


def test_unresolved_config():
    with pytest.raises(ValueError):
        maximize(_quadratic, np.zeros(1), 1, OptimizerConfig(), stream_key=0)


def test_minibatch_runs_on_full_batch_objective():
    rng = np.random.default_rng(0)
    targets = rng.normal(1.0, 0.5, size=200)

    def objective(theta, indices=None):
        t = targets if indices is None else targets[indices]
        return -float(np.mean((theta[0] - t) ** 2)), np.array([-2.0 * np.mean(theta[0] - t)])

    cfg = OptimizerConfig(step_size=0.05, max_iters=400, minibatch=32, tol_rel=0.0)
    theta, report = maximize(objective, np.zeros(1), 200, cfg, stream_key=0)
    assert theta[0] == pytest.approx(np.mean(targets), abs=0.1)
    assert report.final_objective >= report.objective_trace[0]


@pytest.mark.parametrize(
    "field,value",
    [
        ("step_size", 0.0),
        ("beta1", 1.0),
        ("restarts", 0),
        ("window", 0),
        ("method", "sgd"),
        ("init", "random"),
        ("whiten", "yes"),
    ],
)
def test_invalid_config(field, value):
    with pytest.raises(ConfigurationError) as e:
        OptimizerConfig(**{field: value})
    assert e.value.field == field


def test_resolved_budgets():
    assert OptimizerConfig().resolved("backward").max_iters == 300
    assert OptimizerConfig().resolved("forward").max_iters == 1000
    assert OptimizerConfig(max_iters=7).resolved("forward").max_iters == 7


def test_from_dict_rejects_unknown():
    with pytest.raises(ConfigurationError):
        OptimizerConfig.from_dict({"learning_rate": 0.1})

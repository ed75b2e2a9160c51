import numpy as np
import pytest
from randstop.features import Standardizer
from randstop.oracle import finite_difference_gradient
from randstop.policy import Policy, PolicyMode, eval_h, eval_h_grad, make_policy_template


@pytest.mark.parametrize("link,expected", [("logistic", 0.5), ("gumbel", 1 - np.exp(-1))])
def test_zero_template(small_model, small_paths, link, expected):
    policy = make_policy_template("per_date", link, 3, small_model.dates, small_paths.states)
    h = eval_h(policy, 1, small_paths.states[:, 1], small_model.dates[1])
    np.testing.assert_allclose(h, expected, rtol=1e-15)


def test_template_shapes(small_model, small_paths):
    per_date = make_policy_template("per_date", "gumbel", 3, small_model.dates, small_paths.states)
    assert len(per_date.feature_maps) == small_model.num_dates
    assert per_date.num_features == 10
    timed = make_policy_template(
        "time_dependent", "gumbel", 4, small_model.dates, small_paths.states
    )
    assert len(timed.coefficients) == 1
    assert timed.num_features == 35
    assert timed.state_dim == 2


def test_template_without_sample(small_model):
    policy = make_policy_template("per_date", "logistic", 2, small_model.dates, dim=2)
    assert policy.feature_maps[0].standardizer == Standardizer.identity(2)
    with pytest.raises(ValueError):
        make_policy_template("per_date", "logistic", 2, small_model.dates)


def test_terminal_date_is_one(random_policy, small_model):
    policy = random_policy()
    assert eval_h(policy, 4, np.zeros(2), small_model.dates[4]) == 1.0
    np.testing.assert_array_equal(eval_h(policy, 4, np.zeros((3, 2)), 1.0), 1.0)
    with pytest.raises(ValueError):
        eval_h_grad(policy, 4, np.zeros(2), 1.0)
    with pytest.raises(ValueError):
        eval_h(policy, 5, np.zeros(2), 1.0)


def test_scalar_state(random_policy):
    assert isinstance(eval_h(random_policy(), 2, np.array([0.1, -0.1]), 0.5), float)


@pytest.mark.parametrize("link", ["logistic", "gumbel"])
@pytest.mark.parametrize("mode", ["per_date", "time_dependent"])
def test_gradient_matches_finite_differences(random_policy, small_model, link, mode):
    rng = np.random.default_rng(1)
    for seed in range(5):
        policy = random_policy(mode=mode, link=link, seed=seed)
        j = int(rng.integers(0, small_model.num_dates))
        state = rng.normal(0.0, 0.2, size=2)
        t_j = small_model.dates[j]
        h, grad = eval_h_grad(policy, j, state, t_j)
        assert h == pytest.approx(eval_h(policy, j, state, t_j), rel=1e-15)

        def f(theta):
            return eval_h(policy.with_coefficients(j, theta), j, state, t_j)

        fd = finite_difference_gradient(f, policy.theta_at(j), step=1e-6)
        np.testing.assert_allclose(grad, fd, rtol=1e-5, atol=1e-8)


def test_gradient_vectorized(random_policy, small_paths, small_model):
    policy = random_policy(link="gumbel")
    h, grad = eval_h_grad(policy, 1, small_paths.states[:, 1], small_model.dates[1])
    assert h.shape == (300,)
    assert grad.shape == (300, policy.num_features)


def test_with_coefficients_checks_length(random_policy):
    with pytest.raises(ValueError):
        random_policy().with_coefficients(0, np.zeros(3))


def test_json_round_trip(random_policy, small_paths, small_model, tmpdir):
    policy = random_policy(mode="time_dependent", link="gumbel", degree=3)
    policy.write_to_json(tmpdir / "policy.json")
    loaded = Policy.from_json(tmpdir / "policy.json")
    assert loaded.mode is PolicyMode.TIME_DEPENDENT
    assert loaded.fingerprint() == policy.fingerprint()
    for j in range(small_model.num_dates):
        np.testing.assert_array_equal(
            eval_h(loaded, j, small_paths.states[:, j], small_model.dates[j]),
            eval_h(policy, j, small_paths.states[:, j], small_model.dates[j]),
        )


def test_fingerprint_tracks_coefficients(random_policy):
    assert random_policy(seed=0).fingerprint() != random_policy(seed=1).fingerprint()

import numpy as np
import pytest
from randstop.market import MarketModel, simulate_paths
from randstop.policy import make_policy_template


@pytest.fixture
def small_model():
    return MarketModel(
        dim=2, spot=100.0, strike=100.0, rate=0.05, dividend=0.1, vol=0.2, maturity=1.0, num_dates=4
    )


@pytest.fixture
def small_paths(small_model):
    return simulate_paths(small_model, 300, seed=17)


@pytest.fixture
def random_policy(small_model, small_paths):
    """Factory for policies with random coefficients of the given scale."""

    def _make(mode="per_date", link="logistic", degree=2, scale=0.3, seed=0):
        policy = make_policy_template(
            mode, link, degree, small_model.dates, sample_states=small_paths.states
        )
        rng = np.random.default_rng(seed)
        for j in range(len(policy.coefficients)):
            theta = rng.normal(0.0, scale, size=policy.num_features)
            policy = policy.with_coefficients(j, theta)
        return policy

    return _make

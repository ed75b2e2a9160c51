"""Ground truth for tests: exact values on finite chains and closed-form references."""

import dataclasses
import itertools
import json
import logging
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy.stats import norm

from randstop import parallel
from randstop.estimate import EstimateReport, EvaluationMode, mean_and_interval
from randstop.exceptions import ConfigurationError, NumericFault
from randstop.market import MarketModel, PathSet
from randstop.payoff import PayoffKind, PayoffSpec
from randstop.stopping import tail_values
from randstop.utils import STREAM_CHAIN, STREAM_TERMINAL, fingerprint, make_generator

logger = logging.getLogger(__name__)

MAX_ENUMERATED_PATHS = 10**6
ROW_SUM_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class FiniteChain:
    """Markov chain on states ``0..S-1`` with a discounted reward table.

    Attributes:
        transition: ``[J, S, S]``, row ``transition[j, s]`` is the law of ``X_{j+1}`` given ``X_j = s``.
        rewards: ``[J + 1, S]`` nonnegative ``Z_j`` per state.
        state_features: ``[S, d_f]`` vectors a policy sees in place of the state
            label; defaults to the label itself as a single feature.
    """

    transition: np.ndarray
    rewards: np.ndarray
    initial_state: int = 0
    state_features: Optional[np.ndarray] = None

    def __post_init__(self):
        transition = np.array(self.transition, dtype=float)
        rewards = np.array(self.rewards, dtype=float)
        if transition.ndim != 3 or transition.shape[1] != transition.shape[2]:
            raise ConfigurationError(
                f"expected a [J, S, S] array, got shape {transition.shape}", "transition"
            )
        num_dates, num_states = transition.shape[:2]
        if num_dates < 1:
            raise ConfigurationError("needs at least one transition", "transition")
        if rewards.shape != (num_dates + 1, num_states):
            raise ConfigurationError(
                f"expected shape {(num_dates + 1, num_states)}, got {rewards.shape}", "rewards"
            )
        if np.any(transition < 0) or np.any(
            np.abs(transition.sum(axis=2) - 1.0) > ROW_SUM_TOLERANCE
        ):
            raise ConfigurationError("rows must be probability vectors", "transition")
        if np.any(rewards < 0) or not np.all(np.isfinite(rewards)):
            raise ConfigurationError("must be finite and >= 0", "rewards")
        if not 0 <= self.initial_state < num_states:
            raise ConfigurationError(
                f"must lie in 0..{num_states - 1}, got {self.initial_state}", "initial_state"
            )
        if self.state_features is None:
            features = np.arange(num_states, dtype=float)[:, None]
        else:
            features = np.array(self.state_features, dtype=float)
            if features.ndim == 1:
                features = features[:, None]
            if features.shape[0] != num_states:
                raise ConfigurationError(
                    f"expected {num_states} rows, got {features.shape[0]}", "state_features"
                )
        for array in (transition, rewards, features):
            array.setflags(write=False)
        object.__setattr__(self, "transition", transition)
        object.__setattr__(self, "rewards", rewards)
        object.__setattr__(self, "initial_state", int(self.initial_state))
        object.__setattr__(self, "state_features", features)

    @property
    def num_dates(self) -> int:
        return self.transition.shape[0]

    @property
    def num_states(self) -> int:
        return self.transition.shape[1]

    @property
    def dim(self) -> int:
        return self.state_features.shape[1]

    @property
    def dates(self) -> Tuple[float, ...]:
        return tuple(float(j) for j in range(self.num_dates + 1))

    @property
    def payoff_spec(self) -> PayoffSpec:
        return PayoffSpec(kind=PayoffKind.CUSTOM_TABLE)

    def simulate_block(self, block: int, start: int, stop: int, seed: int) -> PathSet:
        """Chain paths ``start..stop-1`` by inverse-CDF sampling of each transition row."""
        rng = make_generator(seed, STREAM_CHAIN, block)
        num = stop - start
        uniforms = rng.random((num, self.num_dates))
        cdf = np.cumsum(self.transition, axis=2)
        index = np.empty((num, self.num_dates + 1), dtype=np.int64)
        index[:, 0] = self.initial_state
        for j in range(self.num_dates):
            rows = cdf[j, index[:, j]]
            nxt = np.sum(rows <= uniforms[:, j, None], axis=1)
            index[:, j + 1] = np.minimum(nxt, self.num_states - 1)
        return PathSet(
            states=self.state_features[index],
            payoffs=None,
            num_paths=num,
            seed=seed,
            state_index=index,
        )

    def to_dict(self) -> Dict:
        return {
            "transition": self.transition.tolist(),
            "rewards": self.rewards.tolist(),
            "initial_state": self.initial_state,
            "state_features": self.state_features.tolist(),
        }

    @classmethod
    def from_dict(cls, chain_dict: Dict) -> "FiniteChain":
        field_names = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in chain_dict.items() if k in field_names})

    def write_to_json(self, chain_file, pretty_print=False):
        with open(chain_file, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=4 if pretty_print else None)

    @classmethod
    def from_json(cls, chain_file) -> "FiniteChain":
        with open(chain_file, "r", encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

    def fingerprint(self) -> str:
        return fingerprint(self.to_dict())


def random_chain(
    num_states: int, num_dates: int, seed: int, feature_dim: int = 1, max_reward: float = 10.0
) -> FiniteChain:
    """Chain with Dirichlet(1) transition rows and uniform rewards in ``[0, max_reward)``."""
    rng = make_generator(seed)
    return FiniteChain(
        transition=rng.dirichlet(np.ones(num_states), size=(num_dates, num_states)),
        rewards=rng.uniform(0.0, max_reward, size=(num_dates + 1, num_states)),
        initial_state=int(rng.integers(num_states)),
        state_features=rng.standard_normal((num_states, feature_dim)),
    )


def dp_value(chain: FiniteChain) -> Tuple[float, np.ndarray]:
    """Snell envelope at the initial state and the optimal stopping regions.

    ``stop_regions[j, s]`` is True where ``Z_j(s) >= E[Y*_{j+1} | X_j = s]``;
    the last row is all True.
    """
    num_dates = chain.num_dates
    stop_regions = np.ones((num_dates + 1, chain.num_states), dtype=bool)
    value = np.array(chain.rewards[num_dates])
    for j in range(num_dates - 1, -1, -1):
        continuation = chain.transition[j] @ value
        stop_regions[j] = chain.rewards[j] >= continuation
        value = np.maximum(chain.rewards[j], continuation)
    return float(value[chain.initial_state]), stop_regions


def brute_force_randomized_value(chain: FiniteChain, h_table: np.ndarray) -> float:
    """Exact ``E[sum_j Z_j p_{0,j}]`` by summing over every trajectory.

    ``h_table[j, s]`` is the exercise probability in state ``s`` at date ``j``;
    the last row is treated as 1 whatever it holds.
    """
    h_table = np.asarray(h_table, dtype=float)
    num_dates, num_states = chain.num_dates, chain.num_states
    if h_table.shape != (num_dates + 1, num_states):
        raise ValueError(
            f"h table of shape {h_table.shape} does not match {(num_dates + 1, num_states)}"
        )
    num_paths = num_states**num_dates
    if num_paths > MAX_ENUMERATED_PATHS:
        raise ValueError(
            f"{num_states}^{num_dates} trajectories exceed the enumeration limit "
            f"of {MAX_ENUMERATED_PATHS}"
        )

    tails = np.array(list(itertools.product(range(num_states), repeat=num_dates)), dtype=np.int64)
    index = np.empty((num_paths, num_dates + 1), dtype=np.int64)
    index[:, 0] = chain.initial_state
    index[:, 1:] = tails

    dates = np.arange(num_dates + 1)
    probability = np.ones(num_paths)
    for j in range(num_dates):
        probability *= chain.transition[j, index[:, j], index[:, j + 1]]
    h = h_table[dates[None, :], index]
    payoffs = chain.rewards[dates[None, :], index]
    return float(np.sum(probability * tail_values(h, payoffs)))


def european_reference(
    model: MarketModel, num_paths: int, seed: int, threads: Optional[int] = None
) -> EstimateReport:
    """Plain Monte Carlo of ``exp(-rT) max_i (S_T^i - K)_+``, exercise at maturity only."""
    if int(num_paths) != num_paths or num_paths < 1:
        raise ValueError(f"num_paths must be >= 1, got {num_paths}")
    maturity = model.maturity
    discount = np.exp(-model.rate * maturity)

    def _block(block, start, stop):
        rng = make_generator(seed, STREAM_TERMINAL, block)
        zeta = rng.standard_normal((stop - start, model.dim))
        terminal = model.vol * np.sqrt(maturity) * zeta + model.drift * maturity
        prices = model.prices(terminal)
        return discount * np.maximum(np.max(prices, axis=1) - model.strike, 0.0)

    values = np.concatenate(parallel.map_blocks(_block, int(num_paths), threads=threads))
    estimate, std_error, ci_low, ci_high = mean_and_interval(values)
    logger.info(f"European reference over {num_paths} paths: {estimate:.3f} (s.e. {std_error:.3f})")
    return EstimateReport(
        estimate=estimate,
        std_error=std_error,
        ci_low=ci_low,
        ci_high=ci_high,
        num_paths=int(num_paths),
        evaluation_mode=EvaluationMode.EXPECTATION,
        seed=seed,
    )


def finite_difference_gradient(
    f: Callable[[np.ndarray], float], theta: np.ndarray, step: float = 1e-6
) -> np.ndarray:
    """Central differences ``(f(theta + h e_i) - f(theta - h e_i)) / 2h``."""
    theta = np.asarray(theta, dtype=float)
    grad = np.empty_like(theta)
    for i in range(theta.size):
        shift = np.zeros_like(theta)
        shift.flat[i] = step
        upper, lower = f(theta + shift), f(theta - shift)
        if not (np.isfinite(upper) and np.isfinite(lower)):
            raise NumericFault(f"objective is not finite around coordinate {i}")
        grad.flat[i] = (upper - lower) / (2.0 * step)
    return grad


def black_scholes_call(
    spot: float, strike: float, rate: float, dividend: float, vol: float, maturity: float
) -> float:
    if vol == 0 or maturity == 0:
        forward = spot * np.exp((rate - dividend) * maturity)
        return float(np.exp(-rate * maturity) * max(forward - strike, 0.0))
    sqrt_t = vol * np.sqrt(maturity)
    d1 = (np.log(spot / strike) + (rate - dividend + 0.5 * vol**2) * maturity) / sqrt_t
    d2 = d1 - sqrt_t
    return float(
        spot * np.exp(-dividend * maturity) * norm.cdf(d1)
        - strike * np.exp(-rate * maturity) * norm.cdf(d2)
    )


def bermudan_binomial_price(model: MarketModel, steps_per_date: int = 200) -> float:
    """Cox-Ross-Rubinstein price of the one-asset Bermudan call, exercisable on the grid dates."""
    if model.dim != 1:
        raise ValueError(f"the binomial tree prices one asset, got dim={model.dim}")
    if steps_per_date < 1:
        raise ValueError(f"steps_per_date must be >= 1, got {steps_per_date}")
    dates = np.asarray(model.dates)
    spot = model.spot[0]
    intervals = np.diff(dates)
    if not np.allclose(intervals, intervals[0], rtol=1e-12, atol=0.0):
        raise ValueError(f"the binomial tree needs a uniform date grid, got {model.dates}")

    # each interval gets the same number of tree steps
    dt = (dates[-1] - dates[0]) / (model.num_dates * steps_per_date)
    up = np.exp(model.vol * np.sqrt(dt))
    down = 1.0 / up
    prob = (np.exp((model.rate - model.dividend) * dt) - down) / (up - down)
    if not 0 < prob < 1:
        raise ValueError(f"tree step of {dt} gives risk-neutral probability {prob}")
    discount = np.exp(-model.rate * dt)

    num_steps = model.num_dates * steps_per_date
    ups = np.arange(num_steps + 1)
    value = np.maximum(spot * up**ups * down ** (num_steps - ups) - model.strike, 0.0)
    for step in range(num_steps - 1, -1, -1):
        value = discount * (prob * value[1:] + (1.0 - prob) * value[:-1])
        if step % steps_per_date == 0:
            ups = np.arange(step + 1)
            exercise = np.maximum(spot * up**ups * down ** (step - ups) - model.strike, 0.0)
            value = np.maximum(value, exercise)
    return float(value[0])

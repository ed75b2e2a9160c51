import dataclasses
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np

from randstop.exceptions import ConfigurationError

if TYPE_CHECKING:
    from randstop.market import MarketModel, PathSet


class PayoffKind(str, Enum):
    MAX_CALL = "max_call"
    CUSTOM_TABLE = "custom_table"


@dataclass(frozen=True)
class PayoffSpec:
    """Discounted reward ``Z_j = G_j(X_j)``.

    ``custom_table`` reads ``Z_j`` from a finite chain's reward table and is
    only meaningful for chain paths.
    """

    kind: PayoffKind = PayoffKind.MAX_CALL
    strike: float = 0.0
    rate: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", PayoffKind(self.kind))
        if not self.strike >= 0:
            raise ConfigurationError(f"must be >= 0, got {self.strike}", "strike")


def _discounted_max_call(prices: np.ndarray, strike: float, discount) -> np.ndarray:
    return discount * np.maximum(np.max(prices, axis=-1) - strike, 0.0)


def max_call_payoff(states_at_j, model: "MarketModel", t_j: float) -> float:
    """``exp(-r t_j) max_i (S_0^i exp(x_i) - K)_+`` for one d-vector of log-prices."""
    prices = model.prices(np.asarray(states_at_j, dtype=float))
    return float(_discounted_max_call(prices, model.strike, np.exp(-model.rate * t_j)))


def fill_payoffs(paths: "PathSet", spec: PayoffSpec, model) -> "PathSet":
    """Return ``paths`` with ``payoffs[m, j] = Z_j(states[m, j])`` cached."""
    if spec.kind is PayoffKind.CUSTOM_TABLE:
        rewards = getattr(model, "rewards", None)
        if rewards is None or paths.state_index is None:
            raise ConfigurationError(
                "custom_table payoffs need a finite chain and chain paths", "kind"
            )
        dates = np.arange(paths.num_dates + 1)
        payoffs = np.asarray(rewards)[dates[None, :], paths.state_index]
    else:
        discount = np.exp(-spec.rate * np.asarray(model.dates))
        payoffs = _discounted_max_call(
            model.prices(paths.states), spec.strike, discount[None, :]
        )
    return dataclasses.replace(paths, payoffs=payoffs)

"""Randomized stopping algebra over a set of paths.

For exercise probabilities ``h_j`` the probability of stopping at ``j`` when
starting at ``k`` is ``p_{k,j} = h_j(X_j) prod_{l=k}^{j-1} (1 - h_l(X_l))``,
with ``h_J = 1`` and empty products equal to 1.
"""

import logging
from dataclasses import dataclass

import numpy as np

from randstop.market import PathSet
from randstop.policy import Policy, eval_h

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class StoppingProfile:
    """Per-path exercise probabilities, survival products and tail values.

    Attributes:
        h_values: ``[M, J + 1]`` with ``h_values[:, J] == 1``.
        survival: ``[M, J + 1]``, ``survival[:, j] = prod_{l<j} (1 - h_l)``.
        tail_value: ``[M, J + 1]``, ``V_k = h_k Z_k + (1 - h_k) V_{k+1}``, ``V_J = Z_J``.
    """

    h_values: np.ndarray
    survival: np.ndarray
    tail_value: np.ndarray

    @property
    def stop_probabilities(self) -> np.ndarray:
        """``p_{0,j}`` for every path and date."""
        return self.h_values * self.survival

    @property
    def values(self) -> np.ndarray:
        """Per-path randomized value ``V_0``."""
        return self.tail_value[:, 0]


def tail_values(h_values: np.ndarray, payoffs: np.ndarray, k: int = 0) -> np.ndarray:
    """``V_k`` per path by one backward sweep; only columns ``>= k`` of ``h_values`` are read."""
    num_dates = payoffs.shape[1] - 1
    value = np.array(payoffs[:, num_dates], dtype=float)
    for j in range(num_dates - 1, k - 1, -1):
        h = h_values[:, j]
        value = h * payoffs[:, j] + (1.0 - h) * value
    return value


def profile_from_h_values(h_values: np.ndarray, payoffs: np.ndarray) -> StoppingProfile:
    """Stopping profile for explicit per-path probabilities; the last column is pinned to 1."""
    h = np.array(h_values, dtype=float)
    payoffs = np.asarray(payoffs, dtype=float)
    if h.shape != payoffs.shape:
        raise ValueError(f"h values of shape {h.shape} do not match payoffs {payoffs.shape}")
    h[:, -1] = 1.0
    num_paths, num_cols = h.shape

    survival = np.ones((num_paths, num_cols))
    np.cumprod(1.0 - h[:, :-1], axis=1, out=survival[:, 1:])

    tail = np.empty((num_paths, num_cols))
    tail[:, -1] = payoffs[:, -1]
    for j in range(num_cols - 2, -1, -1):
        tail[:, j] = h[:, j] * payoffs[:, j] + (1.0 - h[:, j]) * tail[:, j + 1]
    return StoppingProfile(h_values=h, survival=survival, tail_value=tail)


def check_compatible(paths: PathSet, policy: Policy):
    if paths.payoffs is None:
        raise ValueError("paths have no payoffs filled")
    if paths.num_dates != policy.num_dates:
        raise ValueError(
            f"paths have {paths.num_dates} exercise intervals, policy has {policy.num_dates}"
        )
    if paths.dim != policy.state_dim:
        raise ValueError(f"paths have dimension {paths.dim}, policy expects {policy.state_dim}")


def policy_h_values(paths: PathSet, policy: Policy, first_date: int = 0) -> np.ndarray:
    """``h_j(X_j)`` for dates ``>= first_date``; earlier columns are NaN."""
    h = np.full((paths.num_paths, paths.num_dates + 1), np.nan)
    for j in range(first_date, paths.num_dates + 1):
        h[:, j] = eval_h(policy, j, paths.states[:, j, :], policy.dates[j])
    return h


def compute_profile(paths: PathSet, policy: Policy) -> StoppingProfile:
    check_compatible(paths, policy)
    return profile_from_h_values(policy_h_values(paths, policy), paths.payoffs)


def randomized_value(paths: PathSet, policy: Policy) -> float:
    """Empirical mean over paths of ``sum_j Z_j p_{0,j}``."""
    return float(np.mean(compute_profile(paths, policy).values))


def xi_coefficients(paths: PathSet, tail_policy: Policy, k: int) -> np.ndarray:
    """Weights ``xi_{k-1} = Z_{k-1} - V_k`` making the date ``k - 1`` objective linear in h.

    Only ``h_j`` for ``j >= k`` are evaluated.
    """
    if k == 0:
        raise ValueError("k must be >= 1, there is no date before 0")
    if not 1 <= k <= paths.num_dates:
        raise ValueError(f"k must lie in 1..{paths.num_dates}, got {k}")
    check_compatible(paths, tail_policy)
    h = policy_h_values(paths, tail_policy, first_date=k)
    return paths.payoffs[:, k - 1] - tail_values(h, paths.payoffs, k)


def first_entry_index(stop_mask: np.ndarray) -> np.ndarray:
    """Index of the first True per row; the terminal column counts as True."""
    mask = np.array(stop_mask, dtype=bool)
    mask[:, -1] = True
    return np.argmax(mask, axis=1)


def first_entry_payoffs(stop_mask: np.ndarray, payoffs: np.ndarray) -> np.ndarray:
    """Payoff collected at the first entry into the stopping set, per path."""
    index = first_entry_index(stop_mask)
    return np.asarray(payoffs)[np.arange(len(index)), index]

"""Linear reparametrization and regression starting points for the fitters.

Both fitters ascend in coordinates ``u`` with ``theta = basis @ u``, where the
basis whitens the training features: the monomials seen through it have an
identity second-moment matrix. The policy class is unchanged; only the
geometry the optimizer sees is.
"""

import logging
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from randstop import parallel

logger = logging.getLogger(__name__)

# eigenvalues below this fraction of the largest are treated as zero
RCOND = 1e-10
# score multipliers tried for a regression direction, relative to its RMS spread
SCALE_GRID = np.geomspace(0.1, 1000.0, 41)


def second_moments(features: np.ndarray, threads: Optional[int] = None) -> np.ndarray:
    """``phi^T phi / n`` accumulated block by block in a fixed order."""
    features = np.asarray(features, dtype=float)
    partials = parallel.map_blocks(
        lambda b, lo, hi: features[lo:hi].T @ features[lo:hi], len(features), threads=threads
    )
    return parallel.ordered_sum(partials) / len(features)


class Whitening:
    """``theta = basis @ u`` over the numerically nonzero eigendirections of a Gram matrix."""

    def __init__(self, gram: np.ndarray, rcond: float = RCOND):
        gram = np.asarray(gram, dtype=float)
        eigvals, eigvecs = np.linalg.eigh(0.5 * (gram + gram.T))
        keep = eigvals > rcond * max(eigvals.max(), 0.0)
        if not np.any(keep):
            raise ValueError("the features have no nonzero direction")
        root = np.sqrt(eigvals[keep])
        self.basis = eigvecs[:, keep] / root
        self.inverse = (eigvecs[:, keep] * root).T

    @classmethod
    def identity(cls, num_features: int) -> "Whitening":
        whitening = cls.__new__(cls)
        whitening.basis = np.eye(num_features)
        whitening.inverse = np.eye(num_features)
        return whitening

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def to_theta(self, u: np.ndarray) -> np.ndarray:
        return self.basis @ u

    def from_theta(self, theta: np.ndarray) -> np.ndarray:
        """Coordinates of ``theta`` projected on the retained directions."""
        return self.inverse @ np.asarray(theta, dtype=float)

    def solve(self, cross: np.ndarray) -> np.ndarray:
        """Minimum-norm least squares coefficients from ``phi^T y / n``."""
        return self.basis @ (self.basis.T @ np.asarray(cross, dtype=float))

    def wrap(self, objective: Callable) -> Callable:
        """``objective`` in ``u`` coordinates, with the chain-ruled gradient."""

        def _objective(u, indices=None):
            value, grad = objective(self.basis @ u, indices)
            return value, self.basis.T @ grad

        return _objective


def scale_search(
    objective: Callable, direction: np.ndarray, scales: Sequence[float]
) -> Tuple[float, np.ndarray]:
    """Best full-batch ``(value, c * direction)`` over the multipliers ``scales``."""
    best_value, best_theta = -np.inf, None
    for c in scales:
        theta = float(c) * direction
        value, _ = objective(theta, None)
        if np.isfinite(value) and value > best_value:
            best_value, best_theta = float(value), theta
    return best_value, best_theta


def regression_start(
    objective: Callable, theta0: np.ndarray, direction: np.ndarray, scores: np.ndarray
) -> Tuple[np.ndarray, str]:
    """Starting point: ``theta0`` or the best rescaling of a regression direction.

    ``scores`` are the training scores ``phi @ direction``; the multipliers of
    ``SCALE_GRID`` are taken relative to their RMS so the search covers soft to
    saturated policies whatever the payoff units.
    """
    theta0 = np.asarray(theta0, dtype=float)
    spread = float(np.sqrt(np.mean(np.square(scores))))
    if not np.isfinite(spread) or spread == 0.0:
        return theta0, "template"
    value0, _ = objective(theta0, None)
    value, theta = scale_search(objective, direction, SCALE_GRID / spread)
    if theta is None or not value > value0:
        return theta0, "template"
    logger.debug(f"regression start {value:.10g} against template {value0:.10g}")
    return theta, "regression"

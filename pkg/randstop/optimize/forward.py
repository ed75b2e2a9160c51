import logging
from typing import List, Optional, Tuple

import numpy as np

from randstop import parallel
from randstop.market import PathSet
from randstop.optimize.ascent import maximize
from randstop.optimize.backward import BackwardObjective
from randstop.optimize.base import FitReport, OptimizerConfig
from randstop.optimize.conditioning import (
    SCALE_GRID,
    Whitening,
    regression_start,
    scale_search,
    second_moments,
)
from randstop.policy import Policy, PolicyMode
from randstop.stopping import check_compatible

logger = logging.getLogger(__name__)


class ForwardObjective:
    """Empirical payoff ``P(theta) = (1/M) sum_m sum_j Z_j p_{0,j}^theta`` and its gradient.

    The gradient uses the product-rule form

        grad V_0 = sum_{k<J} S_k (Z_k - V_{k+1}) grad h_k,

    with survival prefixes ``S_k`` and tail values ``V_{k+1}`` from one forward
    and one backward sweep, so no factor ``h`` or ``1 - h`` is ever divided by.
    The monomials of every path and date do not depend on ``theta`` and are
    built once.
    """

    def __init__(self, paths: PathSet, policy: Policy, threads=None):
        self.paths = paths
        self.policy = policy
        self.threads = threads
        self.features = [
            policy.features(j, paths.states[:, j, :], policy.dates[j])
            for j in range(paths.num_dates)
        ]

    @property
    def num_items(self) -> int:
        return self.paths.num_paths

    def _partial(self, phis: List[np.ndarray], payoffs: np.ndarray, theta: np.ndarray):
        link = self.policy.link
        num_paths = payoffs.shape[0]
        num_dates = payoffs.shape[1] - 1

        h = np.empty((num_paths, num_dates))
        dh = np.empty((num_paths, num_dates))
        for j, phi in enumerate(phis):
            p = phi @ theta
            h[:, j] = link.value(p)
            dh[:, j] = link.derivative(p)

        survival = np.ones((num_paths, num_dates))
        np.cumprod(1.0 - h[:, :-1], axis=1, out=survival[:, 1:])

        grad = np.zeros_like(theta)
        tail = np.array(payoffs[:, num_dates], dtype=float)
        for j in range(num_dates - 1, -1, -1):
            weights = survival[:, j] * (payoffs[:, j] - tail) * dh[:, j]
            grad += phis[j].T @ weights
            tail = h[:, j] * payoffs[:, j] + (1.0 - h[:, j]) * tail
        return np.concatenate([[np.sum(tail)], grad])

    def __call__(self, theta: np.ndarray, indices: Optional[np.ndarray] = None):
        phis, payoffs = self.features, self.paths.payoffs
        if indices is not None:
            phis = [phi[indices] for phi in phis]
            payoffs = payoffs[indices]
        partials = parallel.map_blocks(
            lambda b, lo, hi: self._partial([phi[lo:hi] for phi in phis], payoffs[lo:hi], theta),
            len(payoffs),
            threads=self.threads,
        )
        total = parallel.ordered_sum(partials) / len(payoffs)
        return float(total[0]), total[1:]

    def pooled_second_moments(self) -> np.ndarray:
        """Second moments of the monomials over every path and date ``< J``."""
        grams = [second_moments(phi, threads=self.threads) for phi in self.features]
        return parallel.ordered_sum(grams) / len(grams)

    def regression_direction(self) -> np.ndarray:
        """Single coefficient vector fitted to per-date exercise advantages.

        A backward sweep regresses ``xi_j = Z_j - V_{j+1}`` on the monomials of
        each date separately, with tails built from the best rescaling of each
        fit. The fitted advantages of all dates are then regressed jointly on
        the monomials, giving one polynomial in ``(x, t)``.
        """
        payoffs = self.paths.payoffs
        num_dates = self.paths.num_dates
        link = self.policy.link
        tail = np.array(payoffs[:, num_dates], dtype=float)
        cross = np.zeros(self.policy.num_features)
        for j in range(num_dates - 1, -1, -1):
            phi = self.features[j]
            xi = payoffs[:, j] - tail
            beta = Whitening(second_moments(phi, threads=self.threads)).solve(phi.T @ xi / len(xi))
            advantage = phi @ beta
            spread = float(np.sqrt(np.mean(np.square(advantage))))
            h = np.zeros_like(xi)
            if spread > 0:
                objective = BackwardObjective(phi, xi, link, threads=self.threads)
                _, theta = scale_search(objective, beta, SCALE_GRID / spread)
                h = link.value(phi @ theta)
            tail = h * payoffs[:, j] + (1.0 - h) * tail
            cross += phi.T @ advantage / len(xi)
        return Whitening(self.pooled_second_moments()).solve(cross / num_dates)


def forward_fit(
    paths: PathSet,
    policy_template: Policy,
    opt: OptimizerConfig,
    threads: Optional[int] = None,
) -> Tuple[Policy, FitReport]:
    """Jointly fit the single coefficient vector of a time-dependent policy."""
    if policy_template.mode is not PolicyMode.TIME_DEPENDENT:
        raise ValueError("the forward method fits time-dependent policies")
    check_compatible(paths, policy_template)
    opt = opt.resolved("forward")

    objective = ForwardObjective(paths, policy_template, threads=threads)
    theta0, start = policy_template.theta_at(0), "template"
    if opt.init == "regression":
        direction = objective.regression_direction()
        scores = np.concatenate([phi @ direction for phi in objective.features])
        theta0, start = regression_start(objective, theta0, direction, scores)
    whitening = Whitening(objective.pooled_second_moments()) if opt.whiten else None
    theta, report = maximize(
        objective,
        theta0,
        objective.num_items,
        opt,
        stream_key=paths.num_dates + 1,
        whitening=whitening,
        start=start,
    )
    logger.info(
        f"Forward fit: in-sample value {report.final_objective:.6f} after "
        f"{report.iterations_used} iterations from the {report.start} start "
        f"(restart {report.restart_index_selected})"
    )
    return policy_template.with_coefficients(0, theta), report

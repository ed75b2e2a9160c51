import logging
from typing import List, Optional, Tuple

import numpy as np

from randstop import parallel
from randstop.features import LinkFunction
from randstop.market import PathSet
from randstop.optimize.ascent import maximize
from randstop.optimize.base import FitReport, OptimizerConfig
from randstop.optimize.conditioning import Whitening, regression_start, second_moments
from randstop.policy import Policy, PolicyMode
from randstop.stopping import check_compatible

logger = logging.getLogger(__name__)


class BackwardObjective:
    """Per-path average ``(1/M) sum_m xi^(m) h_theta(X^(m))`` of one backward step.

    The features and the ``xi`` weights are fixed for the whole step, so every
    evaluation is O(M) in the number of paths.
    """

    def __init__(self, features: np.ndarray, xi: np.ndarray, link: LinkFunction, threads=None):
        self.features = np.asarray(features, dtype=float)
        self.xi = np.asarray(xi, dtype=float)
        self.link = link
        self.threads = threads

    @property
    def num_items(self) -> int:
        return len(self.xi)

    def _partial(self, phi, xi, theta):
        p = phi @ theta
        value = np.sum(xi * self.link.value(p))
        grad = phi.T @ (xi * self.link.derivative(p))
        return np.concatenate([[value], grad])

    def __call__(self, theta: np.ndarray, indices: Optional[np.ndarray] = None):
        phi, xi = self.features, self.xi
        if indices is not None:
            phi, xi = phi[indices], xi[indices]
        partials = parallel.map_blocks(
            lambda b, lo, hi: self._partial(phi[lo:hi], xi[lo:hi], theta),
            len(xi),
            threads=self.threads,
        )
        total = parallel.ordered_sum(partials) / len(xi)
        return float(total[0]), total[1:]


def backward_fit(
    paths: PathSet,
    policy_template: Policy,
    opt: OptimizerConfig,
    threads: Optional[int] = None,
) -> Tuple[Policy, List[FitReport]]:
    """Fit ``theta_{J-1}, ..., theta_0`` one date at a time.

    Step ``k - 1`` maximizes ``sum_m xi_{k-1}^(m) h_theta(X_{k-1}^(m))`` with
    ``xi_{k-1} = Z_{k-1} - V_k`` built from the already fitted dates ``k..J``.
    The template supplies the link, the feature maps and the starting
    coefficients. Returns the fitted policy and one report per date ``0..J-1``.
    """
    if policy_template.mode is not PolicyMode.PER_DATE:
        raise ValueError("the backward method fits per-date policies")
    check_compatible(paths, policy_template)
    opt = opt.resolved("backward")

    num_dates = paths.num_dates
    payoffs = paths.payoffs
    policy = policy_template
    link = policy.link
    # V_k on every training path, starting from V_J = Z_J
    tail = np.array(payoffs[:, num_dates], dtype=float)
    reports: List[Optional[FitReport]] = [None] * num_dates

    for date in range(num_dates - 1, -1, -1):
        xi = payoffs[:, date] - tail
        phi = policy.features(date, paths.states[:, date, :], policy.dates[date])
        objective = BackwardObjective(phi, xi, link, threads=threads)
        whitening = Whitening(second_moments(phi, threads=threads))
        theta0, start = policy.theta_at(date), "template"
        if opt.init == "regression":
            # least squares fit of E[xi | X]; its zero set is the exercise boundary
            direction = whitening.solve(phi.T @ xi / len(xi))
            theta0, start = regression_start(objective, theta0, direction, phi @ direction)
        theta, report = maximize(
            objective,
            theta0,
            objective.num_items,
            opt,
            stream_key=date,
            date_index=date,
            whitening=whitening if opt.whiten else None,
            start=start,
        )
        policy = policy.with_coefficients(date, theta)
        h = link.value(phi @ theta)
        tail = h * payoffs[:, date] + (1.0 - h) * tail
        reports[date] = report
        logger.info(
            f"date {date}: objective {report.final_objective:.6f} after "
            f"{report.iterations_used} iterations from the {report.start} start "
            f"(restart {report.restart_index_selected}), mean h {np.mean(h):.4f}"
        )

    logger.info(f"Backward fit done, in-sample value {np.mean(tail):.6f}")
    return policy, reports

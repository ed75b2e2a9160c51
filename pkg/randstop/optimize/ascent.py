"""Restarted Adam ascent shared by the backward and forward fitters."""

import logging
import time
from typing import Callable, Optional, Tuple

import numpy as np

from randstop.exceptions import NumericFault
from randstop.optimize.adam import AdamState, adam_step
from randstop.optimize.base import FitReport, OptimizerConfig
from randstop.optimize.conditioning import Whitening
from randstop.utils import STREAM_MINIBATCH, STREAM_RESTART, make_generator

logger = logging.getLogger(__name__)

# (theta, path indices or None for all paths) -> (objective, gradient)
Objective = Callable[[np.ndarray, Optional[np.ndarray]], Tuple[float, np.ndarray]]


def _converged(trace, cfg: OptimizerConfig) -> bool:
    if len(trace) <= cfg.window:
        return False
    old, new = trace[-1 - cfg.window], trace[-1]
    return abs(new - old) <= cfg.tol_rel * abs(old)


def _checked(value: float, grad: np.ndarray, date_index: Optional[int]):
    if not np.all(np.isfinite(grad)):
        raise NumericFault("non-finite gradient", date_index)
    return value, grad


class _Run:
    """Single restart: tracks the trace and the best full-batch iterate."""

    def __init__(self, theta: np.ndarray):
        self.state = AdamState(theta)
        self.trace = []
        self.best_value = -np.inf
        self.best_theta = np.array(theta, dtype=float)
        self.steps = 0
        self.aborted = False

    def record(self, value: float, theta: np.ndarray) -> bool:
        """Append a full-batch objective; False when the run has diverged."""
        if not np.isfinite(value):
            self.aborted = True
            return False
        self.trace.append(float(value))
        if value > self.best_value:
            self.best_value = float(value)
            self.best_theta = np.array(theta, dtype=float)
        return True


def _run_full_batch(objective: Objective, run: _Run, cfg: OptimizerConfig, date_index):
    for iteration in range(1, cfg.max_iters + 1):
        value, grad = objective(run.state.params, None)
        if not run.record(value, run.state.params):
            return
        logger.debug(f"iteration {iteration}: objective {value:.10g}")
        if _converged(run.trace, cfg):
            return
        _checked(value, grad, date_index)
        adam_step(run.state, grad, iteration, cfg)
        run.steps = iteration
    value, _ = objective(run.state.params, None)
    run.record(value, run.state.params)


def _run_minibatch(
    objective: Objective, run: _Run, cfg: OptimizerConfig, num_items: int, rng, date_index
):
    value, _ = objective(run.state.params, None)
    if not run.record(value, run.state.params):
        return
    iteration = 0
    while iteration < cfg.max_iters:
        order = rng.permutation(num_items)
        for start in range(0, num_items, cfg.minibatch):
            if iteration >= cfg.max_iters:
                break
            iteration += 1
            _, grad = _checked(*objective(run.state.params, order[start : start + cfg.minibatch]), date_index)
            adam_step(run.state, grad, iteration, cfg)
            run.steps = iteration
        # epoch end: noise-free objective for the stopping rule
        value, _ = objective(run.state.params, None)
        if not run.record(value, run.state.params):
            return
        if _converged(run.trace, cfg):
            return


def maximize(
    objective: Objective,
    theta0: np.ndarray,
    num_items: int,
    cfg: OptimizerConfig,
    stream_key: int,
    date_index: Optional[int] = None,
    whitening: Optional[Whitening] = None,
    start: str = "template",
) -> Tuple[np.ndarray, FitReport]:
    """Maximize ``objective`` from ``theta0`` with ``cfg.restarts`` restarts.

    The ascent runs in the coordinates of ``whitening`` (plain ``theta`` when
    omitted). Restart 0 starts at ``theta0``; later restarts add centered uniform
    noise of half-width ``cfg.init_noise`` to those coordinates. Each restart
    returns its best full-batch iterate and the best restart wins.
    """
    if cfg.max_iters is None:
        raise ValueError("optimizer config must be resolved before fitting")
    started = time.perf_counter()
    theta0 = np.asarray(theta0, dtype=float)
    if whitening is None:
        whitening = Whitening.identity(theta0.size)
    objective = whitening.wrap(objective)
    u0 = whitening.from_theta(theta0)

    runs = []
    for restart in range(cfg.restarts):
        theta = u0.copy()
        if restart > 0:
            noise_rng = make_generator(cfg.seed, STREAM_RESTART, stream_key, restart)
            theta = theta + noise_rng.uniform(-cfg.init_noise, cfg.init_noise, size=theta.shape)
        run = _Run(theta)
        if cfg.minibatch and cfg.minibatch < num_items:
            batch_rng = make_generator(cfg.seed, STREAM_MINIBATCH, stream_key, restart)
            _run_minibatch(objective, run, cfg, num_items, batch_rng, date_index)
        else:
            _run_full_batch(objective, run, cfg, date_index)
        if run.aborted:
            logger.warning(
                f"Restart {restart} diverged after {run.steps} steps"
                + ("" if date_index is None else f" at date {date_index}")
            )
        runs.append(run)

    finished = [r for r in runs if r.trace]
    if not finished:
        raise NumericFault("objective is not finite at any starting point", date_index)
    best_index = max(range(len(runs)), key=lambda i: runs[i].best_value)
    best = runs[best_index]
    report = FitReport(
        objective_trace=best.trace,
        final_objective=best.best_value,
        iterations_used=best.steps,
        restart_index_selected=best_index,
        wall_time=time.perf_counter() - started,
        date_index=date_index,
        restart_objectives=[r.best_value for r in runs],
        start=start,
    )
    return whitening.to_theta(best.best_theta), report

import dataclasses
import logging
import time
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np

from randstop import parallel
from randstop.market import simulate_block
from randstop.policy import Policy
from randstop.stopping import compute_profile, first_entry_payoffs, policy_h_values
from randstop.utils import STREAM_UNIFORMS, format_float, make_generator

logger = logging.getLogger(__name__)

# two-sided 95% normal quantile, as in standard Monte Carlo reporting
Z_95 = 1.96

RESULT_COLUMNS = (
    "run_id",
    "mode",
    "link",
    "degree",
    "M",
    "N",
    "seed",
    "estimate",
    "std_error",
    "ci_low",
    "ci_high",
    "wall_time_s",
)


class EvaluationMode(str, Enum):
    EXPECTATION = "expectation"
    SAMPLED = "sampled"
    HARD_THRESHOLD = "hard_threshold"

    @classmethod
    def from_name(cls, name) -> "EvaluationMode":
        if isinstance(name, cls):
            return name
        if name == "hard":
            return cls.HARD_THRESHOLD
        return cls(name)


@dataclass
class EstimateReport:
    """Low-biased price estimate from independent evaluation paths."""

    estimate: float
    std_error: float
    ci_low: float
    ci_high: float
    num_paths: int
    evaluation_mode: EvaluationMode = EvaluationMode.EXPECTATION
    seed: int = 0
    policy_fingerprint: str = ""
    run_id: str = ""
    link: str = ""
    degree: int = 0
    train_paths: int = 0
    wall_time: Optional[float] = None

    def __post_init__(self):
        self.evaluation_mode = EvaluationMode.from_name(self.evaluation_mode)
        if self.std_error < 0:
            raise ValueError(f"std_error must be >= 0, got {self.std_error}")
        if not self.ci_low <= self.estimate <= self.ci_high:
            raise ValueError(
                f"estimate {self.estimate} outside its interval [{self.ci_low}, {self.ci_high}]"
            )

    def to_dict(self) -> Dict:
        report = dataclasses.asdict(self)
        report["evaluation_mode"] = self.evaluation_mode.value
        return report


def mean_and_interval(values: np.ndarray) -> Tuple[float, float, float, float]:
    """(mean, standard error, ci_low, ci_high) of per-path values."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("no values to average")
    if np.ptp(values) == 0:
        mean, std_error = float(values[0]), 0.0
    else:
        mean = float(np.mean(values))
        std_error = float(np.std(values, ddof=1) / np.sqrt(values.size))
    return mean, std_error, mean - Z_95 * std_error, mean + Z_95 * std_error


def _block_values(model, policy: Policy, mode: EvaluationMode, seed: int, block, start, stop):
    paths = simulate_block(model, block, start, stop, seed)
    if mode is EvaluationMode.EXPECTATION:
        return compute_profile(paths, policy).values
    h = policy_h_values(paths, policy)
    if mode is EvaluationMode.SAMPLED:
        uniforms = make_generator(seed, STREAM_UNIFORMS, block).random(h.shape)
        stop_mask = uniforms < h
    else:
        stop_mask = h >= 0.5
    return first_entry_payoffs(stop_mask, paths.payoffs)


def lower_bound_estimate(
    model,
    policy: Policy,
    num_paths: int,
    seed: int,
    mode=EvaluationMode.EXPECTATION,
    threads: Optional[int] = None,
    train_seed: Optional[int] = None,
) -> EstimateReport:
    """Re-simulate ``num_paths`` fresh paths and average the policy's payoff.

    ``expectation`` averages ``sum_j Z_j p_{0,j}`` per path; ``sampled`` draws a
    uniform per path and date and stops at the first date with ``U < h``;
    ``hard_threshold`` stops at the first date with ``h >= 1/2``.
    """
    if int(num_paths) != num_paths or num_paths < 1:
        raise ValueError(f"num_paths must be >= 1, got {num_paths}")
    mode = EvaluationMode.from_name(mode)
    if train_seed is not None and train_seed == seed:
        logger.warning(
            f"Evaluation seed {seed} equals the training seed, the estimate is not low biased"
        )
    started = time.perf_counter()
    blocks = parallel.map_blocks(
        lambda b, lo, hi: _block_values(model, policy, mode, seed, b, lo, hi),
        int(num_paths),
        threads=threads,
    )
    estimate, std_error, ci_low, ci_high = mean_and_interval(np.concatenate(blocks))
    report = EstimateReport(
        estimate=estimate,
        std_error=std_error,
        ci_low=ci_low,
        ci_high=ci_high,
        num_paths=int(num_paths),
        evaluation_mode=mode,
        seed=seed,
        policy_fingerprint=policy.fingerprint(),
        link=policy.link.kind,
        degree=policy.feature_maps[0].degree,
        wall_time=time.perf_counter() - started,
    )
    logger.info(f"{mode.value} estimate over {num_paths} paths: {format_summary(report)}")
    return report


def summarize(report: EstimateReport, include_wall_time: bool = True) -> str:
    """CSV row in ``RESULT_COLUMNS`` order; floats carry 17 significant digits."""
    wall_time = report.wall_time if include_wall_time else None
    fields = [
        report.run_id,
        report.evaluation_mode.value,
        report.link,
        str(report.degree),
        str(report.train_paths),
        str(report.num_paths),
        str(report.seed),
        format_float(report.estimate),
        format_float(report.std_error),
        format_float(report.ci_low),
        format_float(report.ci_high),
        "" if wall_time is None else format_float(wall_time),
    ]
    return ",".join(fields)


def format_summary(report: EstimateReport) -> str:
    """Console line at three decimals."""
    return (
        f"{report.estimate:.3f} (s.e. {report.std_error:.3f}, "
        f"95% CI [{report.ci_low:.3f}, {report.ci_high:.3f}])"
    )

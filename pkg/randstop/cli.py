"""Command line front end: fit a policy, re-simulate, write the run directory."""

import argparse
import dataclasses
import logging
import sys
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from randstop import parallel
from randstop.config import METHODS, RunConfig
from randstop.estimate import EstimateReport, format_summary, lower_bound_estimate
from randstop.exceptions import (
    EXIT_CONFIG_ERROR,
    EXIT_NUMERIC_FAULT,
    EXIT_OK,
    ConfigurationError,
    NumericFault,
)
from randstop.features import LINKS
from randstop.market import MarketModel, simulate_paths
from randstop.optimize import FitReport, backward_fit, forward_fit
from randstop.oracle import bermudan_binomial_price
from randstop.policy import Policy, PolicyMode, make_policy_template
from randstop.utils import derive_seed, format_float
from randstop.writers import RunWriter

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ("row", "M", "rep", "seed_train", "estimate", "std_error", "gap", "mean_gap", "sd_gap")


def fit_policy(
    config: RunConfig, model: MarketModel, train_seed: int, train_paths: int
) -> Tuple[Policy, List[FitReport]]:
    """Simulate the training paths and fit the configured policy on them."""
    paths = simulate_paths(model, train_paths, train_seed, threads=config.threads)
    template = make_policy_template(
        config.policy_mode,
        config.link,
        config.degree,
        model.dates,
        sample_states=paths.states,
        model_fingerprint=model.fingerprint(),
    )
    opt = config.optimizer_config()
    if config.policy_mode is PolicyMode.PER_DATE:
        return backward_fit(paths, template, opt, threads=config.threads)
    policy, report = forward_fit(paths, template, opt, threads=config.threads)
    return policy, [report]


def run_price(config: RunConfig) -> EstimateReport:
    """Fit on ``train_paths`` paths, estimate on ``eval_paths`` fresh ones, write the artifacts."""
    started = time.perf_counter()
    config = config.resolved()
    model = config.market_model()
    logger.info(
        f"Run {config.run_id}: {config.method} fit, {config.link} link, degree {config.degree}, "
        f"M={config.train_paths}, N={config.eval_paths}"
    )
    policy, reports = fit_policy(config, model, config.seed_train, config.train_paths)
    report = lower_bound_estimate(
        model,
        policy,
        config.eval_paths,
        config.seed_eval,
        mode=config.evaluation_mode,
        threads=config.threads,
        train_seed=config.seed_train,
    )
    report = dataclasses.replace(
        report,
        run_id=config.run_id,
        train_paths=config.train_paths,
        wall_time=time.perf_counter() - started,
    )
    with RunWriter(config.output, config, description="price") as writer:
        writer.write_policy(policy)
        writer.write_fit_reports(reports)
        writer.write(report)
    sys.stdout.write(f"{config.run_id} {report.evaluation_mode.value}: {format_summary(report)}\n")
    return report


@dataclass
class SweepPoint:
    """Gap to the reference value at one training size, over all repetitions."""

    train_paths: int
    mean_estimate: float
    mean_gap: float
    sd_gap: float
    estimates: List[float]


def run_convergence_sweep(config: RunConfig) -> List[SweepPoint]:
    """Estimate at every training size in ``config.sweep``, ``config.reps`` times each.

    Repetition ``r`` trains on the seed derived from ``(seed_train, r)`` at every
    size, and all runs share the evaluation seed. The reference is
    ``sweep_reference`` if set, the binomial tree price for one asset, and the
    mean estimate at the largest size otherwise.
    """
    config = config.resolved()
    if not config.sweep:
        raise ConfigurationError("needs at least one path count", "sweep")
    model = config.market_model()
    reference = config.sweep_reference
    if reference is None and model.dim == 1:
        try:
            reference = bermudan_binomial_price(model)
            logger.info(f"Binomial tree reference {reference:.6f}")
        except ValueError as e:
            logger.warning(f"No binomial tree reference ({e}), using the largest training size")

    estimates: Dict[int, List[EstimateReport]] = {}
    seeds = [derive_seed(config.seed_train, rep) for rep in range(config.reps)]
    for train_paths in config.sweep:
        estimates[train_paths] = []
        for rep, seed in enumerate(seeds):
            policy, _ = fit_policy(config, model, seed, train_paths)
            report = lower_bound_estimate(
                model,
                policy,
                config.eval_paths,
                config.seed_eval,
                mode=config.evaluation_mode,
                threads=config.threads,
                train_seed=seed,
            )
            logger.info(f"M={train_paths} rep {rep}: {format_summary(report)}")
            estimates[train_paths].append(report)
    if reference is None:
        reference = float(np.mean([r.estimate for r in estimates[config.sweep[-1]]]))
        logger.info(f"Largest-M reference {reference:.6f}")

    points = []
    with RunWriter(config.output, config, description="convergence sweep") as writer:
        for train_paths, reports in estimates.items():
            values = np.array([r.estimate for r in reports])
            gaps = reference - values
            for rep, (report, gap) in enumerate(zip(reports, gaps)):
                writer.write_sweep_row(
                    SWEEP_COLUMNS,
                    [
                        "rep",
                        str(train_paths),
                        str(rep),
                        str(seeds[rep]),
                        format_float(report.estimate),
                        format_float(report.std_error),
                        format_float(gap),
                        "",
                        "",
                    ],
                )
            point = SweepPoint(
                train_paths=train_paths,
                mean_estimate=float(np.mean(values)),
                mean_gap=float(np.mean(gaps)),
                sd_gap=float(np.std(gaps, ddof=1)) if len(gaps) > 1 else 0.0,
                estimates=values.tolist(),
            )
            points.append(point)
            # a single repetition is its own summary
            if len(reports) > 1:
                writer.write_sweep_row(
                    SWEEP_COLUMNS,
                    [
                        "summary",
                        str(train_paths),
                        "",
                        "",
                        format_float(point.mean_estimate),
                        "",
                        "",
                        format_float(point.mean_gap),
                        format_float(point.sd_gap),
                    ],
                )
            sys.stdout.write(f"M={train_paths}: mean gap {point.mean_gap:.3f} (sd {point.sd_gap:.3f})\n")
    return points


def _parse_sweep(value: str) -> List[int]:
    try:
        return [int(float(v)) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated path counts, got {value!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="randstop",
        description="Price Bermudan max-calls with fitted randomized stopping policies.",
    )
    parser.add_argument("--config", default=None, help="JSON run config; flags override it")
    parser.add_argument("--method", choices=sorted(METHODS), default=None)
    parser.add_argument("--link", choices=sorted(LINKS), default=None)
    parser.add_argument("--degree", type=int, default=None, help="polynomial degree g")
    parser.add_argument("--train-paths", type=int, default=None, help="training paths M")
    parser.add_argument("--eval-paths", type=int, default=None, help="evaluation paths N")
    parser.add_argument("--seed-train", type=int, default=None)
    parser.add_argument("--seed-eval", type=int, default=None)
    parser.add_argument("--seed-opt", type=int, default=None)
    parser.add_argument(
        "--eval-mode", choices=["expectation", "sampled", "hard"], default=None
    )
    parser.add_argument("--output", default=None, help="run directory")
    parser.add_argument(
        "--sweep", type=_parse_sweep, default=None, help='training sizes "M1,M2,..."'
    )
    parser.add_argument("--reps", type=int, default=None, help="repetitions per sweep size")
    parser.add_argument("--threads", type=int, default=None, help="worker cap")
    parser.add_argument(
        "--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"]
    )
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    overrides = {
        "method": args.method,
        "link": args.link,
        "degree": args.degree,
        "train_paths": args.train_paths,
        "eval_paths": args.eval_paths,
        "seed_train": args.seed_train,
        "seed_eval": args.seed_eval,
        "seed_opt": args.seed_opt,
        "eval_mode": args.eval_mode,
        "output": args.output,
        "sweep": args.sweep,
        "reps": args.reps,
        "threads": args.threads,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if args.config is not None:
        return RunConfig.from_json(args.config, overrides)
    return RunConfig.from_dict(overrides)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(args)
        parallel.set_default_threads(config.threads)
        if config.sweep:
            run_convergence_sweep(config)
        else:
            run_price(config)
    except ConfigurationError as e:
        logger.error(f"Invalid configuration: {e}")
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except NumericFault as e:
        logger.error(f"Numeric fault: {e}")
        print(f"numeric fault: {e}", file=sys.stderr)
        return EXIT_NUMERIC_FAULT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

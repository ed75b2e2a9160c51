import json
import logging
import os
from typing import Iterator, List

from more_itertools import peekable

from randstop.config import RunConfig
from randstop.estimate import RESULT_COLUMNS, EstimateReport
from randstop.info import RunInfo
from randstop.optimize import FitReport
from randstop.policy import Policy

logger = logging.getLogger(__name__)


def parse_row(line: str) -> EstimateReport:
    """Inverse of `summarize` for the numeric and label fields of a result row."""
    values = line.rstrip("\n").split(",")
    if len(values) != len(RESULT_COLUMNS):
        raise ValueError(f"expected {len(RESULT_COLUMNS)} fields, got {len(values)}: {line!r}")
    row = dict(zip(RESULT_COLUMNS, values))
    return EstimateReport(
        run_id=row["run_id"],
        evaluation_mode=row["mode"],
        link=row["link"],
        degree=int(row["degree"]),
        train_paths=int(row["M"]),
        num_paths=int(row["N"]),
        seed=int(row["seed"]),
        estimate=float(row["estimate"]),
        std_error=float(row["std_error"]),
        ci_low=float(row["ci_low"]),
        ci_high=float(row["ci_high"]),
        wall_time=float(row["wall_time_s"]) if row["wall_time_s"] else None,
    )


class ResultReader:
    """Iterates the estimates of a ``results.csv`` file."""

    def __init__(self, path: str):
        self.path = path

    def __iter__(self) -> Iterator[EstimateReport]:
        with open(self.path, "r", encoding="utf-8") as f:
            lines = peekable(line for line in f if line.strip())
            header = lines.peek(None)
            if header is None:
                return
            if tuple(header.rstrip("\n").split(",")) != RESULT_COLUMNS:
                raise ValueError(f"{self.path} does not start with the result header")
            next(lines)
            for line in lines:
                yield parse_row(line)


class RunReader:
    """Loads the artifacts listed in a run directory's manifest."""

    def __init__(self, path: str, info: RunInfo):
        self.path = path
        self.info = info

    @classmethod
    def from_run_info(cls, run_info_file: str) -> "RunReader":
        info = RunInfo.from_json(run_info_file)
        return cls(os.path.dirname(run_info_file), info)

    def _file(self, name: str) -> str:
        if name not in self.info.file_list:
            raise FileNotFoundError(f"run {self.info.run_id} has no {name}")
        return os.path.join(self.path, name)

    def config(self) -> RunConfig:
        return RunConfig.from_json(self._file("config.json"))

    def policy(self) -> Policy:
        return Policy.from_json(self._file("policy.json"))

    def fit_reports(self) -> List[FitReport]:
        with open(self._file("fit_reports.json"), "r", encoding="utf-8") as f:
            return [FitReport.from_dict(r) for r in json.load(f)]

    def results(self) -> List[EstimateReport]:
        return list(ResultReader(self._file("results.csv")))

import json
import logging
import os
from typing import List, Optional, Sequence

from randstop.config import RunConfig
from randstop.estimate import EstimateReport
from randstop.info import RunInfo
from randstop.optimize import FitReport
from randstop.policy import Policy
from randstop.writers.base_writer import Writer
from randstop.writers.csv_writer import CsvWriter, ResultWriter

logger = logging.getLogger(__name__)


class RunWriter(Writer):
    """Writes the artifacts of one run into a directory.

    Estimates go to ``results.csv`` as they arrive; the resolved config and the
    run manifest are written on close.
    """

    CONFIG_FILENAME = "config.json"
    RUN_INFO_FILENAME = "run_info.json"
    POLICY_FILENAME = "policy.json"
    FIT_REPORTS_FILENAME = "fit_reports.json"
    RESULTS_FILENAME = "results.csv"
    SWEEP_FILENAME = "sweep.csv"

    def __init__(self, path: str, config: RunConfig, description: str = ""):
        self.path = path
        os.makedirs(path, exist_ok=True)
        self.config = config.resolved()
        self.info = RunInfo(description=description, run_id=self.config.run_id)
        self.results: Optional[ResultWriter] = None
        self.sweep: Optional[CsvWriter] = None
        self.total_count = 0

    def _file(self, name: str) -> str:
        if name not in self.info.file_list:
            self.info.file_list.append(name)
        return os.path.join(self.path, name)

    def write_policy(self, policy: Policy):
        policy.write_to_json(self._file(self.POLICY_FILENAME), pretty_print=True)

    def write_fit_reports(self, reports: Sequence[FitReport]):
        with open(self._file(self.FIT_REPORTS_FILENAME), "w", encoding="utf-8") as f:
            json.dump([r.to_dict() for r in reports], f, indent=4)

    def write(self, report: EstimateReport):
        if self.results is None:
            self.results = ResultWriter(
                self._file(self.RESULTS_FILENAME), record_wall_time=self.config.record_wall_time
            )
        self.results.write(report)
        self.total_count += 1

    def write_sweep_row(self, columns: List[str], row: List[str]):
        if self.sweep is None:
            self.sweep = CsvWriter(self._file(self.SWEEP_FILENAME), columns)
        self.sweep.write(row)
        self.total_count += 1

    def close(self):
        for stream in (self.results, self.sweep):
            if stream is not None:
                stream.close()
        self.config.write_to_json(self._file(self.CONFIG_FILENAME), pretty_print=True)
        self.info.write_to_json(os.path.join(self.path, self.RUN_INFO_FILENAME), pretty_print=True)
        logger.info(f"{self.total_count} rows and {len(self.info.file_list)} files written to {self.path}")

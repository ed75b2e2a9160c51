import logging
from typing import Sequence

from randstop.estimate import RESULT_COLUMNS, EstimateReport, summarize
from randstop.writers.base_writer import Writer

logger = logging.getLogger(__name__)


class CsvWriter(Writer):
    """Writes a header line, then one comma separated line per row."""

    def __init__(self, path: str, columns: Sequence[str]):
        self.path = path
        self.columns = tuple(columns)
        self.stream = open(path, "w", encoding="utf-8", newline="\n")
        self.stream.write(",".join(self.columns) + "\n")
        self.count = 0

    def write(self, row: Sequence[str]):
        if len(row) != len(self.columns):
            raise ValueError(f"Row {row} does not match columns {self.columns}")
        if any("," in value or "\n" in value for value in row):
            raise ValueError(f"Row {row} holds a separator")
        self.stream.write(",".join(row) + "\n")
        self.count += 1

    def close(self):
        if not self.stream.closed:
            self.stream.close()
            logger.debug(f"{self.count} rows written to {self.path}")


class ResultWriter(CsvWriter):
    """One `summarize` row per estimate."""

    def __init__(self, path: str, record_wall_time: bool = False):
        super().__init__(path, RESULT_COLUMNS)
        self.record_wall_time = record_wall_time

    def write(self, report: EstimateReport):
        super().write(summarize(report, include_wall_time=self.record_wall_time).split(","))

import dataclasses
import json
import logging
from dataclasses import dataclass
from typing import Dict, List

from randstop.utils import asdict

logger = logging.getLogger(__name__)


@dataclass
class RunInfo:
    """Manifest of a run directory: which artifacts it holds and which config produced them."""

    description: str = dataclasses.field(default_factory=str)
    run_id: str = dataclasses.field(default_factory=str)
    file_list: List[str] = dataclasses.field(default_factory=list)

    def write_to_json(self, run_info_file, pretty_print=False):
        """Write `RunInfo` as a JSON file.

        Args:
            run_info_file (`str`):
                Destination json file.
            pretty_print (`bool`, defaults to `False`):
                If `True`, the JSON will be pretty-printed with the indent level of 4.
        """
        if not self.file_list:
            logger.warning("No artifacts listed, the run info will be incomplete.")
        with open(run_info_file, "wb") as f:
            self._dump_info(f, pretty_print=pretty_print)

    def _dump_info(self, file, pretty_print=False):
        """Dump info in `file` file-like object open in bytes mode."""
        file.write(json.dumps(asdict(self), indent=4 if pretty_print else None).encode("utf-8"))

    @classmethod
    def from_json(cls, run_info_file: str) -> "RunInfo":
        logger.info(f"Loading run info from {run_info_file}")
        with open(run_info_file, "r", encoding="utf-8") as f:
            run_info_dict = json.load(f)
        return cls.from_dict(run_info_dict)

    @classmethod
    def from_dict(cls, run_info_dict: Dict) -> "RunInfo":
        field_names = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in run_info_dict.items() if k in field_names})

import copy
import dataclasses
import json
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional

from randstop.estimate import EvaluationMode
from randstop.exceptions import ConfigurationError
from randstop.features import LINKS
from randstop.market import MarketModel
from randstop.optimize import OptimizerConfig
from randstop.policy import PolicyMode
from randstop.utils import fingerprint, update_dict

logger = logging.getLogger(__name__)

METHODS = {"backward": PolicyMode.PER_DATE, "forward": PolicyMode.TIME_DEPENDENT}
MAX_SEED = 2**64 - 1


def default_model() -> Dict:
    """Symmetric two-asset max-call, nine exercise intervals over three years."""
    return {
        "dim": 2,
        "spot": 90.0,
        "strike": 100.0,
        "rate": 0.05,
        "dividend": 0.1,
        "vol": 0.2,
        "maturity": 3.0,
        "num_dates": 9,
    }


def _run_field(default=None, default_factory=None, run_id: bool = True):
    metadata = {} if run_id else {"exclude_from_run_id": True}
    if default_factory is not None:
        return dataclasses.field(default_factory=default_factory, metadata=metadata)
    return dataclasses.field(default=default, metadata=metadata)


@dataclass
class RunConfig:
    """Everything one pricing run or convergence sweep needs.

    Fields marked ``exclude_from_run_id`` (output location, worker cap, wall
    time recording) do not change results and are left out of ``run_id``.
    """

    model: Dict = _run_field(default_factory=default_model)
    method: str = "backward"
    link: str = "gumbel"
    degree: int = 3
    train_paths: int = 200_000
    eval_paths: int = 1_000_000
    seed_train: int = 1
    seed_eval: int = 2
    seed_opt: int = 3
    optimizer: Dict = _run_field(default_factory=dict)
    eval_mode: str = "expectation"
    sweep: List[int] = _run_field(default_factory=list)
    reps: int = 1
    sweep_reference: Optional[float] = None
    output: str = _run_field(default="output", run_id=False)
    threads: Optional[int] = _run_field(default=None, run_id=False)
    record_wall_time: bool = _run_field(default=False, run_id=False)

    def __post_init__(self):
        self.validate()

    def validate(self):
        self.market_model()
        if self.method not in METHODS:
            raise ConfigurationError(
                f"must be one of {sorted(METHODS)}, got {self.method!r}", "method"
            )
        if self.link not in LINKS:
            raise ConfigurationError(f"must be one of {sorted(LINKS)}, got {self.link!r}", "link")
        _check_int(self.degree, "degree", minimum=0)
        _check_int(self.train_paths, "train_paths", minimum=1)
        _check_int(self.eval_paths, "eval_paths", minimum=1)
        for name in ("seed_train", "seed_eval", "seed_opt"):
            _check_int(getattr(self, name), name, minimum=0, maximum=MAX_SEED)
        self.optimizer_config()
        try:
            EvaluationMode.from_name(self.eval_mode)
        except ValueError:
            raise ConfigurationError(
                f"must be expectation, sampled or hard, got {self.eval_mode!r}", "eval_mode"
            ) from None
        for m in self.sweep:
            _check_int(m, "sweep", minimum=1)
        if len(set(self.sweep)) != len(self.sweep):
            raise ConfigurationError(f"duplicate path counts in {self.sweep}", "sweep")
        if list(self.sweep) != sorted(self.sweep):
            raise ConfigurationError(f"path counts must increase, got {self.sweep}", "sweep")
        _check_int(self.reps, "reps", minimum=1)
        if self.threads is not None:
            _check_int(self.threads, "threads", minimum=1)
        if not self.output:
            raise ConfigurationError("must name a directory", "output")

    @property
    def policy_mode(self) -> PolicyMode:
        return METHODS[self.method]

    @property
    def evaluation_mode(self) -> EvaluationMode:
        return EvaluationMode.from_name(self.eval_mode)

    def market_model(self) -> MarketModel:
        known = {f.name for f in dataclasses.fields(MarketModel)}
        unknown = set(self.model) - known
        if unknown:
            raise ConfigurationError(f"unknown model fields {sorted(unknown)}", "model")
        missing = {"dim", "spot", "strike", "rate", "dividend", "vol", "maturity", "num_dates"}
        missing -= set(self.model)
        if missing:
            raise ConfigurationError(f"missing model fields {sorted(missing)}", "model")
        try:
            return MarketModel.from_dict(self.model)
        except ConfigurationError as e:
            raise ConfigurationError(e.reason, f"model.{e.field}") from e
        except (TypeError, ValueError) as e:
            raise ConfigurationError(str(e), "model") from e

    def optimizer_config(self) -> OptimizerConfig:
        """Optimizer settings with the method's default iteration budget filled in."""
        overrides = dict(self.optimizer)
        overrides.setdefault("seed", self.seed_opt)
        try:
            return OptimizerConfig.from_dict(overrides).resolved(self.method)
        except ConfigurationError as e:
            raise ConfigurationError(e.reason, f"optimizer.{e.field}") from e

    def resolved(self) -> "RunConfig":
        """Copy with every default materialized in ``model`` and ``optimizer``."""
        model = self.market_model()
        model_dict = {f.name: getattr(model, f.name) for f in dataclasses.fields(model)}
        model_dict["spot"] = list(model.spot)
        model_dict["dates"] = list(model.dates)
        config = self.copy()
        config.model = model_dict
        config.optimizer = dataclasses.asdict(self.optimizer_config())
        config.eval_mode = self.evaluation_mode.value
        return config

    @property
    def run_id(self) -> str:
        """Short hash of the resolved config; fields that never change results are left out."""
        resolved = dataclasses.asdict(self.resolved())
        for f in dataclasses.fields(self):
            if f.metadata.get("exclude_from_run_id", False):
                resolved.pop(f.name)
        return fingerprint(resolved, length=12)

    def to_dict(self) -> Dict:
        return dataclasses.asdict(self)

    def write_to_json(self, config_file, pretty_print=False):
        """Write the config as JSON.

        Args:
            config_file (`str`):
                Destination json file.
            pretty_print (`bool`, defaults to `False`):
                If `True`, the JSON will be pretty-printed with the indent level of 4.
        """
        with open(config_file, "wb") as f:
            self._dump_config(f, pretty_print=pretty_print)

    def _dump_config(self, file, pretty_print=False):
        """Dump the config in `file` file-like object open in bytes mode."""
        file.write(json.dumps(self.to_dict(), indent=4 if pretty_print else None).encode("utf-8"))

    @classmethod
    def from_json(cls, config_file: str, overrides: Optional[Dict] = None) -> "RunConfig":
        """Create a [`RunConfig`] from `config_file`, with `overrides` merged on top.

        Args:
            config_file (`str`):
                The Json file of a (possibly partial) run config.
            overrides (`dict`, *optional*):
                Values that take precedence over the file, e.g. command line flags.
        """
        logger.info(f"Loading run config from {config_file}")
        try:
            with open(config_file, "r", encoding="utf-8") as f:
                config_dict = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"cannot read {config_file}: {e}", "config") from e
        return cls.from_dict(update_dict(config_dict, overrides or {}))

    @classmethod
    def from_dict(cls, config_dict: Dict) -> "RunConfig":
        if not isinstance(config_dict, dict):
            raise ConfigurationError("must be a JSON object", "config")
        field_names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(config_dict) - field_names
        if unknown:
            raise ConfigurationError(f"unknown fields {sorted(unknown)}", "config")
        config_dict = copy.deepcopy(config_dict)
        if "model" in config_dict:
            config_dict["model"] = update_dict(default_model(), config_dict["model"])
        return cls(**config_dict)

    def copy(self) -> "RunConfig":
        return self.__class__(**{k: copy.deepcopy(v) for k, v in self.__dict__.items()})


def _check_int(value, name: str, minimum: Optional[int] = None, maximum: Optional[int] = None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigurationError(f"must be an integer, got {value!r}", name)
    if minimum is not None and value < minimum:
        raise ConfigurationError(f"must be >= {minimum}, got {value}", name)
    if maximum is not None and value > maximum:
        raise ConfigurationError(f"must be <= {maximum}, got {value}", name)

import dataclasses
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from randstop.exceptions import ConfigurationError

DEFAULT_MAX_ITERS = {"backward": 300, "forward": 1000}
INITS = ("regression", "zeros")


@dataclass
class OptimizerConfig:
    """Settings of the first-order ascent used by both fitters.

    ``max_iters=None`` resolves to 300 per date for the backward method and 1000
    for the forward method. ``minibatch=0`` means full-batch gradients.

    ``init="regression"`` starts from the template coefficients or, when it scores
    higher, from a rescaled least squares fit of the exercise advantage on the
    monomials; ``init="zeros"`` always starts from the template. ``whiten`` runs
    the ascent in coordinates where the training monomials are orthonormal.
    """

    method: str = "adam"
    step_size: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    max_iters: Optional[int] = None
    minibatch: int = 0
    tol_rel: float = 1e-7
    window: int = 10
    restarts: int = 1
    init_noise: float = 0.1
    init: str = "regression"
    whiten: bool = True
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.method != "adam":
            raise ConfigurationError(f"unknown optimizer {self.method!r}", "method")
        if not self.step_size > 0:
            raise ConfigurationError(f"must be > 0, got {self.step_size}", "step_size")
        for name in ("beta1", "beta2"):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise ConfigurationError(f"must lie in (0, 1), got {value}", name)
        if not self.epsilon > 0:
            raise ConfigurationError(f"must be > 0, got {self.epsilon}", "epsilon")
        if self.max_iters is not None and self.max_iters < 1:
            raise ConfigurationError(f"must be >= 1, got {self.max_iters}", "max_iters")
        if self.minibatch < 0:
            raise ConfigurationError(f"must be >= 0, got {self.minibatch}", "minibatch")
        if not self.tol_rel >= 0:
            raise ConfigurationError(f"must be >= 0, got {self.tol_rel}", "tol_rel")
        if self.window < 1:
            raise ConfigurationError(f"must be >= 1, got {self.window}", "window")
        if self.restarts < 1:
            raise ConfigurationError(f"must be >= 1, got {self.restarts}", "restarts")
        if self.init not in INITS:
            raise ConfigurationError(f"must be one of {list(INITS)}, got {self.init!r}", "init")
        if not isinstance(self.whiten, bool):
            raise ConfigurationError(f"must be true or false, got {self.whiten!r}", "whiten")
        if self.seed < 0:
            raise ConfigurationError(f"must be >= 0, got {self.seed}", "seed")

    def resolved(self, fit_method: str) -> "OptimizerConfig":
        """Copy with ``max_iters`` filled in for ``fit_method`` (backward/forward)."""
        if self.max_iters is not None:
            return dataclasses.replace(self)
        return dataclasses.replace(self, max_iters=DEFAULT_MAX_ITERS[fit_method])

    @classmethod
    def from_dict(cls, config_dict: Dict) -> "OptimizerConfig":
        field_names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(config_dict) - field_names
        if unknown:
            raise ConfigurationError(f"unknown optimizer fields {sorted(unknown)}", "optimizer")
        return cls(**config_dict)


@dataclass
class FitReport:
    """Outcome of one optimization (one date for the backward method)."""

    objective_trace: List[float] = field(default_factory=list)
    final_objective: float = float("nan")
    iterations_used: int = 0
    restart_index_selected: int = 0
    wall_time: float = 0.0
    date_index: Optional[int] = None
    restart_objectives: List[float] = field(default_factory=list)
    # "template" or "regression"
    start: str = "template"

    def to_dict(self) -> Dict:
        # every field is written, defaults included
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, report_dict: Dict) -> "FitReport":
        field_names = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in report_dict.items() if k in field_names})

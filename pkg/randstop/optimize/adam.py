from dataclasses import dataclass, field

import numpy as np

from randstop.exceptions import NumericFault
from randstop.optimize.base import OptimizerConfig


@dataclass
class AdamState:
    """Parameters and moment estimates owned by a single optimization run."""

    params: np.ndarray
    m: np.ndarray = field(default=None)
    v: np.ndarray = field(default=None)

    def __post_init__(self):
        self.params = np.array(self.params, dtype=float)
        if self.m is None:
            self.m = np.zeros_like(self.params)
        if self.v is None:
            self.v = np.zeros_like(self.params)


def adam_step(state: AdamState, gradient: np.ndarray, iteration: int, cfg: OptimizerConfig) -> np.ndarray:
    """One bias-corrected Adam ascent step; ``iteration`` counts from 1.

    Updates the moments and parameters of ``state`` in place and returns the
    new parameters.
    """
    gradient = np.asarray(gradient, dtype=float)
    if gradient.shape != state.params.shape:
        raise ValueError(
            f"gradient of shape {gradient.shape} does not match parameters {state.params.shape}"
        )
    if not np.all(np.isfinite(gradient)):
        raise NumericFault("non-finite gradient component")
    if iteration < 1:
        raise ValueError(f"iteration counts from 1, got {iteration}")

    state.m = cfg.beta1 * state.m + (1 - cfg.beta1) * gradient
    state.v = cfg.beta2 * state.v + (1 - cfg.beta2) * gradient * gradient

    m_hat = state.m / (1 - cfg.beta1**iteration)
    v_hat = state.v / (1 - cfg.beta2**iteration)

    # maximization: move along the gradient
    state.params = state.params + cfg.step_size * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
    return state.params

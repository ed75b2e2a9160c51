import dataclasses
import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from randstop.features import FeatureMap, LinkFunction, Standardizer, build_feature_map, get_link
from randstop.utils import fingerprint

logger = logging.getLogger(__name__)


class PolicyMode(str, Enum):
    PER_DATE = "per_date"
    TIME_DEPENDENT = "time_dependent"


@dataclass(frozen=True, eq=False)
class Policy:
    """Exercise probabilities ``h_j(x) = link(pol_theta(x))`` on dates ``0..J``.

    A ``per_date`` policy has one feature map and one coefficient vector per date
    ``0..J-1``; a ``time_dependent`` policy has a single map over ``(x, t)`` and a
    single vector. ``h_J`` is identically 1 and carries no parameters.
    """

    mode: PolicyMode
    link: LinkFunction
    feature_maps: Tuple[FeatureMap, ...]
    coefficients: Tuple[np.ndarray, ...]
    dates: Tuple[float, ...]
    model_fingerprint: str = ""

    def __post_init__(self):
        object.__setattr__(self, "mode", PolicyMode(self.mode))
        object.__setattr__(self, "dates", tuple(float(t) for t in self.dates))
        object.__setattr__(self, "feature_maps", tuple(self.feature_maps))
        coefficients = []
        for theta in self.coefficients:
            theta = np.array(theta, dtype=float)
            theta.setflags(write=False)
            coefficients.append(theta)
        object.__setattr__(self, "coefficients", tuple(coefficients))

        expected = self.num_dates if self.mode is PolicyMode.PER_DATE else 1
        if len(self.feature_maps) != expected or len(self.coefficients) != expected:
            raise ValueError(
                f"{self.mode.value} policy over {self.num_dates} dates needs {expected} "
                f"feature maps and coefficient vectors, got {len(self.feature_maps)} "
                f"and {len(self.coefficients)}"
            )
        for fm, theta in zip(self.feature_maps, self.coefficients):
            if theta.shape != (fm.num_features,):
                raise ValueError(
                    f"coefficient vector of length {theta.size} does not match "
                    f"{fm.num_features} monomials"
                )

    @property
    def num_dates(self) -> int:
        return len(self.dates) - 1

    @property
    def num_features(self) -> int:
        return self.feature_maps[0].num_features

    @property
    def state_dim(self) -> int:
        num_vars = self.feature_maps[0].num_vars
        return num_vars - 1 if self.mode is PolicyMode.TIME_DEPENDENT else num_vars

    def _slot(self, j: int) -> int:
        return j if self.mode is PolicyMode.PER_DATE else 0

    def theta_at(self, j: int) -> np.ndarray:
        return self.coefficients[self._slot(j)]

    def features(self, j: int, states: np.ndarray, t_j: float) -> np.ndarray:
        """Monomial features ``grad_theta pol`` at date ``j < J``."""
        raw = np.asarray(states, dtype=float)
        if self.mode is PolicyMode.TIME_DEPENDENT:
            t = np.full(raw.shape[:-1] + (1,), float(t_j))
            raw = np.concatenate([raw, t], axis=-1)
        return self.feature_maps[self._slot(j)].transform(raw)

    def score(self, j: int, states: np.ndarray, t_j: float, theta=None) -> np.ndarray:
        theta = self.theta_at(j) if theta is None else theta
        return self.features(j, states, t_j) @ theta

    def with_coefficients(self, j: int, theta: np.ndarray) -> "Policy":
        """Copy with the coefficient vector of date ``j`` (any ``j`` if time-dependent) replaced."""
        coefficients = list(self.coefficients)
        coefficients[self._slot(j)] = np.asarray(theta, dtype=float)
        return dataclasses.replace(self, coefficients=tuple(coefficients))

    def to_dict(self) -> Dict:
        first = self.feature_maps[0]
        return {
            "mode": self.mode.value,
            "link": self.link.kind,
            "degree": first.degree,
            "num_vars": first.num_vars,
            "exponents": [list(e) for e in first.exponents],
            "standardizer": [
                {"shift": list(fm.standardizer.shift), "scale": list(fm.standardizer.scale)}
                for fm in self.feature_maps
            ],
            "coefficients": [theta.tolist() for theta in self.coefficients],
            "dates": list(self.dates),
            "model_fingerprint": self.model_fingerprint,
        }

    @classmethod
    def from_dict(cls, policy_dict: Dict) -> "Policy":
        exponents = tuple(tuple(e) for e in policy_dict["exponents"])
        feature_maps = [
            FeatureMap(
                num_vars=policy_dict["num_vars"],
                degree=policy_dict["degree"],
                standardizer=Standardizer(**std),
                exponents=exponents,
            )
            for std in policy_dict["standardizer"]
        ]
        return cls(
            mode=PolicyMode(policy_dict["mode"]),
            link=get_link(policy_dict["link"]),
            feature_maps=tuple(feature_maps),
            coefficients=tuple(np.asarray(c, dtype=float) for c in policy_dict["coefficients"]),
            dates=tuple(policy_dict["dates"]),
            model_fingerprint=policy_dict.get("model_fingerprint", ""),
        )

    def write_to_json(self, policy_file, pretty_print=False):
        """Write the policy to ``policy_file``; floats are written round-trip exact."""
        with open(policy_file, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=4 if pretty_print else None)

    @classmethod
    def from_json(cls, policy_file) -> "Policy":
        logger.info(f"Loading policy from {policy_file}")
        with open(policy_file, "r", encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

    def fingerprint(self) -> str:
        return fingerprint(self.to_dict())


def eval_h(policy: Policy, date_index: int, state, t_j: float):
    """Exercise probability at date ``date_index``; exactly 1 at the terminal date.

    ``state`` is a d-vector or an ``[n, d]`` array of states.
    """
    state = np.asarray(state, dtype=float)
    if not 0 <= date_index <= policy.num_dates:
        raise ValueError(f"date index {date_index} outside 0..{policy.num_dates}")
    if date_index == policy.num_dates:
        h = np.ones(state.shape[:-1])
    else:
        h = policy.link.value(policy.score(date_index, state, t_j))
    return float(h) if h.ndim == 0 else h


def eval_h_grad(policy: Policy, date_index: int, state, t_j: float):
    """``(h, dh/dtheta)`` at a date ``< J``; the gradient has one entry per monomial."""
    if date_index == policy.num_dates:
        raise ValueError("h_J is identically 1 and has no parameters")
    if not 0 <= date_index < policy.num_dates:
        raise ValueError(f"date index {date_index} outside 0..{policy.num_dates - 1}")
    phi = policy.features(date_index, np.asarray(state, dtype=float), t_j)
    p = phi @ policy.theta_at(date_index)
    h = policy.link.value(p)
    grad = policy.link.derivative(p)[..., None] * phi
    if np.ndim(h) == 0:
        return float(h), grad
    return h, grad


def make_policy_template(
    mode: Union[PolicyMode, str],
    link: Union[LinkFunction, str],
    degree: int,
    dates: Sequence[float],
    sample_states: Optional[np.ndarray] = None,
    model_fingerprint: str = "",
    dim: Optional[int] = None,
) -> Policy:
    """Zero-coefficient policy with standardizers fitted on ``sample_states``.

    ``sample_states`` is the ``[M, J + 1, d]`` training state array. Per-date maps
    are fitted on the states of their own date; the time-dependent map on all
    ``(X_j, t_j)`` pairs. Without a sample, ``dim`` must be given and the
    variables are left unscaled.
    """
    mode = PolicyMode(mode)
    if isinstance(link, str):
        link = get_link(link)
    dates = tuple(float(t) for t in dates)
    num_dates = len(dates) - 1
    if sample_states is not None:
        sample_states = np.asarray(sample_states, dtype=float)
        if sample_states.ndim != 3 or sample_states.shape[1] != num_dates + 1:
            raise ValueError(
                f"sample states of shape {sample_states.shape} do not cover {num_dates + 1} dates"
            )
        dim = sample_states.shape[2]
    elif dim is None:
        raise ValueError("either sample_states or dim is required")

    if mode is PolicyMode.PER_DATE:
        feature_maps = [
            build_feature_map(
                dim, degree, None if sample_states is None else sample_states[:, j, :]
            )
            for j in range(num_dates)
        ]
    elif sample_states is None:
        feature_maps = [build_feature_map(dim + 1, degree)]
    else:
        num_paths = sample_states.shape[0]
        times = np.broadcast_to(np.asarray(dates)[None, :, None], (num_paths, num_dates + 1, 1))
        sample = np.concatenate([sample_states, times], axis=-1).reshape(-1, dim + 1)
        feature_maps = [build_feature_map(dim + 1, degree, sample)]

    coefficients = [np.zeros(fm.num_features) for fm in feature_maps]
    logger.debug(
        f"Built {mode.value} {link.kind} policy template, degree {degree}, "
        f"{feature_maps[0].num_features} monomials per map"
    )
    return Policy(
        mode=mode,
        link=link,
        feature_maps=tuple(feature_maps),
        coefficients=tuple(coefficients),
        dates=dates,
        model_fingerprint=model_fingerprint,
    )

import itertools
from dataclasses import dataclass, field
from math import comb
from typing import Optional, Tuple

import numpy as np

# Lower bound on fitted standard deviations; constant variables map to 0.
MIN_SCALE = 1e-12


def monomial_exponents(num_vars: int, degree: int) -> Tuple[Tuple[int, ...], ...]:
    """Exponent tuples with total degree <= ``degree`` in graded lexicographic order.

    The constant monomial comes first; within a degree, higher powers of earlier
    variables come first, e.g. ``1, x, y, x^2, xy, y^2`` for two variables.
    """
    if degree < 0:
        raise ValueError(f"degree must be >= 0, got {degree}")
    if num_vars < 1:
        raise ValueError(f"num_vars must be >= 1, got {num_vars}")
    exponents = []
    for total in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(num_vars), total):
            exps = [0] * num_vars
            for var in combo:
                exps[var] += 1
            exponents.append(tuple(exps))
    assert len(exponents) == comb(num_vars + degree, degree)
    return tuple(exponents)


@dataclass
class Standardizer:
    """Per-variable affine map ``z = (x - shift) / scale``."""

    shift: Tuple[float, ...]
    scale: Tuple[float, ...]

    def __post_init__(self):
        self.shift = tuple(float(s) for s in self.shift)
        self.scale = tuple(float(s) for s in self.scale)
        if len(self.shift) != len(self.scale):
            raise ValueError("shift and scale must have the same length")
        if any(not s > 0 for s in self.scale):
            raise ValueError("scales must be strictly positive")

    @classmethod
    def identity(cls, num_vars: int) -> "Standardizer":
        return cls(shift=(0.0,) * num_vars, scale=(1.0,) * num_vars)

    @classmethod
    def fit(cls, sample: np.ndarray) -> "Standardizer":
        sample = np.asarray(sample, dtype=float)
        if sample.ndim != 2 or sample.shape[0] == 0:
            raise ValueError("standardization needs a non-empty [n, num_vars] sample")
        scale = np.maximum(sample.std(axis=0), MIN_SCALE)
        return cls(shift=tuple(sample.mean(axis=0)), scale=tuple(scale))

    def apply(self, raw: np.ndarray) -> np.ndarray:
        return (raw - np.asarray(self.shift)) / np.asarray(self.scale)


@dataclass
class FeatureMap:
    """Standardized monomial features, ``grad_theta pol_theta(x)`` of a policy."""

    num_vars: int
    degree: int
    standardizer: Standardizer
    exponents: Tuple[Tuple[int, ...], ...] = field(default=())

    def __post_init__(self):
        if isinstance(self.standardizer, dict):
            self.standardizer = Standardizer(**self.standardizer)
        if not self.exponents:
            self.exponents = monomial_exponents(self.num_vars, self.degree)
        self.exponents = tuple(tuple(int(e) for e in exps) for exps in self.exponents)
        if len(set(self.exponents)) != len(self.exponents):
            raise ValueError("exponents must be duplicate-free")
        if (0,) * self.num_vars not in self.exponents:
            raise ValueError("exponents must include the constant monomial")
        if len(self.standardizer.shift) != self.num_vars:
            raise ValueError(
                f"standardizer has {len(self.standardizer.shift)} variables, expected {self.num_vars}"
            )
        self._exps = np.asarray(self.exponents, dtype=np.int64)

    @property
    def num_features(self) -> int:
        return len(self.exponents)

    def transform(self, raw: np.ndarray) -> np.ndarray:
        """Monomials of ``raw`` with shape ``(..., num_vars)`` -> ``(..., num_features)``."""
        z = self.standardizer.apply(np.asarray(raw, dtype=float))
        max_power = int(self._exps.max())
        # powers[..., v, k] = z_v ** k, by repeated multiplication
        powers = np.ones(z.shape + (max_power + 1,))
        for k in range(1, max_power + 1):
            powers[..., k] = powers[..., k - 1] * z
        out = np.ones(z.shape[:-1] + (self.num_features,))
        for v in range(self.num_vars):
            out *= powers[..., v, self._exps[:, v]]
        return out


def build_feature_map(
    num_vars: int, degree: int, sample_states: Optional[np.ndarray] = None
) -> FeatureMap:
    """Enumerate monomials and fit the standardizer on ``sample_states``.

    ``sample_states=None`` leaves the variables unstandardized.
    """
    if sample_states is None:
        standardizer = Standardizer.identity(num_vars)
    else:
        sample = np.asarray(sample_states, dtype=float).reshape(-1, num_vars)
        standardizer = Standardizer.fit(sample)
    return FeatureMap(num_vars=num_vars, degree=degree, standardizer=standardizer)

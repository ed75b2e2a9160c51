from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

# Polynomial scores are clamped to [-P_CLAMP, P_CLAMP] before the link.
P_CLAMP = 30.0


def clamp(p):
    return np.clip(p, -P_CLAMP, P_CLAMP)


def inside_clamp(p):
    """1 where the clamp is inactive, 0 where it saturates."""
    return ((p > -P_CLAMP) & (p < P_CLAMP)).astype(float)


@dataclass
class LinkFunction:
    """Nondecreasing smooth map from a polynomial score to [0, 1]."""

    # Automatically constructed
    _type: str = field(default="LinkFunction", init=False, repr=False)

    @property
    def kind(self) -> str:
        return self._type.lower()

    def value(self, p):
        raise NotImplementedError

    def derivative(self, p):
        """``d value / dp`` including the clamp, so zero where it saturates."""
        raise NotImplementedError


@dataclass
class Logistic(LinkFunction):
    """``e^p / (1 + e^p)``."""

    # Automatically constructed
    _type: str = field(default="Logistic", init=False, repr=False)

    def value(self, p):
        return expit(clamp(p))

    def derivative(self, p):
        q = clamp(p)
        return expit(q) * expit(-q) * inside_clamp(p)


@dataclass
class Gumbel(LinkFunction):
    """``1 - exp(-exp(p))``."""

    # Automatically constructed
    _type: str = field(default="Gumbel", init=False, repr=False)

    def value(self, p):
        return -np.expm1(-np.exp(clamp(p)))

    def derivative(self, p):
        q = clamp(p)
        return np.exp(q - np.exp(q)) * inside_clamp(p)


LINKS = {"logistic": Logistic, "gumbel": Gumbel}


def get_link(kind: str) -> LinkFunction:
    try:
        return LINKS[kind.lower()]()
    except KeyError:
        raise ValueError(f"Unknown link function {kind!r}, expected one of {sorted(LINKS)}")

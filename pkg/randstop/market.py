import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from randstop import parallel
from randstop.exceptions import ConfigurationError
from randstop.payoff import PayoffKind, PayoffSpec, fill_payoffs
from randstop.utils import STREAM_NORMALS, asdict, fingerprint, make_generator

logger = logging.getLogger(__name__)


def make_time_grid(maturity: float, num_dates: int) -> Tuple[float, ...]:
    """Uniform exercise grid ``t_j = j * T / J``, j = 0..J."""
    if num_dates < 1:
        raise ValueError(f"num_dates must be >= 1, got {num_dates}")
    if not maturity > 0:
        raise ValueError(f"maturity must be > 0, got {maturity}")
    grid = [j * maturity / num_dates for j in range(num_dates + 1)]
    # pin the endpoint, j * T / J can round away from T
    grid[-1] = float(maturity)
    return tuple(grid)


def _as_real(value, name: str) -> float:
    if isinstance(value, (bool, str)):
        raise ConfigurationError(f"must be a real number, got {value!r}", name)
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"must be a real number, got {value!r}", name) from None
    if not np.isfinite(value):
        raise ConfigurationError(f"must be finite, got {value}", name)
    return value


def _as_reals(values, name: str) -> Tuple[float, ...]:
    try:
        items = list(values)
    except TypeError:
        raise ConfigurationError(f"must be a list of real numbers, got {values!r}", name) from None
    return tuple(_as_real(v, name) for v in items)


def _as_integer(value, name: str) -> int:
    number = _as_real(value, name)
    if number != int(number):
        raise ConfigurationError(f"must be an integer, got {value!r}", name)
    return int(number)


@dataclass(frozen=True)
class MarketModel:
    """Multi-asset Black-Scholes market with independent log-price drivers.

    Log-prices follow ``dX^i = sigma dW^i + (r - delta - sigma^2 / 2) dt`` with
    ``X_0 = 0`` and prices ``S^i = S_0^i exp(X^i)``.
    """

    dim: int
    spot: Tuple[float, ...]
    strike: float
    rate: float
    dividend: float
    vol: float
    maturity: float
    num_dates: int
    dates: Tuple[float, ...] = field(
        default=(), metadata={"include_in_asdict_even_if_is_default": True}
    )
    # sigma = 0 is only meaningful in tests of the deterministic drift
    allow_zero_vol: bool = False

    def __post_init__(self):
        for name in ("dim", "num_dates"):
            object.__setattr__(self, name, _as_integer(getattr(self, name), name))
        for name in ("strike", "rate", "dividend", "vol", "maturity"):
            object.__setattr__(self, name, _as_real(getattr(self, name), name))
        spot = self.spot
        if np.isscalar(spot):
            spot = (spot,) * max(self.dim, 1)
        object.__setattr__(self, "spot", _as_reals(spot, "spot"))
        if not self.dates:
            if self.maturity > 0 and self.num_dates >= 1:
                object.__setattr__(
                    self, "dates", make_time_grid(self.maturity, self.num_dates)
                )
        else:
            object.__setattr__(self, "dates", _as_reals(self.dates, "dates"))
        self._validate()

    def _validate(self):
        if self.dim < 1:
            raise ConfigurationError(f"must be a positive integer, got {self.dim}", "dim")
        if len(self.spot) != self.dim:
            raise ConfigurationError(
                f"expected {self.dim} initial prices, got {len(self.spot)}", "spot"
            )
        if any(not np.isfinite(s) or s <= 0 for s in self.spot):
            raise ConfigurationError("initial prices must be finite and > 0", "spot")
        if not self.strike >= 0:
            raise ConfigurationError(f"must be >= 0, got {self.strike}", "strike")
        if self.allow_zero_vol:
            if not self.vol >= 0:
                raise ConfigurationError(f"must be >= 0, got {self.vol}", "vol")
        elif not self.vol > 0:
            raise ConfigurationError(f"must be > 0, got {self.vol}", "vol")
        if not self.maturity > 0:
            raise ConfigurationError(f"must be > 0, got {self.maturity}", "maturity")
        if self.num_dates < 1:
            raise ConfigurationError(f"must be >= 1, got {self.num_dates}", "num_dates")
        dates = np.asarray(self.dates, dtype=float)
        if dates.shape != (self.num_dates + 1,):
            raise ConfigurationError(
                f"expected {self.num_dates + 1} dates, got {dates.size}", "dates"
            )
        if dates[0] != 0.0 or not np.isclose(dates[-1], self.maturity, rtol=0, atol=1e-12):
            raise ConfigurationError("must start at 0 and end at maturity", "dates")
        if np.any(np.diff(dates) <= 0):
            raise ConfigurationError("must be strictly increasing", "dates")

    @property
    def drift(self) -> float:
        return self.rate - self.dividend - 0.5 * self.vol**2

    @property
    def payoff_spec(self) -> PayoffSpec:
        return PayoffSpec(kind=PayoffKind.MAX_CALL, strike=self.strike, rate=self.rate)

    def prices(self, states: np.ndarray) -> np.ndarray:
        """Prices ``S_0 exp(X)`` for log-prices of shape ``(..., dim)``."""
        return np.asarray(self.spot) * np.exp(states)

    def simulate_block(self, block: int, start: int, stop: int, seed: int) -> "PathSet":
        """Exact lognormal transitions for paths ``start..stop-1``."""
        rng = make_generator(seed, STREAM_NORMALS, block)
        num = stop - start
        dt = np.diff(np.asarray(self.dates))
        zeta = rng.standard_normal((num, self.num_dates, self.dim))
        increments = (
            self.vol * np.sqrt(dt)[None, :, None] * zeta + self.drift * dt[None, :, None]
        )
        states = np.zeros((num, self.num_dates + 1, self.dim))
        np.cumsum(increments, axis=1, out=states[:, 1:, :])
        return PathSet(states=states, payoffs=None, num_paths=num, seed=seed)

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, model_dict: Dict) -> "MarketModel":
        field_names = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in model_dict.items() if k in field_names})

    def fingerprint(self) -> str:
        return fingerprint(self.to_dict())


@dataclass(frozen=True)
class PathSet:
    """Simulated trajectories and their cached discounted payoffs.

    Attributes:
        states: ``[M, J + 1, d]`` state per path and date (log-prices for a market).
        payoffs: ``[M, J + 1]`` discounted rewards ``Z_j``; ``None`` until filled.
        num_paths: ``M``.
        seed: seed the paths were generated with.
        state_index: ``[M, J + 1]`` chain state labels, finite chains only.
    """

    states: np.ndarray
    payoffs: Optional[np.ndarray]
    num_paths: int
    seed: int
    state_index: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("states", "payoffs", "state_index"):
            array = getattr(self, name)
            if array is not None:
                array = np.asarray(array)
                array.setflags(write=False)
                object.__setattr__(self, name, array)

    @property
    def num_dates(self) -> int:
        return self.states.shape[1] - 1

    @property
    def dim(self) -> int:
        return self.states.shape[2]

    def subset(self, indices: np.ndarray) -> "PathSet":
        return PathSet(
            states=self.states[indices],
            payoffs=None if self.payoffs is None else self.payoffs[indices],
            num_paths=len(indices),
            seed=self.seed,
            state_index=None if self.state_index is None else self.state_index[indices],
        )


def concatenate(blocks) -> PathSet:
    """Join block PathSets in order."""
    blocks = list(blocks)
    has_payoffs = all(b.payoffs is not None for b in blocks)
    has_index = all(b.state_index is not None for b in blocks)
    return PathSet(
        states=np.concatenate([b.states for b in blocks]),
        payoffs=np.concatenate([b.payoffs for b in blocks]) if has_payoffs else None,
        num_paths=sum(b.num_paths for b in blocks),
        seed=blocks[0].seed,
        state_index=np.concatenate([b.state_index for b in blocks]) if has_index else None,
    )


def simulate_block(model, block: int, start: int, stop: int, seed: int) -> PathSet:
    """One block of paths with payoffs filled."""
    paths = model.simulate_block(block, start, stop, seed)
    return fill_payoffs(paths, model.payoff_spec, model)


def simulate_paths(model, num_paths: int, seed: int, threads: Optional[int] = None) -> PathSet:
    """Simulate ``num_paths`` independent trajectories of ``model``.

    ``model`` is a `MarketModel` or any path source with the same
    ``simulate_block``/``payoff_spec`` surface (e.g. a finite chain). The result
    depends only on ``(model, num_paths, seed)``; the worker count only
    changes how blocks are scheduled.
    """
    if int(num_paths) != num_paths or num_paths < 1:
        raise ValueError(f"num_paths must be >= 1, got {num_paths}")
    logger.debug(f"Simulating {num_paths} paths with seed {seed}")
    blocks = parallel.map_blocks(
        lambda b, lo, hi: simulate_block(model, b, lo, hi, seed),
        int(num_paths),
        threads=threads,
    )
    paths = concatenate(blocks)
    return dataclasses.replace(paths, seed=seed)

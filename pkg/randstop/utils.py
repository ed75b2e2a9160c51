import collections
import copy
import hashlib
import json
from dataclasses import fields, is_dataclass
from typing import Any, Optional

import numpy as np

# Substream identifiers; the second spawn key component is the block index.
STREAM_NORMALS = 0
STREAM_UNIFORMS = 1
STREAM_TERMINAL = 2
STREAM_CHAIN = 3
STREAM_RESTART = 4
STREAM_MINIBATCH = 5


def update_dict(d, u):
    for k, v in u.items():
        if isinstance(v, collections.abc.Mapping):
            d[k] = update_dict(d.get(k, {}), v)
        else:
            d[k] = v
    return d


def asdict(obj):
    """Convert an object to its JSON-ready dictionary representation recursively.

    Dataclass fields equal to their default are skipped unless the field sets
    ``include_in_asdict_even_if_is_default`` in its metadata. Numpy arrays become
    nested lists and numpy scalars become Python numbers.
    """

    def _is_dataclass_instance(obj):
        return is_dataclass(obj) and not isinstance(obj, type)

    def _asdict_inner(obj):
        if _is_dataclass_instance(obj):
            result = {}
            for f in fields(obj):
                if f.metadata.get("exclude_from_asdict", False):
                    continue
                value = _asdict_inner(getattr(obj, f.name))
                if (
                    not f.init
                    or not _equals_default(value, f.default)
                    or f.metadata.get("include_in_asdict_even_if_is_default", False)
                ):
                    result[f.name] = value
            return result
        elif isinstance(obj, np.ndarray):
            return obj.tolist()
        elif isinstance(obj, np.generic):
            return obj.item()
        elif isinstance(obj, tuple) and hasattr(obj, "_fields"):
            # obj is a namedtuple
            return type(obj)(*[_asdict_inner(v) for v in obj])
        elif isinstance(obj, (list, tuple)):
            return [_asdict_inner(v) for v in obj]
        elif isinstance(obj, dict):
            return {_asdict_inner(k): _asdict_inner(v) for k, v in obj.items()}
        else:
            return copy.deepcopy(obj)

    if not isinstance(obj, dict) and not _is_dataclass_instance(obj):
        raise TypeError(f"{obj} is not a dict or a dataclass")

    return _asdict_inner(obj)


def _equals_default(value, default) -> bool:
    try:
        return bool(value == default)
    except (TypeError, ValueError):
        return False


def canonical_json(obj: Any) -> str:
    """Sorted-key, compact JSON used for hashing."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def fingerprint(obj: Any, length: Optional[int] = None) -> str:
    """sha256 hex digest of the canonical JSON of ``obj`` (dict or dataclass)."""
    if not isinstance(obj, dict):
        obj = asdict(obj)
    digest = hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()
    return digest if length is None else digest[:length]


def make_generator(seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator for the substream ``key`` of ``seed``."""
    if seed < 0:
        raise ValueError(f"seed must be >= 0, got {seed}")
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(sequence))


def format_float(value: float) -> str:
    """17 significant digits; parses back to the identical double."""
    return f"{value:.17g}"


def derive_seed(seed: int, *key: int) -> int:
    """64-bit seed for the substream ``key`` of ``seed``, e.g. one sweep repetition."""
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])

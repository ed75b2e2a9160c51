import numpy as np
import pytest
from randstop.utils import derive_seed, fingerprint, format_float, make_generator, update_dict


def test_generator_streams():
    a = make_generator(7, 0, 1).random(5)
    b = make_generator(7, 0, 1).random(5)
    c = make_generator(7, 0, 2).random(5)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_negative_seed():
    with pytest.raises(ValueError):
        make_generator(-1)


def test_fingerprint_ignores_key_order():
    assert fingerprint({"a": 1, "b": [1, 2]}) == fingerprint({"b": [1, 2], "a": 1})
    assert len(fingerprint({"a": 1}, length=12)) == 12


def test_format_float():
    assert float(format_float(0.1)) == 0.1
    assert float(format_float(13.728)) == 13.728
    assert format_float(0.5) == "0.5"


def test_update_dict_merges_nested():
    assert update_dict({"a": {"x": 1, "y": 2}}, {"a": {"y": 3}}) == {"a": {"x": 1, "y": 3}}


def test_derive_seed():
    assert derive_seed(1, 0) == derive_seed(1, 0)
    assert derive_seed(1, 0) != derive_seed(1, 1)

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from seaqt.errors import ConfigError
from seaqt.serialization import decode_matrix, decode_vector, encode_matrix, encode_vector, fmt

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(arrays(np.float64, (3, 3), elements=finite), arrays(np.float64, (3, 3), elements=finite))
def test_matrix_roundtrip_exact(re, im):
    m = re + 1j * im
    assert np.array_equal(decode_matrix(encode_matrix(m)), m)


def test_real_entries_accepted():
    assert np.array_equal(decode_matrix([[1, 0], [0, 2.5]]), np.diag([1, 2.5]).astype(complex))


@pytest.mark.parametrize("bad", [[], [[1, 2], [3]], [["a", 1], [1, 1]], [[[1, 2, 3], 0], [0, 0]], "x"])
def test_bad_matrices(bad):
    with pytest.raises(ConfigError):
        decode_matrix(bad)


def test_vector_roundtrip():
    v = np.array([1 + 2j, -0.5])
    assert np.array_equal(decode_vector(encode_vector(v)), v)


@given(finite)
def test_fmt_roundtrips(x):
    assert float(fmt(x)) == x

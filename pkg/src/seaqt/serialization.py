"""JSON encoding of complex matrices as nested ``[re, im]`` pairs."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError


def encode_matrix(a) -> list:
    a = np.asarray(a, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def _entry(x) -> complex:
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return complex(float(x[0]), float(x[1]))
    raise ConfigError(f"matrix entry {x!r} is neither a number nor an [re, im] pair")


def decode_matrix(data) -> np.ndarray:
    """Inverse of :func:`encode_matrix`; plain real entries are also accepted."""
    if isinstance(data, np.ndarray):
        return data.astype(complex)
    if not isinstance(data, (list, tuple)) or not data:
        raise ConfigError("matrix must be a non-empty list of rows")
    rows = [[_entry(x) for x in row] for row in data]
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ConfigError(f"matrix is not square ({n} rows, row lengths {[len(r) for r in rows]})")
    return np.array(rows, dtype=complex)


def encode_vector(v) -> list:
    v = np.asarray(v, dtype=complex)
    return [[float(z.real), float(z.imag)] for z in v]


def decode_vector(data) -> np.ndarray:
    if not isinstance(data, (list, tuple)) or not data:
        raise ConfigError("vector must be a non-empty list")
    return np.array([_entry(x) for x in data], dtype=complex)


def fmt(x: float) -> str:
    """Fixed 17-significant-digit formatting for reproducible CSV output."""
    return format(float(x), ".17g")

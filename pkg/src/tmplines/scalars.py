"""Scalar backends: exact rationals (``Fraction``) or float64.

Every sequence, matrix and measure carries one backend tag.  Matrices are
numpy arrays; exact ones use ``dtype=object`` holding ``Fraction`` entries,
float ones use ``float64``.
"""
from __future__ import annotations

from enum import Enum
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Union

import numpy as np

Scalar = Union[Fraction, float]


class Field(str, Enum):
    EXACT = "exact"
    FLOAT = "float"


class MixedBackendError(TypeError):
    """Raised when exact and float scalars meet in one object."""


def parse_scalar(text: Union[str, int, float, Fraction], field: Field) -> Scalar:
    """Parse ``"p/q"``, a decimal string, or a number into ``field``."""
    if isinstance(text, str):
        text = text.strip()
        try:
            value = Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse scalar {text!r}") from exc
        return value if field is Field.EXACT else float(value)
    return coerce(text, field)


def coerce(value, field: Field) -> Scalar:
    if field is Field.EXACT:
        if isinstance(value, Fraction):
            return value
        if isinstance(value, (int, np.integer)) or isinstance(value, Rational):
            return Fraction(int(value)) if isinstance(value, (int, np.integer)) else Fraction(value)
        if isinstance(value, (float, np.floating)):
            raise MixedBackendError(f"float {value!r} given to an exact object")
        raise TypeError(f"unsupported scalar {value!r}")
    if isinstance(value, (Fraction, int, float, np.integer, np.floating)):
        return float(value)
    raise TypeError(f"unsupported scalar {value!r}")


def field_of_values(values: Iterable) -> Field:
    """Exact when every value is an int or Fraction, float otherwise."""
    for v in values:
        if isinstance(v, (float, np.floating)):
            return Field.FLOAT
    return Field.EXACT


def field_of_array(A: np.ndarray) -> Field:
    return Field.EXACT if A.dtype == object else Field.FLOAT


def asarray(rows, field: Field) -> np.ndarray:
    if field is Field.EXACT:
        arr = np.array(rows, dtype=object)
        flat = arr.reshape(-1)
        for idx, v in enumerate(flat):
            flat[idx] = coerce(v, field)
        return arr
    return np.array(rows, dtype=float)


def zeros(shape, field: Field) -> np.ndarray:
    if field is Field.EXACT:
        arr = np.empty(shape, dtype=object)
        arr.fill(Fraction(0))
        return arr
    return np.zeros(shape)


def eye(n: int, field: Field) -> np.ndarray:
    arr = zeros((n, n), field)
    for i in range(n):
        arr[i, i] = Fraction(1) if field is Field.EXACT else 1.0
    return arr


def to_float(A) -> np.ndarray:
    return np.asarray(A, dtype=float) if isinstance(A, np.ndarray) else float(A)


def one(field: Field) -> Scalar:
    return Fraction(1) if field is Field.EXACT else 1.0


def zero(field: Field) -> Scalar:
    return Fraction(0) if field is Field.EXACT else 0.0


def format_scalar(value, field: Field) -> str:
    """Exact values as ``p/q``; floats with 12 significant digits."""
    if isinstance(value, Fraction) and field is Field.EXACT:
        return str(value)
    return f"{float(value):.12g}"

"""Univariate Hankel matrices and the rank of a moment sequence."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from . import linalg
from .scalars import Field, Scalar, coerce, field_of_values, zeros


@dataclass(frozen=True)
class UnivariateMomentSequence:
    values: Tuple[Scalar, ...]
    field: Field = Field.EXACT

    def __post_init__(self):
        if len(self.values) % 2 != 1:
            raise ValueError("a univariate sequence needs odd length 2k+1")
        object.__setattr__(self, "values", tuple(coerce(v, self.field) for v in self.values))

    @classmethod
    def of(cls, values: Sequence, field: Field | None = None) -> "UnivariateMomentSequence":
        return cls(tuple(values), field or field_of_values(values))

    @property
    def k(self) -> int:
        return (len(self.values) - 1) // 2

    def __getitem__(self, i: int) -> Scalar:
        return self.values[i]

    def __len__(self) -> int:
        return len(self.values)

    def __sub__(self, other: "UnivariateMomentSequence") -> "UnivariateMomentSequence":
        return UnivariateMomentSequence(tuple(a - b for a, b in zip(self.values, other.values)), self.field)

    def is_zero(self) -> bool:
        return all(v == 0 for v in self.values)


def hankel_from_values(values: Sequence[Scalar], size: int, field: Field) -> np.ndarray:
    H = zeros((size, size), field)
    for i in range(size):
        for j in range(size):
            H[i, j] = values[i + j]
    return H


def hankel_matrix(seq: UnivariateMomentSequence) -> np.ndarray:
    return hankel_from_values(seq.values, seq.k + 1, seq.field)


def leading_principal(A: np.ndarray, m: int) -> np.ndarray:
    """``A(m)``: the upper-left ``(m+1) x (m+1)`` corner."""
    if not 0 <= m < A.shape[0]:
        raise ValueError(f"m={m} out of range for size {A.shape[0]}")
    return A[: m + 1, : m + 1]


def hankel_values(H: np.ndarray) -> list[Scalar]:
    """Antidiagonal values of a square Hankel matrix."""
    n = H.shape[0]
    return [H[0, i] for i in range(n)] + [H[i, n - 1] for i in range(1, n)]


def is_hankel(H: np.ndarray, tol: float = linalg.DEFAULT_RTOL) -> bool:
    n = H.shape[0]
    vals = hankel_values(H)
    exact = linalg.is_exact(H)
    scale = max(linalg._scale(H), 1.0)
    for i in range(n):
        for j in range(n):
            d = H[i, j] - vals[i + j]
            if (d != 0) if exact else abs(float(d)) > 1e3 * tol * scale:
                return False
    return True


def rank_of_sequence(seq: UnivariateMomentSequence, tol: float = linalg.DEFAULT_RTOL) -> int:
    """``k+1`` if the Hankel matrix is nonsingular, else the first dependent column index."""
    A = hankel_matrix(seq)
    if linalg.is_invertible(A, tol):
        return seq.k + 1
    if linalg.is_exact(A):
        for i in range(seq.k + 1):
            if linalg.rank(A[:, : i + 1]) < i + 1:
                return i
        return seq.k + 1
    # column i is dependent once the leading columns lose full rank relative
    # to the scale of the whole matrix
    Af = np.asarray(A, dtype=float)
    smax = np.linalg.norm(Af, 2)
    if smax == 0:
        return 0
    for i in range(seq.k + 1):
        s = np.linalg.svd(Af[:, : i + 1], compute_uv=False)
        if s[-1] <= tol * smax:
            return i
    return seq.k + 1

"""Parametric extension of the moment matrix on ``n`` parallel lines.

Lines are normalized so one of them is ``y = 0`` and the others are
``y = alpha_1, ..., alpha_{n-1}`` (all nonzero).  The moment matrix restricted
to ``X^(0), Y X^(1), ..., Y^(n-1) X^(n-1)`` is bordered by the rows
``X^i Y^j`` (``2 <= j <= n-1``, ``k+1-j <= i <= k-1``).  The new entries are
either free parameters (moments ``x^i y^j`` with ``2 <= j <= n-1`` and
``2k+1-j <= i <= 2k-1``) or follow from the line relation

    beta_{i,j} = sum_{l=1}^{n-1} (-1)^{l+1} c_l beta_{i,j-l}     (j >= n),

with ``c_l`` the elementary symmetric sums of the nonzero offsets.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb, prod
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import linalg
from .model import BivariateMomentSequence, Label, x_run
from .scalars import Field, Scalar, coerce, zeros


def elementary_symmetric(values: Sequence[Scalar]) -> List[Scalar]:
    """``[e_0, e_1, ..., e_m]`` of the given values."""
    out = [values[0] * 0 + 1 if values else 1]
    for ell in range(1, len(values) + 1):
        out.append(sum(prod(c) for c in combinations(values, ell)))
    return out


def relation_violation(seq: BivariateMomentSequence, alphas: Sequence[Scalar], tol: float = linalg.DEFAULT_RTOL) -> Optional[Label]:
    """First ``(i, j)`` with ``L(x^i y^j prod (y - alpha)) != 0``, or ``None``.

    Checked for every ``i + j + n <= 2k``.
    """
    n = len(alphas)
    e = elementary_symmetric([coerce(a, seq.field) for a in alphas])
    scale = max(1.0, max(abs(float(v)) for v in seq.moments.values()))
    thr = 1e3 * tol * scale * max(1.0, max(abs(float(c)) for c in e))
    for deg in range(2 * seq.k - n + 1):
        for j in range(deg + 1):
            i = deg - j
            r = sum(((-1) ** m * e[m] * seq[(i, j + n - m)] for m in range(n + 1)), 0 * e[0])
            if (r != 0) if seq.field is Field.EXACT else abs(r) > thr:
                return (i, j)
    return None


def base_rows(k: int, n: int) -> List[Label]:
    """``X^(0), Y X^(1), ..., Y^(n-1) X^(n-1)`` in line order."""
    return [lab for j in range(n) for lab in x_run(j, k - j)]


def added_rows(k: int, n: int) -> List[Label]:
    return [(i, j) for j in range(2, n) for i in range(k + 1 - j, k)]


def parameter_labels(k: int, n: int) -> List[Label]:
    return [(i, j) for j in range(2, n) for i in range(2 * k + 1 - j, 2 * k)]


def block_size(k: int, n: int) -> int:
    return n * (2 * k + 3 - n) // 2


@dataclass
class ParametricExtension:
    """``S(t) = S_0 + sum_p t_p S_p`` together with its affine moment map."""

    seq: BivariateMomentSequence
    offsets: Tuple[Scalar, ...]
    rows: List[Label] = field(init=False)
    params: List[Label] = field(init=False)
    S0: np.ndarray = field(init=False, repr=False)
    increments: List[np.ndarray] = field(init=False, repr=False)

    def __post_init__(self):
        fld = self.seq.field
        self.offsets = tuple(coerce(a, fld) for a in self.offsets)
        if any(a == 0 for a in self.offsets):
            raise ValueError("offsets must be nonzero (one line is y = 0)")
        self.n = len(self.offsets) + 1
        k, n = self.seq.k, self.n
        if k < n:
            raise ValueError(f"need k >= n (k={k}, n={n})")
        self.c = elementary_symmetric(list(self.offsets))
        self.params = parameter_labels(k, n)
        self.rows = base_rows(k, n) + added_rows(k, n)
        self._cache: Dict[Label, Tuple[Scalar, ...]] = {}
        m, size = len(self.params), len(self.rows)
        mats = [zeros((size, size), fld) for _ in range(m + 1)]
        for a, (i1, j1) in enumerate(self.rows):
            for b in range(a, size):
                i2, j2 = self.rows[b]
                vec = self.moment(i1 + i2, j1 + j2)
                for p in range(m + 1):
                    mats[p][a, b] = vec[p]
                    mats[p][b, a] = vec[p]
        self.S0, self.increments = mats[0], mats[1:]

    @property
    def field(self) -> Field:
        return self.seq.field

    def moment(self, i: int, j: int) -> Tuple[Scalar, ...]:
        """Affine coefficients ``(const, coef_1, ..., coef_m)`` of the extended moment."""
        key = (i, j)
        if key in self._cache:
            return self._cache[key]
        fld = self.seq.field
        zero = coerce(0, fld)
        m = len(self.params)
        if i + j <= 2 * self.seq.k:
            vec = (self.seq[key],) + (zero,) * m
        elif key in self.params:
            p = self.params.index(key)
            vec = (zero,) * (p + 1) + (coerce(1, fld),) + (zero,) * (m - p - 1)
        elif j >= self.n:
            acc = [zero] * (m + 1)
            for ell in range(1, self.n):
                coef = (-1) ** (ell + 1) * self.c[ell]
                sub = self.moment(i, j - ell)
                acc = [x + coef * y for x, y in zip(acc, sub)]
            vec = tuple(acc)
        else:
            raise KeyError(f"moment ({i},{j}) is not determined by the extension")
        self._cache[key] = vec
        return vec

    def value(self, i: int, j: int, t: Sequence[Scalar]) -> Scalar:
        vec = self.moment(i, j)
        return vec[0] + sum((c * x for c, x in zip(vec[1:], t)), 0 * vec[0])

    def evaluate(self, t: Sequence[Scalar]) -> np.ndarray:
        out = self.S0.copy()
        for x, Si in zip(t, self.increments):
            out = out + x * Si
        return out

    def positions(self, labels: Sequence[Label]) -> List[int]:
        where = {lab: p for p, lab in enumerate(self.rows)}
        return [where[lab] for lab in labels]

    def restrict(self, labels: Sequence[Label], t: Optional[Sequence[Scalar]] = None, cols: Optional[Sequence[Label]] = None) -> np.ndarray:
        S = self.S0 if t is None else self.evaluate(t)
        r = self.positions(labels)
        c = r if cols is None else self.positions(cols)
        return S[np.ix_(r, c)]


def parameter_count(n: int) -> int:
    return comb(n - 1, 2)

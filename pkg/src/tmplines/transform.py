"""Invertible affine changes of variables acting on sequences and measures.

``phi(x, y) = (a + b x + c y, d + e x + f y)``.  The transformed sequence is
``beta~_{ij} = L_beta(phi_1^i phi_2^j)``; it is the moment sequence of the
pushforward measure, so a measure for ``beta~`` pulls back to one for
``beta`` through ``phi^{-1}``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Sequence, Tuple

from .model import Atom, AtomicMeasure2D, BivariateMomentSequence, Polynomial, degree_lex_labels, poly_mul
from .scalars import Field, Scalar, coerce


@dataclass(frozen=True)
class AffineMap:
    a: Scalar
    b: Scalar
    c: Scalar
    d: Scalar
    e: Scalar
    f: Scalar

    def __post_init__(self):
        if self.b * self.f - self.c * self.e == 0:
            raise ValueError("affine map is singular (bf - ce = 0)")

    @classmethod
    def identity(cls) -> "AffineMap":
        return cls(0, 1, 0, 0, 0, 1)

    @classmethod
    def shift_y(cls, alpha: Scalar) -> "AffineMap":
        """``(x, y) -> (x, y - alpha)``."""
        return cls(0, 1, 0, -alpha, 0, 1)

    def __call__(self, x, y):
        return (self.a + self.b * x + self.c * y, self.d + self.e * x + self.f * y)

    def inverse(self) -> "AffineMap":
        det = self.b * self.f - self.c * self.e
        if isinstance(det, int):
            det = Fraction(det)
        b, c, e, f = self.f / det, -self.c / det, -self.e / det, self.b / det
        return AffineMap(-(b * self.a + c * self.d), b, c, -(e * self.a + f * self.d), e, f)

    def coefficients(self, field: Field) -> Tuple[Scalar, ...]:
        return tuple(coerce(v, field) for v in (self.a, self.b, self.c, self.d, self.e, self.f))


@lru_cache(maxsize=64)
def _expansions(coeffs: Tuple[Scalar, ...], k2: int, field: Field) -> dict:
    """Monomial expansions of ``phi_1^i phi_2^j`` for ``i + j <= k2``.

    ``field`` is part of the cache key: ``Fraction(1, 2)`` and ``0.5`` hash alike.
    """
    a, b, c, d, e, f = coeffs
    one = coeffs[0] * 0 + 1
    p1: Polynomial = {(0, 0): a, (1, 0): b, (0, 1): c}
    p2: Polynomial = {(0, 0): d, (1, 0): e, (0, 1): f}
    pow1 = [{(0, 0): one}]
    pow2 = [{(0, 0): one}]
    for _ in range(k2):
        pow1.append(poly_mul(pow1[-1], p1))
        pow2.append(poly_mul(pow2[-1], p2))
    return {(i, j): poly_mul(pow1[i], pow2[j]) for i, j in degree_lex_labels(k2)}


def transform_sequence(seq: BivariateMomentSequence, phi: AffineMap) -> BivariateMomentSequence:
    coeffs = phi.coefficients(seq.field)
    a, b, c, d, e, f = coeffs
    if a == 0 and b == 1 and c == 0 and e == 0 and f == 1:
        return _shift_y(seq, d)
    exp = _expansions(coeffs, 2 * seq.k, seq.field)
    out = {}
    for lab, poly in exp.items():
        total = coeffs[0] * 0
        for mono, coef in poly.items():
            if coef != 0:
                total += coef * seq[mono]
        out[lab] = total
    return BivariateMomentSequence(seq.k, out, seq.field)


def _shift_y(seq: BivariateMomentSequence, d: Scalar) -> BivariateMomentSequence:
    """``(x, y) -> (x, y + d)`` by the binomial expansion of ``(y + d)^j``."""
    powers = [d**p for p in range(2 * seq.k + 1)]
    out = {}
    for i, j in degree_lex_labels(2 * seq.k):
        out[(i, j)] = sum((comb(j, l) * powers[j - l] * seq[(i, l)] for l in range(j + 1)), 0 * d)
    return BivariateMomentSequence(seq.k, out, seq.field)


def pushforward_measure(measure: AtomicMeasure2D, phi: AffineMap) -> AtomicMeasure2D:
    out = []
    for atom in measure.atoms:
        x, y = _apply(phi, atom.x, atom.y)
        out.append(Atom(x, y, atom.density))
    return AtomicMeasure2D(tuple(out))


def pullback_measure(measure: AtomicMeasure2D, phi: AffineMap) -> AtomicMeasure2D:
    return pushforward_measure(measure, phi.inverse())


def _apply(phi: AffineMap, x, y):
    if isinstance(x, float) or isinstance(y, float):
        coeffs = phi.coefficients(Field.FLOAT)
        return AffineMap(*coeffs)(float(x), float(y))
    return phi(x, y)


def normalize_lines(alphas: Sequence[Scalar], designated: int | None = None) -> tuple[AffineMap, list[Scalar]]:
    """Map that puts the lines ``y = alpha`` into canonical position.

    Two lines go to ``y = 0`` (the smaller) and ``y = 1``.  Three or more are
    shifted so that the designated line (default: the smallest) becomes
    ``y = 0``; the returned offsets keep the input order.
    """
    if len(set(alphas)) != len(alphas):
        raise ValueError("line offsets must be pairwise distinct")
    if len(alphas) == 2:
        lo, hi = sorted(alphas)
        width = hi - lo
        if isinstance(width, int):
            width = Fraction(width)
        phi = AffineMap(0, 1, 0, -lo / width, 0, 1 / width)
        return phi, [phi(0, al)[1] for al in alphas]
    if designated is None:
        designated = min(range(len(alphas)), key=lambda i: alphas[i])
    base = alphas[designated]
    return AffineMap.shift_y(base), [al - base for al in alphas]

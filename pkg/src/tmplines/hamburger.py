"""Truncated Hamburger moment problem on the real line.

Solvability is decided from the Hankel matrix; the representing measure is
read off from the column relation of the first dependent column (its roots
are the atoms) and a Vandermonde solve (the densities).  A positive definite
Hankel matrix is first extended flatly by one degree.
"""
from __future__ import annotations

from contextvars import ContextVar
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Optional, Sequence, Tuple

import numpy as np

from . import linalg
from .hankel import UnivariateMomentSequence, hankel_from_values, hankel_matrix, leading_principal, rank_of_sequence
from .scalars import Field, Scalar, zeros

ROOT_SEPARATION = 1e-7
ROOT_RESIDUAL = 1e-9
NOISE_FLOOR = 1e4 * np.finfo(float).eps
# (factor on tol, parent-relative noise level) for carved-out pieces; solvers vary it on retry
PIECE_SETTINGS: ContextVar[Tuple[float, float]] = ContextVar("piece_settings", default=(1.0, NOISE_FLOOR))


class HamburgerError(ArithmeticError):
    """Root extraction failed; usually a rank misclassification upstream."""


class InconsistentConditions(AssertionError):
    """The equivalent solvability conditions disagreed."""


@dataclass(frozen=True)
class AtomicMeasure1D:
    atoms: Tuple[Scalar, ...]
    densities: Tuple[Scalar, ...]

    def __post_init__(self):
        if len(self.atoms) != len(self.densities):
            raise ValueError("atoms and densities differ in length")
        if any(not r > 0 for r in self.densities):
            raise ValueError("densities must be positive")
        if len(set(self.atoms)) != len(self.atoms):
            raise ValueError("atoms must be distinct")

    def __len__(self) -> int:
        return len(self.atoms)

    def moments(self, count: int) -> list:
        return [sum((r * x**i for x, r in zip(self.atoms, self.densities)), 0) for i in range(count)]


@dataclass(frozen=True)
class ThmpDecision:
    solvable: bool
    rank: int
    branch: Optional[str]  # "unique" (r <= k) or "flat" (r = k+1)
    conditions: Tuple[bool, bool, bool]
    witness: dict = field(default_factory=dict)


def thmp_decide(seq: UnivariateMomentSequence, tol: float = linalg.DEFAULT_RTOL) -> ThmpDecision:
    if not seq[0] > 0:
        raise ValueError("beta_0 must be positive")
    k = seq.k
    A = hankel_matrix(seq)
    cert = linalg.psd_check(A, tol)
    r = rank_of_sequence(seq, tol)
    if k == 0:
        return ThmpDecision(True, 1, "flat", (True, True, True))
    rank_full = linalg.rank(A, tol)
    Ak1 = leading_principal(A, k - 1)
    rank_trunc = linalg.rank(Ak1, tol)
    tail = np.array(seq.values[k + 1 :], dtype=A.dtype)
    c4 = cert.is_psd and rank_full == r
    c5 = cert.is_psd and (rank_trunc == k or rank_trunc == rank_full)
    c6 = cert.is_psd and linalg.in_column_space(Ak1, tail, tol)
    conds = (c4, c5, c6)
    if len(set(conds)) != 1:
        raise InconsistentConditions(f"Hankel solvability conditions disagree: {conds}")
    witness = {}
    if not cert.is_psd:
        witness = {"reason": "hankel-not-psd", "vector": cert.witness, "min_eig": cert.min_eig}
    elif not c5:
        witness = {"reason": "rank", "rank": rank_full, "truncated_rank": rank_trunc}
    branch = None if not c5 else ("flat" if r == k + 1 else "unique")
    return ThmpDecision(c5, r, branch, conds, witness)


def _real_roots(coeffs_high_first: Sequence[float]) -> np.ndarray:
    roots = np.roots(np.asarray(coeffs_high_first, dtype=float))
    if roots.size == 0:
        return np.array([])
    scale = 1.0 + np.abs(roots.real)
    if np.any(np.abs(roots.imag) > 1e-6 * scale):
        raise HamburgerError(f"non-real roots {roots}")
    x = np.sort(roots.real)
    # one Newton polish step per root
    p = np.poly1d(coeffs_high_first)
    dp = p.deriv()
    for i, xi in enumerate(x):
        d = dp(xi)
        if d != 0:
            x[i] = xi - p(xi) / d
    x = np.sort(x)
    if np.any(np.diff(x) < ROOT_SEPARATION * (1 + np.abs(x[1:]))):
        raise HamburgerError(f"repeated roots {x}")
    return x


def _rationalize(x: float, poly: Sequence[Fraction]) -> Optional[Fraction]:
    """Return an exact rational root near ``x`` if one exists (coefficients low-first)."""
    denom = lcm(*(c.denominator for c in poly))
    lead = abs(poly[-1] * denom)
    bounds = {min(int(lead), 10**9), 10**6, 1}
    for bound in sorted(bounds):
        q = Fraction(x).limit_denominator(max(bound, 1))
        # a coarse bound can snap onto a neighbouring root
        if abs(float(q) - x) > 1e-6 * (1 + abs(x)):
            continue
        if sum(c * q**i for i, c in enumerate(poly)) == 0:
            return q
    return None


def _roots_of_relation(phi: Sequence[Scalar], exact: bool) -> tuple[list, bool]:
    """Roots of ``t^r - sum phi_j t^j``; second item tells whether all are exact."""
    r = len(phi)
    low_first = [-c for c in phi] + [Fraction(1) if exact else 1.0]
    xs = _real_roots([float(c) for c in reversed(low_first)])
    scale = max(1.0, max(abs(float(c)) for c in low_first))
    for x in xs:
        val = sum(float(c) * x**i for i, c in enumerate(low_first))
        if abs(val) > ROOT_RESIDUAL * scale * max(1.0, abs(x)) ** r:
            raise HamburgerError(f"root residual {val} too large at {x}")
    if exact:
        rat = [_rationalize(float(x), low_first) for x in xs]
        if all(q is not None for q in rat) and len(set(rat)) == len(rat):
            return sorted(rat), True
    return [float(x) for x in xs], False


def _measure_from_relation(values: Sequence[Scalar], r: int, exact: bool) -> AtomicMeasure1D:
    field = Field.EXACT if exact else Field.FLOAT
    Ar = hankel_from_values(values, r, field)
    rhs = np.array(list(values[r : 2 * r]), dtype=Ar.dtype)
    phi = linalg.solve(Ar, rhs)
    atoms, all_exact = _roots_of_relation(list(phi), exact)
    if len(atoms) != r:
        raise HamburgerError(f"expected {r} roots, found {len(atoms)}")
    if all_exact:
        V = zeros((r, r), Field.EXACT)
        for i in range(r):
            for j, x in enumerate(atoms):
                V[i, j] = x**i
        rho = list(linalg.solve(V, np.array(list(values[:r]), dtype=object)))
    else:
        xs = np.array(atoms, dtype=float)
        V = np.vander(xs, r, increasing=True).T
        rho = [float(v) for v in np.linalg.solve(V, np.array([float(v) for v in values[:r]]))]
    if any(not p > 0 for p in rho):
        raise HamburgerError(f"non-positive densities {rho}")
    return AtomicMeasure1D(tuple(atoms), tuple(rho))


def _balanced_odd(seq: UnivariateMomentSequence) -> Scalar:
    """Odd moment placing the extra atom just outside the others.

    Any value gives a flat extension.  Zero can push the new atom very far
    out when the top moment carries only a small excess, so extend the
    degree-k recursion instead and add ``excess * c`` with ``c`` beyond the
    largest root.
    """
    k = seq.k
    exact = seq.field is Field.EXACT
    if k == 0:
        return Fraction(0) if exact else 0.0
    A = hankel_matrix(seq)
    Ak = A[:k, :k]
    phi = linalg.solve(Ak, np.array(list(seq.values[k : 2 * k]), dtype=A.dtype))
    natural = sum(phi[i] * seq.values[k + 1 + i] for i in range(k))
    excess = seq.values[2 * k] - sum(phi[i] * seq.values[k + i] for i in range(k))
    coeffs = [1.0] + [-float(c) for c in reversed(list(phi))]
    reach = float(np.max(np.abs(np.roots(coeffs)), initial=0.0))
    c = int(reach) + 2
    return natural + excess * (Fraction(c) if exact else float(c))


def flat_extension(seq: UnivariateMomentSequence, odd: Optional[Scalar] = None) -> tuple[Scalar, Scalar]:
    """``(beta_{2k+1}, beta_{2k+2})`` making the extended Hankel matrix rank-preserving."""
    k = seq.k
    A = hankel_matrix(seq)
    if odd is None:
        odd = _balanced_odd(seq)
    w = np.array(list(seq.values[k + 1 :]) + [odd], dtype=A.dtype)
    top = w @ linalg.solve(A, w)
    return odd, top


def thmp_solve(seq: UnivariateMomentSequence, tol: float = linalg.DEFAULT_RTOL) -> AtomicMeasure1D:
    dec = thmp_decide(seq, tol)
    if not dec.solvable:
        raise ValueError(f"sequence has no representing measure: {dec.witness}")
    exact = seq.field is Field.EXACT
    if dec.branch == "flat":
        odd, top = flat_extension(seq)
        values = list(seq.values) + [odd, top]
        return _measure_from_relation(values, seq.k + 1, exact)
    return _measure_from_relation(seq.values, dec.rank, exact)


def solve_or_empty(seq: UnivariateMomentSequence, tol: float = linalg.DEFAULT_RTOL, scale: float = 1.0) -> AtomicMeasure1D:
    """Like :func:`thmp_solve` but maps a (numerically) zero sequence to the empty measure.

    ``scale`` is the magnitude of the problem the sequence was carved out of.
    """
    if seq.is_zero():
        return AtomicMeasure1D((), ())
    if seq.field is Field.FLOAT and is_noise(seq.values, scale):
        return AtomicMeasure1D((), ())
    return thmp_solve(seq, piece_tol(seq, tol, scale))


def is_noise(values: Sequence, scale: float) -> bool:
    """A float piece indistinguishable from rounding in a parent of magnitude ``scale``."""
    _, noise = PIECE_SETTINGS.get()
    return max(abs(float(v)) for v in values) <= noise * scale


def piece_tol(seq: UnivariateMomentSequence, tol: float, scale: float) -> float:
    """Tolerance for a sequence carved out of a float problem of magnitude ``scale``.

    Values below ``noise * scale`` are rounding inherited from the parent.
    """
    if seq.field is not Field.FLOAT:
        return tol
    return carved_tol(seq.values, tol, scale)


def carved_tol(values: Sequence, tol: float, scale: float) -> float:
    """:func:`piece_tol` for any float values carved out of a parent of magnitude ``scale``."""
    factor, noise = PIECE_SETTINGS.get()
    size = max(abs(float(v)) for v in values)
    if size == 0:
        return tol * factor
    return max(tol * factor, noise * scale / size)

"""Moment problem on two parallel lines ``y = alpha_1`` and ``y = alpha_2``.

After mapping the lines to ``y = 0`` and ``y = 1`` the sequence splits into
the part living on ``y = 1`` (its x-moments are ``beta_{i,1}``, plus one free
top moment) and the remainder on ``y = 0``.  Both are univariate Hankel
problems.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import linalg
from .hamburger import AtomicMeasure1D, solve_or_empty
from .hankel import UnivariateMomentSequence, hankel_from_values
from .model import (
    Atom,
    AtomicMeasure2D,
    BivariateMomentSequence,
    build_moment_matrix,
    check_recursively_generated,
    moment_block,
    poly_vector,
    x_run,
)
from .scalars import Field, coerce
from .transform import AffineMap, pullback_measure


@dataclass(frozen=True)
class TwoLineDecision:
    feasible: bool
    condition: Optional[str]  # first of "a", "b", "c" that holds
    witness: dict = field(default_factory=dict)
    ranks: dict = field(default_factory=dict)
    holding: tuple = ()  # every condition among "a", "b", "c" that holds


@dataclass(frozen=True)
class TwoLineConstruction:
    measure: AtomicMeasure2D
    case: str  # "i", "ii" or "iii"
    delta: object
    top_sequence: UnivariateMomentSequence  # placed on y = alpha_2
    bottom_sequence: UnivariateMomentSequence  # placed on y = alpha_1


def _ordered(alpha1, alpha2):
    if alpha1 == alpha2:
        raise ValueError("the two lines must differ")
    return (alpha1, alpha2) if alpha1 < alpha2 else (alpha2, alpha1)


def _scale(seq: BivariateMomentSequence) -> float:
    return max(1.0, max(abs(float(v)) for v in seq.moments.values()))


def relation_violation(seq: BivariateMomentSequence, alpha1, alpha2, tol: float) -> Optional[tuple]:
    """First ``(i, j)`` where ``beta_{i,j+2} = (a1+a2) beta_{i,j+1} - a1 a2 beta_{i,j}`` fails."""
    s, p = alpha1 + alpha2, alpha1 * alpha2
    thr = 1e3 * tol * _scale(seq)
    for deg in range(2 * seq.k - 1):
        for j in range(deg + 1):
            i = deg - j
            r = seq[(i, j + 2)] - s * seq[(i, j + 1)] + p * seq[(i, j)]
            if (r != 0) if seq.field is Field.EXACT else abs(r) > thr:
                return (i, j)
    return None


def workspace_blocks(seq: BivariateMomentSequence):
    """``M`` (rows ``X^(0), Y X^(1)``) and ``N`` (rows ``X^(1), Y X^(1)``)."""
    k = seq.k
    x0, x1, yx1 = x_run(0, k), x_run(0, k - 1), x_run(1, k - 1)
    return moment_block(seq, x0 + yx1), moment_block(seq, x1 + yx1), moment_block(seq, x1), moment_block(seq, x1, yx1)


def decide_2pl(seq: BivariateMomentSequence, alpha1, alpha2, tol: float = linalg.DEFAULT_RTOL) -> TwoLineDecision:
    if seq.k < 2:
        raise ValueError("two-line solver needs k >= 2")
    alpha1, alpha2 = _ordered(coerce(alpha1, seq.field), coerce(alpha2, seq.field))
    M, N, A1, B1 = workspace_blocks(seq)
    cert = linalg.psd_check(M, tol)
    rank_m, rank_n = linalg.rank(M, tol), linalg.rank(N, tol)
    ranks = {"M": rank_m, "N": rank_n}
    if not cert.is_psd:
        return TwoLineDecision(False, None, {"reason": "M-not-psd", "vector": cert.witness, "min_eig": cert.min_eig}, ranks)
    bad = relation_violation(seq, alpha1, alpha2, tol)
    if bad is not None:
        return TwoLineDecision(False, None, {"reason": "relation", "index": bad}, ranks)
    holding = tuple(
        name
        for name, ok in (
            ("a", linalg.is_invertible(B1 - alpha1 * A1, tol)),
            ("b", linalg.is_invertible(alpha2 * A1 - B1, tol)),
            ("c", rank_m == rank_n),
        )
        if ok
    )
    if holding:
        return TwoLineDecision(True, holding[0], {}, ranks, holding)
    return TwoLineDecision(False, None, {"reason": "rank", "rank_pair": (rank_m, rank_n)}, ranks)


def audit_2pl(seq: BivariateMomentSequence, alpha1, alpha2, tol: float = linalg.DEFAULT_RTOL) -> bool:
    """The alternative characterization: ``M_k`` psd, rg, and ``(Y-a1)(Y-a2) X^i = 0``."""
    alpha1, alpha2 = coerce(alpha1, seq.field), coerce(alpha2, seq.field)
    Mk = build_moment_matrix(seq)
    if not linalg.psd_check(Mk.matrix, tol).is_psd:
        return False
    if not check_recursively_generated(Mk, tol).ok:
        return False
    scale = _scale(seq)
    for i in range(seq.k - 1):
        poly = {(i, 2): 1, (i, 1): -(alpha1 + alpha2), (i, 0): alpha1 * alpha2}
        r = Mk.matrix @ poly_vector(poly, Mk.index, seq.field)
        if seq.field is Field.EXACT:
            if any(v != 0 for v in r):
                return False
        elif np.max(np.abs(np.asarray(r, dtype=float))) > 1e3 * tol * scale:
            return False
    return True


def _clip(delta, field: Field, tol: float, scale: float):
    if field is Field.FLOAT and abs(delta) <= 1e3 * tol * scale:
        return 0.0
    return delta


def construct_2pl(
    seq: BivariateMomentSequence, alpha1, alpha2, tol: float = linalg.DEFAULT_RTOL, decision: Optional[TwoLineDecision] = None
) -> TwoLineConstruction:
    """Representing measure on two lines; ``decision`` skips re-running :func:`decide_2pl`."""
    dec = decision if decision is not None else decide_2pl(seq, alpha1, alpha2, tol)
    if not dec.feasible:
        raise ValueError(f"no representing measure on the two lines: {dec.witness}")
    fld = seq.field
    alpha1, alpha2 = _ordered(coerce(alpha1, fld), coerce(alpha2, fld))
    k = seq.k
    width = alpha2 - alpha1
    # x-moments of the part on the upper line, in normalized coordinates
    upper = [(seq[(i, 1)] - alpha1 * seq[(i, 0)]) / width for i in range(2 * k)]
    total = seq.x_moments(0)
    D = hankel_from_values(upper, k, fld)
    d = np.array(upper[k:], dtype=D.dtype)
    A1 = hankel_from_values(total, k, fld)
    a = np.array(total[k : 2 * k], dtype=D.dtype)
    top = d @ linalg.pinv(D, tol) @ d
    diff = a - d
    delta = (total[2 * k] - top) - diff @ linalg.pinv(A1 - D, tol) @ diff
    scale = _scale(seq)
    if fld is Field.FLOAT and -1e3 * tol * scale <= delta < 0:
        delta = 0.0
    delta = _clip(delta, fld, tol, scale)
    hat1 = upper + [top]
    if linalg.is_invertible(D, tol):
        case = "i"
        upper_seq = hat1[:-1] + [top + delta]
    elif linalg.is_invertible(A1 - D, tol):
        case = "ii"
        upper_seq = hat1
    else:
        case = "iii"
        upper_seq = hat1
    top_seq = UnivariateMomentSequence(tuple(upper_seq), fld)
    bottom_seq = UnivariateMomentSequence(tuple(t - u for t, u in zip(total, upper_seq)), fld)
    mu_top = solve_or_empty(top_seq, tol, scale)
    mu_bottom = solve_or_empty(bottom_seq, tol, scale)
    one = coerce(1, fld)
    normalized = AtomicMeasure2D(
        tuple(Atom(x, one, r) for x, r in zip(mu_top.atoms, mu_top.densities))
        + tuple(Atom(x, 0 * one, r) for x, r in zip(mu_bottom.atoms, mu_bottom.densities))
    )
    phi = AffineMap(0, 1, 0, -alpha1 / width, 0, 1 / width)
    measure = pullback_measure(normalized, phi)
    return TwoLineConstruction(measure, case, delta, top_seq, bottom_seq)


def solve_2pl(seq: BivariateMomentSequence, alpha1, alpha2, tol: float = linalg.DEFAULT_RTOL) -> AtomicMeasure2D:
    return construct_2pl(seq, alpha1, alpha2, tol).measure


def line_measure(mu: AtomicMeasure1D, y) -> AtomicMeasure2D:
    return AtomicMeasure2D(tuple(Atom(x, y, r) for x, r in zip(mu.atoms, mu.densities)))

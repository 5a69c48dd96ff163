"""Sufficient condition and construction for ``n`` parallel lines.

If the parametric extension ``S(t)`` is positive definite for some ``t``, the
Schur complement of its off-axis rows gives a Hankel matrix ``H`` whose
values are the x-moments of the mass off ``y = 0``.  Moving a little mass
``delta`` into the top moment keeps ``A00 - H`` positive definite, which is
solved as a Hamburger problem on ``y = 0``; the rest lives on ``n - 1`` lines
and is handled recursively, ending in the two-line solver.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import List, Optional, Sequence

import numpy as np

from . import linalg
from .extension import ParametricExtension, base_rows, elementary_symmetric, relation_violation
from .hamburger import thmp_solve
from .hankel import UnivariateMomentSequence, hankel_values, is_hankel
from .lmi import AffineMatrixPencil, SearchConfig, maximize_min_eigenvalue
from .model import AtomicMeasure2D, BivariateMomentSequence, build_moment_matrix, moment_residual
from .outcome import SolveOutcome, Verdict
from .scalars import Field, coerce
from .transform import AffineMap, pullback_measure, transform_sequence
from .twolines import construct_2pl, decide_2pl, line_measure


class NLineInconsistency(AssertionError):
    """A step the existence argument guarantees failed numerically."""


def gamma_sequence(seq: BivariateMomentSequence, offsets: Sequence) -> list:
    """x-moments of the mass off ``y = 0`` implied by the line relation.

    ``offsets`` are the nonzero lines ``y = alpha`` besides ``y = 0``; the
    result has ``2k - n + 2`` entries for ``n = len(offsets) + 1`` lines.
    """
    fld = seq.field
    offs = [coerce(a, fld) for a in offsets]
    if any(a == 0 for a in offs):
        raise ValueError("offsets must be nonzero; one line should sit at y = 0")
    n = len(offs) + 1
    c = elementary_symmetric(offs)
    sign = 1 if n % 2 == 0 else -1
    out = []
    for i in range(2 * seq.k - n + 2):
        acc = sum(((-1) ** l * c[l] * seq[(i, n - 1 - l)] for l in range(n - 1)), 0 * c[0])
        out.append(sign * acc / c[n - 1])
    return out


def reduced_rank_expected(k: int, n: int) -> int:
    """Rank of the off-axis part on ``n - 1`` lines: the size of its pure block.

    Equals ``(n - 1) k + 1`` only for ``n = 3``.
    """
    return (n - 1) * (2 * k + 4 - n) // 2


def _scale(seq: BivariateMomentSequence) -> float:
    return max(1.0, max(abs(float(v)) for v in seq.moments.values()))


def _agree(a, b, tol: float, scale: float) -> bool:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a == b
    return abs(float(a) - float(b)) <= max(1e-6, 1e3 * tol) * scale


def _exact_point(ext: ParametricExtension, t: Sequence[float], tol: float):
    """A rational point near ``t`` where ``S`` is exactly positive definite."""
    for limit in (10**6, 10**12, None):
        cand = [Fraction(x).limit_denominator(limit) if limit else Fraction(x) for x in t]
        if linalg.psd_check(ext.evaluate(cand), tol).is_pd:
            return cand
    return None


def _choose_delta(gap: np.ndarray, fld: Field, tol: float):
    """Slack moved into the top moment; keeps ``gap - delta e e^T`` positive definite."""
    k = gap.shape[0] - 1
    lam = linalg.min_eigenvalue(gap)
    delta = min(1e-3, 0.5 * lam)
    e = linalg.zeros((k + 1, k + 1), fld)
    if fld is Field.FLOAT:
        e[k, k] = 1.0
        return delta, e
    e[k, k] = Fraction(1)
    d = Fraction(delta).limit_denominator(10**6) or Fraction(1, 10**6)
    for _ in range(200):
        if d > 0 and linalg.psd_check(gap - d * e, tol).is_pd:
            return d, e
        d /= 2
    raise NLineInconsistency("no positive slack keeps the axis part positive definite")


@dataclass
class _Level:
    n: int
    offsets: tuple
    lam_min: float
    t: tuple
    delta: object
    axis_atoms: int
    transported: bool
    reduced_rank: int
    hankel_defect: float  # largest deviation of H from Hankel form with the gamma prefix


def _transport(prev_seq: BivariateMomentSequence, ext: ParametricExtension, t, base, next_k: int, next_n: int):
    """Parameters of the next level implied by the current extension."""
    k = prev_seq.k
    out = []
    for j in range(2, next_n):
        for i in range(2 * next_k + 1 - j, 2 * next_k):
            acc = 0 * t[0] if t else 0
            for l in range(j + 1):
                m = prev_seq[(i, l)] if i + l <= 2 * k else ext.value(i, l, t)
                acc = acc + comb(j, l) * (-base) ** (j - l) * m
            out.append(acc)
    return out


def _scaled_pencil(ext: ParametricExtension, t: Sequence[float]) -> Optional[AffineMatrixPencil]:
    """Jacobi-scaled copy of the pencil; congruence keeps definiteness."""
    S0 = np.asarray(ext.S0, dtype=float)
    Si = [np.asarray(M, dtype=float) for M in ext.increments]
    St = S0 + sum(x * M for x, M in zip(t, Si))
    diag = np.diag(St)
    if np.any(diag <= 0):
        return None
    d = 1.0 / np.sqrt(diag)
    return AffineMatrixPencil(S0 * np.outer(d, d), tuple(M * np.outer(d, d) for M in Si), tuple(ext.params))


def _find_point(ext: ParametricExtension, start, config: SearchConfig, tol: float):
    """Search for ``t`` with ``S(t)`` positive definite; raises :class:`_SearchFailed`."""
    raw = AffineMatrixPencil(np.asarray(ext.S0, dtype=float), tuple(np.asarray(M, dtype=float) for M in ext.increments))
    first = maximize_min_eigenvalue(raw, None if start is None else [float(x) for x in start], config)
    report = first
    scaled = _scaled_pencil(ext, first.t)
    if scaled is not None:
        second = maximize_min_eigenvalue(scaled, first.t, config)
        if second.feasible or not first.feasible:
            report = second
    if ext.field is Field.EXACT:
        # an exact certificate beats the float threshold
        t = _exact_point(ext, report.t, tol)
        if t is not None:
            return t
        raise _SearchFailed(ext.n, report)
    if not report.feasible:
        raise _SearchFailed(ext.n, report)
    return list(report.t)


def _solve_level(seq, offsets, tol, config, start, levels: List[_Level]) -> AtomicMeasure2D:
    """``seq`` lives on ``y = 0`` and ``y = offsets``; returns a measure in the same coordinates."""
    fld = seq.field
    k, n = seq.k, len(offsets) + 1
    if n == 2:
        return construct_2pl(seq, coerce(0, fld), offsets[0], tol).measure
    ext = ParametricExtension(seq, tuple(offsets))
    t = None
    transported = False
    if start is not None and linalg.psd_check(ext.evaluate(start), tol).is_pd:
        t, transported = list(start), True
    if t is None:
        t = _find_point(ext, start, config, tol)
    S = ext.evaluate(t)
    lam = linalg.min_eigenvalue(S)
    size0 = k + 1
    B, C = S[:size0, size0:], S[size0:, size0:]
    H = B @ linalg.inverse(C) @ B.T
    scale = _scale(seq)
    gamma = gamma_sequence(seq, offsets)
    hv = hankel_values(H)
    defect = max(
        max(abs(float(H[i, j] - hv[i + j])) for i in range(size0) for j in range(size0)),
        max(abs(float(hv[i] - gamma[i])) for i in range(len(gamma))),
    )
    if not is_hankel(H, max(tol, 1e-9)) or not all(_agree(hv[i], gamma[i], tol, scale) for i in range(len(gamma))):
        raise NLineInconsistency("Schur complement is not the expected Hankel matrix")
    A00 = S[:size0, :size0]
    delta, e = _choose_delta(A00 - H, fld, tol)
    axis = UnivariateMomentSequence(tuple(hankel_values(A00 - H - delta * e)), fld)
    mu_axis = thmp_solve(axis, tol)
    upper = hankel_values(H + delta * e)
    reduced = seq.replace({(i, 0): upper[i] for i in range(2 * k + 1)})
    # the reduced sequence lives on the remaining n - 1 lines
    Mr = build_moment_matrix(reduced)
    reduced_rank = linalg.rank(Mr.matrix, tol)
    if reduced_rank != reduced_rank_expected(k, n):
        raise NLineInconsistency(f"reduced moment matrix has rank {reduced_rank}, expected {reduced_rank_expected(k, n)}")
    if relation_violation(reduced, offsets, tol) is not None:
        raise NLineInconsistency("reduced sequence violates the (n-1)-line relation")
    levels.append(_Level(n, tuple(offsets), lam, tuple(t), delta, len(mu_axis), transported, reduced_rank, defect))
    base = min(offsets)
    rest = [a - base for a in offsets if a != base]
    shift = AffineMap.shift_y(base)
    nxt = transform_sequence(reduced, shift)
    nxt_start = _transport(reduced, ext, t, base, k, n - 1) if n - 1 >= 3 else None
    mu_rest = _solve_level(nxt, rest, tol, config, nxt_start, levels)
    zero = coerce(0, fld)
    return line_measure(mu_axis, zero) + pullback_measure(mu_rest, shift)


class _SearchFailed(Exception):
    def __init__(self, n, report):
        super().__init__(f"no strictly feasible point found for {n} lines")
        self.n, self.report = n, report


def build_parametric_extension(seq: BivariateMomentSequence, alphas: Sequence) -> ParametricExtension:
    """Extension for lines ``y = alphas`` after moving the lowest one to ``y = 0``."""
    fld = seq.field
    alphas = [coerce(a, fld) for a in alphas]
    base = min(alphas)
    return ParametricExtension(transform_sequence(seq, AffineMap.shift_y(base)), tuple(a - base for a in alphas if a != base))


def is_pure(seq: BivariateMomentSequence, alphas: Sequence, tol: float = linalg.DEFAULT_RTOL) -> bool:
    """The only column relations are those forced by the lines: ``S_{k,n}`` is positive definite."""
    ext = build_parametric_extension(seq, alphas)
    rows = base_rows(seq.k, ext.n)
    return linalg.psd_check(ext.restrict(rows), tol).is_pd


def solve_npl_pure(
    seq: BivariateMomentSequence, alphas: Sequence, tol: float = linalg.DEFAULT_RTOL, config: SearchConfig = SearchConfig()
) -> SolveOutcome:
    fld = seq.field
    alphas = [coerce(a, fld) for a in alphas]
    n, k = len(alphas), seq.k
    if len(set(alphas)) != n:
        raise ValueError("line offsets must be pairwise distinct")
    if n < 2:
        raise ValueError("need at least two lines")
    if k < n:
        raise ValueError(f"the n-line solver needs k >= n (k={k}, n={n})")
    Mk = build_moment_matrix(seq)
    cert = linalg.psd_check(Mk.matrix, tol)
    if not cert.is_psd:
        return SolveOutcome(Verdict.INFEASIBLE, witness={"reason": "M_k not psd", "min_eig": cert.min_eig}, reason="M_k not psd")
    bad = relation_violation(seq, alphas, tol)
    if bad is not None:
        return SolveOutcome(Verdict.INFEASIBLE, witness={"reason": "line relation fails", "index": bad}, reason="line relation fails")
    if n == 2:
        lo, hi = sorted(alphas)
        dec = decide_2pl(seq, lo, hi, tol)
        if not dec.feasible:
            return SolveOutcome(Verdict.INFEASIBLE, witness=dict(dec.witness), trace={"branch": "2pl"}, reason=dec.witness.get("reason", ""))
        mu = construct_2pl(seq, lo, hi, tol).measure
        return SolveOutcome(Verdict.FEASIBLE, mu, trace={"branch": "2pl", "residual": moment_residual(mu, seq)[0]})
    base = min(alphas)
    shift = AffineMap.shift_y(base)
    shifted = transform_sequence(seq, shift)
    offsets = [a - base for a in alphas if a != base]
    levels: List[_Level] = []
    try:
        mu = _solve_level(shifted, offsets, tol, config, None, levels)
    except _SearchFailed as exc:
        rep = exc.report
        lmi = {"lines": exc.n, "lam_min": rep.lam_min, "t": list(rep.t), "strict_tol": rep.strict_tol}
        return SolveOutcome(
            Verdict.UNDECIDED,
            witness={"reason": "no strictly feasible extension found", "lmi": lmi},
            trace={"branch": "npl", "lmi": lmi},
            reason="LMI search found no positive definite extension",
        )
    measure = pullback_measure(mu, shift)
    trace = {
        "branch": "npl",
        "levels": [lv.__dict__ for lv in levels],
        "lmi": {"lam_min": levels[0].lam_min, "t": list(levels[0].t)} if levels else {},
        "residual": moment_residual(measure, seq)[0],
    }
    return SolveOutcome(Verdict.FEASIBLE, measure, trace=trace)

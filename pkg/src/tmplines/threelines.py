"""Moment problem on three parallel lines.

One line (the designated one) is moved to ``y = 0``; the other two sit at
``y = a2`` and ``y = a3`` with ``a3`` the topmost.  A representing measure
splits into a part on ``y = 0`` (a Hamburger problem in ``x``) and a part on
the other two lines (a two-line problem).  Only the top two x-moments of the
split are free; they are pinned down by a single-entry PSD completion.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import linalg
from .extension import ParametricExtension, relation_violation
from .hamburger import carved_tol, is_noise, piece_tol, solve_or_empty, thmp_decide
from .hankel import UnivariateMomentSequence, hankel_from_values, hankel_values, leading_principal
from .lmi import AffineMatrixPencil, feasible_interval_1d
from .model import (
    AtomicMeasure2D,
    BivariateMomentSequence,
    build_moment_matrix,
    check_recursively_generated,
    moment_block,
    moment_residual,
    x_run,
)
from .scalars import Field, coerce
from .transform import AffineMap, normalize_lines, pullback_measure, transform_sequence
from .twolines import construct_2pl, line_measure


class ThreeLineInconsistency(AssertionError):
    """An identity that the theory guarantees failed numerically."""


def designated_line(alphas: Sequence) -> int:
    """Index of the line sent to ``y = 0``.

    A line already at ``y = 0`` is kept there unless it is the topmost one;
    otherwise the lowest line is used.
    """
    top = max(range(3), key=lambda i: alphas[i])
    for i, a in enumerate(alphas):
        if a == 0 and i != top:
            return i
    return min(range(3), key=lambda i: alphas[i])


def _moment_scale(seq: BivariateMomentSequence) -> float:
    return max(1.0, max(abs(float(v)) for v in seq.moments.values()))


@dataclass
class ThreeLineWorkspace:
    """Blocks of the shifted moment matrix used by the decision and construction."""

    seq: BivariateMomentSequence
    alphas: tuple
    tol: float = linalg.DEFAULT_RTOL
    designated: Optional[int] = None  # index of the line sent to y = 0; any but the topmost

    def __post_init__(self):
        fld = self.seq.field
        alphas = tuple(coerce(a, fld) for a in self.alphas)
        if len(alphas) != 3 or len(set(alphas)) != 3:
            raise ValueError("three pairwise distinct line offsets are required")
        if self.seq.k < 3:
            raise ValueError("three-line solver needs k >= 3")
        self.alphas = alphas
        d = designated_line(alphas) if self.designated is None else self.designated
        if alphas[d] == max(alphas):
            raise ValueError("the topmost line cannot be designated")
        self.designated = d
        self.base = alphas[d]
        rest = sorted(a - self.base for i, a in enumerate(alphas) if i != d)
        self.a2, self.a3 = rest
        self.shift, _ = normalize_lines(list(alphas), d)
        self.shifted = transform_sequence(self.seq, self.shift)
        self.ext = ParametricExtension(self.shifted, (self.a2, self.a3))
        k = self.k = self.seq.k
        b = self.shifted
        x0, x1 = x_run(0, k), x_run(0, k - 1)
        yx1, y2x2 = x_run(1, k - 1), x_run(2, k - 2)
        self.A00 = moment_block(b, x0)
        self.A01_hat = moment_block(b, x1, yx1)
        self.a01_tilde = np.array([b[(k + i, 1)] for i in range(k)], dtype=self.A00.dtype)
        self.a01_hat = self.a01_tilde[: k - 1]
        A02 = moment_block(b, x0, y2x2)
        self.A02_hat, self.a02_tilde = A02[:k], A02[k]
        self.c = np.array([b[(k - 1 + i, 2)] for i in range(k)], dtype=self.A00.dtype)
        self.A11_tilde = moment_block(b, yx1)
        prod, total = self.a2 * self.a3, self.a2 + self.a3
        self.B00 = (total * self.A01_hat - np.column_stack([self.A02_hat, self.c])) / prod
        self.h = (total * self.a01_hat - self.a02_tilde) / prod
        self.N = self.ext.restrict(x1 + yx1 + y2x2 + [(k - 1, 2)])
        self.pencil = AffineMatrixPencil(self.ext.S0, tuple(self.ext.increments), tuple(self.ext.params))

    @property
    def field(self) -> Field:
        return self.seq.field

    def alpha_of(self, t):
        """Hankel entry of the off-axis part implied by ``beta~_{2k-1,2} = t``."""
        k = self.k
        return ((self.a2 + self.a3) * self.shifted[(2 * k - 1, 1)] - t) / (self.a2 * self.a3)

    def H(self, t, u) -> np.ndarray:
        k = self.k
        out = np.empty((k + 1, k + 1), dtype=self.A00.dtype)
        out[:k, :k] = self.B00
        col = np.concatenate([self.h, np.array([t], dtype=self.A00.dtype)])
        out[:k, k] = col
        out[k, :k] = col
        out[k, k] = u
        return out


@dataclass(frozen=True)
class ConditionC:
    holds: bool
    v: Optional[tuple] = None
    t_prime: object = None
    u_prime: object = None
    A_gamma: Optional[np.ndarray] = field(default=None, repr=False)
    rank_pair: Optional[tuple] = None
    reason: str = ""


@dataclass(frozen=True)
class ThreeLineDecision:
    feasible: bool
    branch: Optional[str]  # "a", "b", "c" or "pure"
    witness: dict = field(default_factory=dict)
    ranks: dict = field(default_factory=dict)
    holding: tuple = ()
    condition_c: Optional[ConditionC] = None
    workspace: Optional[ThreeLineWorkspace] = field(default=None, repr=False, compare=False)


def _kernel_vector(K: np.ndarray, tol: float):
    """A solution of ``K (v, 1) = 0``, or ``None``."""
    basis = linalg.kernel_basis(K, tol)
    exact = linalg.is_exact(K)
    for col in range(basis.shape[1]):
        w = basis[:, col]
        last = w[-1]
        if (last != 0) if exact else abs(float(last)) > 1e3 * tol * float(np.max(np.abs(np.asarray(w, dtype=float)))):
            return w[:-1] / last
    return None


def evaluate_condition_c(ws: ThreeLineWorkspace, tol: float = linalg.DEFAULT_RTOL) -> ConditionC:
    k = ws.k
    K = ws.a3 * ws.B00 - ws.A01_hat
    v = _kernel_vector(K, tol)
    if v is None:
        return ConditionC(False, reason="no kernel vector with last coordinate 1")
    t_prime = (ws.a01_hat @ v - ws.a3 * (ws.h @ v) + ws.shifted[(2 * k - 1, 1)]) / ws.a3
    W = np.block([[ws.B00, ws.A01_hat], [ws.A01_hat.T, ws.A11_tilde]])
    w = np.concatenate([ws.h, np.array([t_prime], dtype=ws.A00.dtype), ws.a01_tilde])
    u_prime = w @ linalg.pinv(W, tol) @ w
    A_gamma = ws.A00 - ws.H(t_prime, u_prime)
    # A_gamma is carved out of the full problem; judge it against the parent's noise
    ptol = piece_tol(UnivariateMomentSequence(tuple(hankel_values(A_gamma)), ws.field), tol, _moment_scale(ws.shifted))
    rank_full = linalg.rank(A_gamma, ptol)
    trunc = leading_principal(A_gamma, k - 1)
    rank_trunc = linalg.rank(trunc, ptol)
    psd = linalg.psd_check(A_gamma, ptol).is_psd
    holds = psd and (rank_trunc == k or rank_trunc == rank_full)
    reason = "" if holds else ("A_gamma not psd" if not psd else "rank A_gamma exceeds its truncation rank")
    return ConditionC(holds, tuple(v), t_prime, u_prime, A_gamma, (rank_full, rank_trunc), reason)


def decide_3pl(
    seq: BivariateMomentSequence, alphas: Sequence, tol: float = linalg.DEFAULT_RTOL, designated: Optional[int] = None
) -> ThreeLineDecision:
    ws = ThreeLineWorkspace(seq, tuple(alphas), tol, designated)
    Mk = build_moment_matrix(seq)
    cert = linalg.psd_check(Mk.matrix, tol)
    ranks = {"M_k": linalg.rank(Mk.matrix, tol), "N": linalg.rank(ws.N, tol)}
    if not cert.is_psd:
        return ThreeLineDecision(False, None, {"reason": "M_k not psd", "vector": cert.witness, "min_eig": cert.min_eig}, ranks)
    bad = relation_violation(seq, ws.alphas, tol)
    if bad is not None:
        return ThreeLineDecision(False, None, {"reason": "line relation fails", "index": bad}, ranks)
    ncert = linalg.psd_check(ws.N, tol)
    if not ncert.is_psd:
        return ThreeLineDecision(
            False, None, {"reason": "N not psd", "vector": ncert.witness, "min_eig": linalg.min_eigenvalue(ws.N)}, ranks
        )
    holding = []
    if linalg.is_invertible(ws.A01_hat - ws.a2 * ws.B00, tol):
        holding.append("a")
    cond_c = None
    if linalg.is_invertible(ws.a3 * ws.B00 - ws.A01_hat, tol):
        holding.append("b")
    else:
        cond_c = evaluate_condition_c(ws, tol)
        if cond_c.holds:
            holding.append("c")
    if holding:
        return ThreeLineDecision(True, holding[0], {}, ranks, tuple(holding), cond_c, ws)
    witness = {"reason": "condition (c) fails: " + cond_c.reason}
    if cond_c.rank_pair is not None:
        witness.update(rank_pair=cond_c.rank_pair, t_prime=cond_c.t_prime, u_prime=cond_c.u_prime)
    return ThreeLineDecision(False, "c", witness, ranks, (), cond_c, ws)


def decide_3pl_pure(seq: BivariateMomentSequence, alphas: Sequence, tol: float = linalg.DEFAULT_RTOL) -> ThreeLineDecision:
    """Pure-case shortcut: feasible iff ``N`` is psd.

    Falls back to :func:`decide_3pl` when the pure-case hypotheses fail.
    """
    ws = ThreeLineWorkspace(seq, tuple(alphas), tol)
    Mk = build_moment_matrix(seq)
    k = seq.k
    restricted = moment_block(seq, x_run(0, k) + x_run(1, k - 1) + x_run(2, k - 2))
    pure = (
        linalg.psd_check(Mk.matrix, tol).is_psd
        and relation_violation(seq, ws.alphas, tol) is None
        and check_recursively_generated(Mk, tol).ok
        and linalg.psd_check(restricted, tol).is_pd
    )
    if not pure:
        return decide_3pl(seq, alphas, tol)
    ranks = {"M_k": linalg.rank(Mk.matrix, tol), "N": linalg.rank(ws.N, tol)}
    ncert = linalg.psd_check(ws.N, tol)
    if ncert.is_psd:
        return ThreeLineDecision(True, "pure", {}, ranks, ("pure",))
    return ThreeLineDecision(False, "pure", {"reason": "N not psd", "vector": ncert.witness, "min_eig": linalg.min_eigenvalue(ws.N)}, ranks)


def complete_one_parameter(ws: ThreeLineWorkspace, tol: float = linalg.DEFAULT_RTOL):
    """Lowest ``t`` with the completed shifted matrix psd, and whether it is exact."""
    iv = feasible_interval_1d(ws.pencil, tol)
    if iv is None:
        raise ThreeLineInconsistency("the one-parameter completion has no psd value")
    return iv.lo, iv.exact


@dataclass(frozen=True)
class ThreeLineConstruction:
    measure: AtomicMeasure2D
    case: int
    t0: object
    u0: object
    alpha_t0: object
    delta: object
    axis_sequence: UnivariateMomentSequence
    off_axis_sequence: BivariateMomentSequence
    expected_atoms: int
    trace: dict = field(default_factory=dict)


def _agree(a, b, tol: float, scale: float) -> bool:
    if not isinstance(a, float) and not isinstance(b, float) and not isinstance(a, np.floating):
        return a == b
    return abs(float(a) - float(b)) <= max(1e-6, 1e3 * tol) * scale


def construct_3pl(
    seq: BivariateMomentSequence,
    alphas: Sequence,
    tol: float = linalg.DEFAULT_RTOL,
    designated: Optional[int] = None,
    decision: Optional[ThreeLineDecision] = None,
) -> ThreeLineConstruction:
    """Representing measure on three lines.

    ``decision`` may be a feasible result of :func:`decide_3pl` for the same
    arguments; it saves recomputing the decision.
    """
    dec = decision if decision is not None else decide_3pl(seq, alphas, tol, designated)
    if not dec.feasible:
        raise ValueError(f"no representing measure on the three lines: {dec.witness}")
    ws = dec.workspace
    if ws is None or ws.tol != tol or ws.seq is not seq or designated not in (None, ws.designated):
        ws = ThreeLineWorkspace(seq, tuple(alphas), tol, designated)
    trace = {"branch": dec.branch, "holding": dec.holding, "ranks": dict(dec.ranks)}
    t0, exact_t0 = complete_one_parameter(ws, tol)
    if ws.field is Field.EXACT and not exact_t0:
        # irrational endpoint: finish in floating point
        trace["switched_to_float"] = True
        ws = ThreeLineWorkspace(seq.to_float(), tuple(float(a) for a in ws.alphas), tol, ws.designated)
        t0, _ = complete_one_parameter(ws, tol)
    k, fld = ws.k, ws.field
    scale = _moment_scale(ws.shifted)
    S = ws.ext.evaluate([t0])
    B, C = S[: k + 1, k + 1 :], S[k + 1 :, k + 1 :]
    HB = B @ linalg.pinv(C, tol) @ B.T
    u0 = HB[k, k]
    alpha_t0 = ws.alpha_of(t0)
    if not _agree(HB[k - 1, k], alpha_t0, tol, scale) or not all(
        _agree(HB[i, j], ws.B00[i, j], tol, scale) for i in range(k) for j in range(k)
    ):
        raise ThreeLineInconsistency("Schur data of the completion is not of the expected Hankel form")
    trace.update(t0=t0, u0=u0, alpha_t0=alpha_t0)
    cond_c = dec.condition_c
    if "a" in dec.holding or "b" in dec.holding:
        case = 1
        U = ws.A00 - ws.H(alpha_t0, u0)
        delta = linalg.schur_complement(U, k, "A", tol)[0, 0]
        if fld is Field.FLOAT:
            if abs(delta) <= 1e3 * tol * scale:
                delta = 0.0
            elif delta < 0:
                raise ThreeLineInconsistency(f"negative slack {delta}")
        elif delta < 0:
            raise ThreeLineInconsistency(f"negative slack {delta}")
        t_use, u_use = alpha_t0, u0 + delta
    else:
        case = 2
        if trace.get("switched_to_float"):
            cond_c = evaluate_condition_c(ws, tol)
        if not _agree(alpha_t0, cond_c.t_prime, tol, scale):
            raise ThreeLineInconsistency("completion value differs from t'")
        delta = coerce(0, fld)
        t_use, u_use = cond_c.t_prime, cond_c.u_prime
        trace.update(t_prime=cond_c.t_prime, u_prime=cond_c.u_prime)
    trace["delta"] = delta
    Hmat = ws.H(t_use, u_use)
    axis_values = hankel_values(ws.A00 - Hmat)
    axis_seq = UnivariateMomentSequence(tuple(axis_values), fld)
    if not axis_seq.is_zero() and not (fld is Field.FLOAT and is_noise(axis_values, scale)):
        if not thmp_decide(axis_seq, piece_tol(axis_seq, tol, scale)).solvable:
            raise ThreeLineInconsistency("the part on the designated line has no representing measure")
    mu_axis = solve_or_empty(axis_seq, tol, scale)
    off_values = hankel_values(Hmat)
    off_seq = ws.shifted.replace({(i, 0): off_values[i] for i in range(2 * k + 1)})
    two_tol = tol if fld is Field.EXACT else carved_tol(list(off_seq.moments.values()), tol, scale)
    two = construct_2pl(off_seq, ws.a2, ws.a3, two_tol)
    zero = coerce(0, fld)
    normalized = line_measure(mu_axis, zero) + two.measure
    measure = pullback_measure(normalized, ws.shift)
    expected = dec.ranks["M_k"] + (1 if dec.ranks["N"] > dec.ranks["M_k"] else 0)
    trace["residual"] = moment_residual(measure, seq)[0]
    trace["two_line_case"] = two.case
    return ThreeLineConstruction(measure, case, t0, u0, alpha_t0, delta, axis_seq, off_seq, expected, trace)


def solve_3pl(seq: BivariateMomentSequence, alphas: Sequence, tol: float = linalg.DEFAULT_RTOL) -> AtomicMeasure2D:
    return construct_3pl(seq, alphas, tol).measure

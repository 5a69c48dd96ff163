"""Symmetric-matrix kernel shared by every solver.

Exact matrices (``dtype=object`` of ``Fraction``) are handled by rational
elimination; float matrices by LAPACK through numpy.  Float decisions use a
relative tolerance: a singular value or eigenvalue counts as zero when it is
at most ``tol`` times the largest one in magnitude.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .scalars import Field, field_of_array, zeros

DEFAULT_RTOL = 1e-9

try:  # gmpy2 rationals are an order of magnitude faster than Fraction
    from gmpy2 import mpq as _q
except ImportError:  # pragma: no cover
    _q = Fraction


def _to_fraction(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(int(x.numerator), int(x.denominator))


class PsdVerdict(str, Enum):
    PD = "PD"
    PSD_SINGULAR = "PSD-singular"
    NOT_PSD = "NotPSD"


@dataclass(frozen=True)
class PsdCertificate:
    verdict: PsdVerdict
    witness: Optional[np.ndarray] = None  # v with v^T A v < 0
    kernel: Optional[np.ndarray] = None  # columns span ker A
    min_eig: Optional[float] = None

    @property
    def is_psd(self) -> bool:
        return self.verdict is not PsdVerdict.NOT_PSD

    @property
    def is_pd(self) -> bool:
        return self.verdict is PsdVerdict.PD


def is_exact(A: np.ndarray) -> bool:
    return field_of_array(A) is Field.EXACT


def _scale(A: np.ndarray) -> float:
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(np.asarray(A, dtype=float), 2))


# --------------------------------------------------------------------------
# exact elimination


def _rref(A: np.ndarray, native: bool = False) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form; ``native`` keeps the fast rational type."""
    rows = [[_q(x) for x in r] for r in A]
    m = len(rows)
    n = A.shape[1] if A.ndim == 2 else 0
    pivots: list[int] = []
    r = 0
    for c in range(n):
        if r == m:
            break
        p = next((i for i in range(r, m) if rows[i][c] != 0), None)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(m):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    if native:
        return rows, pivots
    return [[_to_fraction(x) for x in row] for row in rows], pivots


def _native(A: np.ndarray) -> np.ndarray:
    out = np.empty(A.shape, dtype=object)
    out.flat[:] = [_q(x) for x in A.flat]
    return out


def _fractions(A: np.ndarray) -> np.ndarray:
    out = np.empty(A.shape, dtype=object)
    out.flat[:] = [_to_fraction(x) for x in A.flat]
    return out


def _inverse_native(A: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    eye = np.empty((n, n), dtype=object)
    eye.flat[:] = [_q(int(i == j)) for i in range(n) for j in range(n)]
    rows, pivots = _rref(np.concatenate([A, eye], axis=1), native=True)
    if pivots[:n] != list(range(n)):
        raise np.linalg.LinAlgError("singular matrix")
    return np.array([row[n:] for row in rows[:n]], dtype=object)


def _solve_exact(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    vec = B.ndim == 1
    Bm = B.reshape(n, -1)
    aug = np.concatenate([A, Bm], axis=1)
    rows, pivots = _rref(aug)
    if pivots[:n] != list(range(n)):
        raise np.linalg.LinAlgError("singular matrix")
    X = np.array([row[n:] for row in rows[:n]], dtype=object)
    return X.reshape(-1) if vec else X


# --------------------------------------------------------------------------
# public operations


def rank(A: np.ndarray, tol: float = DEFAULT_RTOL) -> int:
    if A.size == 0:
        return 0
    if is_exact(A):
        return len(_rref(A, native=True)[1])
    s = np.linalg.svd(np.asarray(A, dtype=float), compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def kernel_basis(A: np.ndarray, tol: float = DEFAULT_RTOL) -> np.ndarray:
    """Columns form a basis of the right kernel of ``A``."""
    n = A.shape[1]
    if is_exact(A):
        rows, pivots = _rref(A)
        free = [c for c in range(n) if c not in pivots]
        K = zeros((n, len(free)), Field.EXACT)
        for col, f in enumerate(free):
            K[f, col] = Fraction(1)
            for r, p in enumerate(pivots):
                K[p, col] = -rows[r][f]
        return K
    Af = np.asarray(A, dtype=float)
    if Af.shape[0] == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(Af)
    smax = s[0] if s.size else 0.0
    r = int(np.sum(s > tol * smax)) if smax > 0 else 0
    return vt[r:].T.copy()


def solve(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve the nonsingular square system ``A x = b``."""
    if is_exact(A):
        return _solve_exact(A, b)
    return np.linalg.solve(np.asarray(A, dtype=float), np.asarray(b, dtype=float))


def inverse(A: np.ndarray) -> np.ndarray:
    from .scalars import eye

    return solve(A, eye(A.shape[0], field_of_array(A)))


def pinv(A: np.ndarray, tol: float = DEFAULT_RTOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse.

    Exact mode uses a full-rank factorization ``A = C F`` so that
    ``A^+ = F^T (F F^T)^{-1} (C^T C)^{-1} C^T``.
    """
    if A.size == 0:
        return A.T.copy()
    if is_exact(A):
        rows, pivots = _rref(A, native=True)
        r = len(pivots)
        if r == 0:
            return zeros((A.shape[1], A.shape[0]), Field.EXACT)
        F = np.array(rows[:r], dtype=object)
        C = _native(A[:, pivots])
        left = F.T @ _inverse_native(F @ F.T)
        right = _inverse_native(C.T @ C) @ C.T
        return _fractions(left @ right)
    Af = np.asarray(A, dtype=float)
    hermitian = Af.shape[0] == Af.shape[1] and np.allclose(Af, Af.T)
    return np.linalg.pinv(Af, rcond=tol, hermitian=hermitian)


def min_eigenvalue(A: np.ndarray) -> float:
    Af = np.asarray(A, dtype=float)
    if Af.size == 0:
        return float("inf")
    return float(np.linalg.eigvalsh(Af)[0])


def _psd_exact(A: np.ndarray) -> PsdCertificate:
    n = A.shape[0]
    S = [[_q(x) for x in r] for r in A]
    active = list(range(n))
    eliminated: list[tuple[int, dict[int, Fraction]]] = []

    def lift(w: dict[int, Fraction]) -> np.ndarray:
        v = dict(w)
        for p, coeffs in reversed(eliminated):
            v[p] = -sum((c * v.get(r, 0) for r, c in coeffs.items()), _q(0))
        out = zeros(n, Field.EXACT)
        for i, x in v.items():
            out[i] = _to_fraction(_q(x))
        return out

    while active:
        neg = next((i for i in active if S[i][i] < 0), None)
        if neg is not None:
            return PsdCertificate(PsdVerdict.NOT_PSD, witness=lift({neg: _q(1)}))
        bad = None
        for i in active:
            if S[i][i] == 0:
                j = next((j for j in active if j != i and S[i][j] != 0), None)
                if j is not None:
                    bad = (i, j)
                    break
        if bad is not None:
            i, j = bad
            s = -(S[j][j] + 1) / (2 * S[i][j])
            return PsdCertificate(PsdVerdict.NOT_PSD, witness=lift({i: s, j: _q(1)}))
        pos = [i for i in active if S[i][i] > 0]
        if not pos:
            break
        p = pos[0]
        rest = [i for i in active if i != p]
        piv = S[p][p]
        eliminated.append((p, {r: S[p][r] / piv for r in rest}))
        for r in rest:
            f = S[r][p] / piv
            if f != 0:
                for c in rest:
                    S[r][c] -= f * S[p][c]
        active = rest
    if not active:
        return PsdCertificate(PsdVerdict.PD)
    return PsdCertificate(PsdVerdict.PSD_SINGULAR, kernel=kernel_basis(A))


def psd_check(A: np.ndarray, tol: float = DEFAULT_RTOL) -> PsdCertificate:
    if A.shape[0] == 0:
        return PsdCertificate(PsdVerdict.PD)
    if is_exact(A):
        cert = _psd_exact(A)
        return PsdCertificate(cert.verdict, cert.witness, cert.kernel, min_eigenvalue(A))
    Af = np.asarray(A, dtype=float)
    w, V = np.linalg.eigh((Af + Af.T) / 2)
    thr = tol * max(abs(w[0]), abs(w[-1]))
    if w[0] < -thr:
        return PsdCertificate(PsdVerdict.NOT_PSD, witness=V[:, 0], min_eig=float(w[0]))
    small = w <= thr
    if small.any():
        return PsdCertificate(PsdVerdict.PSD_SINGULAR, kernel=V[:, small], min_eig=float(w[0]))
    return PsdCertificate(PsdVerdict.PD, min_eig=float(w[0]))


def is_invertible(A: np.ndarray, tol: float = DEFAULT_RTOL) -> bool:
    return A.shape[0] == A.shape[1] and rank(A, tol) == A.shape[0]


def is_zero(A: np.ndarray, tol: float = DEFAULT_RTOL, scale: Optional[float] = None) -> bool:
    if is_exact(A):
        return all(x == 0 for x in np.asarray(A).reshape(-1))
    ref = _scale(A) if scale is None else scale
    return bool(np.max(np.abs(np.asarray(A, dtype=float)), initial=0.0) <= tol * max(ref, 1.0))


def schur_complement(M: np.ndarray, split: int, which: str = "A", tol: float = DEFAULT_RTOL) -> np.ndarray:
    """Generalized Schur complement of the 2x2 block matrix ``M``.

    ``split`` is the size of the leading block ``A``.  ``which="A"`` returns
    ``M/A = D - C A^+ B``; ``which="D"`` returns ``M/D = A - B D^+ C``.
    """
    A, B = M[:split, :split], M[:split, split:]
    C, D = M[split:, :split], M[split:, split:]
    if which == "A":
        return D - C @ pinv(A, tol) @ B
    if which == "D":
        return A - B @ pinv(D, tol) @ C
    raise ValueError("which must be 'A' or 'D'")


def in_column_space(A: np.ndarray, b: np.ndarray, tol: float = DEFAULT_RTOL) -> bool:
    resid = A @ (pinv(A, tol) @ b) - b
    if is_exact(A):
        return all(x == 0 for x in np.asarray(resid).reshape(-1))
    ref = max(_scale(A), float(np.linalg.norm(np.asarray(b, dtype=float))), 1e-300)
    return float(np.linalg.norm(np.asarray(resid, dtype=float))) <= 1e3 * tol * ref


@dataclass(frozen=True)
class KernelExtension:
    ok: bool
    residual: float
    padded: np.ndarray = field(repr=False)


def extend_kernel_check(A: np.ndarray, Q: Sequence[int], v: np.ndarray, tol: float = DEFAULT_RTOL) -> KernelExtension:
    """Zero-pad ``v`` (a kernel vector of ``A|_Q``) and test ``A v_hat = 0``."""
    padded = zeros(A.shape[0], field_of_array(A))
    for pos, idx in enumerate(Q):
        padded[idx] = v[pos]
    resid = A @ padded
    if is_exact(A):
        res = max((abs(float(x)) for x in resid), default=0.0)
        return KernelExtension(all(x == 0 for x in resid), res, padded)
    res = float(np.max(np.abs(resid), initial=0.0))
    scale = max(_scale(A), 1.0) * max(float(np.linalg.norm(np.asarray(v, dtype=float))), 1.0)
    return KernelExtension(res <= 1e3 * tol * scale, res, padded)

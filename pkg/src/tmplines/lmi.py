"""Strict positive definiteness of a few-parameter affine matrix function.

``S(t) = S_0 + sum_i t_i S_i``.  The smallest eigenvalue is a concave
function of ``t``; it is maximized with a bracketed scalar search for one
parameter and multi-start Nelder-Mead for more.  The search is a heuristic:
failure to find ``S(t) > 0`` proves nothing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from . import linalg


@dataclass(frozen=True)
class AffineMatrixPencil:
    S0: np.ndarray
    increments: Tuple[np.ndarray, ...] = ()
    labels: Tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "increments", tuple(self.increments))
        for Si in self.increments:
            if Si.shape != self.S0.shape:
                raise ValueError("pencil matrices differ in shape")

    @property
    def m(self) -> int:
        return len(self.increments)

    def evaluate(self, t: Sequence) -> np.ndarray:
        out = self.S0.copy()
        for x, Si in zip(t, self.increments):
            out = out + x * Si
        return out


@dataclass(frozen=True)
class SearchConfig:
    seed: int = 0
    starts: int = 8
    max_iter: int = 600
    strict_factor: float = 1e-10


@dataclass(frozen=True)
class FeasibilityReport:
    t: Tuple[float, ...]
    lam_min: float
    verdict: str  # "StrictlyFeasible" or "NotFound"
    strict_tol: float
    trace: List[dict] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.verdict == "StrictlyFeasible"


class _FloatPencil:
    def __init__(self, pencil: AffineMatrixPencil):
        self.S0 = np.asarray(pencil.S0, dtype=float)
        self.Si = [np.asarray(S, dtype=float) for S in pencil.increments]

    def lam(self, t) -> float:
        S = self.S0.copy()
        for x, Si in zip(t, self.Si):
            S += x * Si
        return float(np.linalg.eigvalsh(S)[0])


def _norm_inf(A: np.ndarray) -> float:
    return float(np.max(np.sum(np.abs(A), axis=1), initial=0.0))


def _search_1d(fp: _FloatPencil, t0: float, step: float, iters: int) -> Tuple[float, float, list]:
    f = lambda t: fp.lam([t])
    trace = []
    a, b = t0 - step, t0 + step
    fa, fm, fb = f(a), f(t0), f(b)
    # expand until the maximum is bracketed by [a, b]
    grow = 0
    while (fa > fm or fb > fm) and grow < 200:
        if fa > fm:
            b, fb, t0, fm = t0, fm, a, fa
            step *= 2
            a, fa = t0 - step, f(t0 - step)
        else:
            a, fa, t0, fm = t0, fm, b, fb
            step *= 2
            b, fb = t0 + step, f(t0 + step)
        grow += 1
    trace.append({"bracket": (a, b), "expansions": grow})
    res = minimize_scalar(
        lambda t: -f(t),
        bounds=(a, b),
        method="bounded",
        options={"xatol": 1e-14 * max(1.0, abs(a), abs(b)), "maxiter": iters},
    )
    best_t, best = float(res.x), -float(res.fun)
    if fm > best:
        best_t, best = t0, fm
    trace.append({"t": best_t, "lam_min": best, "evaluations": int(res.nfev)})
    return best_t, best, trace


def maximize_min_eigenvalue(
    pencil: AffineMatrixPencil, start: Optional[Sequence[float]] = None, config: SearchConfig = SearchConfig()
) -> FeasibilityReport:
    fp = _FloatPencil(pencil)
    scale = max(_norm_inf(fp.S0), 1e-300)
    strict_tol = config.strict_factor * scale
    m = pencil.m
    x0 = np.zeros(m) if start is None else np.asarray([float(v) for v in start], dtype=float)
    if m == 0:
        lam = fp.lam([])
        verdict = "StrictlyFeasible" if lam > strict_tol else "NotFound"
        return FeasibilityReport((), lam, verdict, strict_tol, [{"lam_min": lam}])
    step = max(1.0, scale)
    if m == 1:
        t, lam, trace = _search_1d(fp, float(x0[0]), step, config.max_iter)
        verdict = "StrictlyFeasible" if lam > strict_tol else "NotFound"
        return FeasibilityReport((t,), lam, verdict, strict_tol, trace)
    rng = np.random.default_rng(config.seed)
    starts = [x0] + [x0 + step * rng.standard_normal(m) for _ in range(max(config.starts, 1) - 1)]
    best_t, best = x0, fp.lam(x0)
    trace = []
    for idx, s in enumerate(starts):
        simplex = np.vstack([s] + [s + step * 0.5 * e for e in np.eye(m)])
        res = minimize(
            lambda t: -fp.lam(t),
            s,
            method="Nelder-Mead",
            options={"initial_simplex": simplex, "maxiter": config.max_iter * m, "xatol": 1e-12 * step, "fatol": 1e-15 * scale},
        )
        lam = -float(res.fun)
        trace.append({"start": idx, "lam_min": lam, "iterations": int(res.nit)})
        if lam > best:
            best, best_t = lam, np.asarray(res.x, dtype=float)
    best = fp.lam(best_t)
    verdict = "StrictlyFeasible" if best > strict_tol else "NotFound"
    return FeasibilityReport(tuple(float(v) for v in best_t), best, verdict, strict_tol, trace)


@dataclass(frozen=True)
class Interval:
    lo: object
    hi: object
    exact: bool

    @property
    def degenerate(self) -> bool:
        return self.lo == self.hi


def _exact_sqrt(q: Fraction) -> Optional[Fraction]:
    if q < 0:
        return None
    n, d = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if n * n == q.numerator and d * d == q.denominator:
        return Fraction(n, d)
    return None


def feasible_interval_1d(pencil: AffineMatrixPencil, tol: float = linalg.DEFAULT_RTOL) -> Optional[Interval]:
    """``{t : S(t) >= 0}`` for a pencil whose parameter fills one symmetric slot pair."""
    if pencil.m != 1:
        raise ValueError("pencil must have exactly one parameter")
    S1 = pencil.increments[0]
    nz = [(i, j) for i, j in zip(*np.nonzero(np.asarray(S1 != 0))) if i < j]
    diag = [i for i in range(S1.shape[0]) if S1[i, i] != 0]
    if len(nz) != 1 or diag:
        raise ValueError("parameter must occupy exactly one off-diagonal slot pair")
    p, q = nz[0]
    slope = S1[p, q]
    S0 = pencil.S0
    rest = [i for i in range(S0.shape[0]) if i not in (p, q)]
    left = S0[np.ix_([p] + rest, [p] + rest)]
    right = S0[np.ix_(rest + [q], rest + [q])]
    if not (linalg.psd_check(left, tol).is_psd and linalg.psd_check(right, tol).is_psd):
        return None
    C = S0[np.ix_(rest, rest)]
    Cp = linalg.pinv(C, tol)
    b, c = S0[rest, p], S0[rest, q]
    P = S0[p, p] - b @ Cp @ b
    Q = S0[q, q] - c @ Cp @ c
    centre = b @ Cp @ c
    exact = linalg.is_exact(S0)
    if exact:
        PQ = max(P * Q, Fraction(0))
        root = _exact_sqrt(PQ)
        if root is None:
            root, exact = math.sqrt(float(PQ)), False
            centre = float(centre)
    else:
        PQ = max(P * Q, 0.0)
        if PQ <= tol * max(abs(P), abs(Q), 1.0) ** 2 * 1e-3:
            PQ = 0.0
        root = math.sqrt(PQ)
    # the slot holds S0[p,q] + slope * t
    t_centre = (centre - S0[p, q]) / slope if exact else (float(centre) - float(S0[p, q])) / float(slope)
    half = root / abs(slope) if exact else root / abs(float(slope))
    return Interval(t_centre - half, t_centre + half, exact)

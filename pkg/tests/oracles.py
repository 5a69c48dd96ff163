"""Independent reference computations and instance generators for the tests.

Nothing here calls the package's solvers; moments are summed directly from
atoms and feasibility certificates are the generating measures themselves.
"""
from __future__ import annotations

import random
from fractions import Fraction
from typing import List, Sequence, Tuple

import numpy as np

from tmplines import Atom, AtomicMeasure2D, BivariateMomentSequence, Field, UnivariateMomentSequence


def labels(d: int) -> List[Tuple[int, int]]:
    return [(i, s - i) for s in range(d + 1) for i in range(s, -1, -1)]


def direct_moments(atoms: Sequence[Tuple], k: int) -> dict:
    """``{(i, j): sum rho x^i y^j}`` by plain summation."""
    out = {}
    for i, j in labels(2 * k):
        out[(i, j)] = sum(r * x**i * y**j for x, y, r in atoms)
    return out


def sequence_of(atoms: Sequence[Tuple], k: int) -> BivariateMomentSequence:
    exact = all(isinstance(v, (int, Fraction)) for a in atoms for v in a)
    field = Field.EXACT if exact else Field.FLOAT
    vals = direct_moments(atoms, k)
    if not exact:
        vals = {lab: float(v) for lab, v in vals.items()}
    return BivariateMomentSequence(k, vals, field)


def measure_of(atoms: Sequence[Tuple]) -> AtomicMeasure2D:
    return AtomicMeasure2D(tuple(Atom(*a) for a in atoms))


def max_residual(measure: AtomicMeasure2D, seq: BivariateMomentSequence) -> float:
    got = direct_moments([(a.x, a.y, a.density) for a in measure.atoms], seq.k)
    return max(abs(float(got[lab] - seq[lab])) if not isinstance(got[lab], float) else abs(got[lab] - float(seq[lab])) for lab in got)


def univariate(xs: Sequence, rhos: Sequence, k: int) -> UnivariateMomentSequence:
    vals = [sum(r * x**i for x, r in zip(xs, rhos)) for i in range(2 * k + 1)]
    return UnivariateMomentSequence.of(vals)


def line_instance(rng: random.Random, n: int, k: int, exact: bool):
    """Atoms on ``n`` random distinct lines in [-3, 3]; at most ``k`` atoms per line."""
    alphas = sorted(rng.sample(range(-30, 31), n))
    atoms = []
    for a in alphas:
        for x in rng.sample(range(-30, 31), rng.randint(1, k)):
            atoms.append((Fraction(x, 10), Fraction(a, 10), Fraction(rng.randint(1, 20), 20)))
    alphas = [Fraction(a, 10) for a in alphas]
    if not exact:
        atoms = [tuple(float(v) for v in a) for a in atoms]
        alphas = [float(a) for a in alphas]
    return atoms, alphas


def generic_line_instance(rng: random.Random, n: int, k: int):
    """``k`` atoms on each of ``n`` integer lines, rational x spread over [-4, 4]."""
    ys = rng.sample(range(-3, 4), n)
    atoms = []
    for y in ys:
        for x in rng.sample(range(-40, 41), k):
            atoms.append((Fraction(x, 10), Fraction(y), Fraction(rng.randint(1, 9), 10)))
    return atoms, [Fraction(y) for y in ys]


def bisect_boundary(f, inside: float, outside: float, iters: int = 200) -> float:
    """Boundary of ``{t : f(t)}`` between a point inside and one outside."""
    a, b = inside, outside
    for _ in range(iters):
        m = 0.5 * (a + b)
        if f(m):
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def gauss_rule(xs: Sequence[float], rhos: Sequence[float]):
    """Reference atoms and weights sorted by node."""
    order = np.argsort(xs)
    return np.asarray(xs, dtype=float)[order], np.asarray(rhos, dtype=float)[order]


# exact rational reference linear algebra, written independently of the package


def frac_rank(rows) -> int:
    M = [[Fraction(v) for v in r] for r in rows]
    rank, ncols = 0, len(M[0]) if M else 0
    for c in range(ncols):
        piv = next((r for r in range(rank, len(M)) if M[r][c] != 0), None)
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        for r in range(len(M)):
            if r != rank and M[r][c] != 0:
                f = M[r][c] / M[rank][c]
                M[r] = [a - f * b for a, b in zip(M[r], M[rank])]
        rank += 1
    return rank


def frac_det(rows) -> Fraction:
    M = [[Fraction(v) for v in r] for r in rows]
    n, det = len(M), Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            M[c], M[piv] = M[piv], M[c]
            det = -det
        det *= M[c][c]
        for r in range(c + 1, n):
            f = M[r][c] / M[c][c]
            M[r] = [a - f * b for a, b in zip(M[r], M[c])]
    return det


def frac_psd(rows) -> bool:
    """Every principal minor nonnegative (fine for the small sizes used here)."""
    from itertools import combinations

    n = len(rows)
    for size in range(1, n + 1):
        for idx in combinations(range(n), size):
            if frac_det([[rows[i][j] for j in idx] for i in idx]) < 0:
                return False
    return True


def hankel_rows(values: Sequence, size: int):
    return [[values[i + j] for j in range(size)] for i in range(size)]


def hamburger_conditions(values: Sequence[Fraction]) -> Tuple[bool, bool, bool]:
    """The three equivalent solvability tests evaluated from first principles."""
    k = (len(values) - 1) // 2
    A = hankel_rows(values, k + 1)
    psd = frac_psd(A)
    rank_full = frac_rank(A)
    first_dep = next((i for i in range(k + 1) if frac_rank([row[: i + 1] for row in A]) < i + 1), k + 1)
    lead = [row[:k] for row in A[:k]]
    rank_lead = frac_rank(lead)
    tail = list(values[k + 1 : 2 * k + 1])
    in_range = frac_rank(lead) == frac_rank([row + [t] for row, t in zip(lead, tail)])
    return (
        psd and rank_full == first_dep,
        psd and (rank_lead == k or rank_lead == rank_full),
        psd and in_range,
    )

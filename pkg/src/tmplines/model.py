"""Bivariate moment sequences, moment matrices and atomic measures.

Monomial labels are pairs ``(i, j)`` standing for ``X^i Y^j``.  Two label
orders are used: degree-lex (``1, X, Y, X^2, XY, Y^2, ...``) for storage and
the line order (``1..X^k, Y..YX^(k-1), Y^2..Y^2X^(k-2), ..., Y^k``) for the
block decompositions used by the line solvers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import linalg
from .scalars import Field, Scalar, coerce, field_of_values, zero, zeros

Label = Tuple[int, int]
Polynomial = Dict[Label, Scalar]


def degree_lex_labels(k: int) -> list[Label]:
    return [(d - j, j) for d in range(k + 1) for j in range(d + 1)]


def line_order_labels(k: int) -> list[Label]:
    return [(i, j) for j in range(k + 1) for i in range(k - j + 1)]


def x_run(j: int, top: int) -> list[Label]:
    """``Y^j, Y^j X, ..., Y^j X^top``."""
    return [(i, j) for i in range(top + 1)]


@dataclass(frozen=True)
class MonomialIndex:
    labels: Tuple[Label, ...]

    def __post_init__(self):
        object.__setattr__(self, "_pos", {lab: p for p, lab in enumerate(self.labels)})
        if len(self._pos) != len(self.labels):
            raise ValueError("duplicate labels")

    def position(self, label: Label) -> int:
        try:
            return self._pos[label]
        except KeyError:
            raise KeyError(f"unknown label {label}") from None

    def positions(self, labels: Iterable[Label]) -> list[int]:
        return [self.position(lab) for lab in labels]

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class BivariateMomentSequence:
    k: int
    moments: Mapping[Label, Scalar]
    field: Field = Field.EXACT

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be nonnegative")
        clean = {}
        for i, j in degree_lex_labels(2 * self.k):
            if (i, j) not in self.moments:
                raise ValueError(f"moment beta_{i},{j} missing")
            clean[(i, j)] = coerce(self.moments[(i, j)], self.field)
        extra = set(self.moments) - set(clean)
        if extra:
            raise ValueError(f"moments beyond degree {2 * self.k}: {sorted(extra)}")
        object.__setattr__(self, "moments", clean)

    def __getitem__(self, label: Label) -> Scalar:
        return self.moments[label]

    @classmethod
    def from_list(cls, k: int, values: Sequence, field: Optional[Field] = None) -> "BivariateMomentSequence":
        """Build from values listed in degree-lex order."""
        labels = degree_lex_labels(2 * k)
        if len(values) != len(labels):
            raise ValueError(f"expected {len(labels)} moments for k={k}, got {len(values)}")
        field = field or field_of_values(values)
        return cls(k, dict(zip(labels, values)), field)

    def as_list(self) -> list[Scalar]:
        return [self.moments[lab] for lab in degree_lex_labels(2 * self.k)]

    def to_float(self) -> "BivariateMomentSequence":
        return BivariateMomentSequence(self.k, {a: float(b) for a, b in self.moments.items()}, Field.FLOAT)

    def replace(self, updates: Mapping[Label, Scalar]) -> "BivariateMomentSequence":
        new = dict(self.moments)
        new.update(updates)
        return BivariateMomentSequence(self.k, new, self.field)

    def x_moments(self, j: int = 0) -> list[Scalar]:
        """``beta_{0,j}, beta_{1,j}, ..., beta_{2k-j,j}``."""
        return [self.moments[(i, j)] for i in range(2 * self.k - j + 1)]


@dataclass(frozen=True)
class MomentMatrix:
    matrix: np.ndarray = field(repr=False)
    index: MonomialIndex
    sequence: BivariateMomentSequence = field(repr=False)

    def restrict(self, rows: Sequence[Label], cols: Optional[Sequence[Label]] = None) -> np.ndarray:
        cols = rows if cols is None else cols
        r = self.index.positions(rows)
        c = self.index.positions(cols)
        return self.matrix[np.ix_(r, c)]

    def reorder(self, labels: Sequence[Label]) -> "MomentMatrix":
        return MomentMatrix(self.restrict(labels), MonomialIndex(tuple(labels)), self.sequence)

    def line_ordered(self) -> "MomentMatrix":
        return self.reorder(line_order_labels(self.sequence.k))


def matrix_from_entries(rows: Sequence[Label], cols: Sequence[Label], entry, field: Field) -> np.ndarray:
    out = zeros((len(rows), len(cols)), field)
    for a, (i1, j1) in enumerate(rows):
        for b, (i2, j2) in enumerate(cols):
            out[a, b] = entry(i1 + i2, j1 + j2)
    return out


def build_moment_matrix(seq: BivariateMomentSequence) -> MomentMatrix:
    labels = degree_lex_labels(seq.k)
    M = matrix_from_entries(labels, labels, lambda i, j: seq[(i, j)], seq.field)
    return MomentMatrix(M, MonomialIndex(tuple(labels)), seq)


def moment_block(seq: BivariateMomentSequence, rows: Sequence[Label], cols: Optional[Sequence[Label]] = None) -> np.ndarray:
    """Submatrix of the moment matrix for arbitrary labels of degree <= k."""
    cols = rows if cols is None else cols
    return matrix_from_entries(rows, cols, lambda i, j: seq[(i, j)], seq.field)


# --------------------------------------------------------------------------
# polynomials and the Riesz functional


def poly_degree(p: Mapping[Label, Scalar]) -> int:
    return max((i + j for (i, j), c in p.items() if c != 0), default=-1)


def poly_mul(p: Mapping[Label, Scalar], q: Mapping[Label, Scalar]) -> Polynomial:
    out: Polynomial = {}
    for (i1, j1), a in p.items():
        for (i2, j2), b in q.items():
            key = (i1 + i2, j1 + j2)
            out[key] = out.get(key, 0) + a * b
    return out


def riesz_apply(seq: BivariateMomentSequence, poly: Mapping[Label, Scalar]) -> Scalar:
    if poly_degree(poly) > 2 * seq.k:
        raise ValueError(f"polynomial degree exceeds {2 * seq.k}")
    total = zero(seq.field)
    for lab, c in poly.items():
        if c != 0:
            total += coerce(c, seq.field) * seq[lab]
    return total


def poly_vector(p: Mapping[Label, Scalar], index: MonomialIndex, field: Field) -> np.ndarray:
    v = zeros(len(index), field)
    for lab, c in p.items():
        if c != 0:
            v[index.position(lab)] = coerce(c, field)
    return v


@dataclass(frozen=True)
class RgReport:
    ok: bool
    violations: Tuple[Tuple[Polynomial, Label], ...] = ()


def check_recursively_generated(M: MomentMatrix, tol: float = linalg.DEFAULT_RTOL) -> RgReport:
    """Test that kernel polynomials stay in the kernel after multiplication by x or y."""
    k = M.sequence.k
    labels = M.index.labels
    low = [p for p, (i, j) in enumerate(labels) if i + j <= k - 1]
    K = linalg.kernel_basis(M.matrix[:, low], tol)
    exact = linalg.is_exact(M.matrix)
    scale = max(linalg._scale(M.matrix), 1.0)
    bad = []
    for c in range(K.shape[1]):
        p = {labels[low[r]]: K[r, c] for r in range(len(low)) if K[r, c] != 0}
        for shift in ((1, 0), (0, 1)):
            q = poly_mul(p, {shift: 1})
            resid = M.matrix @ poly_vector(q, M.index, M.sequence.field)
            if exact:
                fails = any(x != 0 for x in resid)
            else:
                norm = float(np.linalg.norm(np.asarray(list(p.values()), dtype=float)))
                fails = float(np.max(np.abs(resid))) > 1e3 * tol * scale * max(norm, 1.0)
            if fails:
                bad.append((p, shift))
    return RgReport(not bad, tuple(bad))


# --------------------------------------------------------------------------
# measures


@dataclass(frozen=True)
class Atom:
    x: Scalar
    y: Scalar
    density: Scalar


@dataclass(frozen=True)
class AtomicMeasure2D:
    atoms: Tuple[Atom, ...] = ()

    def __post_init__(self):
        atoms = tuple(a if isinstance(a, Atom) else Atom(*a) for a in self.atoms)
        for a in atoms:
            if not a.density > 0:
                raise ValueError(f"non-positive density at ({a.x}, {a.y})")
        if len({(a.x, a.y) for a in atoms}) != len(atoms):
            raise ValueError("atoms must be pairwise distinct")
        object.__setattr__(self, "atoms", atoms)

    def __len__(self) -> int:
        return len(self.atoms)

    def __add__(self, other: "AtomicMeasure2D") -> "AtomicMeasure2D":
        return AtomicMeasure2D(self.atoms + other.atoms)

    @property
    def exact(self) -> bool:
        return all(not isinstance(v, float) for a in self.atoms for v in (a.x, a.y, a.density))


def moments_of_measure(measure: AtomicMeasure2D, k: int, field: Optional[Field] = None) -> BivariateMomentSequence:
    """Moments ``sum rho x^i y^j`` of degree ``<= 2k``; the verification oracle."""
    if field is None:
        field = Field.EXACT if measure.exact else Field.FLOAT
    vals = {}
    atoms = [(coerce(a.x, field), coerce(a.y, field), coerce(a.density, field)) for a in measure.atoms]
    for i, j in degree_lex_labels(2 * k):
        s = zero(field)
        for x, y, r in atoms:
            s += r * x**i * y**j
        vals[(i, j)] = s
    return BivariateMomentSequence(k, vals, field)


def moment_residual(measure: AtomicMeasure2D, seq: BivariateMomentSequence) -> tuple[float, Label]:
    """Largest absolute moment mismatch and where it occurs."""
    fld = Field.EXACT if (measure.exact and seq.field is Field.EXACT) else Field.FLOAT
    got = moments_of_measure(measure, seq.k, fld)
    worst, where = 0.0, (0, 0)
    for lab in degree_lex_labels(2 * seq.k):
        d = abs(float(got[lab] - coerce(seq[lab], fld) if fld is Field.EXACT else got[lab] - float(seq[lab])))
        if d > worst:
            worst, where = d, lab
    return worst, where

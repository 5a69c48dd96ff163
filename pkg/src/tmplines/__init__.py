"""Truncated moment problems supported on unions of parallel lines."""
from .hamburger import AtomicMeasure1D, thmp_decide, thmp_solve
from .hankel import UnivariateMomentSequence
from .lmi import AffineMatrixPencil, SearchConfig, feasible_interval_1d, maximize_min_eigenvalue
from .model import (
    Atom,
    AtomicMeasure2D,
    BivariateMomentSequence,
    build_moment_matrix,
    moment_residual,
    moments_of_measure,
)
from .nlines import build_parametric_extension, gamma_sequence, solve_npl_pure
from .outcome import SolveOutcome, Verdict
from .scalars import Field
from .solver import solve
from .threelines import construct_3pl, decide_3pl
from .twolines import construct_2pl, decide_2pl

__all__ = [
    "AffineMatrixPencil",
    "Atom",
    "AtomicMeasure1D",
    "AtomicMeasure2D",
    "BivariateMomentSequence",
    "Field",
    "SearchConfig",
    "SolveOutcome",
    "UnivariateMomentSequence",
    "Verdict",
    "build_moment_matrix",
    "build_parametric_extension",
    "construct_2pl",
    "construct_3pl",
    "decide_2pl",
    "decide_3pl",
    "feasible_interval_1d",
    "gamma_sequence",
    "maximize_min_eigenvalue",
    "moment_residual",
    "moments_of_measure",
    "solve",
    "solve_npl_pure",
    "thmp_decide",
    "thmp_solve",
]

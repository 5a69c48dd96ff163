import random
from fractions import Fraction
from math import sqrt

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tmplines import AffineMatrixPencil, SearchConfig, Verdict, build_parametric_extension, feasible_interval_1d, gamma_sequence, maximize_min_eigenvalue, solve, solve_npl_pure
from tmplines.extension import base_rows, block_size, elementary_symmetric, parameter_count, parameter_labels, relation_violation
from tmplines.nlines import is_pure
from tmplines.scalars import Field, asarray

from oracles import direct_moments, generic_line_instance, line_instance, max_residual, sequence_of

F = Fraction


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=1, max_size=5))
def test_elementary_symmetric_matches_polynomial(roots):
    e = elementary_symmetric([F(r) for r in roots])
    coeffs = np.poly(roots)  # prod (y - r) = sum (-1)^m e_m y^{n-m}
    assert [(-1) ** m * v for m, v in enumerate(e)] == [F(round(c)) for c in coeffs]


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 4), st.integers(0, 10_000))
def test_gamma_is_off_axis_mass(n, seed):
    rng = random.Random(seed)
    offs = rng.sample([-3, -2, -1, 1, 2, 3], n - 1)
    k = n
    atoms = []
    for y in [0] + offs:
        for x in rng.sample(range(-5, 6), 2):
            atoms.append((F(x), F(y), F(rng.randint(1, 5))))
    seq = sequence_of(atoms, k)
    gamma = gamma_sequence(seq, [F(a) for a in offs])
    assert len(gamma) == 2 * k - n + 2
    for i, g in enumerate(gamma):
        assert g == sum(r * x**i for x, y, r in atoms if y != 0)
    assert relation_violation(seq, [F(0)] + [F(a) for a in offs]) is None


def test_gamma_needs_nonzero_offsets():
    seq = sequence_of([(F(0), F(0), F(1))], 2)
    with pytest.raises(ValueError):
        gamma_sequence(seq, [F(0)])


def test_extension_at_true_moments_is_the_moment_matrix():
    rng = random.Random(11)
    atoms, ys = generic_line_instance(rng, 4, 4)
    k = 4
    seq = sequence_of(atoms, k)
    ext = build_parametric_extension(seq, ys)
    base = min(ys)
    shifted = [(x, y - base, r) for x, y, r in atoms]
    true = direct_moments(shifted, 2 * k)
    assert ext.params == parameter_labels(k, 4) and len(ext.params) == parameter_count(4)
    S = ext.evaluate([true[p] for p in ext.params])
    for a, (i1, j1) in enumerate(ext.rows):
        for b, (i2, j2) in enumerate(ext.rows):
            assert S[a, b] == true[(i1 + i2, j1 + j2)]
    assert len(base_rows(k, 4)) == block_size(k, 4)
    assert is_pure(seq, ys)


def test_extension_requires_k_at_least_n():
    seq = sequence_of([(F(0), F(y), F(1)) for y in range(4)], 3)
    with pytest.raises(ValueError):
        build_parametric_extension(seq, [F(0), F(1), F(2), F(3)])


def _pencil(rows0, rows1, field=Field.EXACT):
    return AffineMatrixPencil(asarray(rows0, field), (asarray(rows1, field),))


def test_interval_unit_disc():
    iv = feasible_interval_1d(_pencil([[1, 0], [0, 1]], [[0, 1], [1, 0]]))
    assert (iv.lo, iv.hi, iv.exact) == (-1, 1, True)
    iv = feasible_interval_1d(_pencil([[1, 0], [0, 4]], [[0, 1], [1, 0]]))
    assert (iv.lo, iv.hi) == (-2, 2)


def test_interval_irrational_endpoints_and_empty():
    iv = feasible_interval_1d(_pencil([[1, 0], [0, 2]], [[0, 1], [1, 0]]))
    assert not iv.exact and iv.hi == pytest.approx(sqrt(2)) and iv.lo == pytest.approx(-sqrt(2))
    assert feasible_interval_1d(_pencil([[-1, 0], [0, 1]], [[0, 1], [1, 0]])) is None
    with pytest.raises(ValueError):
        feasible_interval_1d(_pencil([[1, 0], [0, 1]], [[1, 0], [0, 0]]))


def test_interval_bordered_by_schur_complement():
    # middle row couples both ends; det of the 3x3 is a quadratic in t
    S0 = [[2, 1, 0], [1, 2, 1], [0, 1, 2]]
    iv = feasible_interval_1d(_pencil(S0, [[0, 0, 1], [0, 0, 0], [1, 0, 0]]))
    det = lambda t: np.linalg.det(np.array([[2, 1, t], [1, 2, 1], [t, 1, 2]], dtype=float))
    assert abs(det(float(iv.lo))) < 1e-9 and abs(det(float(iv.hi))) < 1e-9
    mid = 0.5 * (float(iv.lo) + float(iv.hi))
    assert np.linalg.eigvalsh(np.array([[2, 1, mid], [1, 2, 1], [mid, 1, 2]])).min() > 0


def test_search_identity_and_infeasible():
    eye = AffineMatrixPencil(np.eye(3))
    rep = maximize_min_eigenvalue(eye)
    assert rep.feasible and rep.lam_min == pytest.approx(1.0)
    # det = -t^2 - 1 < 0 for every t
    hopeless = AffineMatrixPencil(np.array([[0.0, 1.0], [1.0, 0.0]]), (np.diag([1.0, -1.0]),))
    rep = maximize_min_eigenvalue(hopeless)
    assert not rep.feasible and rep.lam_min <= 0


def test_search_two_parameters_is_deterministic():
    S0 = np.diag([1.0, -1.0, 1.0])
    S1 = np.diag([0.0, 1.0, 0.0])
    S2 = np.diag([0.0, 0.0, -1.0])
    pencil = AffineMatrixPencil(S0, (S1, S2))
    a = maximize_min_eigenvalue(pencil, config=SearchConfig(seed=4))
    b = maximize_min_eigenvalue(pencil, config=SearchConfig(seed=4))
    assert a.feasible and a.t == b.t and a.lam_min == b.lam_min
    assert a.lam_min == pytest.approx(1.0, abs=1e-6)


def test_npl_two_lines_matches_two_line_solver():
    rng = random.Random(21)
    atoms, alphas = line_instance(rng, 2, 3, exact=True)
    seq = sequence_of(atoms, 3)
    out = solve_npl_pure(seq, alphas)
    assert out.verdict is Verdict.FEASIBLE and max_residual(out.measure, seq) < 1e-9


def test_npl_validation():
    seq = sequence_of([(F(0), F(0), F(1)), (F(1), F(1), F(1))], 2)
    with pytest.raises(ValueError):
        solve_npl_pure(seq, [F(0), F(0)])
    with pytest.raises(ValueError):
        solve_npl_pure(seq, [F(0), F(1), F(2)])


def test_four_lines_not_pure_is_undecided():
    # one atom per line: column relations beyond the line polynomial
    atoms = [(F(i), F(i), F(1)) for i in range(4)]
    seq = sequence_of(atoms, 4)
    out = solve(seq, [F(0), F(1), F(2), F(3)])
    assert out.verdict is Verdict.UNDECIDED and out.exit_code == 3
    assert "non-pure" in out.reason


def test_four_lines_relation_failure_is_infeasible():
    atoms = [(F(i), F(i), F(1)) for i in range(4)]
    seq = sequence_of(atoms, 4)
    out = solve(seq, [F(0), F(1), F(2), F(5)])
    assert out.verdict is Verdict.INFEASIBLE and out.witness["reason"] == "line relation fails"

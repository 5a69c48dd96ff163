"""Two- and three-line deciders and constructors."""
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tmplines import construct_2pl, construct_3pl, decide_2pl, decide_3pl
from tmplines.fixtures import fixture_alphas, fixture_sequence
from tmplines.threelines import decide_3pl_pure, designated_line
from tmplines.twolines import audit_2pl

from oracles import direct_moments, line_instance, max_residual, sequence_of

F = Fraction

two_line_atoms = st.lists(
    st.tuples(st.integers(-8, 8), st.sampled_from([-1, 2]), st.integers(1, 6)),
    min_size=1,
    max_size=6,
    unique_by=lambda p: p[:2],
)


@settings(max_examples=40, deadline=None)
@given(two_line_atoms, st.integers(2, 3))
def test_two_lines_exact_round_trip(raw, k):
    atoms = [(F(x, 2), F(y), F(r, 4)) for x, y, r in raw]
    seq = sequence_of(atoms, k)
    dec = decide_2pl(seq, F(2), F(-1))
    assert dec.feasible and audit_2pl(seq, F(-1), F(2))
    con = construct_2pl(seq, F(-1), F(2), decision=dec)
    assert {a.y for a in con.measure.atoms} <= {-1, 2}
    if con.measure.exact:
        assert direct_moments([(a.x, a.y, a.density) for a in con.measure.atoms], k) == dict(seq.moments)
    else:
        assert max_residual(con.measure, seq) < 1e-8


def test_two_lines_relation_witness():
    seq = sequence_of([(F(0), F(0), F(1)), (F(1), F(1), F(1)), (F(2), F(0), F(1))], 2)
    dec = decide_2pl(seq, F(0), F(2))
    assert not dec.feasible and dec.witness["reason"] == "relation"
    assert not audit_2pl(seq, F(0), F(2))


def test_two_lines_not_psd_witness():
    seq = sequence_of([(F(0), F(0), F(1)), (F(1), F(1), F(1))], 2)
    bad = seq.replace({(2, 0): F(0)})
    dec = decide_2pl(bad, F(0), F(1))
    assert not dec.feasible and dec.witness["reason"] == "M-not-psd"


def test_two_lines_need_k_two():
    with pytest.raises(ValueError):
        decide_2pl(sequence_of([(F(0), F(0), F(1))], 1), F(0), F(1))


def test_listed_example_triple_misses_cubic_moment():
    # the printed atoms match degrees 0..2 on y = 1 but not degree 3
    seq = fixture_sequence("ex3")
    xs = (0.0445476, 1.17328, 3.53217)
    rhos = (0.0541354, 0.233231, 0.0762695)
    power = [sum(r * x**i for x, r in zip(xs, rhos)) for i in range(4)]
    assert np.allclose(power[:3], [float(seq[(i, 1)]) for i in range(3)], atol=1e-5)
    assert power[3] == pytest.approx(3.7378, abs=1e-3)
    assert float(seq[(3, 1)]) == pytest.approx(36 / 11)


def test_designated_line_choice():
    assert designated_line([F(0), F(-1), F(1)]) == 0
    assert designated_line([F(3), F(-1), F(1)]) == 1
    assert designated_line([F(1), F(0), F(-1)]) == 1
    # zero on the topmost line does not count
    assert designated_line([F(0), F(-2), F(-1)]) == 1


def _n_matrix(seq):
    """``N`` rebuilt by hand: rows 1, X, X^2, Y, YX, YX^2, Y^2, Y^2X, Y^2X^2, with Y^3 = Y."""

    def b(i, j):
        while j >= 3:
            j -= 2
        return seq[(i, j)]

    labs = [(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (2, 1), (0, 2), (1, 2), (2, 2)]
    return labs, np.array([[float(b(a + c, d + e)) for c, e in labs] for a, d in labs])


def test_ex41_data_gives_positive_n_and_listed_eigenvalues_need_entry_six():
    seq = fixture_sequence("ex4-1")
    labs, N = _n_matrix(seq)
    assert np.linalg.eigvalsh(N).min() == pytest.approx(0.0055155, abs=1e-6)
    p, q = labs.index((1, 2)), labs.index((2, 2))
    N[p, q] = N[q, p] = 6
    eig = np.sort(np.linalg.eigvalsh(N))
    assert eig[0] == pytest.approx(-0.00347317, abs=1e-7)
    assert eig[-1] == pytest.approx(43.0994, abs=1e-3)
    dec = decide_3pl(seq, fixture_alphas("ex4-1"))
    assert dec.feasible


def test_three_line_witness_kinds():
    seq = fixture_sequence("ex4-3")
    alphas = fixture_alphas("ex4-3")
    assert decide_3pl(seq, alphas).feasible
    broken = seq.replace({(0, 3): seq[(0, 3)] + 1})
    assert decide_3pl(broken, alphas).witness["reason"] in ("line relation fails", "M_k not psd")
    neg = seq.replace({(2, 0): F(0)})
    assert decide_3pl(neg, alphas).witness["reason"] == "M_k not psd"


def test_three_lines_exact_round_trip_and_designations():
    rng = random.Random(3)
    done = 0
    while done < 12:
        atoms, alphas = line_instance(rng, 3, 3, exact=True)
        seq = sequence_of(atoms, 3)
        dec = decide_3pl(seq, alphas)
        assert dec.feasible
        top = max(range(3), key=lambda i: alphas[i])
        for d in (i for i in range(3) if i != top):
            con = construct_3pl(seq, alphas, designated=d)
            assert max_residual(con.measure, seq) < 1e-8
            assert {a.y for a in con.measure.atoms} <= set(alphas)
        done += 1


def test_pure_shortcut_agrees_with_full_decision():
    rng = random.Random(5)
    for _ in range(10):
        atoms, alphas = line_instance(rng, 3, 4, exact=True)
        seq = sequence_of(atoms, 3)
        assert decide_3pl_pure(seq, alphas).feasible == decide_3pl(seq, alphas).feasible

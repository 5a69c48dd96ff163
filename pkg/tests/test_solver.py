from fractions import Fraction

import pytest

from tmplines import Atom, AtomicMeasure2D, SolveOutcome, Verdict, solve
from tmplines import solver as solver_mod
from tmplines.fixtures import fixture_alphas, fixture_sequence

from oracles import max_residual, sequence_of

F = Fraction


def test_single_line_round_trip_and_relation():
    atoms = [(F(-1), F(2), F(1, 3)), (F(1, 2), F(2), F(1)), (F(3), F(2), F(1, 5))]
    seq = sequence_of(atoms, 3)
    out = solve(seq, [F(2)])
    assert out.feasible and out.trace["branch"] == "1pl"
    assert sorted((a.x, a.density) for a in out.measure.atoms) == sorted((x, r) for x, _, r in atoms)
    off = solve(seq, [F(1)])
    assert off.verdict is Verdict.INFEASIBLE and off.reason == "line relation fails"


@pytest.mark.parametrize(
    "alphas, method, beta00",
    [([], "auto", 1), ([F(0), F(0)], "auto", 1), ([F(0), F(1)], "bogus", 1), ([F(0), F(1)], "auto", 0), ([F(0), F(1)], "auto", -1)],
)
def test_input_validation(alphas, method, beta00):
    seq = sequence_of([(F(0), F(0), F(1)), (F(1), F(1), F(1))], 2)
    seq = seq.replace({(0, 0): F(beta00)})
    with pytest.raises(ValueError):
        solve(seq, alphas, method=method)


def test_float_ex44_infeasible_through_rank_pair():
    out = solve(fixture_sequence("ex4-4"), fixture_alphas("ex4-4"))
    assert out.verdict is Verdict.INFEASIBLE and out.exit_code == 2
    assert tuple(out.witness["rank_pair"]) == (3, 2)


def test_float_two_lines_residual():
    atoms = [(x / 4, y, 0.1 * (i + 1)) for i, (x, y) in enumerate([(-3, 0.0), (1, 0.0), (5, 0.0), (-2, 0.5), (4, 0.5)])]
    seq = sequence_of(atoms, 3)
    out = solve(seq, [0.0, 0.5])
    assert out.feasible and max_residual(out.measure, seq) < 1e-10
    assert len(out.measure) == 5


def test_prune_drops_rounding_sized_atom():
    atoms = [(0.0, 0.0, 1.0), (1.0, 0.0, 2.0), (-1.0, 1.0, 0.5)]
    seq = sequence_of(atoms, 2)
    noisy = AtomicMeasure2D(tuple(Atom(*a) for a in atoms) + (Atom(0.37, 1.0, 1e-14),))
    pruned = solver_mod.prune_measure(noisy, seq, 1e-9)
    assert len(pruned) == 3
    assert max_residual(pruned, seq) < 1e-12


def test_prune_keeps_genuine_small_atom():
    atoms = [(0.0, 0.0, 1.0), (1.0, 0.0, 2.0), (-1.0, 1.0, 0.5), (2.0, 1.0, 1e-4)]
    seq = sequence_of(atoms, 2)
    mu = AtomicMeasure2D(tuple(Atom(*a) for a in atoms))
    assert len(solver_mod.prune_measure(mu, seq, 1e-9)) == 4


def test_refine_reduces_residual():
    atoms = [(0.0, 0.0, 1.0), (1.0, 0.0, 2.0), (-1.0, 1.0, 0.5)]
    seq = sequence_of(atoms, 2)
    rough = AtomicMeasure2D((Atom(1e-7, 0.0, 1.0), Atom(1.0, 0.0, 2.0 + 1e-7), Atom(-1.0, 1.0, 0.5)))
    assert max_residual(solver_mod.refine_measure(rough, seq), seq) < max_residual(rough, seq) * 1e-3


def _fake_dispatch(results):
    calls = []

    def fake(seq, alphas, tol, method, config):
        calls.append(tol)
        item = results[len(calls) - 1]
        if isinstance(item, Exception):
            raise item
        return item

    return fake, calls


def test_tolerance_retry_after_a_misjudged_rank(monkeypatch):
    atoms = [(0.0, 0.0, 1.0), (1.0, 0.0, 2.0), (-1.0, 1.0, 0.5)]
    seq = sequence_of(atoms, 2)
    good = SolveOutcome(Verdict.FEASIBLE, AtomicMeasure2D(tuple(Atom(*a) for a in atoms)), trace={})
    fake, calls = _fake_dispatch([ArithmeticError("rank"), good])
    monkeypatch.setattr(solver_mod, "_dispatch", fake)
    out = solve(seq, [0.0, 1.0], tol=1e-9)
    assert out.feasible and calls == [1e-9, pytest.approx(1e-10)]
    assert out.trace["tol_retry"] == pytest.approx(1e-10)


def test_tolerance_retry_rejects_a_poor_fit(monkeypatch):
    atoms = [(0.0, 0.0, 1.0), (1.0, 0.0, 2.0), (-1.0, 1.0, 0.5)]
    seq = sequence_of(atoms, 2)
    wrong = SolveOutcome(Verdict.FEASIBLE, AtomicMeasure2D((Atom(5.0, 0.0, 1.0),)), trace={})
    first = SolveOutcome(Verdict.INFEASIBLE, reason="rank")
    fake, calls = _fake_dispatch([first, wrong, wrong])
    monkeypatch.setattr(solver_mod, "_dispatch", fake)
    out = solve(seq, [0.0, 1.0])
    assert out is first and len(calls) == 3


def test_exact_mode_never_retries(monkeypatch):
    seq = sequence_of([(F(0), F(0), F(1)), (F(1), F(1), F(1))], 2)
    fake, calls = _fake_dispatch([ArithmeticError("boom")])
    monkeypatch.setattr(solver_mod, "_dispatch", fake)
    with pytest.raises(ArithmeticError):
        solve(seq, [F(0), F(1)])
    assert len(calls) == 1

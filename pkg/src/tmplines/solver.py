"""Dispatch a bivariate moment sequence to the solver for its number of lines."""
from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from . import linalg
from .extension import relation_violation
from .hamburger import NOISE_FLOOR, PIECE_SETTINGS, thmp_decide, thmp_solve
from .hankel import UnivariateMomentSequence
from .lmi import SearchConfig
from .model import Atom, AtomicMeasure2D, BivariateMomentSequence, build_moment_matrix, degree_lex_labels, moment_residual
from .nlines import is_pure, solve_npl_pure
from .outcome import SolveOutcome, Verdict
from .scalars import Field, coerce
from .threelines import construct_3pl, decide_3pl, designated_line
from .twolines import construct_2pl, decide_2pl, line_measure

METHODS = ("auto", "npl")
NON_PURE = "non-pure, n>=4 unsupported"
# float retries for the univariate pieces: (factor on tol, noise relative to the moment scale)
# float retries of the whole decision when the default tolerance misjudges a rank
TOL_LADDER = (0.1, 0.01)
PIECE_LADDER = ((0.1, NOISE_FLOOR), (0.01, NOISE_FLOOR), (1.0, 1e-10), (1.0, 1e-9), (1.0, 1e-8), (1.0, 1e-7))


def refine_measure(measure: AtomicMeasure2D, seq: BivariateMomentSequence) -> AtomicMeasure2D:
    """Polish x-positions and densities of a float measure against the moment equations.

    y-coordinates stay on their lines.  The polished measure is returned only
    if it has positive densities and a smaller residual.
    """
    if measure.exact or len(measure) == 0:
        return measure
    labels = degree_lex_labels(2 * seq.k)
    I = np.array([i for i, _ in labels])
    J = np.array([j for _, j in labels])
    target = np.array([float(seq[lab]) for lab in labels])
    ys = np.array([float(a.y) for a in measure.atoms])
    m = len(ys)
    yj = ys[None, :] ** J[:, None]

    def split(z):
        return z[:m], z[m:]

    def resid(z):
        x, rho = split(z)
        return (x[None, :] ** I[:, None] * yj) @ rho - target

    def jac(z):
        x, rho = split(z)
        xi = x[None, :] ** I[:, None]
        dx = I[:, None] * x[None, :] ** np.maximum(I[:, None] - 1, 0) * yj * rho[None, :]
        return np.hstack([dx, xi * yj])

    z0 = np.array([float(a.x) for a in measure.atoms] + [float(a.density) for a in measure.atoms])
    before = float(np.max(np.abs(resid(z0))))
    try:
        sol = least_squares(resid, z0, jac=jac, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
    except (ValueError, np.linalg.LinAlgError):
        return measure
    x, rho = split(sol.x)
    if not np.all(rho > 0) or len(set(zip(x.tolist(), ys.tolist()))) != m:
        return measure
    if float(np.max(np.abs(resid(sol.x)))) >= before:
        return measure
    return AtomicMeasure2D(tuple(Atom(float(a), float(b), float(r)) for a, b, r in zip(x, ys, rho)))


def prune_measure(measure: AtomicMeasure2D, seq: BivariateMomentSequence, tol: float) -> AtomicMeasure2D:
    """Drop float atoms whose whole moment contribution is rounding-sized.

    Rounding can give a piece one extra atom with a density near 1e-11.  Each
    such atom is removed if the re-polished measure fits the moments about as
    well as before.
    """
    if measure.exact or len(measure) < 2:
        return measure
    scale = max(1.0, max(abs(float(v)) for v in seq.moments.values()))
    limit = 1e3 * tol * scale
    reach = 2 * seq.k
    current = measure
    fit = moment_residual(current, seq)[0]
    for atom in sorted(measure.atoms, key=lambda a: a.density):
        weight = float(atom.density) * max(1.0, abs(float(atom.x)), abs(float(atom.y))) ** reach
        if weight > limit:
            break
        rest = AtomicMeasure2D(tuple(a for a in current.atoms if a is not atom))
        trial = refine_measure(rest, seq)
        got = moment_residual(trial, seq)[0]
        if got <= max(10 * fit, NOISE_FLOOR * scale):
            current, fit = trial, got
    return current


def _single_line(seq: BivariateMomentSequence, alpha, tol: float) -> SolveOutcome:
    # every moment must be alpha^j beta_{i,0}
    scale = max(1.0, max(abs(float(v)) for v in seq.moments.values()))
    for (i, j), v in seq.moments.items():
        off = v - seq[(i, 0)] * alpha**j
        if (off != 0) if seq.field is Field.EXACT else abs(float(off)) > 1e3 * tol * scale:
            return SolveOutcome(Verdict.INFEASIBLE, witness={"reason": "line relation fails", "index": (i, j)}, reason="line relation fails")
    useq = UnivariateMomentSequence.of(seq.x_moments(0), seq.field)
    dec = thmp_decide(useq, tol)
    if not dec.solvable:
        return SolveOutcome(Verdict.INFEASIBLE, witness=dict(dec.witness), trace={"branch": "1pl"}, reason=dec.witness.get("reason", ""))
    mu = line_measure(thmp_solve(useq, tol), alpha)
    return SolveOutcome(Verdict.FEASIBLE, mu, trace={"branch": "1pl", "residual": moment_residual(mu, seq)[0]})


def solve(
    seq: BivariateMomentSequence,
    alphas: Sequence,
    tol: float = linalg.DEFAULT_RTOL,
    method: str = "auto",
    config: SearchConfig = SearchConfig(),
) -> SolveOutcome:
    """Decide feasibility on ``y = alpha`` for each alpha and return a measure when one exists.

    ``method="npl"`` forces the sufficient pure-case test even for two or three lines.
    """
    outcome = _dispatch_with_retries(seq, alphas, tol, method, config)
    if outcome.measure is None or outcome.measure.exact:
        return outcome
    before = moment_residual(outcome.measure, seq)[0]
    polished = prune_measure(refine_measure(outcome.measure, seq), seq, tol)
    if polished is outcome.measure:
        return outcome
    trace = dict(outcome.trace, residual_unrefined=before, residual=moment_residual(polished, seq)[0])
    return SolveOutcome(outcome.verdict, polished, outcome.witness, trace, outcome.reason)


def _dispatch_with_retries(seq, alphas, tol, method, config) -> SolveOutcome:
    """Float two- and three-line problems whose rank decisions sit at the tolerance
    are retried with tighter tolerances; a retry counts only if its measure fits
    the moments at the caller's tolerance.
    """
    if seq.field is Field.EXACT or method != "auto" or len(alphas) not in (2, 3):
        return _dispatch(seq, alphas, tol, method, config)
    try:
        first = _dispatch(seq, alphas, tol, method, config)
        if first.feasible:
            return first
    except (ArithmeticError, AssertionError, ValueError) as exc:
        first = exc
    scale = max(1.0, max(abs(float(v)) for v in seq.moments.values()))
    for factor in TOL_LADDER:
        try:
            retry = _dispatch(seq, alphas, tol * factor, method, config)
        except (ArithmeticError, AssertionError, ValueError):
            continue
        if retry.feasible and moment_residual(retry.measure, seq)[0] <= 1e3 * tol * scale:
            return SolveOutcome(retry.verdict, retry.measure, retry.witness, dict(retry.trace, tol_retry=tol * factor), retry.reason)
    if isinstance(first, Exception):
        raise first
    return first


def _dispatch(
    seq: BivariateMomentSequence,
    alphas: Sequence,
    tol: float = linalg.DEFAULT_RTOL,
    method: str = "auto",
    config: SearchConfig = SearchConfig(),
) -> SolveOutcome:
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    alphas = [coerce(a, seq.field) for a in alphas]
    n = len(alphas)
    if n == 0:
        raise ValueError("no lines given")
    if len(set(alphas)) != n:
        raise ValueError("line offsets must be pairwise distinct")
    if not seq[(0, 0)] > 0:
        raise ValueError("beta_00 must be positive")
    if n == 1:
        return _single_line(seq, alphas[0], tol)
    if method == "npl" or n >= 4:
        if n >= 4:
            cert = linalg.psd_check(build_moment_matrix(seq).matrix, tol)
            if not cert.is_psd:
                return SolveOutcome(Verdict.INFEASIBLE, witness={"reason": "M_k not psd", "min_eig": cert.min_eig}, reason="M_k not psd")
            bad = relation_violation(seq, alphas, tol)
            if bad is not None:
                return SolveOutcome(Verdict.INFEASIBLE, witness={"reason": "line relation fails", "index": bad}, reason="line relation fails")
            if seq.k < n or not is_pure(seq, alphas, tol):
                return SolveOutcome(Verdict.UNDECIDED, witness={"reason": NON_PURE}, reason=NON_PURE)
        return solve_npl_pure(seq, alphas, tol, config)
    if n == 2:
        lo, hi = sorted(alphas)
        dec = decide_2pl(seq, lo, hi, tol)
        trace = {"branch": dec.condition, "ranks": dict(dec.ranks)}
        if not dec.feasible:
            return SolveOutcome(Verdict.INFEASIBLE, witness=dict(dec.witness), trace=trace, reason=dec.witness.get("reason", ""))
        con, noise = _construct(lambda t: construct_2pl(seq, lo, hi, t, dec), seq, tol)
        trace.update(case=con.case, delta=con.delta, residual=moment_residual(con.measure, seq)[0])
        if noise is not None:
            trace["piece_settings"] = list(noise)
        return SolveOutcome(Verdict.FEASIBLE, con.measure, trace=trace)
    dec = decide_3pl(seq, alphas, tol)
    trace = {"branch": dec.branch, "ranks": dict(dec.ranks), "holding": list(dec.holding)}
    if not dec.feasible:
        return SolveOutcome(Verdict.INFEASIBLE, witness=dict(dec.witness), trace=trace, reason=dec.witness.get("reason", ""))
    top = max(range(3), key=lambda i: alphas[i])
    first = designated_line(alphas)
    choices = [first] + [i for i in range(3) if i not in (first, top)]
    err = None
    for d in choices if seq.field is Field.FLOAT else choices[:1]:
        reuse = dec if d == first else None
        try:
            con, noise = _construct(lambda t: construct_3pl(seq, alphas, t, d, reuse if t == tol else None), seq, tol)
        except (ArithmeticError, AssertionError, ValueError) as exc:
            err = exc
            continue
        break
    else:
        raise err
    trace = dict(con.trace)
    if noise is not None:
        trace["piece_settings"] = list(noise)
    if d != first:
        trace["designated"] = d
    return SolveOutcome(Verdict.FEASIBLE, con.measure, trace=trace)


def _construct(build, seq: BivariateMomentSequence, tol: float):
    """Run ``build(tol)``; in float mode retry when rounding trips a consistency check.

    Retries vary the tolerance used for the univariate pieces, tighter first,
    then looser.  A retried result is kept only if its moments still match.
    """
    if seq.field is Field.EXACT:
        return build(tol), None
    scale = max(1.0, max(abs(float(v)) for v in seq.moments.values()))
    err = None
    for level in (None,) + PIECE_LADDER:
        token = PIECE_SETTINGS.set(level) if level is not None else None
        try:
            con = build(tol)
        except (ArithmeticError, AssertionError, ValueError) as exc:
            err = exc
            continue
        finally:
            if token is not None:
                PIECE_SETTINGS.reset(token)
        if moment_residual(con.measure, seq)[0] <= 1e3 * tol * scale:
            return con, level
        err = ArithmeticError(f"construction with piece settings {level} misses the moments")
    raise err

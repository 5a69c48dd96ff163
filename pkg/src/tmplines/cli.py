"""Command line: ``tmplines solve | verify | examples``.

Exit codes: 0 feasible or verified, 2 infeasible or rejected, 3 undecided,
1 for usage, parse and internal errors.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from enum import Enum
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import linalg
from .fixtures import FIXTURES, ex5_measure, ex43_measure
from .lmi import SearchConfig
from .model import Atom, AtomicMeasure2D, BivariateMomentSequence, degree_lex_labels, moment_residual
from .outcome import SolveOutcome
from .scalars import Field, parse_scalar
from .solver import METHODS, solve


class InputError(ValueError):
    """A malformed input file; the message names the file and the offending line."""


# reading


def _line_of(text: str, needle: str, start: int = 0) -> int:
    pos = text.find(needle, start)
    return text.count("\n", 0, pos) + 1 if pos >= 0 else 1


def _entry_lines(text: str, key: str) -> list:
    """Line number of each element of the top-level list stored under ``key``."""
    start = text.find(f'"{key}"')
    if start < 0:
        return []
    pos = text.find("[", start) + 1
    dec, out = json.JSONDecoder(), []
    while 0 < pos < len(text):
        while pos < len(text) and text[pos] in " \t\r\n,":
            pos += 1
        if pos >= len(text) or text[pos] == "]":
            break
        out.append(text.count("\n", 0, pos) + 1)
        try:
            _, pos = dec.raw_decode(text, pos)
        except json.JSONDecodeError:
            break
    return out


def _load_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    try:
        return json.loads(text), text
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def _scalar(value, field: Field, where: str):
    if isinstance(value, bool) or not isinstance(value, (str, int, float)):
        raise InputError(f"{where}: expected a number or a 'p/q' string, got {value!r}")
    if isinstance(value, float) and field is Field.EXACT:
        raise InputError(f"{where}: JSON float {value!r} in exact mode; write it as a string")
    try:
        return parse_scalar(value, field)
    except ValueError as exc:
        raise InputError(f"{where}: {exc}") from exc


@dataclasses.dataclass(frozen=True)
class Problem:
    seq: BivariateMomentSequence
    alphas: list
    tol: Optional[float]


def parse_problem(doc, path: str = "<problem>", text: str = "", mode: Optional[str] = None) -> Problem:
    """Validate a problem document; ``mode`` overrides the file's own."""
    where = lambda key: f"{path}:{_line_of(text, chr(34) + key + chr(34))}"
    if not isinstance(doc, dict):
        raise InputError(f"{path}:1: top level must be an object")
    for key in ("k", "moments", "lines"):
        if key not in doc:
            raise InputError(f"{path}: missing key {key!r}")
    k = doc["k"]
    if isinstance(k, bool) or not isinstance(k, int) or k < 0:
        raise InputError(f"{where('k')}: k must be a nonnegative integer")
    try:
        field = Field(mode or doc.get("mode", "exact"))
    except ValueError:
        raise InputError(f"{where('mode')}: mode must be 'exact' or 'float'") from None
    tol = doc.get("tol")
    if tol is not None and (isinstance(tol, bool) or not isinstance(tol, (int, float)) or tol <= 0):
        raise InputError(f"{where('tol')}: tol must be a positive number")
    entries = doc["moments"]
    if not isinstance(entries, list):
        raise InputError(f"{where('moments')}: moments must be a list of [i, j, value]")
    moments = {}
    lines_of = _entry_lines(text, "moments")
    for n, item in enumerate(entries):
        here = f"{path}:{lines_of[n]}" if n < len(lines_of) else path
        if not (isinstance(item, list) and len(item) == 3 and all(isinstance(v, int) and not isinstance(v, bool) for v in item[:2])):
            raise InputError(f"{here}: moments entry {n}: expected [i, j, value], got {item!r}")
        i, j, value = item
        if i < 0 or j < 0 or i + j > 2 * k:
            raise InputError(f"{here}: moments entry {n}: degree of ({i}, {j}) exceeds 2k = {2 * k}")
        if (i, j) in moments:
            raise InputError(f"{here}: moments entry {n}: beta_{i},{j} given twice")
        moments[(i, j)] = _scalar(value, field, f"{here}: moments entry {n}")
    missing = [lab for lab in degree_lex_labels(2 * k) if lab not in moments]
    if missing:
        i, j = missing[0]
        raise InputError(f"{where('moments')}: incomplete moment triangle, beta_{i},{j} missing ({len(missing)} absent)")
    lines = doc["lines"]
    if not isinstance(lines, dict) or not isinstance(lines.get("alphas"), list) or not lines["alphas"]:
        raise InputError(f"{where('lines')}: lines must be an object with a non-empty 'alphas' list")
    alphas = [_scalar(a, field, f"{where('alphas')}: alphas[{n}]") for n, a in enumerate(lines["alphas"])]
    if len(set(alphas)) != len(alphas):
        raise InputError(f"{where('alphas')}: repeated line offsets {lines['alphas']}")
    if not moments[(0, 0)] > 0:
        raise InputError(f"{path}: beta_0,0 must be positive")
    return Problem(BivariateMomentSequence(k, moments, field), alphas, tol)


def load_problem(path: str, mode: Optional[str] = None) -> Problem:
    doc, text = _load_json(path)
    return parse_problem(doc, path, text, mode)


def parse_measure(doc, path: str = "<measure>") -> AtomicMeasure2D:
    atoms = doc.get("measure") if isinstance(doc, dict) else doc
    if not isinstance(atoms, list):
        raise InputError(f"{path}: expected a list of atoms or an object with a 'measure' list")
    raw = [v for a in atoms if isinstance(a, dict) for v in (a.get("x"), a.get("y"), a.get("density"))]
    field = Field.FLOAT if any(isinstance(v, float) for v in raw) else Field.EXACT
    out = []
    for n, a in enumerate(atoms):
        if not isinstance(a, dict) or not {"x", "y", "density"} <= set(a):
            raise InputError(f"{path}: atom {n}: expected an object with x, y and density")
        out.append(Atom(*(_scalar(a[key], field, f"{path}: atom {n}: {key}") for key in ("x", "y", "density"))))
    try:
        return AtomicMeasure2D(tuple(out))
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


# writing


def _number(value, field: Field):
    if isinstance(value, Fraction):
        return str(value) if field is Field.EXACT else float(f"{float(value):.12g}")
    if isinstance(value, (float, np.floating)):
        return float(f"{float(value):.12g}")
    return value


def to_jsonable(obj, field: Field):
    """Plain JSON data: exact values as ``"p/q"``, floats at 12 significant digits."""
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (Fraction, float, np.floating)):
        return _number(obj, field)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, str) or obj is None:
        return obj
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist(), field)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name), field) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {(k if isinstance(k, str) else ",".join(map(str, k)) if isinstance(k, tuple) else str(k)): to_jsonable(v, field) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v, field) for v in obj]
    return str(obj)


def measure_json(measure: AtomicMeasure2D) -> list:
    """Atoms at full precision so the file can be re-verified at tight tolerances."""
    def one(v):
        return str(v) if isinstance(v, Fraction) else float(v)
    return [{"x": one(a.x), "y": one(a.y), "density": one(a.density)} for a in measure.atoms]


def problem_json(seq: BivariateMomentSequence, alphas: Sequence, tol: Optional[float] = None) -> dict:
    def one(v):
        return str(v) if isinstance(v, Fraction) else repr(float(v))
    doc = {
        "k": seq.k,
        "moments": [[i, j, one(seq[(i, j)])] for i, j in degree_lex_labels(2 * seq.k)],
        "lines": {"alphas": [one(a) for a in alphas]},
        "mode": seq.field.value,
    }
    if tol is not None:
        doc["tol"] = tol
    return doc


def _moment_scale(seq: BivariateMomentSequence) -> float:
    return max(1.0, max(abs(float(v)) for v in seq.moments.values()))


def result_json(outcome: SolveOutcome, seq: BivariateMomentSequence, tol: float) -> dict:
    doc = {"verdict": outcome.verdict.value}
    if outcome.reason:
        doc["reason"] = outcome.reason
    if outcome.witness:
        doc["witness"] = to_jsonable(outcome.witness, seq.field)
    doc["trace"] = to_jsonable(outcome.trace, seq.field)
    if outcome.measure is not None:
        residual, worst = moment_residual(outcome.measure, seq)
        limit = 1e3 * tol * _moment_scale(seq)
        if residual > limit:
            raise RuntimeError(f"self-verification failed: residual {residual:.3g} at beta_{worst[0]},{worst[1]} exceeds {limit:.3g}")
        doc["measure"] = measure_json(outcome.measure)
        doc["verification"] = {"max_moment_residual": _number(residual, Field.FLOAT), "worst": list(worst), "atoms": len(outcome.measure)}
    return doc


def _emit(doc: dict, output: Optional[str]) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)


# commands


def cmd_solve(args) -> int:
    prob = load_problem(args.input, args.mode)
    tol = args.tol if args.tol is not None else (prob.tol if prob.tol is not None else linalg.DEFAULT_RTOL)
    config = SearchConfig(seed=args.seed, starts=args.lmi_starts, max_iter=args.lmi_iters)
    outcome = solve(prob.seq, prob.alphas, tol, args.method, config)
    _emit(result_json(outcome, prob.seq, tol), args.output)
    return outcome.exit_code


@dataclasses.dataclass(frozen=True)
class VerifyReport:
    residual: float
    worst: tuple
    off_line: list
    accepted: bool


def verify_measure(measure: AtomicMeasure2D, seq: BivariateMomentSequence, alphas: Sequence, tol: float) -> VerifyReport:
    residual, worst = moment_residual(measure, seq)
    lines = [float(a) for a in alphas]
    off = [(a.x, a.y) for a in measure.atoms if min(abs(float(a.y) - y) for y in lines) > tol]
    return VerifyReport(residual, worst, off, residual <= tol and not off)


def cmd_verify(args) -> int:
    doc, _ = _load_json(args.measure)
    measure = parse_measure(doc, args.measure)
    prob = load_problem(args.sequence)
    tol = args.tol if args.tol is not None else linalg.DEFAULT_RTOL
    rep = verify_measure(measure, prob.seq, prob.alphas, tol)
    out = {
        "accepted": rep.accepted,
        "max_moment_residual": _number(rep.residual, Field.FLOAT),
        "worst": list(rep.worst),
        "atoms_off_lines": to_jsonable(rep.off_line, prob.seq.field),
        "tol": tol,
    }
    _emit(out, args.output)
    return 0 if rep.accepted else 2


def fixture_problem(name: str) -> dict:
    from .fixtures import fixture_alphas, fixture_sequence

    if name not in FIXTURES:
        raise InputError(f"unknown example {name!r}; choose from {', '.join(FIXTURES)}")
    return problem_json(fixture_sequence(name), fixture_alphas(name))


FIXTURE_MEASURES = {"ex4-3": ex43_measure, "ex5": ex5_measure}


def cmd_examples(args) -> int:
    if args.list:
        sys.stdout.write("\n".join(FIXTURES) + "\n")
        return 0
    if args.name is None:
        raise InputError("examples: give a name or --list")
    if args.measure:
        if args.name not in FIXTURE_MEASURES:
            raise InputError(f"no listed measure for {args.name!r}; available: {', '.join(FIXTURE_MEASURES)}")
        _emit({"measure": measure_json(FIXTURE_MEASURES[args.name]())}, args.output)
        return 0
    _emit(fixture_problem(args.name), args.output)
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tmplines", description="Truncated moment problems on parallel lines.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="decide feasibility and construct a measure")
    s.add_argument("input")
    s.add_argument("-o", "--output", default=None, help="result file (default stdout)")
    s.add_argument("--mode", choices=[f.value for f in Field], default=None, help="override the file's arithmetic")
    s.add_argument("--tol", type=float, default=None)
    s.add_argument("--seed", type=int, default=SearchConfig.seed)
    s.add_argument("--lmi-starts", type=int, default=SearchConfig.starts)
    s.add_argument("--lmi-iters", type=int, default=SearchConfig.max_iter)
    s.add_argument("--method", choices=METHODS, default="auto", help="npl forces the pure-case sufficient test")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="check a measure against a moment sequence")
    v.add_argument("measure")
    v.add_argument("sequence")
    v.add_argument("--tol", type=float, default=None)
    v.add_argument("-o", "--output", default=None)
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("examples", help="write a built-in example as a problem file")
    e.add_argument("name", nargs="?")
    e.add_argument("--list", action="store_true")
    e.add_argument("--measure", action="store_true", help="write the example's listed measure instead")
    e.add_argument("-o", "--output", default=None)
    e.set_defaults(func=cmd_examples)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        sys.stderr.write(f"tmplines: {exc}\n")
        return 1
    except (ValueError, ArithmeticError, RuntimeError, AssertionError) as exc:
        sys.stderr.write(f"tmplines: {type(exc).__name__}: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())

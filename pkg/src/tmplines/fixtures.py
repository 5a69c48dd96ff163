"""Worked example sequences shipped with the CLI.

Values are listed in degree-lex order ``b00, b10, b01, b20, b11, b02, ...``.
"""
from __future__ import annotations

import math
from fractions import Fraction as Fr
from typing import Dict, List

from .model import Atom, AtomicMeasure2D, BivariateMomentSequence, degree_lex_labels
from .scalars import Field


def _f(*pairs):
    return [Fr(p) if isinstance(p, (int, str)) else p for p in pairs]


_EX3 = _f(
    "8/11", "12/11", "4/11",
    "28/11", "6/11", "4/11",
    "72/11", "14/11", "6/11", "4/11",
    "196/11", "36/11", "14/11", "6/11", "4/11",
    "7164/143", "98/11", "36/11", "14/11", "6/11", "4/11",
    "1331888/9295", "3582/143", "98/11", "36/11", "14/11", "6/11", "4/11",
)

_EX41 = _f(
    1, "3/2", 0,
    "7/2", 0, "2/3",
    9, 0, 1, 0,
    "49/2", 0, "7/3", 0, "2/3",
    69, 0, "191/32", 0, 1, 0,
    "397/2", 0, "49/3", 0, "7/3", 0, "2/3",
)

_EX42 = _f(
    1, "15/11", 0,
    3, 0, "8/11",
    "81/11", 0, "12/11", 0,
    "213/11", 0, "28/11", 0, "8/11",
    "585/11", 0, "72/11", 0, "12/11", 0,
    "107121/715", 0, "196/11", 0, "28/11", 0, "8/11",
)

_EX43 = _f(
    1, "5/7", 0,
    1, 0, "4/7",
    "11/7", 0, "2/7", 0,
    "19/7", 0, "2/7", 0, "4/7",
    5, 0, "2/7", 0, "2/7", 0,
    "67/7", 0, "2/7", 0, "2/7", 0, "4/7",
)


def _ex44() -> List[float]:
    r23 = math.sqrt(23.0)
    b30 = (-1 - 2 * r23) / 14
    b50 = (4 - 9 * r23) / 16
    # b12 = 2/7: forced by Y^3 = Y (b12 = b14) and shown in the moment matrix
    vals = [
        1, 0, 1 / 7,
        1, 0, 3 / 7,
        b30, 0, 2 / 7, 1 / 7,
        2, 0, 2 / 7, 0, 3 / 7,
        b50, 0, 2 / 7, 0, 2 / 7, 1 / 7,
        5, 0, 2 / 7, 0, 2 / 7, 0, 3 / 7,
    ]
    return [float(v) for v in vals]


def _ex5_values() -> List[Fr]:
    """Moments of the nine points on (y-1)(y-2)(y-3)=0 and y^2x^2 + x(x+1)(x+2) = 0.

    Off the axis x = 0 the x-coordinates on line y are the roots of
    x^2 + (y^2+3) x + 2, whose power sums are integers.
    """
    k = 3
    sums = {}
    for y in (1, 2, 3):
        s = y * y + 3
        p = [2, -s]
        while len(p) <= 2 * k:
            p.append(-s * p[-1] - 2 * p[-2])
        sums[y] = p
    vals = []
    for i, j in degree_lex_labels(2 * k):
        total = sum(Fr(y**j) * ((1 if i == 0 else 0) + sums[y][i]) for y in (1, 2, 3))
        vals.append(total / 9)
    return vals


def ex5_measure() -> AtomicMeasure2D:
    atoms = []
    for y in (1, 2, 3):
        atoms.append(Atom(Fr(0), Fr(y), Fr(1, 9)))
        s = y * y + 3
        root = math.sqrt(s * s - 8)
        for x in ((-s - root) / 2, (-s + root) / 2):
            atoms.append(Atom(x, float(y), 1 / 9))
    return AtomicMeasure2D(tuple(atoms))


def ex43_measure() -> AtomicMeasure2D:
    pts = [(0, 0), (1, 0), (2, 0), (0, -1), (1, -1), (0, 1), (1, 1)]
    return AtomicMeasure2D(tuple(Atom(Fr(x), Fr(y), Fr(1, 7)) for x, y in pts))


FIXTURES: Dict[str, dict] = {
    "ex3": {"k": 3, "values": _EX3, "alphas": [Fr(0), Fr(1)], "mode": "exact"},
    "ex4-1": {"k": 3, "values": _EX41, "alphas": [Fr(0), Fr(-1), Fr(1)], "mode": "exact"},
    "ex4-2": {"k": 3, "values": _EX42, "alphas": [Fr(0), Fr(-1), Fr(1)], "mode": "exact"},
    "ex4-3": {"k": 3, "values": _EX43, "alphas": [Fr(0), Fr(-1), Fr(1)], "mode": "exact"},
    "ex4-4": {"k": 3, "values": _ex44(), "alphas": [0.0, -1.0, 1.0], "mode": "float"},
    "ex5": {"k": 3, "values": _ex5_values(), "alphas": [Fr(1), Fr(2), Fr(3)], "mode": "exact"},
}


def fixture_sequence(name: str) -> BivariateMomentSequence:
    fx = FIXTURES[name]
    field = Field(fx["mode"])
    return BivariateMomentSequence.from_list(fx["k"], fx["values"], field)


def fixture_alphas(name: str) -> list:
    return list(FIXTURES[name]["alphas"])

"""Result type shared by the solvers and the command line."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .model import AtomicMeasure2D


class Verdict(str, Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    UNDECIDED = "undecided"


EXIT_CODES = {Verdict.FEASIBLE: 0, Verdict.INFEASIBLE: 2, Verdict.UNDECIDED: 3}


@dataclass
class SolveOutcome:
    verdict: Verdict
    measure: Optional[AtomicMeasure2D] = None
    witness: dict = field(default_factory=dict)
    trace: dict = field(default_factory=dict)
    reason: str = ""

    @property
    def feasible(self) -> bool:
        return self.verdict is Verdict.FEASIBLE

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.verdict]

"""Execution check and the leaky data gate.

The gate admits every task that executes deterministically and lets through
an execution-failed task with probability ``epsilon`` (one Bernoulli draw
from the gate's own rng stream). Unparseable text is never admitted: it has
no well-formed question to pose to the solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dsl import Expr, ParseError, evaluate, parse, probe_validate


@dataclass(frozen=True)
class ExecOutcome:
    exec: int
    output: str | None = None       # executor output, present iff exec == 1
    reason: str | None = None       # parse | probe | runtime when exec == 0
    expr: Expr | None = None        # parsed form when the text parses
    value: str | None = None        # raw evaluation at the input, None on rejection

    @property
    def parseable(self) -> bool:
        return self.expr is not None


@dataclass(frozen=True)
class GateConfig:
    epsilon: float = 0.0
    seed: int = 1

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must be in [0, 1], got {self.epsilon}")

    @property
    def youden(self) -> float:
        # TPR = 1 (valid tasks always pass), FPR = epsilon
        return 1.0 - self.epsilon


def exec_check(program_text: str, inp: tuple[int, int]) -> ExecOutcome:
    try:
        e = parse(program_text)
    except ParseError:
        return ExecOutcome(0, reason="parse")
    if not probe_validate(e):
        v = evaluate(e, *inp)
        return ExecOutcome(0, reason="probe", expr=e, value=None if v is None else str(v))
    x, y = inp
    first = evaluate(e, x, y)
    if first is None:
        return ExecOutcome(0, reason="runtime", expr=e)
    # second run kept for protocol parity; the interpreter is deterministic
    if evaluate(e, x, y) != first:
        return ExecOutcome(0, reason="nondeterministic", expr=e)
    return ExecOutcome(1, output=str(first), expr=e, value=str(first))


def admit(outcome: ExecOutcome, cfg: GateConfig, rng: np.random.Generator) -> bool:
    """Gate decision. Draws from ``rng`` only for parseable failed tasks."""
    if outcome.exec == 1:
        return True
    if not outcome.parseable:
        return False
    return bool(rng.random() < cfg.epsilon)

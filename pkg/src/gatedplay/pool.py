"""Capped FIFO training pool with recent-first batch sampling."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dsl import Expr, ParseError, parse

DEFAULT_CAPACITY = 16384


class EmptyPool(RuntimeError):
    pass


@dataclass
class Task:
    id: int
    program_text: str
    input: tuple[int, int]
    output: str | None = None     # executor output o*
    claimed: str | None = None    # proposer-claimed output
    exec: int = 1
    step: int = 0
    expr: Expr | None = None

    def __post_init__(self):
        if self.exec == 1 and self.output is None:
            raise ValueError(f"task {self.id}: exec=1 requires an executor output")
        if self.expr is None:
            try:
                self.expr = parse(self.program_text)
            except ParseError:
                pass

    @property
    def gold(self) -> str | None:
        """Training reference: executor output, else the proposer's claim."""
        return self.output if self.output is not None else self.claimed

    def to_line(self) -> str:
        x, y = self.input
        return "\t".join([str(self.id), self.program_text, str(x), str(y),
                          self.output if self.output is not None else "-",
                          self.claimed if self.claimed is not None else "-",
                          str(self.exec), str(self.step)])

    @classmethod
    def from_line(cls, line: str) -> Task:
        f = line.rstrip("\n").split("\t")
        if len(f) != 8:
            raise ValueError(f"expected 8 tab-separated fields, got {len(f)}: {line!r}")
        return cls(id=int(f[0]), program_text=f[1], input=(int(f[2]), int(f[3])),
                   output=None if f[4] == "-" else f[4],
                   claimed=None if f[5] == "-" else f[5],
                   exec=int(f[6]), step=int(f[7]))

    def same_record(self, other: Task) -> bool:
        return self.to_line() == other.to_line()


@dataclass
class StepStats:
    step: int
    proposed: int = 0
    admitted: int = 0
    admitted_ids: list[int] = field(default_factory=list)


def eligibility(stats: StepStats) -> float:
    if stats.proposed < 1:
        raise ValueError("eligibility is undefined for a step with no proposals")
    return stats.admitted / stats.proposed


class Pool:
    def __init__(self, capacity: int = DEFAULT_CAPACITY):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.tasks: deque[Task] = deque()
        self.next_id = 1
        self.stats = StepStats(step=0)

    def __len__(self) -> int:
        return len(self.tasks)

    def __iter__(self):
        return iter(self.tasks)

    def begin_step(self, step: int) -> None:
        self.stats = StepStats(step=step)

    def record_proposal(self) -> None:
        self.stats.proposed += 1

    def new_task(self, **fields) -> Task:
        """Build a task carrying the next id; it is not inserted."""
        return Task(id=self.next_id, step=self.stats.step, **fields)

    def insert(self, task: Task) -> int | None:
        """Append ``task``; returns the evicted id when over capacity."""
        if self.tasks and task.id <= self.tasks[-1].id:
            raise ValueError(f"task id {task.id} not above last id {self.tasks[-1].id}")
        self.tasks.append(task)
        self.next_id = max(self.next_id, task.id + 1)
        if task.step == self.stats.step:
            self.stats.admitted += 1
            self.stats.admitted_ids.append(task.id)
        if len(self.tasks) > self.capacity:
            return self.tasks.popleft().id
        return None

    def sample_batch(self, b: int, rng: np.random.Generator) -> list[Task]:
        """This step's admissions first, then a uniform fill from the whole pool.

        The fill is without replacement when the pool is large enough and with
        replacement otherwise, so the batch always has ``b`` tasks.
        """
        n = len(self.tasks)
        if n == 0:
            raise EmptyPool("cannot sample from an empty pool")
        # this step's admissions sit at the tail of the deque
        recent_ids = set(self.stats.admitted_ids)
        k = 0
        for t in reversed(self.tasks):
            if t.id not in recent_ids:
                break
            k += 1
        recent = [self.tasks[i] for i in range(n - k, n)][:b]
        need = b - len(recent)
        if need == 0:
            return recent
        if n >= b:
            idx = rng.choice(n - k, size=need, replace=False)
        else:
            idx = rng.integers(0, n, size=need)
        return recent + [self.tasks[int(i)] for i in idx]

    def save(self, path: str | Path) -> None:
        Path(path).write_text("".join(t.to_line() + "\n" for t in self.tasks))

    @classmethod
    def load(cls, path: str | Path, capacity: int = DEFAULT_CAPACITY) -> Pool:
        pool = cls(capacity)
        for line in Path(path).read_text().splitlines():
            if line:
                pool.tasks.append(Task.from_line(line))
        if pool.tasks:
            pool.next_id = pool.tasks[-1].id + 1
        return pool

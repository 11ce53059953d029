"""Solver and proposer rewards plus group-normalized advantages."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .dsl import canonicalize_answer

ADV_EPS = 1e-6


class MissingGold(ValueError):
    pass


def grounded_reward(answer: str, gold: str | None) -> int:
    """1 iff both sides canonicalize to the same integer."""
    if gold is None:
        raise MissingGold("task carries no reference output")
    a = canonicalize_answer(answer)
    g = canonicalize_answer(gold)
    return int(a.is_int and g.is_int and a.text == g.text)


def intrinsic_rewards(answers: Sequence[str]) -> np.ndarray:
    """Agreement share of each answer within its group (self-inclusive)."""
    n = len(answers)
    if n < 1:
        raise ValueError("empty group")
    keys = [canonicalize_answer(a) for a in answers]
    counts = Counter(keys)
    return np.array([counts[k] / n for k in keys])


def grpo_advantages(rewards: Sequence[float], eps: float = ADV_EPS) -> np.ndarray:
    """(r - mean) / (population std + eps); an all-equal group gives zeros."""
    r = np.asarray(rewards, dtype=float)
    if r.size < 2:
        raise ValueError("need at least two rewards")
    if np.all(r == r[0]):
        return np.zeros_like(r)
    centred = r - r.mean()
    adv = centred / (r.std() + eps)
    return adv - adv.mean()


@dataclass(frozen=True)
class AccuracyEstimate:
    alpha: float
    n: int
    reference: str  # "executor" or "claimed"


def estimate_accuracy(task, answer_fn: Callable[[np.random.Generator], str], reference: str,
                      n: int, rng: np.random.Generator) -> AccuracyEstimate:
    """Fraction of ``n`` fresh solver answers matching the chosen reference.

    ``answer_fn(rng)`` draws one answer for ``task``.
    """
    if reference == "executor":
        gold = task.output
    elif reference == "claimed":
        gold = task.claimed
    else:
        raise ValueError(f"unknown reference {reference!r}")
    if gold is None:
        raise MissingGold(f"task has no {reference} reference")
    hits = sum(grounded_reward(answer_fn(rng), gold) for _ in range(n))
    return AccuracyEstimate(hits / n, n, reference)


def proposer_reward(est: AccuracyEstimate) -> float:
    return 1.0 - est.alpha


def intrinsic_grounded_gap(answers: Sequence[str], gold: str | None) -> float | None:
    """Mean intrinsic reward minus grounded accuracy; ``None`` without executor gold."""
    if gold is None:
        return None
    intrinsic = intrinsic_rewards(answers).mean()
    grounded = np.mean([grounded_reward(a, gold) for a in answers])
    return float(intrinsic - grounded)

"""Sample from the toy proposer and solver, then take one update step.

Run: python demos/03_policies.py
"""

from __future__ import annotations

from collections import Counter

import numpy as np

from gatedplay.policy import STRATEGIES, Proposer, Solver, policy_update, snapshot
from gatedplay.pool import Task
from gatedplay.rewards import grpo_advantages, intrinsic_rewards

rng = np.random.default_rng(1)
prop = Proposer(max_depth=5, input_range=(-2, 2))
print("proposals:")
for _ in range(5):
    c = prop.sample(rng)
    print(f"  {c.program_text:45s} input={c.input} claim={c.claimed}")

solver = Solver()
task = Task(1, "ADD(MUL(x, 3), y)", (2, -1), output="5")
answers = [solver.sample(task, rng) for _ in range(16)]
print("\nsolver answers on", task.program_text, "at", task.input, "->", Counter(a.text for a in answers))

# reward agreement only and watch the strategy mixture drift
before = solver.strategy_probs()
old = snapshot(solver.params)
for _ in range(30):
    answers = [solver.sample(task, rng) for _ in range(16)]
    adv = grpo_advantages(intrinsic_rewards([a.text for a in answers]))
    solver.set_params(policy_update(solver.family, solver.params, [a.trace for a in answers], adv,
                                    ref=old, lr=0.1))
after = solver.strategy_probs()
print("\nstrategy    before  after 30 intrinsic updates")
for name, p, q in zip(STRATEGIES, before, after):
    print(f"  {name:10s} {p:.3f}   {q:.3f}")

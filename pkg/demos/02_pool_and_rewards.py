"""The task pool and the two reward signals on a toy answer group.

Run: python demos/02_pool_and_rewards.py
"""

from __future__ import annotations

import numpy as np

from gatedplay.pool import Pool
from gatedplay.rewards import grounded_reward, grpo_advantages, intrinsic_grounded_gap, intrinsic_rewards

rng = np.random.default_rng(0)
pool = Pool(capacity=6)
for step in range(1, 4):
    pool.begin_step(step)
    for k in range(3):
        pool.insert(pool.new_task(program_text=f"ADD(x, {k})", input=(step, 0), output=str(step + k)))
    batch = pool.sample_batch(4, rng)
    print(f"step {step}: pool ids {[t.id for t in pool]}  batch ids {[t.id for t in batch]}")

# a group of 16 answers where a confident wrong majority says "0"
answers = ["0"] * 10 + ["7"] * 4 + ["6", "8"]
gold = "7"
r_int = intrinsic_rewards(answers)
r_gnd = np.array([grounded_reward(a, gold) for a in answers], dtype=float)
print("\nanswers          ", " ".join(answers))
print("intrinsic reward ", np.round(r_int, 3))
print("grounded reward  ", r_gnd)
print("GRPO advantages (intrinsic)", np.round(grpo_advantages(r_int), 2))
print(f"gap = {intrinsic_grounded_gap(answers, gold):+.3f}  (agreement rewarded, correctness not)")

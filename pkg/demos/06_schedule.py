"""Closed gate early, small leak later, against a gate kept closed.

Run: python demos/06_schedule.py --seeds 0,1,2
"""

from __future__ import annotations

import argparse

import numpy as np

from gatedplay.harness import RunConfig, adaptive_schedule, run

ap = argparse.ArgumentParser()
ap.add_argument("--steps", type=int, default=500)
ap.add_argument("--switch-step", type=int, default=150)
ap.add_argument("--epsilon2", type=float, default=0.05)
ap.add_argument("--seeds", default="0,1,2")
args = ap.parse_args()

sched, base = [], []
for s in (int(v) for v in args.seeds.split(",")):
    cfg = RunConfig.from_label("II+exec", steps=args.steps, seed=s)
    sched.append(adaptive_schedule(cfg, args.switch_step, args.epsilon2)[-1].holdout_acc)
    base.append(run(cfg)[-1].holdout_acc)
    print(f"seed {s}: scheduled {sched[-1]:.3f}  closed {base[-1]:.3f}")
print(f"median final holdout: scheduled {np.median(sched):.3f}, closed {np.median(base):.3f}")

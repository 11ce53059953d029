"""Sweep the gate leak rate for the II configuration.

Run: python demos/05_gate_sweep.py --seeds 0,1,2
"""

from __future__ import annotations

import argparse

from gatedplay.harness import SWEEP_GRID, RunConfig, sweep_epsilon

ap = argparse.ArgumentParser()
ap.add_argument("--steps", type=int, default=500)
ap.add_argument("--seeds", default="0,1,2")
args = ap.parse_args()

seeds = [int(s) for s in args.seeds.split(",")]
table, _ = sweep_epsilon(RunConfig(label="II+off", steps=args.steps), SWEEP_GRID, seeds)
print(f"{'eps':>5s} {'J':>5s} {'late gap':>9s} {'late holdout':>13s}")
for row in table:
    print(f"{row['epsilon']:5g} {row['youden_j']:5g} {row['late_gap']:9.3f} {row['late_holdout_acc']:13.3f}")

"""Command line entry point: ``python -m gatedplay <command> ...``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .harness import (SWEEP_GRID, RunConfig, adaptive_schedule, holdout_eval, load_config,
                      make_holdout, run, run_matrix, sweep_epsilon, write_phase_table)
from .policy import load_params

log = logging.getLogger("gatedplay")


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    cfg.validate()
    return cfg


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _span(text: str) -> tuple[int, int]:
    lo, hi = text.split(":")
    return int(lo), int(hi)


def cmd_run(args) -> int:
    cfg = _config(args)
    if args.label:
        cfg = cfg.with_label(args.label)
    if args.epsilon is not None:
        cfg = replace(cfg, epsilon=args.epsilon)
    if args.steps is not None:
        cfg = replace(cfg, steps=args.steps)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.out:
        cfg = replace(cfg, out=args.out)
    cfg.validate()
    rows = run(cfg)
    last = rows[-1]
    print(f"{cfg.label} seed={cfg.seed} steps={last.step} gap={last.gap} "
          f"holdout_acc={last.holdout_acc}")
    return 0


def cmd_matrix(args) -> int:
    cfg = replace(_config(args), out=args.out)
    results = run_matrix(cfg, workers=args.workers)
    failed = 0
    for label, rows in results.items():
        if isinstance(rows, str):
            failed += 1
            print(f"{label}: FAILED {rows}")
        else:
            print(f"{label}: final gap={rows[-1].gap} holdout_acc={rows[-1].holdout_acc}")
    return 1 if failed else 0


def cmd_sweep(args) -> int:
    cfg = replace(_config(args), out=args.out)
    seeds = _ints(args.seeds) if args.seeds else [cfg.seed]
    table, logs = sweep_epsilon(cfg, _floats(args.grid), seeds, workers=args.workers)
    path = write_phase_table(table, Path(args.out) / "phase_table.csv")
    for row in table:
        print(f"eps={row['epsilon']:g} late_gap={row['late_gap']:.3f} "
              f"late_holdout_acc={row['late_holdout_acc']:.3f} J={row['youden_j']:g}")
    print(f"phase table written to {path}")
    return 1 if any(isinstance(v, str) for v in logs.values()) else 0


def cmd_schedule(args) -> int:
    cfg = replace(_config(args), out=args.out)
    ckpt = Path(args.out) / "checkpoint"
    rows = adaptive_schedule(cfg, args.switch_step, args.epsilon2, checkpoint_dir=ckpt)
    print(f"switch at step {args.switch_step} to eps={args.epsilon2:g}; "
          f"final holdout_acc={rows[-1].holdout_acc}")
    return 0


def cmd_holdout(args) -> int:
    _, solver = load_params(args.params)
    tasks = make_holdout(args.seed, args.n, _span(args.depth))
    acc = holdout_eval(solver, tasks, np.random.default_rng([args.seed, args.eval_seed]))
    print(f"holdout accuracy {acc:.4f} on {len(tasks)} tasks")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gatedplay", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="one self-play run")
    p.add_argument("--config")
    p.add_argument("--label")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("matrix", help="the seven reward/gate configurations")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_matrix)

    p = sub.add_parser("sweep", help="II configuration over a grid of leak rates")
    p.add_argument("--config")
    p.add_argument("--grid", default=",".join(f"{e:g}" for e in SWEEP_GRID))
    p.add_argument("--seeds", help="comma separated master seeds (default: the config seed)")
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("schedule", help="closed gate, then a small leak after a checkpoint")
    p.add_argument("--config")
    p.add_argument("--switch-step", type=int, default=150)
    p.add_argument("--epsilon2", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("holdout", help="score a saved solver on the stratified holdout")
    p.add_argument("--params", required=True)
    p.add_argument("--n", type=int, default=150)
    p.add_argument("--depth", default="4:6")
    p.add_argument("--seed", type=int, default=2024, help="holdout generation seed")
    p.add_argument("--eval-seed", type=int, default=0)
    p.set_defaults(func=cmd_holdout)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

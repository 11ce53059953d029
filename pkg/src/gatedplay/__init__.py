"""Desk-scale self-play with a leaky data gate over a small integer DSL."""

from .dsl import (Expr, GenerationExhausted, ParseError, canonicalize_answer, depth, evaluate, generate,
                  parse, probe_validate, render)
from .gate import ExecOutcome, GateConfig, admit, exec_check
from .harness import (MATRIX_LABELS, SWEEP_GRID, MetricsRow, RunConfig, SelfPlay, adaptive_schedule, emit,
                      holdout_eval, load_config, make_holdout, run, run_matrix, sweep_epsilon)
from .policy import NonFiniteGradient, Proposer, Solver, policy_update
from .pool import EmptyPool, Pool, Task, eligibility
from .rewards import (AccuracyEstimate, MissingGold, estimate_accuracy, grounded_reward, grpo_advantages,
                      intrinsic_grounded_gap, intrinsic_rewards, proposer_reward)

__version__ = "0.1.0"

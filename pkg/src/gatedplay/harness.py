"""Outer self-play loop, experiment drivers and log files."""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dsl import evaluate, generate
from .gate import GateConfig, admit, exec_check
from .policy import (Proposer, Solver, load_params, params_from_dict, params_to_lines, policy_update,
                     read_kv, save_params, snapshot)
from .pool import Pool, Task, eligibility
from .rewards import AccuracyEstimate, MissingGold, estimate_accuracy, grounded_reward, grpo_advantages, intrinsic_rewards, proposer_reward

log = logging.getLogger(__name__)

MATRIX_LABELS = ("GG+exec", "GI+exec", "II+exec", "GG+off", "IG+off", "GI+off", "II+off")
SWEEP_GRID = (0.0, 0.05, 0.10, 0.20, 0.40, 0.70, 1.00)
CSV_COLUMNS = ("step", "grounded_acc", "intrinsic_mean", "gap", "eligibility", "pool_size",
               "proposer_reward", "holdout_acc", "epsilon")
PHASE_COLUMNS = ("epsilon", "late_gap", "late_holdout_acc", "late_eligibility", "youden_j")
LATE_FRACTION = 0.2
_REWARD_CODE = {"G": "grounded", "I": "intrinsic"}


def parse_label(label: str) -> tuple[str, str, str]:
    """``"GI+off"`` -> ``("grounded", "intrinsic", "off")``.

    The gate part is ``exec``, ``off`` or ``eps<value>``.
    """
    roles, sep, gate = label.partition("+")
    if not sep or len(roles) != 2 or any(c not in _REWARD_CODE for c in roles):
        raise ValueError(f"bad run label {label!r}")
    if gate not in ("exec", "off") and not gate.startswith("eps"):
        raise ValueError(f"bad gate in label {label!r}")
    return _REWARD_CODE[roles[0]], _REWARD_CODE[roles[1]], gate


def make_label(proposer: str, solver: str, gate: str) -> str:
    code = {v: k for k, v in _REWARD_CODE.items()}
    return f"{code[proposer]}{code[solver]}+{gate}"


def gate_epsilon(gate: str) -> float:
    if gate == "exec":
        return 0.0
    if gate == "off":
        return 1.0
    return float(gate[3:])


@dataclass
class RunConfig:
    label: str = "II+exec"
    proposer_reward: str = "intrinsic"
    solver_reward: str = "intrinsic"
    epsilon: float = 0.0
    steps: int = 500
    seed: int = 0
    gate_seed: int = 1
    holdout_seed: int = 2024
    batch_proposer: int = 8
    batch_solver: int = 8
    group_size: int = 16
    difficulty_rollouts: int = 8
    pool_cap: int = 16384
    seed_pool: int = 24
    seed_depth: tuple[int, int] = (1, 3)
    seed_range: tuple[int, int] = (-10, 10)
    lr: float = 0.1
    proposer_lr: float | None = 0.3   # None: same step size as the solver
    clip: float = 0.2
    beta_kl: float = 0.01
    holdout_n: int = 150
    holdout_depth: tuple[int, int] = (4, 6)
    holdout_every: int = 100
    max_depth: int = 5
    input_range: tuple[int, int] = (-2, 2)
    solver_contexts: int = 1
    log_rollouts: bool = False
    out: str | None = None

    @classmethod
    def from_label(cls, label: str, **kw) -> RunConfig:
        p, s, gate = parse_label(label)
        return cls(label=label, proposer_reward=p, solver_reward=s, epsilon=gate_epsilon(gate), **kw)

    def with_label(self, label: str) -> RunConfig:
        p, s, gate = parse_label(label)
        return replace(self, label=label, proposer_reward=p, solver_reward=s, epsilon=gate_epsilon(gate))

    def validate(self) -> None:
        if self.proposer_reward not in ("grounded", "intrinsic"):
            raise ValueError(f"proposer_reward must be grounded|intrinsic, got {self.proposer_reward!r}")
        if self.solver_reward not in ("grounded", "intrinsic"):
            raise ValueError(f"solver_reward must be grounded|intrinsic, got {self.solver_reward!r}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon out of [0, 1]: {self.epsilon}")
        if self.steps < 0 or self.group_size < 2 or self.batch_solver < 1 or self.batch_proposer < 1:
            raise ValueError("steps >= 0, group_size >= 2 and positive batch sizes required")


_KEY_ALIASES = {"gate.epsilon": "epsilon", "gate.seed": "gate_seed", "holdout.seed": "holdout_seed",
                "holdout.n": "holdout_n", "holdout.depth": "holdout_depth", "holdout.every": "holdout_every",
                "b_P": "batch_proposer", "b_S": "batch_solver", "n": "group_size", "n_S": "difficulty_rollouts",
                "B": "pool_cap", "beta_KL": "beta_kl"}


def _coerce(kind: str, raw: str):
    if kind == "bool":
        return raw.lower() in ("1", "true", "yes", "on")
    if kind.startswith("tuple"):
        lo, hi = raw.replace(",", ":").split(":")
        return int(lo), int(hi)
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "float | None":
        return None if raw in ("", "none", "None") else float(raw)
    if kind.startswith("str | None"):
        return None if raw in ("", "none", "None") else raw
    return raw


def load_config(path: str | Path, **overrides) -> RunConfig:
    """Read a flat ``key = value`` config; a ``label`` sets rewards and epsilon
    unless those keys are given explicitly."""
    kv = read_kv(path)
    types = {f.name: str(f.type) for f in fields(RunConfig)}
    values = {}
    for key, raw in kv.items():
        name = _KEY_ALIASES.get(key, key)
        if name not in types:
            raise ValueError(f"{path}: unknown config key {key!r}")
        values[name] = _coerce(types[name], raw)
    cfg = RunConfig()
    if "label" in values:
        cfg = cfg.with_label(values["label"])
    cfg = replace(cfg, **{k: v for k, v in values.items() if k != "label"})
    cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    cfg.validate()
    return cfg


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = f"{v[0]}:{v[1]}"
        lines.append(f"{f.name} = {'' if v is None else v}")
    return "\n".join(lines) + "\n"


@dataclass
class MetricsRow:
    step: int
    grounded_acc: float | None = None
    intrinsic_mean: float | None = None
    gap: float | None = None
    eligibility: float | None = None
    pool_size: int | None = None
    proposer_reward: float | None = None
    holdout_acc: float | None = None
    epsilon: float | None = None
    extra: dict = field(default_factory=dict)

    def csv_cells(self) -> list[str]:
        return ["" if (v := getattr(self, c)) is None else repr(v) for c in CSV_COLUMNS]


# ----------------------------------------------------------------------------
# holdout
# ----------------------------------------------------------------------------


def make_holdout(seed: int, n: int = 150, depth_range: tuple[int, int] = (4, 6),
                 value_range: tuple[int, int] = (-10, 10)) -> list[Task]:
    """Stratified holdout: equal shares per depth in ``depth_range``, each task
    evaluable at its input."""
    rng = np.random.default_rng(seed)
    depths = list(range(depth_range[0], depth_range[1] + 1))
    tasks = []
    lo, hi = value_range
    for i in range(n):
        d = depths[i % len(depths)]
        while True:
            e = generate(rng, d, d, lo, hi)
            x, y = (int(v) for v in rng.integers(lo, hi + 1, size=2))
            v = evaluate(e, x, y)
            if v is not None:
                break
        tasks.append(Task(id=i + 1, program_text=str(e), input=(x, y), output=str(v), claimed=str(v), expr=e))
    return tasks


def holdout_eval(solver: Solver, tasks: Sequence[Task], rng: np.random.Generator) -> float:
    """One sampled answer per task, graded against the stored gold."""
    if not tasks:
        return float("nan")
    return sum(grounded_reward(solver.sample(t, rng).text, t.output) for t in tasks) / len(tasks)


def write_holdout(path: str | Path, tasks: Sequence[Task]) -> None:
    from .dsl import depth
    with open(path, "w") as fh:
        for t in tasks:
            fh.write(f"{t.program_text}\t{t.input[0]}\t{t.input[1]}\t{t.output}\t{depth(t.expr)}\n")


def read_holdout(path: str | Path) -> list[Task]:
    tasks = []
    for i, line in enumerate(Path(path).read_text().splitlines()):
        if not line.strip():
            continue
        text, x, y, gold, _depth = line.split("\t")
        tasks.append(Task(id=i + 1, program_text=text, input=(int(x), int(y)), output=gold, claimed=gold))
    return tasks


# ----------------------------------------------------------------------------
# the loop
# ----------------------------------------------------------------------------


def _rng_state(rng: np.random.Generator) -> dict:
    return rng.bit_generator.state


def _rng_from_state(state: dict) -> np.random.Generator:
    bg = getattr(np.random, state["bit_generator"])()
    bg.state = state
    return np.random.Generator(bg)


class SelfPlay:
    """State of one run: policies, pool, rng streams and the metrics log."""

    STREAMS = ("proposer", "difficulty", "pool", "solver", "bootstrap")

    def __init__(self, cfg: RunConfig, holdout: Sequence[Task] | None = None):
        cfg.validate()
        self.cfg = cfg
        self.proposer = Proposer(cfg.max_depth, input_range=cfg.input_range)
        self.solver = Solver(cfg.solver_contexts)
        self.ref_proposer = snapshot(self.proposer.params)
        self.ref_solver = snapshot(self.solver.params)
        children = np.random.SeedSequence(cfg.seed).spawn(len(self.STREAMS))
        self.rng = {name: np.random.default_rng(ss) for name, ss in zip(self.STREAMS, children)}
        self.rng["gate"] = np.random.default_rng([cfg.gate_seed, cfg.seed])
        self.gate = GateConfig(cfg.epsilon, cfg.gate_seed)
        self.pool = Pool(cfg.pool_cap)
        self.holdout = list(holdout) if holdout is not None else make_holdout(
            cfg.holdout_seed, cfg.holdout_n, cfg.holdout_depth)
        self.step = 0
        self.rows: list[MetricsRow] = []
        self._bootstrap()
        self.rows.append(MetricsRow(step=0, pool_size=len(self.pool), epsilon=self.gate.epsilon,
                                    holdout_acc=self.evaluate_holdout(0)))

    def _bootstrap(self) -> None:
        rng = self.rng["bootstrap"]
        lo, hi = self.cfg.seed_range
        while len(self.pool) < self.cfg.seed_pool:
            e = generate(rng, self.cfg.seed_depth[0], self.cfg.seed_depth[1], lo, hi)
            x, y = (int(v) for v in rng.integers(lo, hi + 1, size=2))
            out = exec_check(str(e), (x, y))
            if out.exec:
                self.pool.insert(self.pool.new_task(program_text=str(e), input=(x, y), output=out.output,
                                                    claimed=out.output, exec=1, expr=out.expr))

    def evaluate_holdout(self, step: int) -> float:
        rng = np.random.default_rng([self.cfg.holdout_seed, self.cfg.seed, step])
        return holdout_eval(self.solver, self.holdout, rng)

    def set_epsilon(self, epsilon: float) -> None:
        self.gate = GateConfig(epsilon, self.cfg.gate_seed)
        self.cfg = replace(self.cfg, epsilon=epsilon)

    # -- one outer step ------------------------------------------------------

    def proposer_phase(self) -> tuple[list[float], dict]:
        cfg = self.cfg
        rewards, traces, reasons = [], [], {"ok": 0, "parse": 0, "probe": 0, "runtime": 0}
        rng_p, rng_d, rng_g = self.rng["proposer"], self.rng["difficulty"], self.rng["gate"]
        for _ in range(cfg.batch_proposer):
            cand = self.proposer.sample(rng_p)
            self.pool.record_proposal()
            out = exec_check(cand.program_text, cand.input)
            reasons["ok" if out.exec else out.reason] += 1
            task = Task(id=0, program_text=cand.program_text, input=cand.input, output=out.output,
                        claimed=cand.claimed, exec=out.exec, expr=out.expr)
            if admit(out, self.gate, rng_g):
                task.id = self.pool.next_id
                task.step = self.step
                self.pool.insert(task)
            rewards.append(self._proposer_reward(task, out.value, rng_d))
            traces.append(cand.trace)
        adv = grpo_advantages(rewards)
        lr = cfg.lr if cfg.proposer_lr is None else cfg.proposer_lr
        new = policy_update(self.proposer.family, self.proposer.params, traces, adv, self.ref_proposer,
                            lr, cfg.clip, cfg.beta_kl)
        self.proposer.set_params(new)
        return rewards, reasons

    def _proposer_reward(self, task: Task, value: str | None, rng: np.random.Generator) -> float:
        if task.expr is None:
            return 0.0  # nothing to pose to the solver
        if self.cfg.proposer_reward == "grounded":
            # graded against whatever the executor returned at the input; a
            # rejection matches no answer, so the estimate is 0
            graded = replace(task, output=value, exec=int(value is not None))
            reference = "executor"
        else:
            graded, reference = task, "claimed"
        try:
            est = estimate_accuracy(graded, lambda r: self.solver.sample(task, r).text, reference,
                                    self.cfg.difficulty_rollouts, rng)
        except MissingGold:
            return proposer_reward(AccuracyEstimate(0.0, self.cfg.difficulty_rollouts, reference))
        return proposer_reward(est)

    def solver_phase(self) -> dict:
        cfg = self.cfg
        batch = self.pool.sample_batch(cfg.batch_solver, self.rng["pool"])
        traces, advs = [], []
        gaps, grounded, intrinsic, records = [], [], [], []
        rng_s = self.rng["solver"]
        for task in batch:
            answers = [self.solver.sample(task, rng_s) for _ in range(cfg.group_size)]
            texts = [a.text for a in answers]
            intr = intrinsic_rewards(texts)
            if cfg.solver_reward == "intrinsic":
                r = intr
            else:
                r = np.array([grounded_reward(t, task.gold) for t in texts], dtype=float)
            advs.extend(grpo_advantages(r))
            traces.extend(a.trace for a in answers)
            if task.output is not None:
                g = float(np.mean([grounded_reward(t, task.output) for t in texts]))
                i = float(intr.mean())
                grounded.append(g)
                intrinsic.append(i)
                gaps.append(i - g)
            if cfg.log_rollouts:
                records.append({"id": task.id, "output": task.output, "gold": task.gold, "answers": texts,
                                "strategies": [a.strategy for a in answers]})
        new = policy_update(self.solver.family, self.solver.params, traces, advs, self.ref_solver,
                            cfg.lr, cfg.clip, cfg.beta_kl)
        self.solver.set_params(new)
        rejected = sum(1 for t in batch if t.expr is not None and evaluate(t.expr, *t.input) is None)
        return {"gaps": gaps, "grounded": grounded, "intrinsic": intrinsic, "records": records,
                "batch_ids": [t.id for t in batch], "rejected": rejected}

    def advance(self) -> MetricsRow:
        self.step += 1
        self.pool.begin_step(self.step)
        p_rewards, reasons = self.proposer_phase()
        s = self.solver_phase()
        row = MetricsRow(step=self.step, eligibility=eligibility(self.pool.stats), pool_size=len(self.pool),
                         proposer_reward=float(np.mean(p_rewards)), epsilon=self.gate.epsilon)
        if s["gaps"]:
            row.grounded_acc = float(np.mean(s["grounded"]))
            row.intrinsic_mean = float(np.mean(s["intrinsic"]))
            row.gap = float(np.mean(s["gaps"]))
        if self.step % self.cfg.holdout_every == 0 or self.step == self.cfg.steps:
            row.holdout_acc = self.evaluate_holdout(self.step)
        row.extra = {"reasons": reasons,
                     "strategy_probs": [[float(v) for v in self.solver.strategy_probs(c)]
                                        for c in range(self.solver.contexts)],
                     "noise": float(self.solver.params["noise"]),
                     "malformed": float(self.proposer.params["malformed"]),
                     "fidelity": float(self.proposer.params["fidelity"]),
                     "batch_ids": s["batch_ids"], "batch_rejected": s["rejected"]}
        if self.cfg.log_rollouts:
            row.extra["rollouts"] = s["records"]
        self.rows.append(row)
        return row

    def run(self, until: int | None = None) -> list[MetricsRow]:
        end = self.cfg.steps if until is None else until
        while self.step < end:
            self.advance()
        return self.rows

    # -- checkpointing ------------------------------------------------------

    def save_checkpoint(self, directory: str | Path) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        save_params(d / "params.txt", self.proposer, self.solver)
        ref = (params_to_lines("proposer", self.proposer.family, self.ref_proposer)
               + params_to_lines("solver", self.solver.family, self.ref_solver))
        (d / "reference.txt").write_text("\n".join(ref) + "\n")
        self.pool.save(d / "pool.tsv")
        (d / "config.txt").write_text(dump_config(self.cfg))
        state = {"step": self.step, "next_id": self.pool.next_id,
                 "rng": {k: _rng_state(r) for k, r in self.rng.items()}}
        (d / "state.json").write_text(json.dumps(state, sort_keys=True))
        emit(self.rows, d, prefix="log")

    @classmethod
    def from_checkpoint(cls, directory: str | Path, cfg: RunConfig | None = None,
                        holdout: Sequence[Task] | None = None) -> SelfPlay:
        d = Path(directory)
        saved_cfg = load_config(d / "config.txt")
        cfg = cfg or saved_cfg
        self = cls.__new__(cls)
        self.cfg = cfg
        self.proposer, self.solver = load_params(d / "params.txt")
        kv = read_kv(d / "reference.txt")
        self.ref_proposer = snapshot(params_from_dict("proposer", self.proposer.family, kv))
        self.ref_solver = snapshot(params_from_dict("solver", self.solver.family, kv))
        state = json.loads((d / "state.json").read_text())
        self.rng = {k: _rng_from_state(s) for k, s in state["rng"].items()}
        self.gate = GateConfig(cfg.epsilon, cfg.gate_seed)
        self.pool = Pool.load(d / "pool.tsv", cfg.pool_cap)
        self.pool.next_id = state["next_id"]
        self.holdout = list(holdout) if holdout is not None else make_holdout(
            cfg.holdout_seed, cfg.holdout_n, cfg.holdout_depth)
        self.step = state["step"]
        self.rows = read_log(d / "log.jsonl")
        return self


def run(cfg: RunConfig, holdout: Sequence[Task] | None = None) -> list[MetricsRow]:
    """Execute one run; on abort the partial log is flushed to ``cfg.out``."""
    sp = SelfPlay(cfg, holdout)
    try:
        sp.run()
    finally:
        if cfg.out:
            emit(sp.rows, cfg.out)
            save_params(Path(cfg.out) / "params.txt", sp.proposer, sp.solver)
            write_holdout(Path(cfg.out) / "holdout.tsv", sp.holdout)
    return sp.rows


def _run_quiet(cfg: RunConfig) -> list[MetricsRow] | str:
    try:
        return run(cfg)
    except Exception as exc:  # isolate sibling runs
        log.exception("run %s (seed %d) failed", cfg.label, cfg.seed)
        return f"{type(exc).__name__}: {exc}"


def run_many(cfgs: Sequence[RunConfig], workers: int | None = None) -> list[list[MetricsRow] | str]:
    """Run configs, in parallel when ``workers`` != 1. Failures come back as strings."""
    if workers == 1 or len(cfgs) == 1:
        return [_run_quiet(c) for c in cfgs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_run_quiet, cfgs))


def run_matrix(base: RunConfig, labels: Sequence[str] = MATRIX_LABELS,
               workers: int | None = None) -> dict[str, list[MetricsRow] | str]:
    cfgs = []
    for label in labels:
        c = base.with_label(label)
        if base.out:
            c = replace(c, out=str(Path(base.out) / label))
        cfgs.append(c)
    return dict(zip(labels, run_many(cfgs, workers)))


def late_window(rows: Sequence[MetricsRow], fraction: float = LATE_FRACTION) -> list[MetricsRow]:
    """Rows in the final ``fraction`` of training steps."""
    steps = max((r.step for r in rows), default=0)
    cut = steps - int(round(fraction * steps))
    return [r for r in rows if r.step > cut]


def late_mean(rows: Sequence[MetricsRow], column: str, fraction: float = LATE_FRACTION) -> float:
    vals = [getattr(r, column) for r in late_window(rows, fraction) if getattr(r, column) is not None]
    if not vals:
        vals = [getattr(r, column) for r in rows if getattr(r, column) is not None][-1:]
    return float(np.mean(vals)) if vals else float("nan")


def phase_row(epsilon: float, rows: Sequence[MetricsRow]) -> dict:
    return {"epsilon": epsilon, "late_gap": late_mean(rows, "gap"),
            "late_holdout_acc": late_mean(rows, "holdout_acc"),
            "late_eligibility": late_mean(rows, "eligibility"), "youden_j": 1.0 - epsilon}


def sweep_epsilon(base: RunConfig, grid: Sequence[float] = SWEEP_GRID, seeds: Sequence[int] | None = None,
                  workers: int | None = None) -> tuple[list[dict], dict]:
    """One run per (epsilon, seed) of the II configuration.

    Returns the phase table (per-epsilon medians over seeds) and the raw logs
    keyed by ``(epsilon, seed)``.
    """
    seeds = list(seeds) if seeds is not None else [base.seed]
    cfgs, keys = [], []
    for eps in grid:
        for s in seeds:
            c = replace(base.with_label("II+off"), label=f"II+eps{eps:g}", epsilon=float(eps), seed=s)
            if base.out:
                c = replace(c, out=str(Path(base.out) / f"eps{eps:g}_seed{s}"))
            cfgs.append(c)
            keys.append((float(eps), s))
    logs = dict(zip(keys, run_many(cfgs, workers)))
    table = []
    for eps in grid:
        per_seed = [phase_row(float(eps), logs[(float(eps), s)]) for s in seeds
                    if not isinstance(logs[(float(eps), s)], str)]
        if not per_seed:
            continue
        row = {"epsilon": float(eps), "youden_j": 1.0 - float(eps)}
        for col in ("late_gap", "late_holdout_acc", "late_eligibility"):
            row[col] = float(np.median([r[col] for r in per_seed]))
        table.append(row)
    return table, logs


def adaptive_schedule(cfg: RunConfig, switch_step: int = 150, epsilon2: float = 0.05,
                      checkpoint_dir: str | Path | None = None) -> list[MetricsRow]:
    """epsilon = 0 up to ``switch_step``, checkpoint, then resume with ``epsilon2``."""
    import tempfile
    first = replace(cfg, epsilon=0.0)
    sp = SelfPlay(first)
    sp.run(until=min(switch_step, cfg.steps))
    with tempfile.TemporaryDirectory() as tmp:
        ckpt = Path(checkpoint_dir) if checkpoint_dir else Path(tmp)
        sp.save_checkpoint(ckpt)
        resumed = SelfPlay.from_checkpoint(ckpt, replace(first, epsilon=epsilon2), holdout=sp.holdout)
    resumed.rows[-1].extra["switch"] = {"step": resumed.step, "epsilon": epsilon2}
    resumed.run()
    if cfg.out:
        emit(resumed.rows, cfg.out)
    return resumed.rows


# ----------------------------------------------------------------------------
# files
# ----------------------------------------------------------------------------


def emit(rows: Sequence[MetricsRow], out_dir: str | Path, prefix: str = "metrics") -> tuple[Path, Path]:
    """Write ``<prefix>.csv`` (fixed columns) and ``<prefix>.jsonl`` (one record per row)."""
    d = Path(out_dir)
    try:
        d.mkdir(parents=True, exist_ok=True)
        csv_path, jsonl_path = d / f"{prefix}.csv", d / f"{prefix}.jsonl"
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for r in rows:
                w.writerow(r.csv_cells())
        with open(jsonl_path, "w") as fh:
            for r in rows:
                fh.write(json.dumps(asdict(r), sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write logs under {d}: {exc}") from exc
    return csv_path, jsonl_path


def read_csv_log(path: str | Path) -> list[MetricsRow]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        for cells in reader:
            vals = {}
            for col, cell in zip(CSV_COLUMNS, cells):
                if cell == "":
                    vals[col] = None
                elif col in ("step", "pool_size"):
                    vals[col] = int(cell)
                else:
                    vals[col] = float(cell)
            rows.append(MetricsRow(**vals))
    return rows


def read_log(path: str | Path) -> list[MetricsRow]:
    rows = []
    for line in Path(path).read_text().splitlines():
        if line:
            rows.append(MetricsRow(**json.loads(line)))
    return rows


def write_phase_table(table: Iterable[dict], path: str | Path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PHASE_COLUMNS)
        for row in table:
            w.writerow([repr(float(row[c])) for c in PHASE_COLUMNS])
    return p


def first_step_at_or_above(rows: Sequence[MetricsRow], column: str, threshold: float) -> float:
    for r in rows:
        v = getattr(r, column)
        if v is not None and v >= threshold:
            return r.step
    return math.inf

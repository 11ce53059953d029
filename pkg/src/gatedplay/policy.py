"""Toy proposer and solver policies with exact trace log-probabilities.

Both policies are collections of logit blocks. A sampled trace is summarised
by a count vector over a fixed layout (one slot per categorical outcome and
two per Bernoulli: success, failure) plus a constant for the non-parametric
draws (uniform inputs, token deletion, distractor picks, corruption signs).
Log-probabilities are then linear in the counts, which keeps the policy
gradient exact and cheap:

    d log p / d z[row] = counts[row] - counts[row].sum() * softmax(z[row])
    d log p / d l      = successes * (1 - sigmoid(l)) - failures * sigmoid(l)

The update ascends the PPO clipped surrogate minus ``beta`` times the k3
("low-variance") KL estimate against a frozen snapshot, averaged over
episodes.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from itertools import accumulate
from pathlib import Path
from typing import Sequence

import numpy as np

from .dsl import (ARITY, BINARY_OPS, CMP_OPS, ITE, UNARY_OPS, VARIABLES, Expr,
                  _cmp, apply_binary, evaluate, render, tokenize)

PRODUCTIONS = ("LIT", "VAR") + UNARY_OPS + BINARY_OPS + (ITE,)
STRATEGIES = ("EVAL", "CONST(-1)", "CONST(0)", "CONST(1)", "COPY_X")
CONSTANTS = (-1, 0, 1)


class MissingTrace(ValueError):
    pass


class NonFiniteGradient(FloatingPointError):
    pass


def sigmoid(v: float) -> float:
    if v >= 0:
        return 1.0 / (1.0 + math.exp(-v))
    ev = math.exp(v)
    return ev / (1.0 + ev)


def log_sigmoid(v: float) -> float:
    return -math.log1p(math.exp(-v)) if v >= 0 else v - math.log1p(math.exp(v))


def masked_softmax(z: np.ndarray, mask: np.ndarray) -> np.ndarray:
    zz = np.where(mask, z, -np.inf)
    zz = zz - zz.max(axis=-1, keepdims=True)
    ez = np.exp(zz)
    return ez / ez.sum(axis=-1, keepdims=True)


def masked_log_softmax(z: np.ndarray, mask: np.ndarray) -> np.ndarray:
    zz = np.where(mask, z, -np.inf)
    m = zz.max(axis=-1, keepdims=True)
    lse = m + np.log(np.exp(zz - m).sum(axis=-1, keepdims=True))
    return np.where(mask, z - lse, 0.0)


@dataclass
class Family:
    """Layout of a policy's logit blocks.

    ``categoricals`` maps a block name to ``{variant: mask}``; every variant
    shares the block's logits but restricts the support differently.
    """

    shapes: dict[str, tuple[int, int]]
    masks: dict[str, dict[str, np.ndarray]]
    bernoullis: tuple[str, ...]
    slots: dict[tuple[str, str], slice] = field(init=False)
    bern_slots: dict[str, int] = field(init=False)
    size: int = field(init=False)

    def __post_init__(self):
        self.slots = {}
        off = 0
        for name, variants in self.masks.items():
            rows, k = self.shapes[name]
            for variant in variants:
                self.slots[(name, variant)] = slice(off, off + rows * k)
                off += rows * k
        self.bern_slots = {}
        for name in self.bernoullis:
            self.bern_slots[name] = off
            off += 2
        self.size = off

    def index(self, name: str, variant: str, row: int, k: int) -> int:
        return self.slots[(name, variant)].start + row * self.shapes[name][1] + k

    def features(self, params: dict) -> np.ndarray:
        """Per-slot log-probabilities, so that ``log p(trace) = counts @ phi + const``."""
        phi = np.empty(self.size)
        for (name, variant), sl in self.slots.items():
            phi[sl] = masked_log_softmax(params[name], self.masks[name][variant]).ravel()
        for name, off in self.bern_slots.items():
            l = float(params[name])
            phi[off] = log_sigmoid(l)
            phi[off + 1] = log_sigmoid(-l)
        return phi

    def logprobs(self, params: dict, counts: np.ndarray, const: np.ndarray) -> np.ndarray:
        return counts @ self.features(params) + const

    def grad(self, params: dict, wstats: np.ndarray) -> dict:
        """Gradient of ``sum_i w_i log p(trace_i)`` given ``wstats = w @ counts``."""
        g = {name: np.zeros(shape) for name, shape in self.shapes.items()}
        for (name, variant), sl in self.slots.items():
            c = wstats[sl].reshape(self.shapes[name])
            p = masked_softmax(params[name], self.masks[name][variant])
            g[name] += c - c.sum(axis=1, keepdims=True) * p
        for name, off in self.bern_slots.items():
            s = sigmoid(float(params[name]))
            g[name] = np.float64(wstats[off] * (1.0 - s) - wstats[off + 1] * s)
        return g

    def flatten(self, params: dict) -> np.ndarray:
        return np.concatenate([np.ravel(params[n]) for n in self.param_names()])

    def unflatten(self, vec: np.ndarray) -> dict:
        out, off = {}, 0
        for n in self.param_names():
            if n in self.shapes:
                r, k = self.shapes[n]
                out[n] = vec[off:off + r * k].reshape(r, k).copy()
                off += r * k
            else:
                out[n] = np.float64(vec[off])
                off += 1
        return out

    def param_names(self) -> list[str]:
        return list(self.shapes) + list(self.bernoullis)


@dataclass
class Trace:
    counts: np.ndarray
    const: float
    choices: tuple = ()


class _Recorder:
    """Accumulates a trace while sampling from cached cumulative tables."""

    def __init__(self, family: Family, rng: np.random.Generator):
        self.family = family
        self.rng = rng
        self.hits: dict[int, float] = {}
        self.const = 0.0
        self.choices: list = []

    def categorical(self, table: list[float], name: str, variant: str, row: int) -> int:
        k = bisect_right(table, self.rng.random() * table[-1])
        k = min(k, len(table) - 1)
        idx = self.family.index(name, variant, row, k)
        self.hits[idx] = self.hits.get(idx, 0.0) + 1.0
        self.choices.append((name, row, k))
        return k

    def bernoulli(self, p: float, name: str) -> bool:
        hit = self.rng.random() < p
        idx = self.family.bern_slots[name] + (0 if hit else 1)
        self.hits[idx] = self.hits.get(idx, 0.0) + 1.0
        self.choices.append((name, hit))
        return hit

    def uniform(self, n: int) -> int:
        k = int(self.rng.integers(n))
        self.const -= math.log(n)
        self.choices.append(("u", n, k))
        return k

    def trace(self) -> Trace:
        c = np.zeros(self.family.size)
        for i, v in self.hits.items():
            c[i] = v
        return Trace(c, self.const, tuple(self.choices))


def _cum_tables(z: np.ndarray, mask: np.ndarray) -> list[list[float]]:
    p = masked_softmax(z, mask)
    return [list(accumulate(row)) for row in p]


def snapshot(params: dict) -> dict:
    """Frozen copy used as the KL anchor."""
    out = {}
    for k, v in params.items():
        a = np.array(v, dtype=float, copy=True)
        a.setflags(write=False)
        out[k] = a
    return out


# ----------------------------------------------------------------------------
# proposer
# ----------------------------------------------------------------------------


@dataclass
class Candidate:
    program_text: str
    input: tuple[int, int]
    claimed: str
    malformed: bool = False
    expr: Expr | None = None       # the sampled expression before any corruption
    trace: Trace | None = None


def join_tokens(tokens: Sequence[str]) -> str:
    out = []
    for t in tokens:
        out.append(t)
        if t == ",":
            out.append(" ")
    return "".join(out)


class Proposer:
    """PCFG over the DSL with per-level production logits.

    Row ``l`` of the ``expr`` block governs nodes at tree level ``l``; the
    deepest row only allows leaves and the one above it disallows ITE (its
    condition needs two more levels), so every sample has depth <= max_depth.
    """

    def __init__(self, max_depth: int = 5, literals: Sequence[int] = tuple(range(-3, 4)),
                 input_range: tuple[int, int] = (-10, 10), params: dict | None = None):
        if max_depth < 2:
            raise ValueError("max_depth must be >= 2")
        self.max_depth = max_depth
        self.literals = tuple(int(v) for v in literals)
        self.input_range = input_range
        rows = max_depth + 1
        expr_mask = np.ones((rows, len(PRODUCTIONS)), dtype=bool)
        expr_mask[max_depth, 2:] = False
        expr_mask[max_depth - 1, PRODUCTIONS.index(ITE)] = False
        self.family = Family(
            shapes={"expr": (rows, len(PRODUCTIONS)), "cmp": (rows, len(CMP_OPS)),
                    "var": (rows, 2), "lit": (1, len(self.literals))},
            masks={"expr": {"default": expr_mask},
                   "cmp": {"default": np.ones((rows, len(CMP_OPS)), dtype=bool)},
                   "var": {"default": np.ones((rows, 2), dtype=bool)},
                   "lit": {"default": np.ones((1, len(self.literals)), dtype=bool)}},
            bernoullis=("malformed", "fidelity"))
        self.params = params if params is not None else self.default_params()
        self._tables: dict | None = None

    def default_params(self) -> dict:
        rows = self.max_depth + 1
        expr = np.zeros((rows, len(PRODUCTIONS)))
        # leaves get likelier further from the root
        expr[:, :2] = np.minimum(np.arange(rows) - 1.0, 3.0)[:, None]
        return {"expr": expr, "cmp": np.zeros((rows, len(CMP_OPS))), "var": np.zeros((rows, 2)),
                "lit": np.zeros((1, len(self.literals))),
                "malformed": np.float64(-1.5), "fidelity": np.float64(2.0)}

    def set_params(self, params: dict) -> None:
        self.params = params
        self._tables = None

    def tables(self) -> dict:
        if self._tables is None:
            p = self.params
            m = self.family.masks
            self._tables = {name: _cum_tables(p[name], m[name]["default"])
                            for name in ("expr", "cmp", "var", "lit")}
            self._tables["malformed"] = sigmoid(float(p["malformed"]))
            self._tables["fidelity"] = sigmoid(float(p["fidelity"]))
        return self._tables

    def _grow(self, rec: _Recorder, tb: dict, level: int) -> Expr:
        k = rec.categorical(tb["expr"][level], "expr", "default", level)
        prod = PRODUCTIONS[k]
        if prod == "LIT":
            return Expr("LIT", (), self.literals[rec.categorical(tb["lit"][0], "lit", "default", 0)])
        if prod == "VAR":
            return Expr("VAR", (), VARIABLES[rec.categorical(tb["var"][level], "var", "default", level)])
        if prod == ITE:
            c = CMP_OPS[rec.categorical(tb["cmp"][level + 1], "cmp", "default", level + 1)]
            cond = Expr(c, (self._grow(rec, tb, level + 2), self._grow(rec, tb, level + 2)))
            return Expr(ITE, (cond, self._grow(rec, tb, level + 1), self._grow(rec, tb, level + 1)))
        return Expr(prod, tuple(self._grow(rec, tb, level + 1) for _ in range(ARITY[prod])))

    def sample(self, rng: np.random.Generator) -> Candidate:
        tb = self.tables()
        rec = _Recorder(self.family, rng)
        e = self._grow(rec, tb, 0)
        text = render(e)
        malformed = rec.bernoulli(tb["malformed"], "malformed")
        if malformed:
            toks = tokenize(text)
            j = rec.uniform(len(toks))
            text = join_tokens(toks[:j] + toks[j + 1:])
        lo, hi = self.input_range
        x = lo + rec.uniform(hi - lo + 1)
        y = lo + rec.uniform(hi - lo + 1)
        v = evaluate(e, x, y)
        if v is None:
            # neither the true value nor true+-1 exists; 0 is the only distractor left
            claimed = "0"
        elif rec.bernoulli(tb["fidelity"], "fidelity"):
            claimed = str(v)
        else:
            claimed = str((0, v + 1, v - 1)[rec.uniform(3)])
        return Candidate(text, (x, y), claimed, malformed, e, rec.trace())

    def logprob(self, cand: Candidate, params: dict | None = None) -> float:
        if cand.trace is None:
            raise MissingTrace("candidate carries no sampling trace")
        p = self.params if params is None else params
        return float(cand.trace.counts @ self.family.features(p) + cand.trace.const)


# ----------------------------------------------------------------------------
# solver
# ----------------------------------------------------------------------------


@dataclass
class Answer:
    text: str
    strategy: str
    trace: Trace


class Solver:
    """Mixture over answer strategies with noisy evaluation.

    EVAL walks the expression and flips each integer-valued node by +-1 with
    probability ``sigmoid(noise)``; a zero divisor on the walk makes it guess
    uniformly in ``[-guess_range, guess_range]``. CONST(c) answers c and
    COPY_X answers the x input. Strategy logits have one row per context
    (the task's depth bucket when ``contexts > 1``).
    """

    def __init__(self, contexts: int = 1, guess_range: int = 10, params: dict | None = None):
        self.contexts = contexts
        self.guess_range = guess_range
        shape = (contexts, len(STRATEGIES))
        no_eval = np.ones(shape, dtype=bool)
        no_eval[:, 0] = False
        self.family = Family(
            shapes={"strategy": shape},
            masks={"strategy": {"default": np.ones(shape, dtype=bool), "no_eval": no_eval}},
            bernoullis=("noise",))
        self.params = params if params is not None else self.default_params()
        self._tables: dict | None = None

    def default_params(self) -> dict:
        # EVAL leads CONST(0) by a small margin, so which attractor wins is
        # decided by the tasks the solver trains on
        z = np.zeros((self.contexts, len(STRATEGIES)))
        z[:, 0] = 1.1
        z[:, 2] = 0.9
        return {"strategy": z, "noise": np.float64(-4.0)}

    def set_params(self, params: dict) -> None:
        self.params = params
        self._tables = None

    def tables(self) -> dict:
        if self._tables is None:
            fam = self.family
            self._tables = {v: _cum_tables(self.params["strategy"], fam.masks["strategy"][v])
                            for v in ("default", "no_eval")}
            self._tables["noise"] = sigmoid(float(self.params["noise"]))
        return self._tables

    def context(self, task) -> int:
        if self.contexts == 1 or task.expr is None:
            return 0
        return min(_depth(task.expr), self.contexts - 1)

    def sample(self, task, rng: np.random.Generator) -> Answer:
        tb = self.tables()
        rec = _Recorder(self.family, rng)
        row = self.context(task)
        variant = "default" if task.expr is not None else "no_eval"
        k = rec.categorical(tb[variant][row], "strategy", variant, row)
        strategy = STRATEGIES[k]
        x, y = task.input
        if strategy == "EVAL":
            v = _noisy_eval(task.expr, x, y, rec, tb["noise"])
            if v is None:
                g = self.guess_range
                v = rec.uniform(2 * g + 1) - g
            text = str(v)
        elif strategy == "COPY_X":
            text = str(x)
        else:
            text = str(CONSTANTS[k - 1])
        return Answer(text, strategy, rec.trace())

    def logprob(self, trace: Trace | None, params: dict | None = None) -> float:
        if trace is None:
            raise MissingTrace("answer carries no sampling trace")
        p = self.params if params is None else params
        return float(trace.counts @ self.family.features(p) + trace.const)

    def strategy_probs(self, context: int = 0) -> np.ndarray:
        return masked_softmax(self.params["strategy"][context], np.ones(len(STRATEGIES), dtype=bool))


def _depth(e: Expr) -> int:
    return 0 if not e.args else 1 + max(_depth(a) for a in e.args)


def _noisy_eval(e: Expr, x: int, y: int, rec: _Recorder, p: float) -> int | None:
    o = e.op
    if o == "LIT":
        v = e.value
    elif o == "VAR":
        v = x if e.value == "x" else y
    elif o == ITE:
        c = e.args[0]
        a = _noisy_eval(c.args[0], x, y, rec, p)
        if a is None:
            return None
        b = _noisy_eval(c.args[1], x, y, rec, p)
        if b is None:
            return None
        v = _noisy_eval(e.args[1] if _cmp(c.op, a, b) else e.args[2], x, y, rec, p)
        if v is None:
            return None
    else:
        a = _noisy_eval(e.args[0], x, y, rec, p)
        if a is None:
            return None
        if o == "NEG":
            v = -a
        elif o == "ABS":
            v = abs(a)
        else:
            b = _noisy_eval(e.args[1], x, y, rec, p)
            if b is None:
                return None
            v = apply_binary(o, a, b)
            if v is None:
                return None
    if rec.bernoulli(p, "noise"):
        v += 1 if rec.uniform(2) else -1
    return v


# ----------------------------------------------------------------------------
# update
# ----------------------------------------------------------------------------


def stack_traces(traces: Sequence[Trace]) -> tuple[np.ndarray, np.ndarray]:
    return np.stack([t.counts for t in traces]), np.array([t.const for t in traces])


def surrogate(family: Family, params: dict, counts: np.ndarray, const: np.ndarray,
              adv: np.ndarray, old_lp: np.ndarray, ref_lp: np.ndarray,
              clip: float = 0.2, beta: float = 0.01) -> float:
    """Mean over episodes of min(rho*A, clip(rho)*A) - beta*k3."""
    lp = family.logprobs(params, counts, const)
    rho = np.exp(lp - old_lp)
    surr = np.minimum(rho * adv, np.clip(rho, 1 - clip, 1 + clip) * adv)
    d = ref_lp - lp
    kl = np.exp(d) - d - 1.0
    return float(np.mean(surr - beta * kl))


def surrogate_grad(family: Family, params: dict, counts: np.ndarray, const: np.ndarray,
                   adv: np.ndarray, old_lp: np.ndarray, ref_lp: np.ndarray,
                   clip: float = 0.2, beta: float = 0.01) -> dict:
    lp = family.logprobs(params, counts, const)
    rho = np.exp(lp - old_lp)
    # the unclipped branch is the active one inside the trust region
    active = np.where(adv >= 0, rho <= 1 + clip, rho >= 1 - clip)
    w = np.where(active, rho * adv, 0.0) + beta * (np.exp(ref_lp - lp) - 1.0)
    w = w / len(w)
    return family.grad(params, w @ counts)


def kl_penalty(family: Family, params: dict, ref: dict, counts: np.ndarray, const: np.ndarray) -> np.ndarray:
    """Per-sample k3 estimate of KL(current || reference) on sampled traces."""
    d = family.logprobs(ref, counts, const) - family.logprobs(params, counts, const)
    return np.exp(d) - d - 1.0


def policy_update(family: Family, params: dict, traces: Sequence[Trace], advantages: Sequence[float],
                  ref: dict, lr: float = 0.05, clip: float = 0.2, beta: float = 0.01) -> dict:
    """One ascent step on the clipped surrogate (one PPO epoch, old = current)."""
    if not traces:
        return {k: np.array(v, dtype=float, copy=True) for k, v in params.items()}
    counts, const = stack_traces(traces)
    adv = np.asarray(advantages, dtype=float)
    old_lp = family.logprobs(params, counts, const)
    ref_lp = family.logprobs(ref, counts, const)
    with np.errstate(invalid="ignore", over="ignore"):
        g = surrogate_grad(family, params, counts, const, adv, old_lp, ref_lp, clip, beta)
    bad = [k for k, v in g.items() if not np.all(np.isfinite(v))]
    if bad:
        raise NonFiniteGradient(f"non-finite gradient in blocks {bad}; "
                                f"max |adv|={np.max(np.abs(adv)):.3g}, "
                                f"max (ref-lp)={np.max(ref_lp - old_lp):.3g}")
    return {k: np.asarray(params[k], dtype=float) + lr * g[k] for k in family.param_names()}


# ----------------------------------------------------------------------------
# checkpoint text format
# ----------------------------------------------------------------------------


def params_to_lines(prefix: str, family: Family, params: dict) -> list[str]:
    lines = []
    for name in family.param_names():
        arr = np.asarray(params[name], dtype=float)
        if arr.ndim == 0:
            lines.append(f"{prefix}.{name} = {float(arr)!r}")
        else:
            for (i, j), v in np.ndenumerate(arr):
                lines.append(f"{prefix}.{name}.{i}.{j} = {float(v)!r}")
    return lines


def params_from_dict(prefix: str, family: Family, kv: dict[str, str]) -> dict:
    out = {}
    for name in family.param_names():
        if name in family.shapes:
            arr = np.empty(family.shapes[name])
            for (i, j), _ in np.ndenumerate(arr):
                arr[i, j] = float(kv[f"{prefix}.{name}.{i}.{j}"])
            out[name] = arr
        else:
            out[name] = np.float64(float(kv[f"{prefix}.{name}"]))
    return out


def save_params(path: str | Path, proposer: Proposer, solver: Solver) -> None:
    lines = [f"proposer.max_depth = {proposer.max_depth}",
             f"proposer.literals = {','.join(map(str, proposer.literals))}",
             f"proposer.input_range = {proposer.input_range[0]}:{proposer.input_range[1]}",
             f"solver.contexts = {solver.contexts}",
             f"solver.guess_range = {solver.guess_range}"]
    lines += params_to_lines("proposer", proposer.family, proposer.params)
    lines += params_to_lines("solver", solver.family, solver.params)
    Path(path).write_text("\n".join(lines) + "\n")


def read_kv(path: str | Path) -> dict[str, str]:
    kv = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}: expected 'key = value', got {raw!r}")
        kv[key.strip()] = value.strip()
    return kv


def load_params(path: str | Path) -> tuple[Proposer, Solver]:
    kv = read_kv(path)
    lo, hi = kv["proposer.input_range"].split(":")
    proposer = Proposer(int(kv["proposer.max_depth"]),
                        [int(v) for v in kv["proposer.literals"].split(",")], (int(lo), int(hi)))
    solver = Solver(int(kv["solver.contexts"]), int(kv["solver.guess_range"]))
    proposer.set_params(params_from_dict("proposer", proposer.family, kv))
    solver.set_params(params_from_dict("solver", solver.family, kv))
    return proposer, solver

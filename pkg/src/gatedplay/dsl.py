"""Prefix-expression DSL: parsing, rendering, evaluation and random generation.

Grammar (two integer variables ``x`` and ``y``)::

    expr ::= literal | variable | unop "(" expr ")"
           | binop "(" expr "," expr ")"
           | "ITE" "(" cond "," expr "," expr ")"
    cond ::= cmp "(" expr "," expr ")"

DIV is floor division and MOD the matching floor remainder (sign of the
divisor). Integers are Python ints, so there is no overflow. Evaluation
returns ``None`` (the rejection value) iff a zero divisor is hit on the
evaluated path.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

UNARY_OPS = ("NEG", "ABS")
BINARY_OPS = ("ADD", "SUB", "MUL", "DIV", "MOD", "MAX", "MIN")
CMP_OPS = ("GT", "LT", "EQ", "GEQ", "LEQ")
ITE = "ITE"
EXPR_OPS = UNARY_OPS + BINARY_OPS + (ITE,)
ALL_OPS = EXPR_OPS + CMP_OPS
VARIABLES = ("x", "y")

ARITY = {**{op: 1 for op in UNARY_OPS}, **{op: 2 for op in BINARY_OPS},
         **{op: 2 for op in CMP_OPS}, ITE: 3}

PROBE_GRID = tuple((x, y) for x in range(-2, 3) for y in range(-2, 3))


@dataclass(frozen=True, slots=True)
class Expr:
    """One AST node.

    ``op`` is ``"LIT"``, ``"VAR"`` or an operator name. ``value`` holds the
    integer of a literal or the name of a variable.
    """

    op: str
    args: tuple[Expr, ...] = ()
    value: int | str | None = None

    @property
    def kind(self) -> str:
        if self.op == "LIT":
            return "literal"
        if self.op == "VAR":
            return "variable"
        if self.op in UNARY_OPS:
            return "unary"
        if self.op in BINARY_OPS:
            return "binary"
        if self.op in CMP_OPS:
            return "comparison"
        return "conditional"

    def __str__(self) -> str:
        return render(self)


def lit(v: int) -> Expr:
    return Expr("LIT", (), int(v))


def var(name: str) -> Expr:
    if name not in VARIABLES:
        raise ValueError(f"unknown variable {name!r}")
    return Expr("VAR", (), name)


def op(name: str, *args: Expr) -> Expr:
    return Expr(name, tuple(args))


class ParseError(ValueError):
    """Malformed expression text. ``kind`` is one of ``unknown_operator``,
    ``arity``, ``unbalanced``, ``trailing``, ``comparison_position``,
    ``bad_token``."""

    def __init__(self, kind: str, message: str, pos: int | None = None):
        super().__init__(f"{kind}: {message}" + (f" (token {pos})" if pos is not None else ""))
        self.kind = kind
        self.pos = pos


class GenerationExhausted(RuntimeError):
    pass


_TOKEN_RE = re.compile(r"\s*(?:(-?[0-9]+)|([A-Za-z_][A-Za-z_0-9]*)|([(),])|(\S))")


def tokenize(text: str) -> list[str]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:  # only trailing whitespace left
            break
        if m.group(4) is not None:
            raise ParseError("bad_token", f"unexpected character {m.group(4)!r}", len(tokens))
        tokens.append(m.group(1) or m.group(2) or m.group(3))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, tokens: list[str]):
        self.toks = tokens
        self.i = 0

    def peek(self) -> str | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def expect(self, tok: str, what: str) -> None:
        got = self.peek()
        if got is None:
            raise ParseError("unbalanced", f"input ended, expected {tok!r} {what}", self.i)
        if got != tok:
            if tok in ",)" and got in ",)":
                raise ParseError("arity", f"expected {tok!r} {what}, got {got!r}", self.i)
            raise ParseError("bad_token", f"expected {tok!r} {what}, got {got!r}", self.i)
        self.i += 1

    def expr(self, cond_slot: bool = False) -> Expr:
        tok = self.peek()
        if tok is None:
            raise ParseError("unbalanced", "input ended, expected an expression", self.i)
        self.i += 1
        if cond_slot and (tok in VARIABLES or tok[0] == "-" or tok[0].isdigit()):
            raise ParseError("comparison_position", f"ITE condition must be a comparison, got {tok}", self.i - 1)
        if tok[0] == "-" or tok[0].isdigit():
            return Expr("LIT", (), int(tok))
        if tok in VARIABLES:
            return Expr("VAR", (), tok)
        if tok in "(),":
            raise ParseError("bad_token", f"expected an expression, got {tok!r}", self.i - 1)
        if tok not in ARITY:
            raise ParseError("unknown_operator", f"unknown operator {tok!r}", self.i - 1)
        if (tok in CMP_OPS) != cond_slot:
            if cond_slot:
                raise ParseError("comparison_position", f"ITE condition must be a comparison, got {tok}", self.i - 1)
            raise ParseError("comparison_position", f"comparison {tok} outside an ITE condition", self.i - 1)
        self.expect("(", f"after {tok}")
        args = []
        for k in range(ARITY[tok]):
            if k:
                self.expect(",", f"between arguments of {tok}")
            args.append(self.expr(cond_slot=(tok == ITE and k == 0)))
        self.expect(")", f"closing {tok}")
        return Expr(tok, tuple(args))


def parse(text: str) -> Expr:
    """Parse DSL text into an :class:`Expr`; raises :class:`ParseError`."""
    p = _Parser(tokenize(text))
    e = p.expr()
    if p.i != len(p.toks):
        if p.toks[p.i] == ")":
            raise ParseError("unbalanced", "unmatched ')'", p.i)
        raise ParseError("trailing", f"trailing input starting at {p.toks[p.i]!r}", p.i)
    return e


def render(e: Expr) -> str:
    if e.op == "LIT":
        return str(e.value)
    if e.op == "VAR":
        return str(e.value)
    return f"{e.op}({', '.join(render(a) for a in e.args)})"


def _cmp(name: str, a: int, b: int) -> bool:
    if name == "GT":
        return a > b
    if name == "LT":
        return a < b
    if name == "EQ":
        return a == b
    if name == "GEQ":
        return a >= b
    return a <= b


def evaluate(e: Expr, x: int, y: int) -> int | None:
    """Evaluate ``e`` at ``(x, y)``; ``None`` on a zero divisor."""
    o = e.op
    if o == "LIT":
        return e.value  # type: ignore[return-value]
    if o == "VAR":
        return x if e.value == "x" else y
    if o == ITE:
        c = e.args[0]
        a = evaluate(c.args[0], x, y)
        if a is None:
            return None
        b = evaluate(c.args[1], x, y)
        if b is None:
            return None
        return evaluate(e.args[1] if _cmp(c.op, a, b) else e.args[2], x, y)
    a = evaluate(e.args[0], x, y)
    if a is None:
        return None
    if o == "NEG":
        return -a
    if o == "ABS":
        return abs(a)
    b = evaluate(e.args[1], x, y)
    if b is None:
        return None
    return apply_binary(o, a, b)


def apply_binary(o: str, a: int, b: int) -> int | None:
    if o == "ADD":
        return a + b
    if o == "SUB":
        return a - b
    if o == "MUL":
        return a * b
    if o == "DIV":
        return None if b == 0 else a // b
    if o == "MOD":
        return None if b == 0 else a % b
    if o == "MAX":
        return a if a >= b else b
    if o == "MIN":
        return a if a <= b else b
    raise ValueError(f"not a binary operator: {o}")


def probe_validate(e: Expr) -> bool:
    """True iff ``e`` evaluates without rejection on the 5x5 grid [-2, 2]^2."""
    return all(evaluate(e, x, y) is not None for x, y in PROBE_GRID)


def depth(e: Expr) -> int:
    """Leaves have depth 0; an operator node is one more than its deepest child."""
    if not e.args:
        return 0
    return 1 + max(depth(a) for a in e.args)


def size(e: Expr) -> int:
    return 1 + sum(size(a) for a in e.args)


def _leaf(rng: np.random.Generator, literal_lo: int, literal_hi: int) -> Expr:
    if rng.random() < 0.5:
        return Expr("VAR", (), VARIABLES[int(rng.integers(2))])
    return Expr("LIT", (), int(rng.integers(literal_lo, literal_hi + 1)))


def _grow(rng: np.random.Generator, budget: int, exact: bool, lo: int, hi: int) -> Expr:
    # exact: this subtree must reach depth == budget; otherwise depth <= budget
    if budget == 0 or (not exact and rng.random() < 0.5):
        return _leaf(rng, lo, hi)
    name = EXPR_OPS[int(rng.integers(len(EXPR_OPS)))]
    if name == ITE and budget < 2:
        name = BINARY_OPS[int(rng.integers(len(BINARY_OPS)))]
    arity = ARITY[name]
    deep = int(rng.integers(arity)) if exact else -1
    args = []
    for k in range(arity):
        if name == ITE and k == 0:
            cmp = CMP_OPS[int(rng.integers(len(CMP_OPS)))]
            inner = int(rng.integers(2)) if deep == 0 else -1
            args.append(Expr(cmp, tuple(_grow(rng, budget - 2, j == inner, lo, hi) for j in range(2))))
        else:
            args.append(_grow(rng, budget - 1, k == deep, lo, hi))
    return Expr(name, tuple(args))


def generate(rng: np.random.Generator, depth_lo: int, depth_hi: int,
             literal_lo: int, literal_hi: int, max_tries: int = 1000) -> Expr:
    """Sample a probe-valid expression with depth in ``[depth_lo, depth_hi]``.

    A target depth is drawn uniformly, then the tree is grown top-down so that
    one root-to-leaf path hits the target exactly. Rejection-samples until
    :func:`probe_validate` passes.
    """
    if not 0 <= depth_lo <= depth_hi:
        raise ValueError(f"bad depth range [{depth_lo}, {depth_hi}]")
    if literal_lo > literal_hi:
        raise ValueError(f"bad literal range [{literal_lo}, {literal_hi}]")
    for _ in range(max_tries):
        target = int(rng.integers(depth_lo, depth_hi + 1))
        e = _grow(rng, target, True, literal_lo, literal_hi)
        if probe_validate(e):
            return e
    raise GenerationExhausted(f"no probe-valid expression of depth {depth_lo}-{depth_hi} in {max_tries} tries")


class CanonicalAnswer(NamedTuple):
    is_int: bool
    text: str


_INT_RE = re.compile(r"[+-]?[0-9]+")


def canonicalize_answer(text: str) -> CanonicalAnswer:
    """Strip whitespace and normalize integers ("007" -> "7", "-0" -> "0").
    Anything else is kept verbatim as a non-integer answer."""
    s = text.strip()
    if _INT_RE.fullmatch(s):
        return CanonicalAnswer(True, str(int(s)))
    return CanonicalAnswer(False, s)

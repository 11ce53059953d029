"""Parse, evaluate and gate a few programs.

Run: python demos/01_dsl_and_gate.py
"""

from __future__ import annotations

import numpy as np

from gatedplay.dsl import ParseError, depth, evaluate, generate, parse, probe_validate, render
from gatedplay.gate import GateConfig, admit, exec_check

programs = [
    "ADD(x, y)",
    "ITE(EQ(MOD(x, 2), 0), DIV(x, 2), ADD(MUL(x, 3), 1))",
    "DIV(x, SUB(y, y))",   # divides by zero everywhere
    "DIV(1, x)",           # fine at x=3, but fails the probe grid at x=0
    "ADD(x",               # does not parse
]

print("program evaluation at (x, y) = (3, 4)")
for text in programs:
    try:
        e = parse(text)
    except ParseError as exc:
        print(f"  {text:55s} parse error ({exc.kind})")
        continue
    print(f"  {text:55s} depth={depth(e)} value={evaluate(e, 3, 4)} probe_ok={probe_validate(e)}")

print("\ngate decisions over 2000 proposals each, eps = 0.25")
cfg = GateConfig(0.25)
rng = np.random.default_rng(cfg.seed)
for text in programs:
    out = exec_check(text, (3, 4))
    rate = np.mean([admit(out, cfg, rng) for _ in range(2000)])
    print(f"  exec={out.exec} reason={str(out.reason):8s} admitted {rate:.3f}  {text}")

print("\nholdout-style programs (depth 4..6, literals in [-10, 10])")
rng = np.random.default_rng(2024)
for _ in range(3):
    e = generate(rng, 4, 6, -10, 10)
    print(f"  depth {depth(e)}: {render(e)}")

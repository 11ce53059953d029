import json
from dataclasses import replace

import numpy as np
import pytest

from gatedplay.dsl import depth, evaluate, parse
from gatedplay.harness import (CSV_COLUMNS, MATRIX_LABELS, PHASE_COLUMNS, SWEEP_GRID, MetricsRow,
                               RunConfig, SelfPlay, adaptive_schedule, dump_config, emit,
                               first_step_at_or_above, holdout_eval, late_mean, late_window,
                               load_config, make_holdout, make_label, parse_label, read_csv_log,
                               read_holdout, read_log, run, run_matrix, sweep_epsilon,
                               write_holdout, write_phase_table)
from gatedplay.policy import Solver
from gatedplay.rewards import grounded_reward, intrinsic_rewards

SHORT = dict(steps=12, holdout_n=30, holdout_every=5)


def test_labels_round_trip():
    assert len(MATRIX_LABELS) == 7
    for label in MATRIX_LABELS:
        p, s, gate = parse_label(label)
        assert make_label(p, s, gate) == label
        cfg = RunConfig.from_label(label)
        assert cfg.epsilon == (0.0 if gate == "exec" else 1.0)
    assert parse_label("GI+off") == ("grounded", "intrinsic", "off")
    with pytest.raises(ValueError):
        parse_label("XY+on")


def test_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# a comment\nlabel = GI+off\ngate.epsilon = 0.4\nsteps = 7\nholdout.depth = 4:6\nb_S = 4\n")
    cfg = load_config(path)
    assert (cfg.proposer_reward, cfg.solver_reward) == ("grounded", "intrinsic")
    assert cfg.epsilon == 0.4 and cfg.steps == 7 and cfg.batch_solver == 4
    assert cfg.holdout_depth == (4, 6)
    again = tmp_path / "again.cfg"
    again.write_text(dump_config(cfg))
    assert load_config(again) == cfg
    path.write_text("nonsense = 1\n")
    with pytest.raises(ValueError):
        load_config(path)


def test_zero_steps_logs_only_holdout_row():
    rows = run(RunConfig(steps=0, holdout_n=30))
    assert len(rows) == 1 and rows[0].step == 0 and rows[0].holdout_acc is not None


def test_replay_is_bit_identical(tmp_path):
    cfg = RunConfig.from_label("II+off", **SHORT)
    a = run(replace(cfg, out=str(tmp_path / "a")))
    b = run(replace(cfg, out=str(tmp_path / "b")))
    assert a == b
    for name in ("metrics.csv", "metrics.jsonl"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_emit_round_trip(tmp_path):
    rows = run(RunConfig.from_label("GI+off", **SHORT))
    csv_path, jsonl_path = emit(rows, tmp_path)
    assert csv_path.read_text().splitlines()[0] == ",".join(CSV_COLUMNS)
    assert len(jsonl_path.read_text().splitlines()) == SHORT["steps"] + 1
    back = read_csv_log(csv_path)
    for r, q in zip(rows, back):
        for c in CSV_COLUMNS:
            assert getattr(r, c) == getattr(q, c)
    assert read_log(jsonl_path) == rows


def test_metrics_ranges_and_holdout_cadence():
    rows = run(RunConfig.from_label("II+off", **SHORT))
    for r in rows[1:]:
        for c in ("grounded_acc", "intrinsic_mean", "eligibility", "proposer_reward"):
            v = getattr(r, c)
            assert v is None or 0.0 <= v <= 1.0
        assert r.gap is None or -1.0 <= r.gap <= 1.0
        assert r.epsilon == 1.0
        assert (r.holdout_acc is not None) == (r.step % 5 == 0 or r.step == SHORT["steps"])


def test_gap_recomputed_from_rollouts():
    rows = run(RunConfig.from_label("II+off", log_rollouts=True, **SHORT))
    for r in rows[1:]:
        gaps = []
        for rec in r.extra["rollouts"]:
            if rec["output"] is None:
                continue
            intr = np.mean(intrinsic_rewards(rec["answers"]))
            grd = np.mean([grounded_reward(a, rec["output"]) for a in rec["answers"]])
            gaps.append(float(intr) - float(grd))
        assert (r.gap is None) == (not gaps)
        if gaps:
            assert r.gap == float(np.mean(gaps))


def test_seed_pool_bootstrap():
    sp = SelfPlay(RunConfig(steps=0, holdout_n=30))
    assert len(sp.pool) == 24
    for t in sp.pool:
        assert t.exec == 1 and 1 <= depth(t.expr) <= 3
        assert all(-10 <= v <= 10 for v in t.input)
        assert t.output == str(evaluate(t.expr, *t.input))


def test_holdout_is_stratified_and_reproducible(tmp_path):
    tasks = make_holdout(2024, 150, (4, 6))
    assert make_holdout(2024, 150, (4, 6))[17].to_line() == tasks[17].to_line()
    counts = np.bincount([depth(t.expr) for t in tasks])
    assert list(counts[4:7]) == [50, 50, 50]
    assert all(str(evaluate(t.expr, *t.input)) == t.output for t in tasks)
    write_holdout(tmp_path / "h.tsv", tasks)
    back = read_holdout(tmp_path / "h.tsv")
    assert [(t.program_text, t.input, t.output) for t in back] == [(t.program_text, t.input, t.output) for t in tasks]


def test_holdout_eval_limits():
    tasks = make_holdout(7, 60, (4, 6))
    exact = Solver()
    p = exact.default_params()
    p["strategy"][:] = [[60, 0, 0, 0, 0]]
    p["noise"] = np.float64(-60)
    exact.set_params(p)
    assert holdout_eval(exact, tasks, np.random.default_rng(0)) == 1.0
    zero = Solver()
    p = zero.default_params()
    p["strategy"][:] = [[0, 0, 60, 0, 0]]
    zero.set_params(p)
    expected = sum(t.output == "0" for t in tasks) / len(tasks)
    assert holdout_eval(zero, tasks, np.random.default_rng(0)) == expected


def test_loop_order_and_eligibility_at_closed_gate():
    sp = SelfPlay(RunConfig.from_label("GI+exec", **SHORT))
    sp.run()
    for r in sp.rows[1:]:
        n_ok = r.extra["reasons"].get("ok", 0)
        assert r.eligibility == n_ok / 8
    # admissions of a step lead that step's solver batch
    ids = sp.rows[-1].extra["batch_ids"]
    admitted = sp.pool.stats.admitted_ids
    assert ids[:len(admitted)] == admitted[:8]


def test_checkpoint_resume_is_exact(tmp_path):
    cfg = RunConfig.from_label("II+exec", steps=20, holdout_n=30, holdout_every=10)
    full = SelfPlay(cfg)
    full.run()
    part = SelfPlay(cfg)
    part.run(until=8)
    part.save_checkpoint(tmp_path)
    resumed = SelfPlay.from_checkpoint(tmp_path, cfg)
    resumed.run()
    assert resumed.rows == full.rows
    for k in full.solver.params:
        np.testing.assert_array_equal(resumed.solver.params[k], full.solver.params[k])


def test_matrix_runs_every_label():
    logs = run_matrix(RunConfig(steps=3, holdout_n=30), workers=1)
    assert list(logs) == list(MATRIX_LABELS)
    for label, rows in logs.items():
        assert not isinstance(rows, str)
        assert rows[-1].epsilon == (0.0 if label.endswith("exec") else 1.0)


def test_matrix_isolates_failures(monkeypatch):
    import gatedplay.harness as h
    real = h.run

    def flaky(cfg, holdout=None):
        if cfg.label == "GG+off":
            raise FloatingPointError("boom")
        return real(cfg, holdout)

    monkeypatch.setattr(h, "run", flaky)
    logs = run_matrix(RunConfig(steps=2, holdout_n=30), workers=1)
    assert isinstance(logs["GG+off"], str) and "boom" in logs["GG+off"]
    assert sum(isinstance(v, str) for v in logs.values()) == 1


def test_sweep_table(tmp_path):
    assert len(SWEEP_GRID) == 7
    table, logs = sweep_epsilon(RunConfig(steps=5, holdout_n=30), (0.0, 0.5), seeds=[0, 1], workers=1)
    assert [r["epsilon"] for r in table] == [0.0, 0.5]
    assert all(r["youden_j"] == 1.0 - r["epsilon"] for r in table)
    assert len(logs) == 4
    path = write_phase_table(table, tmp_path / "phase.csv")
    assert path.read_text().splitlines()[0] == ",".join(PHASE_COLUMNS)


def test_late_window_is_final_fifth():
    rows = [MetricsRow(step=s, gap=float(s)) for s in range(0, 101)]
    window = late_window(rows)
    assert [r.step for r in window] == list(range(81, 101))
    assert late_mean(rows, "gap") == np.mean(range(81, 101))


def test_first_step_at_or_above():
    rows = [MetricsRow(step=s, gap=g) for s, g in enumerate([None, 0.1, 0.9, 0.2])]
    assert first_step_at_or_above(rows, "gap", 0.8) == 2
    assert first_step_at_or_above(rows, "gap", 0.95) == float("inf")


def test_schedule_marks_switch_and_epsilon():
    cfg = RunConfig.from_label("II+exec", steps=12, holdout_n=30, holdout_every=6)
    rows = adaptive_schedule(cfg, switch_step=5, epsilon2=0.05)
    assert [r.epsilon for r in rows[1:6]] == [0.0] * 5
    assert all(r.epsilon == 0.05 for r in rows[6:])
    assert rows[5].extra["switch"] == {"step": 5, "epsilon": 0.05}


def test_schedule_with_unchanged_epsilon_matches_baseline():
    cfg = RunConfig.from_label("II+exec", steps=12, holdout_n=30, holdout_every=6)
    base = run(cfg)
    sched = adaptive_schedule(cfg, switch_step=5, epsilon2=0.0)
    strip = lambda rs: [replace(r, extra={k: v for k, v in r.extra.items() if k != "switch"}) for r in rs]
    assert strip(sched) == strip(base)


def test_jsonl_is_plain_json(tmp_path):
    rows = run(RunConfig.from_label("II+off", log_rollouts=True, steps=2, holdout_n=30))
    _, jsonl = emit(rows, tmp_path)
    rec = json.loads(jsonl.read_text().splitlines()[-1])
    assert set(CSV_COLUMNS) <= set(rec)
    assert len(rec["extra"]["rollouts"]) == 8
    assert all(len(r["answers"]) == 16 for r in rec["extra"]["rollouts"])

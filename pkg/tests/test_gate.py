import numpy as np
import pytest

from gatedplay.gate import GateConfig, admit, exec_check


def test_exec_check_valid():
    out = exec_check("ADD(x, y)", (2, 3))
    assert out.exec == 1 and out.output == "5" and out.parseable


def test_exec_check_failure_reasons():
    assert exec_check("ADD(x", (0, 0)).reason == "parse"
    assert not exec_check("ADD(x", (0, 0)).parseable
    probe = exec_check("DIV(1, x)", (1, 0))
    assert probe.exec == 0 and probe.reason == "probe" and probe.value == "1"
    assert probe.output is None
    rt = exec_check("DIV(1, x)", (0, 0))
    assert rt.reason == "probe" and rt.value is None


def test_runtime_reason_needs_probe_pass():
    # total on the probe grid but rejects at x=3
    text = "DIV(1, SUB(x, 3))"
    assert exec_check(text, (0, 0)).exec == 1
    out = exec_check(text, (3, 0))
    assert out.exec == 0 and out.reason == "runtime"


def test_gate_closed_never_leaks():
    cfg = GateConfig(0.0)
    rng = np.random.default_rng(0)
    bad = exec_check("DIV(1, x)", (0, 0))
    assert not any(admit(bad, cfg, rng) for _ in range(1000))


def test_gate_open_admits_parseable_only():
    cfg = GateConfig(1.0)
    rng = np.random.default_rng(0)
    assert admit(exec_check("DIV(1, x)", (0, 0)), cfg, rng)
    assert not admit(exec_check("ADD(x", (0, 0)), cfg, rng)


def test_valid_tasks_consume_no_randomness():
    cfg = GateConfig(0.5)
    rng = np.random.default_rng(4)
    state = rng.bit_generator.state
    assert admit(exec_check("ADD(x, 1)", (0, 0)), cfg, rng)
    assert not admit(exec_check("FOO", (0, 0)), cfg, rng)
    assert rng.bit_generator.state == state


def test_gate_config_validation_and_youden():
    with pytest.raises(ValueError):
        GateConfig(1.5)
    assert GateConfig(0.4).youden == pytest.approx(0.6)


@pytest.mark.parametrize("eps", [0.05, 0.4, 0.7])
def test_leak_frequency(eps):
    cfg = GateConfig(eps)
    rng = np.random.default_rng(123)
    bad = exec_check("DIV(1, x)", (0, 0))
    n = 10_000
    k = sum(admit(bad, cfg, rng) for _ in range(n))
    se = np.sqrt(eps * (1 - eps) / n)
    assert abs(k / n - eps) <= 3 * se

import numpy as np
import pytest

from gatedplay.pool import Task
from gatedplay.rewards import (AccuracyEstimate, MissingGold, estimate_accuracy, grounded_reward,
                               grpo_advantages, intrinsic_grounded_gap, intrinsic_rewards,
                               proposer_reward)

from oracles import brute_force_intrinsic, class_square_sum


def test_grounded_reward():
    assert grounded_reward("5", "5") == 1
    assert grounded_reward(" 5 ", "5") == 1
    assert grounded_reward("5", "6") == 0
    assert grounded_reward("05", " 5") == 1
    assert grounded_reward("-0", "0") == 1
    assert grounded_reward("five", "five") == 0
    with pytest.raises(MissingGold):
        grounded_reward("5", None)


def test_intrinsic_examples():
    np.testing.assert_array_equal(intrinsic_rewards(["7", "7", "0", "7"]), [0.75, 0.75, 0.25, 0.75])
    assert np.all(intrinsic_rewards(["3"] * 16) == 1.0)
    assert np.all(intrinsic_rewards([str(i) for i in range(16)]) == 1 / 16)
    # canonical forms merge
    np.testing.assert_array_equal(intrinsic_rewards(["1", " 01", "x"]), [2 / 3, 2 / 3, 1 / 3])


def test_intrinsic_against_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(200):
        answers = [str(v) for v in rng.integers(-2, 3, size=16)] + ["??"] * int(rng.integers(0, 3))
        r = intrinsic_rewards(answers)
        assert list(r) == brute_force_intrinsic(answers)
        assert abs(r.mean() - class_square_sum(answers)) < 1e-12


def test_intrinsic_permutation_equivariant():
    a = ["1", "2", "2", "3", "2", "1"]
    perm = [5, 3, 0, 1, 4, 2]
    np.testing.assert_array_equal(intrinsic_rewards(a)[perm], intrinsic_rewards([a[i] for i in perm]))


def test_grpo_advantages():
    assert np.all(grpo_advantages([0.5, 0.5, 0.5]) == 0.0)
    np.testing.assert_allclose(grpo_advantages([1, 0]), [1, -1], atol=1e-5)
    np.testing.assert_allclose(grpo_advantages([1, 1, 0, 0]), [1, 1, -1, -1], atol=1e-5)
    with pytest.raises(ValueError):
        grpo_advantages([1.0])


def test_grpo_moments():
    rng = np.random.default_rng(1)
    for _ in range(100):
        r = rng.random(16)
        a = grpo_advantages(r)
        assert abs(a.mean()) < 1e-15
        assert abs(a.std() - 1) < 1e-5


def test_proposer_reward():
    assert proposer_reward(AccuracyEstimate(0.0, 8, "executor")) == 1.0
    assert proposer_reward(AccuracyEstimate(1.0, 8, "executor")) == 0.0
    assert proposer_reward(AccuracyEstimate(3 / 8, 8, "claimed")) == 0.625
    vals = [proposer_reward(AccuracyEstimate(k / 8, 8, "executor")) for k in range(9)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_estimate_accuracy():
    t = Task(1, "ADD(x, 1)", (1, 0), output="2", claimed="3")
    rng = np.random.default_rng(0)
    assert estimate_accuracy(t, lambda r: "2", "executor", 8, rng).alpha == 1.0
    assert estimate_accuracy(t, lambda r: "2", "claimed", 8, rng).alpha == 0.0
    est = estimate_accuracy(t, lambda r: "3", "claimed", 8, rng)
    assert est.alpha == 1.0 and est.n == 8 and est.reference == "claimed"
    leaked = Task(2, "DIV(1, x)", (0, 0), output=None, claimed="1", exec=0)
    with pytest.raises(MissingGold):
        estimate_accuracy(leaked, lambda r: "1", "executor", 8, rng)
    with pytest.raises(ValueError):
        estimate_accuracy(t, lambda r: "1", "oracle", 8, rng)


def test_estimate_accuracy_monte_carlo():
    t = Task(1, "x", (4, 0), output="4")
    rng = np.random.default_rng(5)
    fn = lambda r: "4" if r.random() < 0.5 else "5"
    alphas = [estimate_accuracy(t, fn, "executor", 8, rng).alpha for _ in range(10_000)]
    se = np.sqrt(0.25 / 8 / 10_000)
    assert abs(np.mean(alphas) - 0.5) < 3 * se


def test_gap():
    assert intrinsic_grounded_gap(["4"] * 16, "4") == 0.0
    assert intrinsic_grounded_gap(["5"] * 16, "4") == 1.0
    assert intrinsic_grounded_gap(["4"] * 8 + ["9"] * 8, "4") == 0.0
    assert intrinsic_grounded_gap(["4"] * 16, None) is None

"""
Tests for the Monte Carlo statistics
"""
from dataclasses import replace

import pytest

from dqotp import DecoyLoop, plan_for
from qubit_core import HADAMARD, PAULI_X, PAULI_Z, InvalidArgumentError, Rng, SwapTestComparator, fidelity
from tamper_analyzer import (
    analytic_attack_success,
    analytic_tamper_rate,
    attack_stats,
    minimum_key_lengths,
    random_key,
    run_trials,
    state_pair_with_fidelity,
    swap_stats,
    tamper_adversary,
    tamper_stats,
    trial_seed,
    with_random_keys,
)


def test_trial_seed_wraps():
    assert trial_seed(10, 3) == 13
    assert trial_seed(2 ** 64 - 1, 1) == 0


def test_run_trials_keeps_order():
    assert run_trials(lambda i: i * i, 5, workers=3) == [0, 1, 4, 9, 16]
    with pytest.raises(InvalidArgumentError):
        run_trials(lambda i: i, 0)


@pytest.mark.parametrize("n,lengths", [(1, (4, 6)), (4, (4, 6)), (5, (6, 8)), (8, (6, 10))])
def test_minimum_key_lengths(n, lengths):
    assert minimum_key_lengths(n) == lengths


def test_random_keys_satisfy_bounds(example_cfg):
    rng = Rng(3)
    for _ in range(20):
        cfg = with_random_keys(example_cfg, rng)
        cfg.validate()
    key = random_key(6, Rng(1))
    assert key.length == 6 and not key.is_zero()


def test_analytic_tamper_rates(example_cfg):
    plan = plan_for(example_cfg.key_a, example_cfg.n, example_cfg.loop)
    # decoy labels 1, 0, +, 0
    assert analytic_tamper_rate(plan, "decoy", PAULI_X) == pytest.approx(0.75)
    assert analytic_tamper_rate(plan, "decoy", PAULI_Z) == pytest.approx(0.25)
    assert analytic_tamper_rate(plan, "decoy", HADAMARD) == pytest.approx(0.5)
    assert analytic_tamper_rate(plan, "message", PAULI_X) == 0.0


def test_tamper_adversary_targets(example_cfg):
    decoy = tamper_adversary(example_cfg, "decoy", PAULI_X, Rng(0))
    assert decoy.targets[0][1] in (1, 3, 5, 8)
    message = tamper_adversary(example_cfg, "message", PAULI_X, Rng(0))
    (_, position), (_, rank), _ = message.targets
    assert position == (2, 4, 6, 7)[rank - 1]
    with pytest.raises(InvalidArgumentError):
        tamper_adversary(example_cfg, "header", PAULI_X, Rng(0))


def test_message_tampering_is_never_detected(example_cfg, zeros):
    stats = tamper_stats(example_cfg, zeros, "message", PAULI_X, 200)
    assert stats.detections == 0
    assert stats.analytic_rate == 0.0


@pytest.mark.statistical
@pytest.mark.parametrize("op", [PAULI_X, PAULI_Z, HADAMARD])
def test_decoy_tampering_matches_analytic_rate(example_cfg, zeros, op):
    stats = tamper_stats(example_cfg, zeros, "decoy", op, 10000, workers=4)
    assert stats.empirical_rate == pytest.approx(stats.analytic_rate, abs=0.02)


def test_state_pair_fidelity():
    for target in (0.0, 0.25, 0.5, 1.0):
        a, b = state_pair_with_fidelity(target)
        assert fidelity(a, b) == pytest.approx(target, abs=1e-9)
    with pytest.raises(InvalidArgumentError):
        state_pair_with_fidelity(1.5)


def test_swap_stats_equal_states_always_pass():
    rows = swap_stats([1, 3], [1.0], 500, seed=0)
    assert [row.false_equal for row in rows] == [500, 500]
    assert all(row.analytic_rate == 1.0 for row in rows)


@pytest.mark.statistical
def test_swap_stats_match_analytic_rates():
    for row in swap_stats([1, 3, 5], [0.0, 0.5], 10000, seed=42):
        assert row.empirical_rate == pytest.approx(row.analytic_rate, abs=0.02)


def test_ideal_attack_always_succeeds(example_cfg):
    stats = attack_stats(example_cfg, None, 20)
    assert stats.success_rate == 1.0
    assert stats.analytic_success_rate == 1.0


def test_attack_with_fresh_keys(example_cfg):
    stats = attack_stats(example_cfg, None, 20, random_keys=True, oracle=True)
    assert stats.success_rate == 1.0
    assert all(report.evidence_matches_genuine for report in stats.reports)


def test_worker_count_does_not_change_results(swap_cfg):
    serial = attack_stats(swap_cfg, None, 12)
    threaded = attack_stats(swap_cfg, None, 12, workers=4)
    assert [r.succeeded for r in serial.reports] == [r.succeeded for r in threaded.reports]


def test_analytic_attack_success_under_swap_test(swap_cfg):
    assert analytic_attack_success(swap_cfg) == pytest.approx((1 - 0.5 ** 5) ** 4)


@pytest.mark.statistical
def test_swap_attack_matches_analytic_rate(swap_cfg):
    stats = attack_stats(swap_cfg, None, 2000, workers=4)
    assert stats.success_rate == pytest.approx(stats.analytic_success_rate, abs=0.03)


def test_phase_flip_on_x_basis_decoys_always_detected(example_cfg, zeros):
    cfg = replace(example_cfg, loop=DecoyLoop(("+", "-")))
    stats = tamper_stats(cfg, zeros, "decoy", PAULI_Z, 100)
    assert stats.detections == 100
    assert stats.analytic_rate == 1.0


@pytest.mark.statistical
def test_single_round_swap_attack_matches_product_formula(swap_cfg):
    cfg = replace(swap_cfg, comparator=SwapTestComparator(1))
    stats = attack_stats(cfg, None, 2000, workers=4)
    assert stats.analytic_success_rate == pytest.approx(0.5 ** 4)
    assert stats.success_rate == pytest.approx(stats.analytic_success_rate, abs=0.03)

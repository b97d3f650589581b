"""
Tests for single-qubit states, unitaries, measurement and comparators
"""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qubit_core import (
    HADAMARD,
    IDENTITY,
    NAMED_UNITARIES,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    PHASE_S,
    Basis,
    IdealComparator,
    InvalidArgumentError,
    Qubit,
    QubitSeq,
    Rng,
    SwapTestComparator,
    Unitary2,
    apply_unitary,
    expected_outcome,
    fidelity,
    ideal_compare,
    measure,
    sequences_equal,
    standard_state,
    swap_test_compare,
)

angles = st.floats(min_value=0, max_value=2 * math.pi, allow_nan=False)


def qubit_from_angles(theta, phi):
    return Qubit.normalized(math.cos(theta / 2), complex(math.cos(phi), math.sin(phi)) * math.sin(theta / 2))


# =============================================================================
# States
# =============================================================================

def test_standard_states_are_normalized_and_labelled():
    for label in ("0", "1", "+", "-"):
        q = standard_state(label)
        assert abs(q.alpha) ** 2 + abs(q.beta) ** 2 == pytest.approx(1.0)
        assert q.standard_label() == label


def test_unnormalized_qubit_rejected():
    with pytest.raises(InvalidArgumentError):
        Qubit(1, 1)
    with pytest.raises(InvalidArgumentError):
        Qubit.normalized(0, 0)


def test_unknown_label_rejected():
    with pytest.raises(InvalidArgumentError):
        standard_state("x")


def test_generic_state_has_no_label():
    assert Qubit.normalized(1, 2).standard_label() is None


def test_qubit_seq_positions_are_one_based():
    seq = QubitSeq.from_labels("01+-")
    assert seq.n == 4
    assert seq.at(1) == standard_state("0")
    assert seq.at(4) == standard_state("-")
    with pytest.raises(InvalidArgumentError):
        seq.at(0)
    with pytest.raises(InvalidArgumentError):
        seq.at(5)


def test_qubit_seq_replace_returns_new_register():
    seq = QubitSeq.from_labels("00")
    updated = seq.replace(2, standard_state("1"))
    assert updated.labels() == ["0", "1"]
    assert seq.labels() == ["0", "0"]


def test_empty_register_rejected():
    with pytest.raises(InvalidArgumentError):
        QubitSeq(())


# =============================================================================
# Unitaries
# =============================================================================

def test_named_unitaries_act_as_expected():
    zero, one, plus, minus = (standard_state(label) for label in ("0", "1", "+", "-"))
    assert apply_unitary(PAULI_X, zero).standard_label() == "1"
    assert apply_unitary(HADAMARD, zero).standard_label() == "+"
    assert apply_unitary(HADAMARD, one).standard_label() == "-"
    assert apply_unitary(PAULI_Z, plus).standard_label() == "-"
    assert apply_unitary(IDENTITY, minus).standard_label() == "-"
    # Y|0> = i|1>, equal to |1> up to global phase
    assert fidelity(apply_unitary(PAULI_Y, zero), one) == 1.0
    assert fidelity(apply_unitary(PHASE_S, plus), plus) == pytest.approx(0.5)


def test_named_unitaries_registry():
    assert set(NAMED_UNITARIES) == {"I", "X", "Y", "Z", "H", "S"}


def test_non_unitary_matrix_rejected():
    with pytest.raises(InvalidArgumentError):
        Unitary2(np.array([[1, 1], [0, 1]]))
    with pytest.raises(InvalidArgumentError):
        Unitary2(np.eye(3))


def test_random_unitary_is_reproducible():
    a = Unitary2.random(Rng(5))
    b = Unitary2.random(Rng(5))
    assert np.allclose(a.matrix, b.matrix)
    assert np.allclose(a.matrix @ a.matrix.conj().T, np.eye(2))


@given(seed=st.integers(0, 2 ** 32), theta_a=angles, phi_a=angles, theta_b=angles, phi_b=angles)
@settings(max_examples=200, deadline=None)
def test_unitaries_preserve_fidelity(seed, theta_a, phi_a, theta_b, phi_b):
    u = Unitary2.random(Rng(seed))
    a, b = qubit_from_angles(theta_a, phi_a), qubit_from_angles(theta_b, phi_b)
    assert fidelity(apply_unitary(u, a), apply_unitary(u, b)) == pytest.approx(fidelity(a, b), abs=1e-9)


@given(theta=angles, phi=angles)
@settings(max_examples=50, deadline=None)
def test_unitaries_preserve_norm(theta, phi):
    q = qubit_from_angles(theta, phi)
    for u in NAMED_UNITARIES.values():
        out = apply_unitary(u, q)
        assert abs(out.alpha) ** 2 + abs(out.beta) ** 2 == pytest.approx(1.0, abs=1e-12)


@given(theta=angles, phi=angles)
@settings(max_examples=50, deadline=None)
def test_involutions_restore_state(theta, phi):
    q = qubit_from_angles(theta, phi)
    for u in (PAULI_X, PAULI_Y, PAULI_Z, HADAMARD):
        assert fidelity(apply_unitary(u, apply_unitary(u, q)), q) == 1.0


# =============================================================================
# Measurement
# =============================================================================

def test_measurement_in_own_basis_is_certain():
    rng = Rng(1)
    for label in ("0", "1", "+", "-"):
        for _ in range(50):
            outcome, post = measure(standard_state(label), Basis.for_label(label), rng)
            assert outcome == expected_outcome(label)
            assert post.standard_label() == label


def test_measurement_is_reproducible_per_seed():
    plus = standard_state("+")
    first = [measure(plus, Basis.Z, rng)[0] for rng in [Rng(11)] for _ in range(64)]
    second = [measure(plus, Basis.Z, rng)[0] for rng in [Rng(11)] for _ in range(64)]
    assert first == second


@pytest.mark.statistical
def test_conjugate_basis_measurement_is_balanced():
    rng = Rng(3)
    ones = sum(measure(standard_state("+"), Basis.Z, rng)[0] for _ in range(10000))
    assert ones / 10000 == pytest.approx(0.5, abs=0.02)


def test_derived_streams_are_independent_of_parent_use():
    root = Rng(9)
    child_before = root.derive(1).random()
    root.random()
    assert root.derive(1).random() == child_before
    assert Rng(9).derive(2).random() != child_before


def test_seed_range_enforced():
    with pytest.raises(InvalidArgumentError):
        Rng(-1)
    with pytest.raises(InvalidArgumentError):
        Rng(2 ** 64)


# =============================================================================
# Comparators
# =============================================================================

def test_fidelity_known_values():
    assert fidelity(standard_state("0"), standard_state("1")) == 0.0
    assert fidelity(standard_state("0"), standard_state("+")) == pytest.approx(0.5)
    phased = Qubit(0, 1j)
    assert fidelity(phased, standard_state("1")) == 1.0


def test_ideal_compare_ignores_global_phase():
    assert ideal_compare(Qubit(1j, 0), standard_state("0"), 1e-9)
    assert not ideal_compare(standard_state("0"), standard_state("+"), 1e-9)


def test_ideal_epsilon_range():
    with pytest.raises(InvalidArgumentError):
        IdealComparator(0.0)
    with pytest.raises(InvalidArgumentError):
        IdealComparator(0.5)


@given(theta=angles, phi=angles, m=st.integers(min_value=1, max_value=20), seed=st.integers(0, 2 ** 32))
@settings(max_examples=50, deadline=None)
def test_swap_test_never_rejects_equal_states(theta, phi, m, seed):
    q = qubit_from_angles(theta, phi)
    assert swap_test_compare(q, q, m, Rng(seed))


def test_swap_test_repetition_count_validated():
    with pytest.raises(InvalidArgumentError):
        swap_test_compare(standard_state("0"), standard_state("0"), 0, Rng(0))
    with pytest.raises(InvalidArgumentError):
        SwapTestComparator(0)


@pytest.mark.statistical
@pytest.mark.parametrize("m", [1, 2, 5])
def test_swap_test_false_equal_rate_on_orthogonal_states(m):
    rng = Rng(100 + m)
    zero, one = standard_state("0"), standard_state("1")
    hits = sum(swap_test_compare(zero, one, m, rng) for _ in range(10000))
    assert hits / 10000 == pytest.approx(0.5 ** m, abs=0.02)


def test_sequences_equal_qubitwise():
    rng = Rng(0)
    ideal = IdealComparator()
    a = QubitSeq.from_labels("0+1")
    assert sequences_equal(a.qubits, QubitSeq.from_labels("0+1").qubits, ideal, rng)
    assert not sequences_equal(a.qubits, QubitSeq.from_labels("0-1").qubits, ideal, rng)
    assert not sequences_equal(a.qubits, QubitSeq.from_labels("0+").qubits, ideal, rng)


def test_comparator_descriptions():
    assert IdealComparator(1e-6).describe() == {"kind": "ideal", "epsilon": 1e-6}
    assert SwapTestComparator(3).describe() == {"kind": "swap", "m": 3}

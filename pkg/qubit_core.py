"""
Single-qubit pure-state arithmetic for the AQS simulator
States, unitaries, seeded measurement, fidelity and the two state comparators
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-12
UNITARY_TOLERANCE = 1e-10
STANDARD_LABELS = ("0", "1", "+", "-")

_SQRT_HALF = 1 / np.sqrt(2)


class InvalidArgumentError(ValueError):
    """Raised for malformed states, matrices or comparator parameters"""


@dataclass(frozen=True)
class Qubit:
    """Normalized single-qubit pure state alpha|0> + beta|1>"""
    alpha: complex
    beta: complex

    def __post_init__(self):
        object.__setattr__(self, 'alpha', complex(self.alpha))
        object.__setattr__(self, 'beta', complex(self.beta))
        norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise InvalidArgumentError(f"Qubit amplitudes not normalized: |a|^2+|b|^2={norm!r}")

    @classmethod
    def normalized(cls, alpha: complex, beta: complex) -> 'Qubit':
        """Build a qubit after rescaling the amplitudes to unit norm"""
        norm = np.sqrt(abs(alpha) ** 2 + abs(beta) ** 2)
        if norm == 0:
            raise InvalidArgumentError("Zero vector is not a quantum state")
        return cls(alpha / norm, beta / norm)

    def vector(self) -> np.ndarray:
        return np.array([self.alpha, self.beta], dtype=complex)

    def standard_label(self) -> Optional[str]:
        """Return the standard-state label whose amplitudes this qubit matches exactly"""
        for label in STANDARD_LABELS:
            reference = standard_state(label)
            if (abs(self.alpha - reference.alpha) <= NORM_TOLERANCE
                    and abs(self.beta - reference.beta) <= NORM_TOLERANCE):
                return label
        return None


@dataclass(frozen=True)
class QubitSeq:
    """Ordered register of qubits; positions are 1-based"""
    qubits: Tuple[Qubit, ...]

    def __post_init__(self):
        object.__setattr__(self, 'qubits', tuple(self.qubits))
        if not self.qubits:
            raise InvalidArgumentError("Qubit sequence must hold at least one qubit")

    @classmethod
    def from_labels(cls, labels: Union[str, Iterable[str]]) -> 'QubitSeq':
        """Build a register from a basis string such as '0000' or '+-01'"""
        return cls(tuple(standard_state(label) for label in labels))

    @property
    def n(self) -> int:
        return len(self.qubits)

    def __len__(self) -> int:
        return len(self.qubits)

    def __iter__(self) -> Iterator[Qubit]:
        return iter(self.qubits)

    def at(self, position: int) -> Qubit:
        """Qubit at a 1-based position"""
        if not 1 <= position <= len(self.qubits):
            raise InvalidArgumentError(f"Position {position} outside 1..{len(self.qubits)}")
        return self.qubits[position - 1]

    def replace(self, position: int, qubit: Qubit) -> 'QubitSeq':
        self.at(position)
        updated = list(self.qubits)
        updated[position - 1] = qubit
        return QubitSeq(tuple(updated))

    def labels(self) -> List[Optional[str]]:
        return [q.standard_label() for q in self.qubits]


class Basis(Enum):
    """Measurement bases behind the four decoy states"""
    Z = "Z"
    X = "X"

    def vectors(self) -> Tuple[Qubit, Qubit]:
        if self is Basis.Z:
            return standard_state("0"), standard_state("1")
        return standard_state("+"), standard_state("-")

    @classmethod
    def for_label(cls, label: str) -> 'Basis':
        if label in ("0", "1"):
            return cls.Z
        if label in ("+", "-"):
            return cls.X
        raise InvalidArgumentError(f"Unknown state label: {label!r}")


def expected_outcome(label: str) -> int:
    """Outcome bit that a faithful preparation of `label` yields in its own basis"""
    Basis.for_label(label)
    return 0 if label in ("0", "+") else 1


@dataclass(frozen=True, eq=False)
class Unitary2:
    """2x2 unitary matrix"""
    matrix: np.ndarray
    name: str = "U"

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=complex)
        if matrix.shape != (2, 2):
            raise InvalidArgumentError(f"Unitary must be 2x2, got shape {matrix.shape}")
        product = matrix @ matrix.conj().T
        if not np.allclose(product, np.eye(2), rtol=0.0, atol=UNITARY_TOLERANCE):
            raise InvalidArgumentError(f"Matrix {self.name} is not unitary")
        matrix.setflags(write=False)
        object.__setattr__(self, 'matrix', matrix)

    @classmethod
    def random(cls, rng: 'Rng') -> 'Unitary2':
        """Haar-random unitary from the QR decomposition of a complex Gaussian matrix"""
        gen = rng.generator
        z = (gen.standard_normal((2, 2)) + 1j * gen.standard_normal((2, 2))) / np.sqrt(2)
        q, r = np.linalg.qr(z)
        phases = np.diag(r) / np.abs(np.diag(r))
        return cls(q * phases, name="haar")

    def __repr__(self) -> str:
        return f"Unitary2({self.name})"


IDENTITY = Unitary2(np.eye(2), name="I")
PAULI_X = Unitary2(np.array([[0, 1], [1, 0]]), name="X")
PAULI_Y = Unitary2(np.array([[0, -1j], [1j, 0]]), name="Y")
PAULI_Z = Unitary2(np.array([[1, 0], [0, -1]]), name="Z")
HADAMARD = Unitary2(np.array([[1, 1], [1, -1]]) * _SQRT_HALF, name="H")
PHASE_S = Unitary2(np.array([[1, 0], [0, 1j]]), name="S")

NAMED_UNITARIES = {u.name: u for u in (IDENTITY, PAULI_X, PAULI_Y, PAULI_Z, HADAMARD, PHASE_S)}


class Rng:
    """Seeded randomness source; one owner at a time

    Streams are reproducible per (seed, spawn_key). `derive` hands out
    statistically independent child streams without touching this one.
    """

    def __init__(self, seed: int, spawn_key: Tuple[int, ...] = ()):
        if not isinstance(seed, (int, np.integer)) or seed < 0 or seed >= 2 ** 64:
            raise InvalidArgumentError(f"Seed must be an unsigned 64-bit integer, got {seed!r}")
        self.seed = int(seed)
        self.spawn_key = tuple(spawn_key)
        sequence = np.random.SeedSequence(self.seed, spawn_key=self.spawn_key)
        self.generator = np.random.Generator(np.random.PCG64(sequence))

    def derive(self, index: int) -> 'Rng':
        return Rng(self.seed, self.spawn_key + (int(index),))

    def random(self) -> float:
        return float(self.generator.random())

    def integers(self, low: int, high: int) -> int:
        """Uniform integer in [low, high)"""
        return int(self.generator.integers(low, high))

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, spawn_key={self.spawn_key})"


def standard_state(label: str) -> Qubit:
    """Exact amplitudes of |0>, |1>, |+> or |->"""
    if label == "0":
        return Qubit(1, 0)
    if label == "1":
        return Qubit(0, 1)
    if label == "+":
        return Qubit(_SQRT_HALF, _SQRT_HALF)
    if label == "-":
        return Qubit(_SQRT_HALF, -_SQRT_HALF)
    raise InvalidArgumentError(f"Unknown state label: {label!r}")


def apply_unitary(u: Unitary2, q: Qubit) -> Qubit:
    if not isinstance(u, Unitary2):
        raise InvalidArgumentError(f"Expected Unitary2, got {type(u).__name__}")
    alpha, beta = u.matrix @ q.vector()
    # rescale away rounding drift so the norm stays inside NORM_TOLERANCE
    return Qubit.normalized(alpha, beta)


def _overlap(a: Qubit, b: Qubit) -> float:
    value = abs(np.vdot(a.vector(), b.vector())) ** 2
    if value > 1.0 - NORM_TOLERANCE:
        return 1.0
    if value < NORM_TOLERANCE:
        return 0.0
    return float(value)


def measure(q: Qubit, basis: Basis, rng: Rng) -> Tuple[int, Qubit]:
    """
    Projective measurement in the Z or X basis

    Returns:
        (outcome bit, post-measurement state); outcome 0 is the basis's first vector
    """
    first, second = basis.vectors()
    p0 = _overlap(first, q)
    outcome = 0 if rng.random() < p0 else 1
    return outcome, (first if outcome == 0 else second)


def fidelity(a: Qubit, b: Qubit) -> float:
    """|<a|b>|^2"""
    return _overlap(a, b)


def ideal_compare(a: Qubit, b: Qubit, epsilon: float) -> bool:
    """Deterministic, non-destructive equality test up to global phase"""
    if not 0 < epsilon < 0.5:
        raise InvalidArgumentError(f"epsilon must lie in (0, 0.5), got {epsilon!r}")
    return fidelity(a, b) >= 1 - epsilon


def swap_test_compare(a: Qubit, b: Qubit, m: int, rng: Rng) -> bool:
    """Repeated SWAP test; reports equal only if all m rounds pass"""
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise InvalidArgumentError(f"Repetition count must be a positive integer, got {m!r}")
    pass_probability = (1 + fidelity(a, b)) / 2
    draws = rng.generator.random(int(m))
    return bool(np.all(draws < pass_probability))


@dataclass(frozen=True)
class IdealComparator:
    """Comparator model: exact fidelity threshold"""
    epsilon: float = 1e-9
    kind: str = field(default="ideal", init=False)

    def __post_init__(self):
        if not 0 < self.epsilon < 0.5:
            raise InvalidArgumentError(f"epsilon must lie in (0, 0.5), got {self.epsilon!r}")

    def equal(self, a: Qubit, b: Qubit, rng: Rng) -> bool:
        return ideal_compare(a, b, self.epsilon)

    def describe(self) -> dict:
        return {"kind": self.kind, "epsilon": self.epsilon}


@dataclass(frozen=True)
class SwapTestComparator:
    """Comparator model: m-fold SWAP test with one-sided error"""
    m: int = 5
    kind: str = field(default="swap", init=False)

    def __post_init__(self):
        if not isinstance(self.m, int) or self.m < 1:
            raise InvalidArgumentError(f"Repetition count must be a positive integer, got {self.m!r}")

    def equal(self, a: Qubit, b: Qubit, rng: Rng) -> bool:
        return swap_test_compare(a, b, self.m, rng)

    def describe(self) -> dict:
        return {"kind": self.kind, "m": self.m}


Comparator = Union[IdealComparator, SwapTestComparator]


def sequences_equal(a: Sequence[Qubit], b: Sequence[Qubit], comparator: Comparator, rng: Rng) -> bool:
    """Qubit-wise comparison; every position is compared even after a mismatch"""
    if len(a) != len(b):
        logger.debug(f"Sequence lengths differ: {len(a)} != {len(b)}")
        return False
    results = [comparator.equal(x, y, rng) for x, y in zip(a, b)]
    return all(results)

"""
D-QOTP cipher: quantum one-time pad built from key-scheduled decoy states
Splits a key into its substring tree, derives the decimal schedule,
interleaves decoys from the loop and checks them again on the way out
"""
import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

from qubit_core import (
    Basis,
    InvalidArgumentError,
    Qubit,
    QubitSeq,
    Rng,
    STANDARD_LABELS,
    expected_outcome,
    measure,
    standard_state,
)

logger = logging.getLogger(__name__)


class KeyFormatError(InvalidArgumentError):
    """Key is empty, odd-length or not a bit string"""


class NoDecoysError(ValueError):
    """The key schedule yields no decoy positions"""


class MalformedCiphertextError(ValueError):
    """Ciphertext length does not match the plan rebuilt from the key"""


class RejectReason(str, Enum):
    EAVESDROP_DETECTED = "EavesdropDetected"
    MESSAGE_MISMATCH = "MessageMismatch"
    FINGERPRINT_MISMATCH = "FingerprintMismatch"
    MALFORMED_MESSAGE = "MalformedMessage"


@dataclass(frozen=True)
class Verdict:
    """Accept / reject outcome of a decoy check or of a whole verification

    Protocol-level acceptances carry the retained signature as evidence;
    decoy-check acceptances have none.
    """
    accepted: bool
    reason: Optional[RejectReason] = None
    evidence: Optional[QubitSeq] = None
    detail: str = ""

    def __post_init__(self):
        if self.accepted and self.reason is not None:
            raise InvalidArgumentError("An accepting verdict cannot carry a reject reason")
        if not self.accepted and self.reason is None:
            raise InvalidArgumentError("A rejecting verdict needs a reason")

    @classmethod
    def accept(cls, evidence: Optional[QubitSeq] = None, detail: str = "") -> 'Verdict':
        return cls(True, None, evidence, detail)

    @classmethod
    def reject(cls, reason: RejectReason, detail: str = "") -> 'Verdict':
        return cls(False, reason, None, detail)


class EavesdropDetected(Exception):
    """Decoy measurement disagreed with the prepared state; the session is aborted"""

    def __init__(self, verdict: Verdict):
        super().__init__(verdict.detail or RejectReason.EAVESDROP_DETECTED.value)
        self.verdict = verdict


@dataclass(frozen=True)
class SecretKey:
    """Shared classical key K"""
    bits: str

    def __post_init__(self):
        if not isinstance(self.bits, str) or not self.bits:
            raise KeyFormatError("Key must be a non-empty bit string")
        if set(self.bits) - {"0", "1"}:
            raise KeyFormatError(f"Key contains non-binary characters: {self.bits!r}")
        if len(self.bits) < 2 or len(self.bits) % 2:
            raise KeyFormatError(f"Key length must be even and at least 2, got {len(self.bits)}")

    @property
    def length(self) -> int:
        return len(self.bits)

    @property
    def left_half(self) -> str:
        return self.bits[:len(self.bits) // 2]

    @property
    def right_half(self) -> str:
        return self.bits[len(self.bits) // 2:]

    def is_zero(self) -> bool:
        return "1" not in self.bits

    def __repr__(self) -> str:
        return f"SecretKey(L={self.length})"


@dataclass(frozen=True)
class TreeSplit:
    """Substring tree Q: per level i, 2^(i-1) consecutive pieces of each half"""
    t: int
    left_levels: Tuple[Tuple[str, ...], ...]
    right_levels: Tuple[Tuple[str, ...], ...]

    @property
    def entry_count(self) -> int:
        return sum(len(level) for level in self.left_levels + self.right_levels)


@dataclass(frozen=True)
class DecimalSchedule:
    """(Q)10 with zeros dropped and per-level duplicates removed"""
    left: Tuple[Tuple[int, ...], ...]
    right: Tuple[Tuple[int, ...], ...]

    def is_empty(self) -> bool:
        return not any(self.left) and not any(self.right)

    @property
    def value_count(self) -> int:
        return sum(len(level) for level in self.left + self.right)


@dataclass(frozen=True)
class DecoyLoop:
    """Cyclic sequence R of decoy state labels"""
    cycle: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, 'cycle', tuple(self.cycle))
        if not self.cycle:
            raise InvalidArgumentError("Decoy loop needs at least one state")
        bad = [label for label in self.cycle if label not in STANDARD_LABELS]
        if bad:
            raise InvalidArgumentError(f"Invalid decoy labels in loop: {bad}")

    def label_at(self, k: int) -> str:
        """Label of the k-th decoy drawn (1-based)"""
        return self.cycle[(k - 1) % len(self.cycle)]


FULL_LOOP = DecoyLoop(("0", "1", "+", "-"))


@dataclass(frozen=True)
class DecoySlot:
    position: int
    label: str


@dataclass(frozen=True)
class InsertionPlan:
    """Key-derived layout of decoys and message qubits in a ciphertext"""
    n: int
    total_len: int
    decoy_slots: Tuple[DecoySlot, ...]
    message_positions: Tuple[int, ...]

    @property
    def m(self) -> int:
        return len(self.decoy_slots)

    @property
    def decoy_positions(self) -> Tuple[int, ...]:
        return tuple(slot.position for slot in self.decoy_slots)


@dataclass(frozen=True)
class Ciphertext:
    """Encrypted register |C> together with its declared message length"""
    seq: QubitSeq
    n: int

    def __len__(self) -> int:
        return len(self.seq)


@dataclass(frozen=True)
class ExtractedDecoy:
    position: int
    label: str
    qubit: Qubit


def choose_t(n: int) -> int:
    """Smallest t >= 1 with 2^(t+1) >= n + 3"""
    if n < 1:
        raise InvalidArgumentError(f"Message length must be positive, got {n}")
    t = 1
    while 2 ** (t + 1) < n + 3:
        t += 1
    return t


def _partition(bits: str, parts: int) -> Tuple[str, ...]:
    # earlier pieces take the remainder bits; trailing pieces may be empty
    size, extra = divmod(len(bits), parts)
    pieces = []
    start = 0
    for index in range(parts):
        width = size + (1 if index < extra else 0)
        pieces.append(bits[start:start + width])
        start += width
    return tuple(pieces)


def split_key(k: SecretKey, t: int) -> TreeSplit:
    """Halve K, then cut each half into 2^(i-1) pieces for levels i = 1..t"""
    if t < 1:
        raise InvalidArgumentError(f"Tree depth must be positive, got {t}")
    left = tuple(_partition(k.left_half, 2 ** (i - 1)) for i in range(1, t + 1))
    right = tuple(_partition(k.right_half, 2 ** (i - 1)) for i in range(1, t + 1))
    return TreeSplit(t=t, left_levels=left, right_levels=right)


def _level_values(level: Sequence[str]) -> Tuple[int, ...]:
    values: List[int] = []
    for piece in level:
        value = int(piece, 2) if piece else 0
        if value and value not in values:
            values.append(value)
    return tuple(values)


def to_decimal(q: TreeSplit) -> DecimalSchedule:
    return DecimalSchedule(
        left=tuple(_level_values(level) for level in q.left_levels),
        right=tuple(_level_values(level) for level in q.right_levels),
    )


def _wrap(q: int, current_len: int) -> int:
    return ((q - 1) % (current_len + 1)) + 1


def build_insertion_plan(sched: DecimalSchedule, n: int, loop: DecoyLoop) -> InsertionPlan:
    """
    Lay decoys into the message by sequential insertion

    The message is cut into a left segment (first ceil(n/2) qubits) and a right
    segment. Left values count from the left end of the growing left segment,
    right values from the right end of the growing right segment. Decoy labels
    are drawn from the loop in processing order, left side first.
    """
    if n < 1:
        raise InvalidArgumentError(f"Message length must be positive, got {n}")
    if sched.is_empty():
        raise NoDecoysError("Key schedule has no non-zero values; refusing to encrypt without decoys")

    left_len = (n + 1) // 2
    # entries are message indices (int) or decoy labels (str)
    left: list = list(range(1, left_len + 1))
    right: list = list(range(left_len + 1, n + 1))
    drawn = 0

    for level in sched.left:
        for q in level:
            drawn += 1
            index = _wrap(q, len(left))
            left.insert(index - 1, loop.label_at(drawn))

    for level in sched.right:
        for q in level:
            drawn += 1
            index = _wrap(q, len(right))
            right.insert(len(right) + 1 - index, loop.label_at(drawn))

    layout = left + right
    decoys = tuple(DecoySlot(pos, item) for pos, item in enumerate(layout, 1) if isinstance(item, str))
    message_positions = tuple(pos for pos, item in enumerate(layout, 1) if isinstance(item, int))
    return InsertionPlan(n=n, total_len=len(layout), decoy_slots=decoys, message_positions=message_positions)


@lru_cache(maxsize=1024)
def plan_for(k: SecretKey, n: int, loop: DecoyLoop) -> InsertionPlan:
    """E1-E3 followed by the insertion schedule for a message of length n"""
    schedule = to_decimal(split_key(k, choose_t(n)))
    plan = build_insertion_plan(schedule, n, loop)
    logger.debug(f"Plan for key L={k.length}, n={n}: total={plan.total_len}, decoys at {plan.decoy_positions}")
    return plan


def encrypt(k: SecretKey, p: QubitSeq, loop: DecoyLoop) -> Ciphertext:
    """|C> = E_K(|P>): message qubits are moved, never transformed"""
    plan = plan_for(k, len(p), loop)
    layout: List[Optional[Qubit]] = [None] * plan.total_len
    for slot in plan.decoy_slots:
        layout[slot.position - 1] = standard_state(slot.label)
    for qubit, position in zip(p, plan.message_positions):
        layout[position - 1] = qubit
    return Ciphertext(seq=QubitSeq(tuple(layout)), n=len(p))


def extract(k: SecretKey, c: Ciphertext, loop: DecoyLoop) -> Tuple[Tuple[ExtractedDecoy, ...], QubitSeq]:
    """Separate decoys (with the labels they should carry) from the payload"""
    if c.n < 1:
        raise MalformedCiphertextError(f"Ciphertext declares message length {c.n}")
    plan = plan_for(k, c.n, loop)
    if len(c.seq) != plan.total_len:
        raise MalformedCiphertextError(
            f"Ciphertext has {len(c.seq)} qubits, key plan for n={c.n} expects {plan.total_len}")
    decoys = tuple(ExtractedDecoy(slot.position, slot.label, c.seq.at(slot.position))
                   for slot in plan.decoy_slots)
    payload = QubitSeq(tuple(c.seq.at(position) for position in plan.message_positions))
    return decoys, payload


def verify_decoys(extracted: Sequence[ExtractedDecoy], rng: Rng) -> Verdict:
    """Measure every decoy in its preparation basis; consumes the decoys"""
    failed = []
    for decoy in extracted:
        outcome, _ = measure(decoy.qubit, Basis.for_label(decoy.label), rng)
        if outcome != expected_outcome(decoy.label):
            failed.append(decoy.position)
    if failed:
        logger.warning(f"Decoy check failed at positions {failed}")
        return Verdict.reject(RejectReason.EAVESDROP_DETECTED, f"decoy mismatch at positions {failed}")
    return Verdict.accept(detail=f"{len(extracted)} decoys verified")


def decrypt(k: SecretKey, c: Ciphertext, loop: DecoyLoop, rng: Rng) -> QubitSeq:
    """|P> = D_K(|C>), aborting on any decoy disagreement"""
    decoys, payload = extract(k, c, loop)
    verdict = verify_decoys(decoys, rng)
    if not verdict.accepted:
        raise EavesdropDetected(verdict)
    return payload

"""
Arbitrated quantum signature protocol: Alice signs, Bob receives, Trent arbitrates
Initializing (I1-I2), signing (S1-S5) and verifying (V1-V8) phases as explicit
party states that exchange ProtocolMessage values over an in-process channel
"""
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

from dqotp import (
    Ciphertext,
    DecoyLoop,
    MalformedCiphertextError,
    NoDecoysError,
    RejectReason,
    SecretKey,
    Verdict,
    encrypt,
    extract,
    verify_decoys,
)
from qubit_core import Comparator, QubitSeq, Rng, Unitary2, apply_unitary, fidelity, sequences_equal

logger = logging.getLogger(__name__)

# spawn keys for the per-party randomness streams of one session
BOB_STREAM = 1
TRENT_STREAM = 2
ADVERSARY_STREAM = 3
ATTACKER_STREAM = 4


class StepLabel(str, Enum):
    S5 = "S5"
    V3 = "V3"
    V6 = "V6"


class Party(str, Enum):
    ALICE = "alice"
    BOB = "bob"
    TRENT = "trent"
    CHANNEL = "channel"


class ConfigError(ValueError):
    """Session configuration violates the initializing-phase requirements"""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class ProtocolAbort(Exception):
    """A party stopped the session at `step` for `reason`"""

    def __init__(self, step: str, reason: RejectReason, detail: str = ""):
        super().__init__(f"{step}: {reason.value} {detail}".strip())
        self.step = step
        self.reason = reason
        self.detail = detail

    def verdict(self) -> Verdict:
        return Verdict.reject(self.reason, f"{self.step}: {self.detail}" if self.detail else self.step)


@dataclass(frozen=True)
class SessionConfig:
    n: int
    key_a: SecretKey
    key_b: SecretKey
    loop: DecoyLoop
    comparator: Comparator
    seed: int

    def validate(self) -> None:
        """Step I1 key-length bounds plus the non-empty schedule requirement"""
        if not isinstance(self.n, int) or self.n < 1:
            raise ConfigError("n", f"message length must be a positive integer, got {self.n!r}")
        min_a = math.ceil(self.n / 2) + 2
        if self.key_a.length < min_a:
            raise ConfigError("key_a", f"L_A={self.key_a.length} violates L_A >= ceil(n/2)+2 = {min_a}")
        min_b = math.ceil((self.n + self.key_a.length) / 2) + 2
        if self.key_b.length < min_b:
            raise ConfigError("key_b", f"L_B={self.key_b.length} violates L_B >= ceil((n+L_A)/2)+2 = {min_b}")
        for name, key in (("key_a", self.key_a), ("key_b", self.key_b)):
            if key.is_zero():
                raise ConfigError(name, "all-zero key yields no decoys")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed", f"seed must be an unsigned 64-bit integer, got {self.seed!r}")


@dataclass(frozen=True)
class SignatureBundle:
    """|S> (x) |P>1 (x) |P>2 as sent in step S5"""
    s: Ciphertext
    p1: QubitSeq
    p2: QubitSeq

    @property
    def header(self) -> Dict[str, int]:
        return {"n": len(self.p1), "signature_len": len(self.s)}

    def to_message(self) -> 'ProtocolMessage':
        return ProtocolMessage(StepLabel.S5, Party.ALICE, Party.BOB, (self.s, self.p1, self.p2), self.header)

    @classmethod
    def from_message(cls, msg: 'ProtocolMessage') -> 'SignatureBundle':
        if msg.step is not StepLabel.S5:
            raise ProtocolAbort("V1", RejectReason.MALFORMED_MESSAGE, f"expected S5, got {msg.step.value}")
        s, p1, p2 = msg.quantum_payload
        return cls(s, p1, p2)


Payload = Union[QubitSeq, Ciphertext]

_PAYLOAD_SHAPES = {
    StepLabel.S5: (Ciphertext, QubitSeq, QubitSeq),
    StepLabel.V3: (Ciphertext, Ciphertext),
    StepLabel.V6: (Ciphertext, Ciphertext),
}


@dataclass(frozen=True)
class ProtocolMessage:
    step: StepLabel
    sender: Party
    receiver: Party
    quantum_payload: Tuple[Payload, ...]
    classical_header: Dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, 'quantum_payload', tuple(self.quantum_payload))
        shape = _PAYLOAD_SHAPES[self.step]
        if len(self.quantum_payload) != len(shape) or not all(
                isinstance(part, kind) for part, kind in zip(self.quantum_payload, shape)):
            raise ProtocolAbort(self.step.value, RejectReason.MALFORMED_MESSAGE, "payload shape mismatch")

    def replace_part(self, index: int, part: Payload) -> 'ProtocolMessage':
        parts = list(self.quantum_payload)
        parts[index] = part
        return replace(self, quantum_payload=tuple(parts))


@dataclass(frozen=True)
class TranscriptEvent:
    index: int
    step: str
    party: str
    action: str
    outcome: str
    metadata: Dict[str, Any]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "index": self.index,
            "step": self.step,
            "party": self.party,
            "action": self.action,
            "outcome": self.outcome,
            "metadata": dict(self.metadata),
        }


class SessionTranscript:
    """Ordered audit log of one protocol run"""

    def __init__(self):
        self.events: List[TranscriptEvent] = []

    def record(self, step: str, party: Party, action: str, outcome: str = "ok", **metadata: Any) -> None:
        event = TranscriptEvent(len(self.events), step, party.value, action, outcome, metadata)
        self.events.append(event)
        logger.debug(f"[{step}] {party.value} {action} -> {outcome} {metadata}")

    def aborts(self) -> List[TranscriptEvent]:
        return [event for event in self.events if event.outcome == "abort"]

    def to_list(self) -> List[Dict[str, Any]]:
        return [event.to_dict() for event in self.events]

    def __len__(self) -> int:
        return len(self.events)


Adversary = Callable[[ProtocolMessage], ProtocolMessage]


@dataclass(frozen=True)
class ChannelAdversary:
    """Applies a unitary to qubits of one payload part when a given step is in flight

    `targets` lists (part index, 1-based position) pairs inside the part's sequence.
    """
    step: StepLabel
    targets: Tuple[Tuple[int, int], ...]
    unitary: Unitary2

    def __call__(self, msg: ProtocolMessage) -> ProtocolMessage:
        if msg.step is not self.step:
            return msg
        for part_index, position in self.targets:
            part = msg.quantum_payload[part_index]
            seq = part.seq if isinstance(part, Ciphertext) else part
            seq = seq.replace(position, apply_unitary(self.unitary, seq.at(position)))
            msg = msg.replace_part(part_index, Ciphertext(seq, part.n) if isinstance(part, Ciphertext) else seq)
        return msg


class Channel:
    """Lossless in-process quantum channel with an optional in-flight adversary"""

    def __init__(self, transcript: SessionTranscript, adversary: Optional[Adversary] = None):
        self.transcript = transcript
        self.adversary = adversary

    def deliver(self, msg: ProtocolMessage) -> ProtocolMessage:
        delivered = self.adversary(msg) if self.adversary else msg
        self.transcript.record(
            msg.step.value, Party.CHANNEL, "deliver",
            sender=msg.sender.value, receiver=msg.receiver.value,
            part_lengths=[len(part) for part in msg.quantum_payload],
            header=dict(msg.classical_header),
            adversary_present=self.adversary is not None,
        )
        return delivered


@dataclass
class AliceState:
    key_a: SecretKey
    loop: DecoyLoop
    n: int
    transcript: SessionTranscript
    signed: List[QubitSeq] = field(default_factory=list)

    def has_signed(self, message: QubitSeq, tolerance: float = 1e-9) -> bool:
        """Ledger lookup; qubits match up to global phase and rounding drift"""
        return any(len(message) == len(previous)
                   and all(fidelity(a, b) >= 1 - tolerance for a, b in zip(message, previous))
                   for previous in self.signed)


@dataclass
class BobState:
    key_b: SecretKey
    loop: DecoyLoop
    n: int
    comparator: Comparator
    rng: Rng
    transcript: SessionTranscript
    retained_p1: Optional[QubitSeq] = None


@dataclass
class TrentState:
    key_a: SecretKey
    key_b: SecretKey
    loop: DecoyLoop
    n: int
    comparator: Comparator
    rng: Rng
    transcript: SessionTranscript


def init_session(cfg: SessionConfig,
                 transcript: Optional[SessionTranscript] = None) -> Tuple[AliceState, BobState, TrentState]:
    """I1-I2: provision keys and the loop directly (QKD is not modelled)"""
    cfg.validate()
    transcript = transcript if transcript is not None else SessionTranscript()
    root = Rng(cfg.seed)
    alice = AliceState(cfg.key_a, cfg.loop, cfg.n, transcript)
    bob = BobState(cfg.key_b, cfg.loop, cfg.n, cfg.comparator, root.derive(BOB_STREAM), transcript)
    trent = TrentState(cfg.key_a, cfg.key_b, cfg.loop, cfg.n, cfg.comparator, root.derive(TRENT_STREAM), transcript)
    transcript.record("I1", Party.TRENT, "provision_keys", L_A=cfg.key_a.length, L_B=cfg.key_b.length, n=cfg.n)
    transcript.record("I2", Party.TRENT, "agree_loop", loop=list(cfg.loop.cycle))
    logger.info(f"Session initialised: n={cfg.n}, L_A={cfg.key_a.length}, L_B={cfg.key_b.length}")
    return alice, bob, trent


def alice_sign(alice_state: AliceState, p: QubitSeq) -> SignatureBundle:
    """S1-S5: three copies of |P>, |S> = E_KA(|P>3)"""
    if len(p) != alice_state.n:
        raise ConfigError("message", f"message length {len(p)} != n={alice_state.n}")
    transcript = alice_state.transcript
    # S1: the description is known to Alice, so copies come from re-preparation
    p1, p2, p3 = p, QubitSeq(p.qubits), QubitSeq(p.qubits)
    transcript.record("S1", Party.ALICE, "prepare_copies", copies=3, n=len(p))
    transcript.record("S2", Party.ALICE, "split_key")
    transcript.record("S3", Party.ALICE, "derive_schedule")
    s = encrypt(alice_state.key_a, p3, alice_state.loop)
    transcript.record("S4", Party.ALICE, "encrypt", signature_len=len(s))
    alice_state.signed.append(p)
    bundle = SignatureBundle(s, p1, p2)
    transcript.record("S5", Party.ALICE, "send_bundle", **bundle.header)
    logger.info(f"Alice signed a {len(p)}-qubit message; signature length {len(s)}")
    return bundle


def bob_receive(bob_state: BobState, bundle: SignatureBundle) -> ProtocolMessage:
    """V1-V3: compare the copies, encrypt |P>2 under K_B, forward |S> (x) |T>"""
    transcript = bob_state.transcript
    if len(bundle.p1) != bob_state.n or len(bundle.p2) != bob_state.n:
        transcript.record("V1", Party.BOB, "check_lengths", "abort", reason=RejectReason.MALFORMED_MESSAGE.value)
        raise ProtocolAbort("V1", RejectReason.MALFORMED_MESSAGE, "copy length differs from n")
    if not sequences_equal(bundle.p1.qubits, bundle.p2.qubits, bob_state.comparator, bob_state.rng):
        transcript.record("V1", Party.BOB, "compare_copies", "abort",
                          reason=RejectReason.FINGERPRINT_MISMATCH.value, action_requested="restart")
        logger.warning("V1 fingerprint comparison failed; asking Alice to restart")
        raise ProtocolAbort("V1", RejectReason.FINGERPRINT_MISMATCH, "|P>1 != |P>2")
    transcript.record("V1", Party.BOB, "compare_copies", comparator=bob_state.comparator.kind)

    try:
        t = encrypt(bob_state.key_b, bundle.p2, bob_state.loop)
    except NoDecoysError as e:
        transcript.record("V2", Party.BOB, "encrypt", "abort", reason=RejectReason.MALFORMED_MESSAGE.value)
        raise ProtocolAbort("V2", RejectReason.MALFORMED_MESSAGE, str(e))
    transcript.record("V2", Party.BOB, "encrypt", t_len=len(t))

    bob_state.retained_p1 = bundle.p1
    header = {"n": bob_state.n, "signature_len": len(bundle.s), "t_len": len(t)}
    transcript.record("V3", Party.BOB, "send_to_trent", **header)
    return ProtocolMessage(StepLabel.V3, Party.BOB, Party.TRENT, (bundle.s, t), header)


def trent_verify(trent_state: TrentState, msg: ProtocolMessage) -> ProtocolMessage:
    """V4-V6: strip and check both decoy sets, compare payloads, re-encrypt for Bob"""
    transcript = trent_state.transcript
    if msg.step is not StepLabel.V3:
        transcript.record("V4", Party.TRENT, "receive", "abort", reason=RejectReason.MALFORMED_MESSAGE.value)
        raise ProtocolAbort("V4", RejectReason.MALFORMED_MESSAGE, f"expected V3, got {msg.step.value}")
    s, t = msg.quantum_payload
    n = trent_state.n
    if s.n != n or t.n != n:
        transcript.record("V4", Party.TRENT, "extract", "abort", reason=RejectReason.MALFORMED_MESSAGE.value)
        raise ProtocolAbort("V4", RejectReason.MALFORMED_MESSAGE, "declared length differs from n")
    try:
        decoys_s, p3 = extract(trent_state.key_a, s, trent_state.loop)
        decoys_t, p2 = extract(trent_state.key_b, t, trent_state.loop)
    except MalformedCiphertextError as e:
        transcript.record("V4", Party.TRENT, "extract", "abort", reason=RejectReason.MALFORMED_MESSAGE.value)
        raise ProtocolAbort("V4", RejectReason.MALFORMED_MESSAGE, str(e))
    transcript.record("V4", Party.TRENT, "extract", decoys_s=len(decoys_s), decoys_t=len(decoys_t))

    check_s = verify_decoys(decoys_s, trent_state.rng)
    check_t = verify_decoys(decoys_t, trent_state.rng)
    if not (check_s.accepted and check_t.accepted):
        transcript.record("V5", Party.TRENT, "measure_decoys", "abort",
                          reason=RejectReason.EAVESDROP_DETECTED.value,
                          signature_ok=check_s.accepted, t_ok=check_t.accepted)
        detail = "; ".join(v.detail for v in (check_s, check_t) if not v.accepted)
        raise ProtocolAbort("V5", RejectReason.EAVESDROP_DETECTED, detail)
    transcript.record("V5", Party.TRENT, "measure_decoys")

    if not sequences_equal(p3.qubits, p2.qubits, trent_state.comparator, trent_state.rng):
        transcript.record("V5", Party.TRENT, "compare_payloads", "abort", reason=RejectReason.MESSAGE_MISMATCH.value)
        logger.warning("V5 payload comparison failed; aborting communication")
        raise ProtocolAbort("V5", RejectReason.MESSAGE_MISMATCH, "|P'>3 != |P'>2")
    transcript.record("V5", Party.TRENT, "compare_payloads")

    t_new = encrypt(trent_state.key_b, p2, trent_state.loop)
    inner = encrypt(trent_state.key_a, p3, trent_state.loop)
    s_t = encrypt(trent_state.key_b, inner.seq, trent_state.loop)
    header = {"n": n, "inner_len": len(inner), "t_len": len(t_new), "s_t_len": len(s_t)}
    transcript.record("V6", Party.TRENT, "send_to_bob", **header)
    return ProtocolMessage(StepLabel.V6, Party.TRENT, Party.BOB, (t_new, s_t), header)


def bob_finalize(bob_state: BobState, msg: ProtocolMessage) -> Verdict:
    """V7-V8: strip K_B decoys, compare |P''>2 with the retained |P>1"""
    transcript = bob_state.transcript

    def reject(step: str, action: str, reason: RejectReason, detail: str) -> Verdict:
        transcript.record(step, Party.BOB, action, "abort", reason=reason.value)
        logger.warning(f"{step}: Bob rejects the signature ({reason.value})")
        return Verdict.reject(reason, f"{step}: {detail}")

    if msg.step is not StepLabel.V6 or bob_state.retained_p1 is None:
        return reject("V7", "receive", RejectReason.MALFORMED_MESSAGE, "unexpected message")
    t, s_t = msg.quantum_payload
    inner_len = msg.classical_header.get("inner_len")
    if t.n != bob_state.n or inner_len is None or s_t.n != inner_len:
        return reject("V7", "extract", RejectReason.MALFORMED_MESSAGE, "header lengths inconsistent")
    try:
        decoys_t, p2 = extract(bob_state.key_b, t, bob_state.loop)
        decoys_s, s_inner = extract(bob_state.key_b, s_t, bob_state.loop)
    except MalformedCiphertextError as e:
        return reject("V7", "extract", RejectReason.MALFORMED_MESSAGE, str(e))

    check_t = verify_decoys(decoys_t, bob_state.rng)
    check_s = verify_decoys(decoys_s, bob_state.rng)
    if not (check_t.accepted and check_s.accepted):
        return reject("V7", "measure_decoys", RejectReason.EAVESDROP_DETECTED,
                      "; ".join(v.detail for v in (check_t, check_s) if not v.accepted))
    transcript.record("V7", Party.BOB, "measure_decoys", evidence_len=len(s_inner))

    if not sequences_equal(p2.qubits, bob_state.retained_p1.qubits, bob_state.comparator, bob_state.rng):
        return reject("V8", "compare_retained", RejectReason.MESSAGE_MISMATCH, "|P''>2 != |P>1")
    transcript.record("V8", Party.BOB, "accept", evidence_len=len(s_inner))
    logger.info("Bob accepts the signature")
    return Verdict.accept(evidence=s_inner, detail="V8: signature accepted")


def verify_bundle(bob: BobState, trent: TrentState, bundle: SignatureBundle, channel: Channel) -> Verdict:
    """Verifying phase V1-V8 for a bundle already in Bob's hands"""
    try:
        v3 = channel.deliver(bob_receive(bob, bundle))
        v6 = channel.deliver(trent_verify(trent, v3))
    except ProtocolAbort as abort:
        return abort.verdict()
    return bob_finalize(bob, v6)


def run_session(cfg: SessionConfig, p: QubitSeq,
                adversary: Optional[Adversary] = None) -> Tuple[Verdict, SessionTranscript]:
    """Drive init -> sign -> receive -> verify -> finalize; deterministic given the seed"""
    transcript = SessionTranscript()
    alice, bob, trent = init_session(cfg, transcript)
    channel = Channel(transcript, adversary)
    try:
        s5 = channel.deliver(alice_sign(alice, p).to_message())
        bundle = SignatureBundle.from_message(s5)
    except ProtocolAbort as abort:
        verdict = abort.verdict()
    else:
        verdict = verify_bundle(bob, trent, bundle, channel)
    transcript.record("END", Party.BOB, "verdict", "accept" if verdict.accepted else "reject",
                      reason=verdict.reason.value if verdict.reason else None)
    return verdict, transcript

"""
Chosen-message existential forgery by a malicious receiver
Bob collects signatures on messages he picked, finds the message slots by
position-wise comparison, rewrites message and signature together and lets
an honest Trent accept the result
"""
import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

from aqs_protocol import (
    ATTACKER_STREAM,
    AliceState,
    Channel,
    ConfigError,
    ProtocolAbort,
    SessionConfig,
    SessionTranscript,
    SignatureBundle,
    alice_sign,
    init_session,
    verify_bundle,
)
from dqotp import Ciphertext, InsertionPlan, NoDecoysError, SecretKey, Verdict, encrypt, plan_for
from qubit_core import (
    PAULI_X,
    Comparator,
    InvalidArgumentError,
    QubitSeq,
    Rng,
    Unitary2,
    apply_unitary,
    fidelity,
)

logger = logging.getLogger(__name__)

RankedOp = Tuple[int, Unitary2]


class CannotForgeError(ValueError):
    """Localization did not find every message slot"""


class AttackInputError(ValueError):
    """Harvested signatures cannot be compared"""


@dataclass(frozen=True)
class HarvestedPair:
    message: QubitSeq
    bundle: SignatureBundle
    session_id: str


@dataclass(frozen=True)
class PositionDiffReport:
    compared_len: int
    differing: Tuple[int, ...]
    n: int

    @property
    def complete(self) -> bool:
        return len(self.differing) == self.n


@dataclass(frozen=True)
class ForgedBundle:
    forged_message: QubitSeq
    bundle: SignatureBundle
    applied_ops: Tuple[Tuple[int, Unitary2], ...]


@dataclass
class AttackReport:
    """Outcome of one end-to-end forgery attempt"""
    diff_report: Optional[PositionDiffReport] = None
    forged: Optional[ForgedBundle] = None
    verdict: Optional[Verdict] = None
    stage: str = "harvest"
    error: Optional[str] = None
    alice_signed_forged_message: Optional[bool] = None
    expected_positions: Optional[Tuple[int, ...]] = None
    evidence_matches_genuine: Optional[bool] = None
    transcript: SessionTranscript = field(default_factory=SessionTranscript)

    @property
    def succeeded(self) -> bool:
        return self.verdict is not None and self.verdict.accepted

    @property
    def forged_unsigned_message(self) -> bool:
        """Accepted and absent from the signer's ledger, so Alice can disavow it"""
        return self.succeeded and self.alice_signed_forged_message is False


def default_chosen_messages(n: int) -> List[QubitSeq]:
    """|0...0> and |1...1>: orthogonal at every position"""
    return [QubitSeq.from_labels("0" * n), QubitSeq.from_labels("1" * n)]


def default_ops() -> List[RankedOp]:
    """X on the first message slot: turns the signed |0...0> into the unsigned |10...0>"""
    return [(1, PAULI_X)]


def harvest(cfg: SessionConfig, chosen: Sequence[QubitSeq],
            alice: Optional[AliceState] = None) -> List[HarvestedPair]:
    """Have Alice sign every chosen message under the same K_A; verification is never completed"""
    if alice is None:
        alice, _, _ = init_session(cfg)
    pairs = []
    for index, message in enumerate(chosen, 1):
        if len(message) != cfg.n:
            raise AttackInputError(f"Chosen message {index} has length {len(message)}, expected {cfg.n}")
        bundle = alice_sign(alice, message)
        pairs.append(HarvestedPair(message, bundle, session_id=f"harvest-{index}"))
    logger.info(f"Harvested {len(pairs)} signatures under one key")
    return pairs


def locate_message_positions(pairs: Sequence[HarvestedPair], comparator: Comparator,
                             rng: Rng) -> PositionDiffReport:
    """
    Compare harvested signatures position by position

    Every further signature is compared against the first one; a position is
    reported as differing when any comparison says the qubits are unequal.
    """
    if len(pairs) < 2:
        raise AttackInputError("Localization needs at least two harvested signatures")
    reference = pairs[0].bundle.s.seq
    n = len(pairs[0].bundle.p1)
    for pair in pairs[1:]:
        if len(pair.bundle.s) != len(reference):
            raise AttackInputError(
                f"Signature lengths differ: {len(pair.bundle.s)} vs {len(reference)}")

    differing = set()
    for pair in pairs[1:]:
        for position in range(1, len(reference) + 1):
            if not comparator.equal(reference.at(position), pair.bundle.s.seq.at(position), rng):
                differing.add(position)
    report = PositionDiffReport(len(reference), tuple(sorted(differing)), n)
    logger.info(f"Differing positions {report.differing} ({'complete' if report.complete else 'incomplete'})")
    return report


def apply_at_positions(seq: QubitSeq, ops: Sequence[Tuple[int, Unitary2]]) -> QubitSeq:
    """Apply unitaries at 1-based positions of a register"""
    for position, unitary in ops:
        seq = seq.replace(position, apply_unitary(unitary, seq.at(position)))
    return seq


def forge(valid: HarvestedPair, report: PositionDiffReport, ops: Sequence[RankedOp]) -> ForgedBundle:
    """Rewrite the message copies and the signature consistently at each ranked slot"""
    if not report.complete:
        raise CannotForgeError(
            f"Only {len(report.differing)} of {report.n} message positions located; cannot forge")
    signature_ops = []
    message_ops = []
    for rank, unitary in ops:
        if not 1 <= rank <= report.n:
            raise InvalidArgumentError(f"Rank {rank} outside 1..{report.n}")
        signature_ops.append((report.differing[rank - 1], unitary))
        message_ops.append((rank, unitary))

    bundle = valid.bundle
    forged_s = Ciphertext(apply_at_positions(bundle.s.seq, signature_ops), bundle.s.n)
    forged_p1 = apply_at_positions(bundle.p1, message_ops)
    forged_p2 = apply_at_positions(bundle.p2, message_ops)
    forged_message = apply_at_positions(valid.message, message_ops)
    return ForgedBundle(forged_message, SignatureBundle(forged_s, forged_p1, forged_p2), tuple(signature_ops))


def _matches(a: QubitSeq, b: QubitSeq, tolerance: float = 1e-9) -> bool:
    return len(a) == len(b) and all(fidelity(x, y) >= 1 - tolerance for x, y in zip(a, b))


def oracle_plan(cfg: SessionConfig) -> InsertionPlan:
    """Signer-side plan; only used to validate the attack, never by it"""
    return plan_for(cfg.key_a, cfg.n, cfg.loop)


def demonstrate(cfg: SessionConfig, chosen: Optional[Sequence[QubitSeq]] = None,
                ops: Optional[Sequence[RankedOp]] = None, *,
                trent_key_a: Optional[SecretKey] = None, oracle: bool = False) -> AttackReport:
    """
    Harvest, locate, forge and then run V1-V8 with the forged bundle

    Args:
        cfg: session the attacked signer belongs to
        chosen: chosen messages (defaults to |0..0>, |1..1>)
        ops: (rank, unitary) pairs (defaults to X at rank 1, a message outside the chosen set)
        trent_key_a: give the arbitrator a different K_A than the signer used
        oracle: also compute expected positions and evidence equivalence from K_A

    Returns:
        AttackReport; stage errors are recorded, not raised
    """
    chosen = list(chosen) if chosen is not None else default_chosen_messages(cfg.n)
    ops = list(ops) if ops is not None else default_ops()
    report = AttackReport()
    try:
        alice, bob, trent = init_session(cfg, report.transcript)
        if trent_key_a is not None:
            replace(cfg, key_a=trent_key_a).validate()
            trent = replace(trent, key_a=trent_key_a)
        pairs = harvest(cfg, chosen, alice)

        report.stage = "locate"
        attacker_rng = Rng(cfg.seed).derive(ATTACKER_STREAM)
        report.diff_report = locate_message_positions(pairs, cfg.comparator, attacker_rng)

        report.stage = "forge"
        report.forged = forge(pairs[0], report.diff_report, ops)

        report.stage = "verify"
        report.verdict = verify_bundle(bob, trent, report.forged.bundle, Channel(report.transcript))
        report.alice_signed_forged_message = alice.has_signed(report.forged.forged_message)
        report.stage = "done"
    except (CannotForgeError, AttackInputError, ConfigError, InvalidArgumentError,
            NoDecoysError, ProtocolAbort) as e:
        report.error = f"{type(e).__name__}: {e}"
        logger.warning(f"Attack stopped at stage '{report.stage}': {report.error}")

    if oracle:
        try:
            report.expected_positions = oracle_plan(cfg).message_positions
            if report.succeeded and report.forged is not None:
                genuine = encrypt(cfg.key_a, report.forged.forged_message, cfg.loop)
                report.evidence_matches_genuine = _matches(report.verdict.evidence, genuine.seq)
        except (NoDecoysError, InvalidArgumentError) as e:
            logger.warning(f"Oracle evaluation failed: {e}")

    if report.succeeded:
        logger.info("Forged signature accepted by the verification phase")
    return report

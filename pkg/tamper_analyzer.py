"""
Monte Carlo statistics for the AQS simulator
Channel tampering detection rates, SWAP-test false-equal rates and
multi-trial forgery success, each next to its analytic expectation
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, TypeVar

from aqs_protocol import ADVERSARY_STREAM, ChannelAdversary, SessionConfig, StepLabel, run_session
from dqotp import InsertionPlan, SecretKey, plan_for
from forgery_attack import AttackReport, RankedOp, demonstrate
from qubit_core import (
    InvalidArgumentError,
    Qubit,
    QubitSeq,
    Rng,
    SwapTestComparator,
    Unitary2,
    apply_unitary,
    fidelity,
    standard_state,
    swap_test_compare,
)

logger = logging.getLogger(__name__)

T = TypeVar('T')

POSITION_CLASSES = ("decoy", "message")
SEED_MODULUS = 2 ** 64


def trial_seed(base_seed: int, trial: int) -> int:
    """Per-trial seed: base seed + trial index"""
    return (base_seed + trial) % SEED_MODULUS


def run_trials(fn: Callable[[int], T], trials: int, workers: int = 1) -> List[T]:
    """Run fn(0..trials-1), optionally on worker threads; results stay in trial order"""
    if trials < 1:
        raise InvalidArgumentError(f"trials must be >= 1, got {trials}")
    if workers <= 1:
        return [fn(trial) for trial in range(trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(trials)))


def minimum_key_lengths(n: int) -> tuple:
    """Smallest even (L_A, L_B) meeting the initializing-phase bounds"""
    l_a = math.ceil(n / 2) + 2
    l_a += l_a % 2
    l_b = math.ceil((n + l_a) / 2) + 2
    l_b += l_b % 2
    return l_a, l_b


def random_key(length: int, rng: Rng) -> SecretKey:
    """Uniform non-zero key of the given length"""
    while True:
        bits = "".join(str(rng.integers(0, 2)) for _ in range(length))
        if "1" in bits:
            return SecretKey(bits)


def with_random_keys(cfg: SessionConfig, rng: Rng) -> SessionConfig:
    l_a, l_b = minimum_key_lengths(cfg.n)
    return replace(cfg, key_a=random_key(l_a, rng), key_b=random_key(l_b, rng))


@dataclass
class TamperStats:
    position_class: str
    op_name: str
    trials: int
    detections: int
    analytic_rate: float

    @property
    def empirical_rate(self) -> float:
        return self.detections / self.trials


def decoy_detection_probability(label: str, unitary: Unitary2) -> float:
    """Chance that measuring U|label> in label's basis disagrees with label"""
    prepared = standard_state(label)
    return 1.0 - fidelity(prepared, apply_unitary(unitary, prepared))


def analytic_tamper_rate(plan: InsertionPlan, position_class: str, unitary: Unitary2) -> float:
    """Expected detection rate with the tampered slot drawn uniformly from the class"""
    if position_class == "message":
        return 0.0
    rates = [decoy_detection_probability(slot.label, unitary) for slot in plan.decoy_slots]
    return sum(rates) / len(rates)


def tamper_adversary(cfg: SessionConfig, position_class: str, unitary: Unitary2, rng: Rng) -> ChannelAdversary:
    """
    S5 adversary that hits one slot of the class

    Decoy slots are hit in the signature only. Message slots are hit in the
    signature and at the same rank of both plaintext copies, which is what a
    forger does.
    """
    if position_class not in POSITION_CLASSES:
        raise InvalidArgumentError(f"position class must be one of {POSITION_CLASSES}, got {position_class!r}")
    plan = plan_for(cfg.key_a, cfg.n, cfg.loop)
    if position_class == "decoy":
        position = plan.decoy_positions[rng.integers(0, plan.m)]
        targets = ((0, position),)
    else:
        rank = rng.integers(1, cfg.n + 1)
        targets = ((0, plan.message_positions[rank - 1]), (1, rank), (2, rank))
    return ChannelAdversary(StepLabel.S5, targets, unitary)


def tamper_stats(cfg: SessionConfig, message: QubitSeq, position_class: str, unitary: Unitary2,
                 trials: int, workers: int = 1) -> TamperStats:
    """Honest sessions with an in-flight adversary; detection means a rejecting verdict"""

    def trial(index: int) -> bool:
        trial_cfg = replace(cfg, seed=trial_seed(cfg.seed, index))
        adversary = tamper_adversary(trial_cfg, position_class, unitary, Rng(trial_cfg.seed).derive(ADVERSARY_STREAM))
        verdict, _ = run_session(trial_cfg, message, adversary)
        return not verdict.accepted

    detections = sum(run_trials(trial, trials, workers))
    analytic = analytic_tamper_rate(plan_for(cfg.key_a, cfg.n, cfg.loop), position_class, unitary)
    stats = TamperStats(position_class, unitary.name, trials, detections, analytic)
    logger.info(f"Tamper {position_class}/{unitary.name}: {detections}/{trials} detected (analytic {analytic:.4f})")
    return stats


@dataclass
class SwapStatsRow:
    fidelity: float
    m: int
    trials: int
    false_equal: int

    @property
    def empirical_rate(self) -> float:
        return self.false_equal / self.trials

    @property
    def analytic_rate(self) -> float:
        return ((1 + self.fidelity) / 2) ** self.m


def state_pair_with_fidelity(target: float) -> tuple:
    """(|0>, cos|0> + sin|1>) with |<a|b>|^2 = target"""
    if not 0 <= target <= 1:
        raise InvalidArgumentError(f"fidelity must lie in [0, 1], got {target!r}")
    return standard_state("0"), Qubit.normalized(math.sqrt(target), math.sqrt(1 - target))


def swap_stats(m_values: Sequence[int], fidelities: Sequence[float], trials: int, seed: int) -> List[SwapStatsRow]:
    """False-equal counts of the m-fold SWAP test for each (F, m) case"""
    if trials < 1:
        raise InvalidArgumentError(f"trials must be >= 1, got {trials}")
    rows = []
    root = Rng(seed)
    case = 0
    for target in fidelities:
        a, b = state_pair_with_fidelity(target)
        for m in m_values:
            rng = root.derive(case)
            case += 1
            hits = sum(1 for _ in range(trials) if swap_test_compare(a, b, m, rng))
            rows.append(SwapStatsRow(target, m, trials, hits))
            logger.debug(f"SWAP F={target} m={m}: {hits}/{trials}")
    return rows


@dataclass
class AttackStats:
    trials: int
    reports: List[AttackReport] = field(default_factory=list)
    analytic_success_rate: Optional[float] = None

    @property
    def successes(self) -> int:
        return sum(1 for report in self.reports if report.succeeded)

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials

    @property
    def unsigned_forgeries(self) -> int:
        return sum(1 for report in self.reports if report.forged_unsigned_message)


def analytic_attack_success(cfg: SessionConfig) -> float:
    """
    Success rate with the default |0..0>/|1..1> chosen messages

    Decoys always compare equal, so the attack fails only when a message slot
    is missed; each slot is orthogonal and slips through m SWAP rounds with
    probability 2^-m.
    """
    if isinstance(cfg.comparator, SwapTestComparator):
        return (1 - 0.5 ** cfg.comparator.m) ** cfg.n
    return 1.0


def attack_stats(cfg: SessionConfig, ops: Optional[Sequence[RankedOp]], trials: int,
                 random_keys: bool = False, oracle: bool = False, workers: int = 1) -> AttackStats:
    """Repeat the end-to-end forgery with per-trial seeds (and optionally fresh keys)"""

    def trial(index: int) -> AttackReport:
        trial_cfg = replace(cfg, seed=trial_seed(cfg.seed, index))
        if random_keys:
            trial_cfg = with_random_keys(trial_cfg, Rng(trial_cfg.seed).derive(ADVERSARY_STREAM))
        return demonstrate(trial_cfg, ops=ops, oracle=oracle)

    stats = AttackStats(trials, run_trials(trial, trials, workers), analytic_attack_success(cfg))
    logger.info(f"Forgery succeeded in {stats.successes}/{trials} trials")
    return stats

#!/usr/bin/env python3
"""
Command-line harness for the AQS forgery simulator
Golden replay of the worked example, honest and adversarial sessions,
and the tampering / SWAP-test statistics tables
"""
import argparse
import json
import logging
import re
import sys
from typing import Any, Dict, List, Mapping, Optional, Sequence

import numpy as np

from aqs_protocol import ConfigError, SessionConfig, run_session
from dqotp import DecoyLoop, SecretKey, choose_t, split_key, to_decimal
from forgery_attack import RankedOp, harvest, locate_message_positions
from input_validation import ConfigFileError, RunConfig, load_run_config
from qubit_core import NAMED_UNITARIES, IdealComparator, InvalidArgumentError, QubitSeq, Rng, Unitary2
from report_export import attack_summary, document_header, transcript_document, write_document
from tamper_analyzer import attack_stats, swap_stats, tamper_stats

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_GOLDEN_MISMATCH = 1
EXIT_REJECT = 2
EXIT_CONFIG = 64
EXIT_SOFTWARE = 70

DEFAULT_CONFIG = 'config.json'

# Worked example: K = 1011, R = (|0>, |1>, |+>), |P>_A = |0000>, |P>_B = |1111>
EXAMPLE_KEY = "1011"
EXAMPLE_LOOP = ("0", "1", "+")
EXAMPLE_MESSAGES = ("0000", "1111")

GOLDEN: Dict[str, Any] = {
    "Q": ((("10",), ("1", "0")), (("11",), ("1", "1"))),
    "Q10": (((2,), (1,)), ((3,), (1,))),
    "S_A": ("1", "0", "0", "0", "+", "0", "0", "0"),
    "S_B": ("1", "1", "0", "1", "+", "1", "1", "0"),
    "diff": (2, 4, 6, 7),
}

OPS_ITEM_PATTERN = re.compile(r'^(?:(all|\d+):)?(.+)$')
OP_ALIASES = {"IDENTITY": "I"}


def configure_logging(verbose: bool = False, log_file: Optional[str] = None) -> None:
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(asctime)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )


def _format_levels(levels) -> str:
    return "; ".join(", ".join(str(v) for v in level) for level in levels)


def format_tree(left, right) -> str:
    """(10; 1, 0 · 11; 1, 1)"""
    return f"({_format_levels(left)} · {_format_levels(right)})"


def format_signature(labels: Sequence[Optional[str]]) -> str:
    return "(" + ",".join(f"|{label if label is not None else '?'}⟩" for label in labels) + ")"


def format_positions(positions: Sequence[int]) -> str:
    return "(" + ",".join(str(p) for p in positions) + ")"


def worked_example_values() -> Dict[str, Any]:
    """Run the fixed worked-example pipeline and collect the values it is checked against"""
    key = SecretKey(EXAMPLE_KEY)
    loop = DecoyLoop(EXAMPLE_LOOP)
    n = len(EXAMPLE_MESSAGES[0])
    tree = split_key(key, choose_t(n))
    schedule = to_decimal(tree)
    # K_B only has to satisfy the bounds; the example never reaches verification
    cfg = SessionConfig(n, key, SecretKey("101101"), loop, IdealComparator(), seed=0)
    pairs = harvest(cfg, [QubitSeq.from_labels(m) for m in EXAMPLE_MESSAGES])
    report = locate_message_positions(pairs, cfg.comparator, Rng(0))
    return {
        "Q": (tree.left_levels, tree.right_levels),
        "Q10": (schedule.left, schedule.right),
        "S_A": tuple(pairs[0].bundle.s.seq.labels()),
        "S_B": tuple(pairs[1].bundle.s.seq.labels()),
        "diff": report.differing,
    }


def cmd_demo_example(golden: Optional[Mapping[str, Any]] = None) -> int:
    """Replay the worked example and compare with the golden values"""
    golden = GOLDEN if golden is None else golden
    values = worked_example_values()

    print("🔑 Worked example: K = 1011, R = (|0⟩, |1⟩, |+⟩)")
    print(f"   Q      = {format_tree(*values['Q'])}")
    print(f"   (Q)10  = {format_tree(*values['Q10'])}")
    print(f"   |S⟩_A  = {format_signature(values['S_A'])}")
    print(f"   |S⟩_B  = {format_signature(values['S_B'])}")
    print(f"   diff   = {format_positions(values['diff'])}")

    mismatches = [name for name in GOLDEN if values[name] != golden[name]]
    if mismatches:
        print("❌ Golden mismatch:")
        for name in mismatches:
            print(f"   {name}: expected {golden[name]!r}, got {values[name]!r}")
        return EXIT_GOLDEN_MISMATCH
    print("✅ All golden values match")
    return EXIT_OK


def cmd_run_honest(config_path: str, seed: Optional[int] = None, output_path: str = 'transcript.json') -> int:
    try:
        run_config = load_run_config(config_path, seed)
    except (ConfigFileError, ConfigError) as e:
        print(f"❌ Config error: {e}")
        return EXIT_CONFIG

    verdict, transcript = run_session(run_config.session, run_config.message)
    document = transcript_document(run_config.raw, run_config.session.seed, transcript, verdict)
    write_document(output_path, document)

    if verdict.accepted:
        print(f"✅ Signature accepted ({len(transcript)} transcript events) -> {output_path}")
        return EXIT_OK
    print(f"⚠️ Signature rejected: {verdict.reason.value} ({verdict.detail}) -> {output_path}")
    return EXIT_REJECT


def _parse_matrix(text: str) -> Unitary2:
    try:
        entries = json.loads(text)
        matrix = np.array([[complex(re_im[0], re_im[1]) for re_im in row] for row in entries])
    except (json.JSONDecodeError, TypeError, IndexError, ValueError) as e:
        raise InvalidArgumentError(f"custom matrix must be [[[re, im], ...], ...]: {e}")
    return Unitary2(matrix, name="custom")


def parse_op(text: str) -> Unitary2:
    """X, Y, Z, H, I/identity, S or custom=[[[re, im], [re, im]], [[re, im], [re, im]]]"""
    if text.lower().startswith(("custom=", "custom:")):
        return _parse_matrix(text[len("custom="):])
    name = OP_ALIASES.get(text.upper(), text.upper())
    if name not in NAMED_UNITARIES:
        raise InvalidArgumentError(f"unknown operation {text!r}")
    return NAMED_UNITARIES[name]


def parse_ops(spec: str, n: int) -> List[RankedOp]:
    """
    Parse an ops spec such as 'X', '1:H', '1:X;3:Z' or 'all:custom=[...]'

    Items are separated by ';'. An item without a rank applies to every rank.
    """
    ops: List[RankedOp] = []
    for item in filter(None, (part.strip() for part in spec.split(';'))):
        match = OPS_ITEM_PATTERN.match(item)
        rank_text, op_text = match.group(1), match.group(2)
        unitary = parse_op(op_text)
        if rank_text in (None, "all"):
            ops.extend((rank, unitary) for rank in range(1, n + 1))
            continue
        rank = int(rank_text)
        if not 1 <= rank <= n:
            raise InvalidArgumentError(f"rank {rank} outside 1..{n}")
        ops.append((rank, unitary))
    if not ops:
        raise InvalidArgumentError("ops spec is empty")
    return ops


def cmd_run_attack(config_path: str, ops_spec: str = '1:X', trials: int = 1,
                   output_path: str = 'attack_report.json', *, random_keys: bool = False,
                   oracle: Optional[bool] = None, threshold: Optional[float] = None,
                   seed: Optional[int] = None, workers: int = 1) -> int:
    try:
        run_config: RunConfig = load_run_config(config_path, seed)
        ops = parse_ops(ops_spec, run_config.session.n)
        if trials < 1:
            raise InvalidArgumentError(f"trials must be >= 1, got {trials}")
    except (ConfigFileError, ConfigError, InvalidArgumentError) as e:
        print(f"❌ Config error: {e}")
        return EXIT_CONFIG

    oracle = run_config.oracle if oracle is None else oracle
    threshold = run_config.success_threshold if threshold is None else threshold
    cfg = run_config.session
    stats = attack_stats(cfg, ops, trials, random_keys=random_keys, oracle=oracle, workers=workers)

    document = {
        "header": document_header(run_config.raw, cfg.seed),
        "ops": ops_spec,
        "trials": trials,
        "random_keys": random_keys,
        "oracle": oracle,
        "comparator": cfg.comparator.describe(),
        "successes": stats.successes,
        "unsigned_forgeries": stats.unsigned_forgeries,
        "success_rate": stats.success_rate,
        "analytic_success_rate": stats.analytic_success_rate,
        "threshold": threshold,
        "attempts": [attack_summary(index, report) for index, report in enumerate(stats.reports)],
    }
    write_document(output_path, document)

    first = stats.reports[0]
    if first.diff_report is not None:
        print(f"🔍 Located positions (trial 0): {format_positions(first.diff_report.differing)}")
    print(f"📊 Forgery accepted in {stats.successes}/{trials} trials "
          f"(rate {stats.success_rate:.4f}, analytic {stats.analytic_success_rate:.4f}) -> {output_path}")
    print(f"✍️ Accepted forgeries of messages Alice never signed: {stats.unsigned_forgeries}/{trials}")

    if isinstance(cfg.comparator, IdealComparator):
        succeeded = stats.success_rate == 1.0
    else:
        succeeded = stats.success_rate > threshold
    return EXIT_OK if succeeded else EXIT_REJECT


def cmd_tamper_stats(position_class: str, op: str, trials: int, config_path: str = DEFAULT_CONFIG,
                     seed: Optional[int] = None, workers: int = 1) -> int:
    try:
        run_config = load_run_config(config_path, seed)
        unitary = parse_op(op)
        stats = tamper_stats(run_config.session, run_config.message, position_class, unitary, trials, workers)
    except (ConfigFileError, ConfigError, InvalidArgumentError) as e:
        print(f"❌ Config error: {e}")
        return EXIT_CONFIG

    print(f"🛰️ Tampering {stats.position_class} slots with {stats.op_name} over {stats.trials} sessions")
    print(f"   empirical detection rate: {stats.empirical_rate:.4f} ({stats.detections}/{stats.trials})")
    print(f"   analytic detection rate:  {stats.analytic_rate:.4f}")
    return EXIT_OK


def _parse_list(text: str, kind: type) -> List[Any]:
    try:
        return [kind(item) for item in text.split(',') if item.strip()]
    except ValueError:
        raise InvalidArgumentError(f"cannot parse {text!r} as a list of {kind.__name__}")


def cmd_swap_stats(m_values: Sequence[int], fidelities: Sequence[float], trials: int, seed: int = 0) -> int:
    try:
        rows = swap_stats(m_values, fidelities, trials, seed)
    except InvalidArgumentError as e:
        print(f"❌ {e}")
        return EXIT_CONFIG

    print(f"{'F':>6} {'m':>3} {'empirical':>10} {'analytic':>10} {'|diff|':>8}")
    for row in rows:
        diff = abs(row.empirical_rate - row.analytic_rate)
        print(f"{row.fidelity:>6.3f} {row.m:>3d} {row.empirical_rate:>10.4f} {row.analytic_rate:>10.4f} {diff:>8.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Arbitrated quantum signature forgery simulator')
    parser.add_argument('--verbose', action='store_true', help='Enable debug logging')
    parser.add_argument('--log-file', type=str, help='Also write log records to this file')
    sub = parser.add_subparsers(dest='command', required=True)

    sub.add_parser('demo-example', help='Replay the worked example and check the golden values')

    honest = sub.add_parser('run-honest', help='Run one honest signing and verification session')
    honest.add_argument('--config', required=True, help='Run configuration JSON file')
    honest.add_argument('--seed', type=int, help='Override the configured seed')
    honest.add_argument('--out', default='transcript.json', help='Transcript output file')

    attack = sub.add_parser('run-attack', help='Run the chosen-message forgery')
    attack.add_argument('--config', required=True, help='Run configuration JSON file')
    attack.add_argument('--ops', default='1:X', help="Ops spec, e.g. 'X', '1:H', '1:X;3:Z'")
    attack.add_argument('--trials', type=int, default=1)
    attack.add_argument('--out', default='attack_report.json', help='Attack report output file')
    attack.add_argument('--seed', type=int, help='Override the configured seed')
    attack.add_argument('--random-keys', action='store_true', help='Draw fresh keys for every trial')
    attack.add_argument('--oracle', action='store_true', default=None,
                        help='Record expected positions computed from K_A')
    attack.add_argument('--threshold', type=float, help='Success-rate threshold for the SWAP comparator')
    attack.add_argument('--workers', type=int, default=1)

    tamper = sub.add_parser('tamper-stats', help='Detection rate of in-flight tampering')
    tamper.add_argument('--class', dest='position_class', choices=('decoy', 'message'), required=True)
    tamper.add_argument('--op', required=True, help='X, Y, Z, H, S or I')
    tamper.add_argument('--trials', type=int, required=True)
    tamper.add_argument('--config', default=DEFAULT_CONFIG)
    tamper.add_argument('--seed', type=int, help='Override the configured seed')
    tamper.add_argument('--workers', type=int, default=1)

    swap = sub.add_parser('swap-stats', help='SWAP-test false-equal rates')
    swap.add_argument('--m', required=True, help='Comma-separated repetition counts')
    swap.add_argument('--cases', required=True, help='Comma-separated fidelities')
    swap.add_argument('--trials', type=int, required=True)
    swap.add_argument('--seed', type=int, default=0)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.log_file)

    try:
        if args.command == 'demo-example':
            return cmd_demo_example()
        if args.command == 'run-honest':
            return cmd_run_honest(args.config, args.seed, args.out)
        if args.command == 'run-attack':
            return cmd_run_attack(args.config, args.ops, args.trials, args.out,
                                  random_keys=args.random_keys, oracle=args.oracle,
                                  threshold=args.threshold, seed=args.seed, workers=args.workers)
        if args.command == 'tamper-stats':
            return cmd_tamper_stats(args.position_class, args.op, args.trials, args.config,
                                    args.seed, args.workers)
        if args.command == 'swap-stats':
            try:
                m_values = _parse_list(args.m, int)
                fidelities = _parse_list(args.cases, float)
            except InvalidArgumentError as e:
                print(f"❌ {e}")
                return EXIT_CONFIG
            return cmd_swap_stats(m_values, fidelities, args.trials, args.seed)
    except Exception as e:
        logger.error(f"Command failed: {e}")
        import traceback
        traceback.print_exc()
        return EXIT_SOFTWARE
    return EXIT_SOFTWARE


if __name__ == '__main__':
    sys.exit(main())

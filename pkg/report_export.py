"""
Deterministic JSON export of transcripts, attack reports and statistics
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from cryptography.hazmat.primitives import hashes

from aqs_protocol import SessionTranscript
from dqotp import Verdict
from forgery_attack import AttackReport
from qubit_core import Qubit, QubitSeq

logger = logging.getLogger(__name__)

TOOL_NAME = "aqs-forgery-sim"
TOOL_VERSION = "1.0.0"


def canonical_json(document: Any) -> str:
    """Sorted keys, two-space indent, shortest round-trip floats, trailing newline"""
    return json.dumps(document, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def config_digest(raw_config: Dict[str, Any]) -> str:
    """SHA-256 over the compact canonical form of the run configuration"""
    payload = json.dumps(raw_config, sort_keys=True, separators=(',', ':'), ensure_ascii=False)
    digest = hashes.Hash(hashes.SHA256())
    digest.update(payload.encode('utf-8'))
    return digest.finalize().hex()


def qubit_to_json(q: Qubit) -> Union[str, List[List[float]]]:
    """Exact standard states by label, anything else as [[re, im], [re, im]]"""
    label = q.standard_label()
    if label is not None:
        return label
    return [[q.alpha.real, q.alpha.imag], [q.beta.real, q.beta.imag]]


def seq_to_json(seq: QubitSeq) -> List[Union[str, List[List[float]]]]:
    return [qubit_to_json(q) for q in seq]


def verdict_to_json(verdict: Optional[Verdict]) -> Optional[Dict[str, Any]]:
    if verdict is None:
        return None
    return {
        "accepted": verdict.accepted,
        "reason": verdict.reason.value if verdict.reason else None,
        "detail": verdict.detail,
        "evidence": seq_to_json(verdict.evidence) if verdict.evidence is not None else None,
    }


def document_header(raw_config: Dict[str, Any], seed: int) -> Dict[str, Any]:
    return {
        "tool": TOOL_NAME,
        "version": TOOL_VERSION,
        "config_digest": config_digest(raw_config),
        "seed": seed,
        "config": raw_config,
    }


def transcript_document(raw_config: Dict[str, Any], seed: int,
                        transcript: SessionTranscript, verdict: Verdict) -> Dict[str, Any]:
    return {
        "header": document_header(raw_config, seed),
        "events": transcript.to_list(),
        "verdict": verdict_to_json(verdict),
    }


def attack_summary(trial: int, report: AttackReport) -> Dict[str, Any]:
    """Per-trial record of a forgery attempt"""
    summary: Dict[str, Any] = {
        "trial": trial,
        "stage": report.stage,
        "error": report.error,
        "succeeded": report.succeeded,
        "located_positions": list(report.diff_report.differing) if report.diff_report else None,
        "localization_complete": report.diff_report.complete if report.diff_report else None,
        "alice_signed_forged_message": report.alice_signed_forged_message,
        "forged_unsigned_message": report.forged_unsigned_message,
        "verdict": verdict_to_json(report.verdict),
    }
    if report.forged is not None:
        summary["forged_message"] = seq_to_json(report.forged.forged_message)
        summary["forged_signature"] = seq_to_json(report.forged.bundle.s.seq)
        summary["applied_ops"] = [[position, unitary.name] for position, unitary in report.forged.applied_ops]
    if report.expected_positions is not None:
        summary["expected_positions"] = list(report.expected_positions)
        summary["evidence_matches_genuine"] = report.evidence_matches_genuine
    return summary


def write_document(output_path: Union[str, Path], document: Dict[str, Any]) -> None:
    path = Path(output_path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(canonical_json(document))
    logger.info(f"Saved document to {path}")

"""Attack outcome records and their JSONL serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator


class FailureReason(str, Enum):
    """Why an attack attempt did not produce an adversarial example."""

    NO_CANDIDATES = "no_candidates"
    BUDGET_EXHAUSTED = "budget_exhausted"
    NO_FLIP_FOUND = "no_flip_found"
    SKIPPED_WRONG_PREDICTION = "skipped_wrong_prediction"
    TRANSLATION_FAILED = "translation_failed"


@dataclass(frozen=True)
class Substitution:
    """One word swap: token ``position`` changed from ``original`` to ``replacement``."""

    position: int
    original: str
    replacement: str


@dataclass(frozen=True)
class AttackOutcome:
    """Result of one attack attempt on one sample.

    On failure ``adversarial_text`` equals the original text and
    ``substitutions`` is empty; on success the substitution list is non-empty
    for word-level attacks and empty for holistic (translation) attacks.
    ``queries_used`` counts every victim prediction requested for this sample,
    including the success-verification query.
    """

    sample_id: str
    success: bool
    adversarial_text: str
    substitutions: tuple[Substitution, ...]
    queries_used: int
    failure_reason: FailureReason | None = None

    def __post_init__(self) -> None:
        if self.success and self.failure_reason is not None:
            raise ValueError("successful outcomes carry no failure reason")
        if not self.success and self.failure_reason is None:
            raise ValueError("failed outcomes must carry a failure reason")


def outcome_to_dict(outcome: AttackOutcome) -> dict:
    return {
        "id": outcome.sample_id,
        "success": outcome.success,
        "adversarial_text": outcome.adversarial_text,
        "substitutions": [
            {"position": s.position, "original": s.original, "replacement": s.replacement}
            for s in outcome.substitutions
        ],
        "queries_used": outcome.queries_used,
        "failure_reason": outcome.failure_reason.value if outcome.failure_reason else None,
    }


def outcome_from_dict(record: dict) -> AttackOutcome:
    reason = record.get("failure_reason")
    return AttackOutcome(
        sample_id=record["id"],
        success=bool(record["success"]),
        adversarial_text=record["adversarial_text"],
        substitutions=tuple(
            Substitution(s["position"], s["original"], s["replacement"])
            for s in record.get("substitutions", [])
        ),
        queries_used=int(record["queries_used"]),
        failure_reason=FailureReason(reason) if reason else None,
    )


def dump_outcomes_jsonl(outcomes: Iterable[AttackOutcome], path: str | Path) -> None:
    """Write outcomes one JSON object per line, byte-stable across runs."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for outcome in outcomes:
            handle.write(
                json.dumps(outcome_to_dict(outcome), ensure_ascii=False, sort_keys=True)
            )
            handle.write("\n")


def load_outcomes_jsonl(path: str | Path) -> Iterator[AttackOutcome]:
    with Path(path).open("r", encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                yield outcome_from_dict(json.loads(line))

"""Attack implementations and shared outcome records."""

from .outcomes import (
    AttackOutcome,
    FailureReason,
    Substitution,
    dump_outcomes_jsonl,
    load_outcomes_jsonl,
    outcome_from_dict,
    outcome_to_dict,
)
from .rtmt import RtmtParams, StubMode, StubTranslator, round_trip, round_trip_batch, rtmt_attack
from .textfooler import (
    AttackParams,
    ImportanceEntry,
    TokenizedText,
    attack,
    importance_scores,
    perturbation_fraction,
    tokenize,
)

__all__ = [
    "AttackOutcome",
    "AttackParams",
    "FailureReason",
    "ImportanceEntry",
    "RtmtParams",
    "StubMode",
    "StubTranslator",
    "Substitution",
    "TokenizedText",
    "attack",
    "dump_outcomes_jsonl",
    "importance_scores",
    "load_outcomes_jsonl",
    "outcome_from_dict",
    "outcome_to_dict",
    "perturbation_fraction",
    "round_trip",
    "round_trip_batch",
    "rtmt_attack",
    "tokenize",
]

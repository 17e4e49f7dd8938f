"""Round-trip machine-translation attack.

The input is translated to an unrelated pivot language and back; whatever
corruption the round trip introduces is the perturbation, and the result is
the adversarial sample. One victim query per sample decides success. The
pivot defaults to Zulu but stays configurable.

Deterministic stub translators stand in for a real MT system in tests; the
real translator lives behind the /translate wire endpoint.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from ..corpus import Sample
from ..victim import Translator, TransportError, VictimContractError, VictimModel, VictimProtocolError
from .outcomes import AttackOutcome, FailureReason

DEFAULT_PIVOT = "zul_Latn"


@dataclass(frozen=True)
class RtmtParams:
    """Source language of the data and the pivot to bounce through."""

    source: str
    pivot: str = DEFAULT_PIVOT

    def __post_init__(self) -> None:
        if not self.source or not self.pivot:
            raise ValueError("source and pivot language codes must be non-empty")
        if self.source == self.pivot:
            raise ValueError(f"pivot must differ from source ({self.source!r})")


class StubMode(str, Enum):
    IDENTITY = "identity"
    KEYWORD_DROP = "keyword_drop"
    REVERSE_TOKENS = "reverse_tokens"


class StubTranslator(Translator):
    """Deterministic, pure-function translator stand-ins for hermetic tests.

    ``identity`` returns inputs unchanged; ``keyword_drop`` removes
    whitespace-delimited tokens that exactly match a drop list;
    ``reverse_tokens`` reverses token order. Language codes are accepted and
    ignored.
    """

    def __init__(self, mode: StubMode, drop_words: Sequence[str] = ()):
        self.mode = StubMode(mode)
        self.drop_words = frozenset(drop_words)
        if self.mode is StubMode.KEYWORD_DROP and not self.drop_words:
            raise ValueError("keyword_drop stub needs a non-empty drop list")

    @classmethod
    def identity(cls) -> "StubTranslator":
        return cls(StubMode.IDENTITY)

    @classmethod
    def keyword_drop(cls, words: Sequence[str]) -> "StubTranslator":
        return cls(StubMode.KEYWORD_DROP, drop_words=words)

    @classmethod
    def reverse_tokens(cls) -> "StubTranslator":
        return cls(StubMode.REVERSE_TOKENS)

    def _translate(self, texts: Sequence[str], src: str, tgt: str) -> list[str]:
        return [self._apply(text) for text in texts]

    def _apply(self, text: str) -> str:
        if self.mode is StubMode.IDENTITY:
            return text
        tokens = text.split()
        if self.mode is StubMode.KEYWORD_DROP:
            return " ".join(t for t in tokens if t not in self.drop_words)
        return " ".join(reversed(tokens))


def round_trip(text: str, params: RtmtParams, translator: Translator) -> str:
    """Translate ``text`` source -> pivot -> source; may return it unchanged."""
    pivoted = translator.translate([text], params.source, params.pivot)[0]
    return translator.translate([pivoted], params.pivot, params.source)[0]


def round_trip_batch(texts: Sequence[str], params: RtmtParams, translator: Translator) -> list[str]:
    if not texts:
        return []
    pivoted = translator.translate(list(texts), params.source, params.pivot)
    return translator.translate(pivoted, params.pivot, params.source)


def rtmt_attack(
    sample: Sample,
    model: VictimModel,
    params: RtmtParams,
    translator: Translator,
) -> AttackOutcome:
    """Attack one correctly-predicted sample via round-trip translation.

    Success iff the model's prediction on the round-tripped text differs from
    the sample's label. The perturbation is holistic, so the substitution
    list is always empty and exactly one victim query is spent. Translation
    failures abort the sample with the ``translation_failed`` reason.
    """
    try:
        adversarial = round_trip(sample.text, params, translator)
    except (TransportError, VictimProtocolError, VictimContractError):
        return AttackOutcome(
            sample_id=sample.id,
            success=False,
            adversarial_text=sample.text,
            substitutions=(),
            queries_used=0,
            failure_reason=FailureReason.TRANSLATION_FAILED,
        )
    prediction = model.predict([adversarial])[0]
    success = prediction.argmax != sample.label
    return AttackOutcome(
        sample_id=sample.id,
        success=success,
        adversarial_text=adversarial if success else sample.text,
        substitutions=(),
        queries_used=1,
        failure_reason=None if success else FailureReason.NO_FLIP_FOUND,
    )

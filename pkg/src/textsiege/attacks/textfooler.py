"""Word-substitution attack: importance ranking, kNN candidates, greedy search.

The attack proceeds in deterministic stages against a correctly-predicted
sample:

1. Every token is scored by how much deleting it hurts the model's confidence
   in the true class (plus a flip bonus when the deletion alone changes the
   predicted label). No stop-word or part-of-speech filtering is applied, so
   the same code path serves every language, including ones without such
   resources.
2. Tokens are visited in descending importance order. Candidates for a token
   are its embedding-space neighbors above the cosine threshold, capped at k.
3. Each candidate substitution is probed against the victim. The first
   candidate that flips the predicted label wins outright; there is no
   sentence-similarity reranking. If no candidate flips but some candidate
   strictly lowers the true-class probability, the best such candidate is
   kept in place and the search moves to the next token.

Everything is deterministic: ties in importance break by ascending position,
ties among candidates by the embedding module's lexicographic rule, and no
randomness exists anywhere in the search.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from typing import Callable, Sequence

from ..corpus import LabelDistribution, Sample
from ..embeddings import EmbeddingStore, SynonymQueryParams, synonyms
from ..victim import VictimContractError, VictimModel
from .outcomes import AttackOutcome, FailureReason, Substitution

_CHUNK_RE = re.compile(r"\S+")
_WS_RUN_RE = re.compile(r"\s+")


class BudgetExhaustedError(Exception):
    """Raised internally when a probe would exceed the per-sample budget."""


@dataclass(frozen=True)
class TokenizedText:
    """Word tokens plus the inter-token context needed for exact rebuilds.

    ``separators`` has one more element than ``tokens``; the original text is
    ``separators[0] + tokens[0] + separators[1] + ... + separators[-1]``,
    byte-for-byte.
    """

    tokens: tuple[str, ...]
    separators: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.separators) != len(self.tokens) + 1:
            raise ValueError("separators must have exactly one more element than tokens")

    @property
    def text(self) -> str:
        parts = [self.separators[0]]
        for token, sep in zip(self.tokens, self.separators[1:]):
            parts.append(token)
            parts.append(sep)
        return "".join(parts)

    def with_token(self, position: int, replacement: str) -> "TokenizedText":
        """Copy with the token at ``position`` swapped for ``replacement``."""
        tokens = list(self.tokens)
        tokens[position] = replacement
        return TokenizedText(tuple(tokens), self.separators)

    def deletion_text(self, position: int) -> str:
        """Probe text with the token at ``position`` removed.

        The token's surrounding separators are merged, whitespace runs in the
        merge collapse to a single space, and the result is trimmed at the
        affected edge so deleting the first or last token leaves no stray
        whitespace.
        """
        merged = _WS_RUN_RE.sub(" ", self.separators[position] + self.separators[position + 1])
        if position == 0:
            merged = merged.lstrip()
        if position == len(self.tokens) - 1:
            merged = merged.rstrip()
        tokens = self.tokens[:position] + self.tokens[position + 1 :]
        separators = self.separators[:position] + (merged,) + self.separators[position + 2 :]
        return TokenizedText(tokens, separators).text


def tokenize(text: str) -> TokenizedText:
    """Split on whitespace, peeling leading/trailing punctuation off tokens.

    Punctuation (Unicode category P*) stripped from chunk edges stays in the
    separator context, so detokenization is exact. Chunks that are pure
    punctuation contribute no token. Unsegmented scripts come back as a
    single token per whitespace chunk; inject a language-specific segmenter
    upstream if finer granularity is needed.
    """
    if not text:
        raise ValueError("cannot tokenize empty text")
    tokens: list[str] = []
    separators: list[str] = [""]
    pos = 0
    for match in _CHUNK_RE.finditer(text):
        separators[-1] += text[pos : match.start()]
        chunk = match.group()
        start, end = 0, len(chunk)
        while start < end and unicodedata.category(chunk[start]).startswith("P"):
            start += 1
        while end > start and unicodedata.category(chunk[end - 1]).startswith("P"):
            end -= 1
        if start == end:
            separators[-1] += chunk
        else:
            separators[-1] += chunk[:start]
            tokens.append(chunk[start:end])
            separators.append(chunk[end:])
        pos = match.end()
    separators[-1] += text[pos:]
    return TokenizedText(tuple(tokens), tuple(separators))


@dataclass(frozen=True)
class ImportanceEntry:
    """Deletion-probe importance for one token position."""

    position: int
    score: float
    probe: LabelDistribution


@dataclass(frozen=True)
class AttackParams:
    """Search knobs. ``delta`` above 1 lawfully produces empty candidate sets.

    ``max_queries`` and ``max_perturb_fraction`` are safety rails around the
    search, reported through outcomes so runs stay auditable; they default to
    generous/neutral values.
    """

    k: int = 50
    delta: float = 0.6
    max_queries: int = 2000
    max_perturb_fraction: float = 1.0

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.max_queries < 1:
            raise ValueError(f"max_queries must be >= 1, got {self.max_queries}")
        if self.max_perturb_fraction <= 0:
            raise ValueError(
                f"max_perturb_fraction must be > 0, got {self.max_perturb_fraction}"
            )


class _QueryBudget:
    """Counts victim queries for one sample; refuses batches over budget.

    A batch that would cross the limit is rejected before it is sent, so
    ``used`` never exceeds the budget. Exempt queries (success verification)
    are counted but never refused.
    """

    def __init__(self, model: VictimModel, max_queries: int):
        self._model = model
        self._max = max_queries
        self.used = 0

    def predict(self, texts: Sequence[str], exempt: bool = False) -> list[LabelDistribution]:
        if not exempt and self.used + len(texts) > self._max:
            raise BudgetExhaustedError()
        self.used += len(texts)
        return self._model.predict(texts)


def importance_scores(
    x: TokenizedText,
    y_true: int,
    model: VictimModel | _QueryBudget,
    original: LabelDistribution | None = None,
) -> list[ImportanceEntry]:
    """Score every token by the damage its deletion does to the true class.

    With the original prediction p and the deletion probe q for token j:
    if the probe keeps the predicted label, the score is p[y_true] - q[y_true];
    if it flips to some label f, the flip gain q[f] - p[f] is added on top.
    Callers must ensure the model currently predicts ``y_true`` on ``x``.

    Entries come back sorted by score descending, ties by ascending position.
    All tokens are scored; there is no stop-word exclusion.
    """
    budget = model if isinstance(model, _QueryBudget) else _QueryBudget(model, 2**63)
    if original is None:
        original = budget.predict([x.text])[0]
    if not x.tokens:
        return []
    probes = budget.predict([x.deletion_text(j) for j in range(len(x.tokens))])
    entries: list[ImportanceEntry] = []
    for position, probe in enumerate(probes):
        score = original.probs[y_true] - probe.probs[y_true]
        flipped = probe.argmax
        if flipped != y_true:
            score += probe.probs[flipped] - original.probs[flipped]
        entries.append(ImportanceEntry(position=position, score=score, probe=probe))
    entries.sort(key=lambda e: (-e.score, e.position))
    return entries


def attack(
    sample: Sample,
    model: VictimModel,
    store: EmbeddingStore,
    params: AttackParams | None = None,
    tokenizer: Callable[[str], TokenizedText] = tokenize,
) -> AttackOutcome:
    """Run the greedy substitution search against one sample.

    Returns a failed outcome tagged ``skipped_wrong_prediction`` when the
    model does not currently predict the sample's label (attack sets should
    contain only correct predictions). Successes are re-verified with one
    fresh victim query before being returned; a verification mismatch means
    the model broke its determinism contract and raises
    :class:`VictimContractError`.

    ``tokenizer`` is the segmentation boundary: the default whitespace +
    punctuation splitter treats unsegmented scripts as one token per chunk,
    so inject a language-specific segmenter there when finer granularity is
    available. It must uphold the exact-reconstruction invariant.
    """
    params = params or AttackParams()
    budget = _QueryBudget(model, params.max_queries)
    tokenized = tokenizer(sample.text)
    m = len(tokenized.tokens)

    def failed(reason: FailureReason) -> AttackOutcome:
        return AttackOutcome(
            sample_id=sample.id,
            success=False,
            adversarial_text=sample.text,
            substitutions=(),
            queries_used=budget.used,
            failure_reason=reason,
        )

    try:
        original = budget.predict([sample.text])[0]
    except BudgetExhaustedError:
        return failed(FailureReason.BUDGET_EXHAUSTED)
    if original.argmax != sample.label:
        return failed(FailureReason.SKIPPED_WRONG_PREDICTION)
    if m == 0:
        return failed(FailureReason.NO_CANDIDATES)

    try:
        ranking = importance_scores(tokenized, sample.label, budget, original=original)
    except BudgetExhaustedError:
        return failed(FailureReason.BUDGET_EXHAUSTED)

    query_params = SynonymQueryParams(k=params.k, delta=params.delta)
    max_substitutions = int(params.max_perturb_fraction * m + 1e-9)
    current = tokenized
    baseline_true = original.probs[sample.label]
    kept: list[Substitution] = []
    found_candidates = False

    for entry in ranking:
        position = entry.position
        result = synonyms(store, tokenized.tokens[position], query_params)
        if not result.neighbors:
            continue  # OOV or nothing above threshold: skip, don't error
        found_candidates = True
        if len(kept) >= max_substitutions:
            break  # perturbation cap reached; nothing more may change
        probes = [current.with_token(position, cand) for cand, _ in result.neighbors]
        try:
            distributions = budget.predict([p.text for p in probes])
        except BudgetExhaustedError:
            return failed(FailureReason.BUDGET_EXHAUSTED)

        flipped_at = next(
            (
                i
                for i, dist in enumerate(distributions)
                if dist.argmax != sample.label
            ),
            None,
        )
        if flipped_at is not None:
            candidate = result.neighbors[flipped_at][0]
            adversarial = probes[flipped_at]
            verification = budget.predict([adversarial.text], exempt=True)[0]
            if verification.argmax == sample.label:
                raise VictimContractError(
                    f"sample {sample.id!r}: flip on {adversarial.text!r} did not "
                    "reproduce on re-query; victim is not deterministic"
                )
            return AttackOutcome(
                sample_id=sample.id,
                success=True,
                adversarial_text=adversarial.text,
                substitutions=tuple(
                    kept + [Substitution(position, tokenized.tokens[position], candidate)]
                ),
                queries_used=budget.used,
                failure_reason=None,
            )

        # No flip at this position: greedily keep the candidate that lowers
        # the true-class probability the most, if any does, and use its probe
        # distribution as the new baseline for later positions.
        best = min(range(len(distributions)), key=lambda i: distributions[i].probs[sample.label])
        if distributions[best].probs[sample.label] < baseline_true:
            current = probes[best]
            baseline_true = distributions[best].probs[sample.label]
            kept.append(Substitution(position, tokenized.tokens[position], result.neighbors[best][0]))

    reason = FailureReason.NO_FLIP_FOUND if found_candidates else FailureReason.NO_CANDIDATES
    return failed(reason)


def perturbation_fraction(outcome: AttackOutcome, original: TokenizedText) -> float:
    """Share of tokens the attack changed: |substitutions| / m, 0 on failure."""
    if not outcome.success or not original.tokens:
        return 0.0
    return len(outcome.substitutions) / len(original.tokens)

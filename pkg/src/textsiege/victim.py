"""Black-box victim contract: texts in, per-class probability rows out.

Everything the attack engine talks to implements :class:`VictimModel`
(classifiers) or :class:`Translator` (MT systems). Responses are validated on
every call: one distribution per input text, probabilities non-negative and
summing to 1 within 1e-6, deterministic within a session. Remote victims are
reached over a JSON/HTTP protocol with retries, batching and bounded
in-flight requests; hermetic keyword-scoring toys stand in for real models in
tests and fixtures.

Wire protocol:
    POST /predict   {"texts": [...]}                  -> {"probs": [[...], ...]}
    POST /translate {"texts": [...], "src": ..., "tgt": ...} -> {"texts": [...]}
    GET  /health                                      -> {"status": "ok", "labels": k, ...}
"""

from __future__ import annotations

import json
import re
import threading
import time
import unicodedata
from abc import ABC, abstractmethod
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import requests

from .corpus import LabelDistribution

_WORD_RE = re.compile(r"\w+", re.UNICODE)


class VictimError(Exception):
    """Base class for victim-side failures."""


class TransportError(VictimError):
    """Network-level failure; retryable up to the configured limit."""


class VictimProtocolError(VictimError):
    """The remote replied, but the payload violates the wire protocol."""


class VictimContractError(VictimError):
    """A model broke the VictimModel invariants (alignment, determinism)."""


@dataclass
class QueryLedger:
    """Thread-safe counters for prediction traffic.

    ``total_queries`` counts every text whose prediction was requested;
    ``cache_hits`` the subset answered from cache. total = hits + misses.
    """

    total_queries: int = 0
    cache_hits: int = 0
    per_sample: dict[str, int] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def record(self, requested: int, hits: int = 0) -> None:
        with self._lock:
            self.total_queries += requested
            self.cache_hits += hits

    def record_sample(self, sample_id: str, queries: int) -> None:
        with self._lock:
            self.per_sample[sample_id] = self.per_sample.get(sample_id, 0) + queries

    @property
    def misses(self) -> int:
        return self.total_queries - self.cache_hits

    def snapshot(self) -> dict:
        with self._lock:
            return {
                "total_queries": self.total_queries,
                "cache_hits": self.cache_hits,
                "misses": self.total_queries - self.cache_hits,
            }


class VictimModel(ABC):
    """Black-box classifier: a batch of texts to aligned label distributions.

    Subclasses implement :meth:`_predict_rows`; the public :meth:`predict`
    validates the contract on every response so a misbehaving backend is
    caught at the boundary rather than deep inside an attack loop.
    """

    @property
    @abstractmethod
    def label_count(self) -> int:
        """Number of classes k in every returned distribution."""

    @abstractmethod
    def _predict_rows(self, texts: Sequence[str]) -> list[Sequence[float]]:
        """Raw probability rows, one per input text, in input order."""

    def predict(self, texts: Sequence[str]) -> list[LabelDistribution]:
        if not texts:
            raise ValueError("predict requires a non-empty list of texts")
        rows = self._predict_rows(list(texts))
        if len(rows) != len(texts):
            raise VictimContractError(
                f"model returned {len(rows)} rows for {len(texts)} texts"
            )
        dists: list[LabelDistribution] = []
        for row in rows:
            if len(row) != self.label_count:
                raise VictimContractError(
                    f"expected {self.label_count} classes per row, got {len(row)}"
                )
            try:
                dists.append(LabelDistribution(tuple(float(p) for p in row)))
            except Exception as exc:
                raise VictimContractError(f"invalid probability row: {exc}") from exc
        return dists


class Translator(ABC):
    """Black-box translator: aligned texts out for texts in."""

    @abstractmethod
    def _translate(self, texts: Sequence[str], src: str, tgt: str) -> list[str]:
        ...

    def translate(self, texts: Sequence[str], src: str, tgt: str) -> list[str]:
        if not texts:
            return []
        out = self._translate(list(texts), src, tgt)
        if len(out) != len(texts):
            raise VictimContractError(
                f"translator returned {len(out)} texts for {len(texts)} inputs"
            )
        return [str(t) for t in out]


class KeywordVictim(VictimModel):
    """Deterministic toy classifier scored by keyword occurrences.

    Score for class i is (number of tokens equal to one of its keywords)
    plus a smoothing constant; the distribution is the normalized scores.
    Tokens are ``\\w+`` runs of the NFC-normalized text, matched exactly
    (case-sensitive). With no keyword hits at all the output is uniform.
    """

    def __init__(self, keywords: Sequence[Sequence[str]], smoothing: float = 0.1):
        if not keywords:
            raise ValueError("keyword spec must cover at least one label")
        if smoothing <= 0:
            raise ValueError(f"smoothing must be > 0, got {smoothing}")
        self._keyword_class: dict[str, list[int]] = {}
        for label, words in enumerate(keywords):
            if not words:
                raise ValueError(f"label {label} has no keywords")
            for word in words:
                self._keyword_class.setdefault(unicodedata.normalize("NFC", word), []).append(label)
        self._k = len(keywords)
        self._smoothing = float(smoothing)

    @property
    def label_count(self) -> int:
        return self._k

    def _predict_rows(self, texts: Sequence[str]) -> list[Sequence[float]]:
        rows = []
        for text in texts:
            scores = [self._smoothing] * self._k
            for token in _WORD_RE.findall(unicodedata.normalize("NFC", text)):
                for label in self._keyword_class.get(token, ()):
                    scores[label] += 1.0
            total = sum(scores)
            rows.append([s / total for s in scores])
        return rows


def make_keyword_victim(
    spec: Sequence[Sequence[str]] | Mapping[int, Sequence[str]],
    smoothing: float = 0.1,
) -> KeywordVictim:
    """Build a :class:`KeywordVictim` from per-label keyword lists.

    ``spec`` is either a sequence indexed by label or a mapping from the
    contiguous label indices 0..k-1 to keyword lists.
    """
    if isinstance(spec, Mapping):
        if not spec:
            raise ValueError("keyword spec must cover at least one label")
        if sorted(spec) != list(range(len(spec))):
            raise ValueError("keyword spec keys must be contiguous label indices from 0")
        spec = [spec[i] for i in range(len(spec))]
    return KeywordVictim(spec, smoothing)


class CachingVictim(VictimModel):
    """Response cache keyed by NFC text; optionally LRU-bounded.

    Caching never changes results: pass-through distributions are stored
    verbatim and duplicates within one batch are answered once. Safe for
    concurrent use.
    """

    def __init__(
        self,
        model: VictimModel,
        ledger: QueryLedger | None = None,
        max_entries: int | None = None,
    ):
        if max_entries is not None and max_entries < 1:
            raise ValueError("max_entries must be >= 1 when set")
        self._model = model
        self._cache: OrderedDict[str, LabelDistribution] = OrderedDict()
        self._lock = threading.Lock()
        self._max_entries = max_entries
        self.ledger = ledger or QueryLedger()

    @property
    def label_count(self) -> int:
        return self._model.label_count

    def _predict_rows(self, texts: Sequence[str]) -> list[Sequence[float]]:
        return [dist.probs for dist in self.predict(texts)]

    def predict(self, texts: Sequence[str]) -> list[LabelDistribution]:
        if not texts:
            raise ValueError("predict requires a non-empty list of texts")
        keys = [unicodedata.normalize("NFC", text) for text in texts]
        results: dict[str, LabelDistribution] = {}
        missing: list[str] = []
        missing_set: set[str] = set()
        with self._lock:
            for key in keys:
                if key in results or key in missing_set:
                    continue
                cached = self._cache.get(key)
                if cached is not None:
                    self._cache.move_to_end(key)
                    results[key] = cached
                else:
                    missing.append(key)
                    missing_set.add(key)
        if missing:
            fetched = self._model.predict(missing)
            with self._lock:
                for key, dist in zip(missing, fetched):
                    self._cache[key] = dist
                    self._cache.move_to_end(key)
                if self._max_entries is not None:
                    while len(self._cache) > self._max_entries:
                        self._cache.popitem(last=False)
            results.update(zip(missing, fetched))
        # Every requested occurrence not sent to the underlying model is a hit
        # (including duplicates within this batch beyond the first).
        self.ledger.record(requested=len(keys), hits=len(keys) - len(missing))
        return [results[key] for key in keys]

    def cache_size(self) -> int:
        with self._lock:
            return len(self._cache)


def with_cache(
    model: VictimModel,
    ledger: QueryLedger | None = None,
    max_entries: int | None = None,
) -> CachingVictim:
    """Wrap ``model`` with an NFC-keyed response cache and query ledger."""
    return CachingVictim(model, ledger=ledger, max_entries=max_entries)


@dataclass(frozen=True)
class HttpClientConfig:
    """Transport knobs shared by the remote victim and translator clients."""

    timeout: float = 30.0
    max_retries: int = 3
    backoff: float = 0.5
    max_batch: int = 32
    max_inflight: int = 4
    token: str | None = None


class _HttpEndpoint:
    """POST/GET helper with bearer auth, retries and bounded concurrency."""

    def __init__(self, base_url: str, config: HttpClientConfig, session: requests.Session | None = None):
        self.base_url = base_url.rstrip("/")
        self.config = config
        self._session = session or requests.Session()
        self._slots = threading.Semaphore(config.max_inflight)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.config.token:
            headers["Authorization"] = f"Bearer {self.config.token}"
        return headers

    def get_json(self, path: str) -> dict:
        return self._request("GET", path, None)

    def post_json(self, path: str, payload: dict) -> dict:
        return self._request("POST", path, payload)

    def _request(self, method: str, path: str, payload: dict | None) -> dict:
        url = f"{self.base_url}{path}"
        attempt = 0
        while True:
            try:
                with self._slots:
                    response = self._session.request(
                        method,
                        url,
                        json=payload,
                        headers=self._headers(),
                        timeout=self.config.timeout,
                    )
            except requests.RequestException as exc:
                attempt += 1
                if attempt > self.config.max_retries:
                    raise TransportError(f"{method} {url}: {exc}") from exc
                time.sleep(self.config.backoff * (2 ** (attempt - 1)))
                continue
            if response.status_code >= 500:
                attempt += 1
                if attempt > self.config.max_retries:
                    raise TransportError(
                        f"{method} {url}: server error {response.status_code}: "
                        f"{_excerpt(response.text)}"
                    )
                time.sleep(self.config.backoff * (2 ** (attempt - 1)))
                continue
            if response.status_code != 200:
                raise VictimProtocolError(
                    f"{method} {url}: status {response.status_code}: {_excerpt(response.text)}"
                )
            try:
                body = response.json()
            except ValueError as exc:
                raise VictimProtocolError(
                    f"{method} {url}: non-JSON response: {_excerpt(response.text)}"
                ) from exc
            if not isinstance(body, dict):
                raise VictimProtocolError(
                    f"{method} {url}: expected a JSON object: {_excerpt(response.text)}"
                )
            return body


def _excerpt(text: str, limit: int = 200) -> str:
    text = text.strip()
    return text if len(text) <= limit else text[:limit] + "…"


def parse_predict_response(body: dict, expected_rows: int) -> list[list[float]]:
    """Validate and extract the ``probs`` matrix from a /predict payload."""
    probs = body.get("probs")
    if not isinstance(probs, list):
        raise VictimProtocolError(f"missing or non-list 'probs': {_excerpt(json.dumps(body))}")
    if len(probs) != expected_rows:
        raise VictimProtocolError(
            f"row count mismatch: sent {expected_rows} texts, got {len(probs)} rows"
        )
    rows: list[list[float]] = []
    for row in probs:
        if not isinstance(row, list) or not all(isinstance(p, (int, float)) for p in row):
            raise VictimProtocolError(f"malformed probability row: {_excerpt(repr(row))}")
        rows.append([float(p) for p in row])
    return rows


def parse_translate_response(body: dict, expected_rows: int) -> list[str]:
    """Validate and extract the ``texts`` list from a /translate payload."""
    texts = body.get("texts")
    if not isinstance(texts, list) or not all(isinstance(t, str) for t in texts):
        raise VictimProtocolError(f"missing or non-list 'texts': {_excerpt(json.dumps(body))}")
    if len(texts) != expected_rows:
        raise VictimProtocolError(
            f"row count mismatch: sent {expected_rows} texts, got {len(texts)} back"
        )
    return list(texts)


class HttpVictimModel(VictimModel):
    """Remote classifier behind the POST /predict wire endpoint."""

    def __init__(
        self,
        base_url: str,
        config: HttpClientConfig | None = None,
        label_count: int | None = None,
        session: requests.Session | None = None,
    ):
        self._endpoint = _HttpEndpoint(base_url, config or HttpClientConfig(), session)
        self._label_count = label_count

    @property
    def label_count(self) -> int:
        if self._label_count is None:
            health = self.health()
            labels = health.get("labels")
            if not isinstance(labels, int) or labels < 1:
                raise VictimProtocolError(f"/health reports unusable label count: {labels!r}")
            self._label_count = labels
        return self._label_count

    def health(self) -> dict:
        return self._endpoint.get_json("/health")

    def _predict_rows(self, texts: Sequence[str]) -> list[Sequence[float]]:
        rows: list[Sequence[float]] = []
        step = self._endpoint.config.max_batch
        for start in range(0, len(texts), step):
            chunk = list(texts[start : start + step])
            body = self._endpoint.post_json("/predict", {"texts": chunk})
            rows.extend(parse_predict_response(body, expected_rows=len(chunk)))
        return rows


class HttpTranslator(Translator):
    """Remote translator behind the POST /translate wire endpoint."""

    def __init__(
        self,
        base_url: str,
        config: HttpClientConfig | None = None,
        session: requests.Session | None = None,
    ):
        self._endpoint = _HttpEndpoint(base_url, config or HttpClientConfig(), session)

    def health(self) -> dict:
        return self._endpoint.get_json("/health")

    def _translate(self, texts: Sequence[str], src: str, tgt: str) -> list[str]:
        out: list[str] = []
        step = self._endpoint.config.max_batch
        for start in range(0, len(texts), step):
            chunk = list(texts[start : start + step])
            body = self._endpoint.post_json(
                "/translate", {"texts": chunk, "src": src, "tgt": tgt}
            )
            out.extend(parse_translate_response(body, expected_rows=len(chunk)))
        return out

"""Word-vector storage and exact thresholded top-k cosine neighbor queries.

Loads the plain-text ``.vec`` format (header line ``<count> <dim>``, then one
``word v1 ... v_dim`` line per entry) used by widely published pretrained
word vectors. Neighbor queries are an exact scan over the full vocabulary
with cached norms; there is deliberately no approximate index, so results
are reproducible and directly checkable against a brute-force scan.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable, TextIO

import numpy as np


class EmbeddingError(Exception):
    """Base class for embedding-store failures."""


class VectorParseError(EmbeddingError):
    """A vector file line could not be parsed; message names the line."""


@dataclass(frozen=True)
class SynonymQueryParams:
    """Neighbor-query knobs: at most ``k`` results with cosine >= ``delta``.

    ``delta`` is not range-checked: values above 1 are legal and simply yield
    empty result lists, which is how candidate retrieval is switched off.
    """

    k: int = 50
    delta: float = 0.6

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


@dataclass(frozen=True)
class SynonymResult:
    """Ranked neighbors for one query word.

    ``oov`` distinguishes "word not in the store" from "word present but no
    neighbor reached the threshold"; both produce an empty neighbor list.
    """

    word: str
    neighbors: tuple[tuple[str, float], ...]
    oov: bool = False

    def __bool__(self) -> bool:
        return bool(self.neighbors)


@dataclass
class LoadReport:
    """Bookkeeping from a vector-file load; skips are counted, not fatal."""

    declared_count: int
    loaded: int = 0
    skipped_duplicates: int = 0
    skipped_zero_norm: int = 0

    @property
    def skipped(self) -> int:
        return self.skipped_duplicates + self.skipped_zero_norm


class EmbeddingStore:
    """Immutable word-vector vocabulary with a cached L2 norm per word."""

    def __init__(self, words: list[str], matrix: np.ndarray, report: LoadReport | None = None):
        if matrix.ndim != 2 or len(words) != matrix.shape[0]:
            raise EmbeddingError("words and matrix rows must align")
        self._words = list(words)
        self._matrix = np.asarray(matrix, dtype=np.float64)
        self._index = {word: i for i, word in enumerate(self._words)}
        if len(self._index) != len(self._words):
            raise EmbeddingError("duplicate words in store")
        self._norms = np.linalg.norm(self._matrix, axis=1)
        if np.any(self._norms == 0.0):
            raise EmbeddingError("zero-norm vector in store")
        self.load_report = report or LoadReport(declared_count=len(words), loaded=len(words))

    @property
    def dim(self) -> int:
        return self._matrix.shape[1]

    def __len__(self) -> int:
        return len(self._words)

    def __contains__(self, word: str) -> bool:
        return word in self._index

    @property
    def words(self) -> tuple[str, ...]:
        return tuple(self._words)

    def vector(self, word: str) -> np.ndarray:
        try:
            return self._matrix[self._index[word]].copy()
        except KeyError:
            raise KeyError(f"word not in store: {word!r}") from None


def _lines_from(reader: str | Path | TextIO | BinaryIO | Iterable[str]) -> Iterable[str]:
    if isinstance(reader, (str, Path)):
        with open(reader, "r", encoding="utf-8") as handle:
            yield from handle
        return
    if isinstance(reader, io.TextIOBase):
        yield from reader
        return
    for line in reader:
        if isinstance(line, bytes):
            yield line.decode("utf-8")
        else:
            yield line


def load_vectors(reader: str | Path | TextIO | BinaryIO | Iterable[str]) -> EmbeddingStore:
    """Parse a ``.vec`` stream (or path) into an :class:`EmbeddingStore`.

    Duplicate words keep their first occurrence; zero vectors are dropped.
    Both skips are tallied in ``store.load_report``. Dimension mismatches and
    non-numeric components raise :class:`VectorParseError` with the 1-based
    line number.
    """
    lines = iter(_lines_from(reader))
    try:
        header = next(lines)
    except StopIteration:
        raise VectorParseError("line 1: empty stream, expected '<count> <dim>' header")
    parts = header.split()
    if len(parts) != 2:
        raise VectorParseError(f"line 1: expected '<count> <dim>' header, got {header.strip()!r}")
    try:
        declared_count, dim = int(parts[0]), int(parts[1])
    except ValueError:
        raise VectorParseError(f"line 1: non-integer header fields: {header.strip()!r}")
    if dim < 1:
        raise VectorParseError(f"line 1: dimension must be positive, got {dim}")

    report = LoadReport(declared_count=declared_count)
    words: list[str] = []
    seen: set[str] = set()
    rows: list[np.ndarray] = []
    for lineno, line in enumerate(lines, start=2):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != dim + 1:
            raise VectorParseError(
                f"line {lineno}: expected {dim} components after the word, got {len(fields) - 1}"
            )
        word = fields[0]
        try:
            vec = np.array([float(x) for x in fields[1:]], dtype=np.float64)
        except ValueError:
            raise VectorParseError(f"line {lineno}: non-numeric vector component")
        if word in seen:
            report.skipped_duplicates += 1
            continue
        if not np.any(vec):
            report.skipped_zero_norm += 1
            continue
        seen.add(word)
        words.append(word)
        rows.append(vec)

    report.loaded = len(words)
    matrix = np.vstack(rows) if rows else np.empty((0, dim), dtype=np.float64)
    return EmbeddingStore(words, matrix, report)


def cosine(u: np.ndarray | Iterable[float], v: np.ndarray | Iterable[float]) -> float:
    """Cosine similarity of two nonzero vectors, clamped to [-1, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise EmbeddingError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise EmbeddingError("cosine of a zero vector is undefined")
    value = float(np.dot(u, v) / (nu * nv))
    return max(-1.0, min(1.0, value))


def synonyms(
    store: EmbeddingStore, word: str, params: SynonymQueryParams | None = None
) -> SynonymResult:
    """Top-k neighbors of ``word`` with cosine >= delta, ranked deterministically.

    Results are sorted by similarity descending with ties broken by
    lexicographic word order, never include the query token itself, and are
    empty (flagged ``oov``) for words absent from the store. Only the exact
    query token is excluded; case or inflection variants stay eligible.
    """
    params = params or SynonymQueryParams()
    idx = store._index.get(word)
    if idx is None:
        return SynonymResult(word=word, neighbors=(), oov=True)
    query = store._matrix[idx]
    sims = store._matrix @ query / (store._norms * store._norms[idx])
    np.clip(sims, -1.0, 1.0, out=sims)
    mask = sims >= params.delta
    mask[idx] = False
    candidate_idx = np.nonzero(mask)[0]
    ranked = sorted(
        ((store._words[i], float(sims[i])) for i in candidate_idx),
        key=lambda pair: (-pair[1], pair[0]),
    )
    return SynonymResult(word=word, neighbors=tuple(ranked[: params.k]), oov=False)

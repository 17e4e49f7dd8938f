"""Deterministic corpora, embeddings and victims used across the test suite.

The separable corpus is constructed so the word-substitution attack provably
succeeds on every sample: each sample carries exactly one decisive keyword of
its gold class, that keyword's only embedding neighbor above the cosine
threshold belongs to the opposing class's keyword list, and every other token
is out-of-vocabulary filler. The breakable round-trip corpus works the same
way for the keyword-drop translator: dropping the decisive keyword of a
gold-1 sample leaves a uniform distribution whose argmax is class 0.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

from textsiege import EmbeddingStore, LabeledDataset, LanguageInfo, Sample, load_vectors, save_dataset
from textsiege.victim import KeywordVictim, make_keyword_victim

SMOOTHING = 0.1
PAIR_COSINE = 0.8  # decisive word vs its opposing-class neighbor
DROP_WORD = "dropterm"


def store_from_vectors(vectors: dict[str, list[float]]) -> EmbeddingStore:
    """Build a store through the real .vec parser."""
    dims = {len(v) for v in vectors.values()}
    assert len(dims) == 1, "all vectors must share a dimension"
    dim = dims.pop()
    lines = [f"{len(vectors)} {dim}"]
    for word, vec in vectors.items():
        lines.append(word + " " + " ".join(repr(float(x)) for x in vec))
    return load_vectors(io.StringIO("\n".join(lines) + "\n"))


@dataclass
class SeparableFixture:
    dataset: LabeledDataset
    keywords: list[list[str]]
    vectors: dict[str, list[float]]
    store: EmbeddingStore
    victim: KeywordVictim
    decisive: dict[str, tuple[int, str, str]]  # sample id -> (position, word, neighbor)


def build_separable_fixture(n_samples: int = 50, dev_count: int = 30) -> SeparableFixture:
    """Corpus where every sample has exactly one flip-inducing substitution."""
    labels = ("red", "blue")
    keywords: list[list[str]] = [[], []]
    vectors: dict[str, list[float]] = {}
    dim = 2 * n_samples
    samples: list[Sample] = []
    decisive: dict[str, tuple[int, str, str]] = {}

    for i in range(n_samples):
        gold = i % 2
        m = 4 + (i % 6)
        position = i % m
        word = f"key{i}a"
        neighbor = f"key{i}b"
        keywords[gold].append(word)
        keywords[1 - gold].append(neighbor)

        axis = [0.0] * dim
        axis[2 * i] = 1.0
        vectors[word] = axis
        tilted = [0.0] * dim
        tilted[2 * i] = PAIR_COSINE
        tilted[2 * i + 1] = (1.0 - PAIR_COSINE**2) ** 0.5
        vectors[neighbor] = tilted

        tokens = [f"pad{i}x{j}" for j in range(m)]
        tokens[position] = word
        sample_id = f"s{i:03d}"
        samples.append(Sample(id=sample_id, text=" ".join(tokens), label=gold))
        decisive[sample_id] = (position, word, neighbor)

    dataset = LabeledDataset(
        name="separable",
        language=LanguageInfo(code="eng_Latn", category=5),
        labels=labels,
        splits={
            "dev": tuple(samples[:dev_count]),
            "test": tuple(samples[dev_count:]),
        },
    )
    return SeparableFixture(
        dataset=dataset,
        keywords=keywords,
        vectors=vectors,
        store=store_from_vectors(vectors),
        victim=make_keyword_victim(keywords, SMOOTHING),
        decisive=decisive,
    )


@dataclass
class RtmtFixture:
    dataset: LabeledDataset
    keywords: list[list[str]]
    victim: KeywordVictim
    drop_words: list[str]
    breakable_ids: set[str]


def build_rtmt_fixture(n_breakable: int = 13, n_stable: int = 7) -> RtmtFixture:
    """Corpus where dropping one keyword flips exactly the breakable samples."""
    keywords = [["keepterm"], [DROP_WORD, "otherterm"]]
    samples: list[Sample] = []
    breakable_ids: set[str] = set()
    for i in range(n_breakable):
        sample_id = f"b{i:02d}"
        samples.append(
            Sample(id=sample_id, text=f"filler{i} {DROP_WORD} trailing{i}", label=1)
        )
        breakable_ids.add(sample_id)
    for i in range(n_stable):
        # Alternate gold classes; neither keyword is in the drop list.
        if i % 2 == 0:
            samples.append(Sample(id=f"k{i:02d}", text=f"start{i} keepterm end{i}", label=0))
        else:
            samples.append(Sample(id=f"k{i:02d}", text=f"start{i} otherterm end{i}", label=1))
    dataset = LabeledDataset(
        name="rtmt-breakable",
        language=LanguageInfo(code="dan_Latn", category=3),
        labels=("red", "blue"),
        splits={"dev": tuple(samples[: len(samples) // 2]), "test": tuple(samples[len(samples) // 2 :])},
    )
    return RtmtFixture(
        dataset=dataset,
        keywords=keywords,
        victim=make_keyword_victim(keywords, SMOOTHING),
        drop_words=[DROP_WORD],
        breakable_ids=breakable_ids,
    )


def write_vec_file(vectors: dict[str, list[float]], path: Path) -> Path:
    dims = {len(v) for v in vectors.values()}
    assert len(dims) == 1
    dim = dims.pop()
    lines = [f"{len(vectors)} {dim}"]
    for word, vec in vectors.items():
        lines.append(word + " " + " ".join(repr(float(x)) for x in vec))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_separable_campaign(
    directory: Path,
    fixture: SeparableFixture | None = None,
    attacks: tuple[str, ...] = ("textfooler", "rtmt"),
    concurrency: int = 1,
) -> Path:
    """Materialize the separable fixture as an on-disk campaign; returns config path."""
    fixture = fixture or build_separable_fixture()
    corpus_dir = directory / "corpus"
    save_dataset(fixture.dataset, corpus_dir, format="tsv")
    vec_path = write_vec_file(fixture.vectors, directory / "vectors.vec")
    config = f"""\
campaign:
  out_dir: out
  attacks: [{", ".join(attacks)}]
  concurrency: {concurrency}

victim:
  kind: keyword_toy
  name: toy
  smoothing: {SMOOTHING}
  cache: true
  keywords:
    - [{", ".join(fixture.keywords[0])}]
    - [{", ".join(fixture.keywords[1])}]

embeddings:
  path: {vec_path.name}

attack:
  k: 50
  delta: 0.6
  max_queries: 2000

rtmt:
  pivot: zul_Latn
  translator:
    kind: identity

datasets:
  - manifest: corpus/manifest.json
    format: tsv
"""
    config_path = directory / "campaign.yaml"
    config_path.write_text(config, encoding="utf-8")
    return config_path

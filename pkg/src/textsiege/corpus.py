"""Labeled classification datasets: loading, validation, label statistics.

Datasets are small multilingual topic-classification corpora with train/dev/test
splits, an ordered label set, and per-language resource metadata. Texts are
NFC-normalized at load so that downstream caching and diffing are deterministic
across codepoint-equivalent inputs.

On-disk layout: a JSON manifest (name, language code + resource category,
ordered label names, split file paths) next to one file per split, either TSV
(``id<TAB>text<TAB>label`` with a header row) or JSONL (one object per line
with keys ``id``, ``text``, ``label``). Labels in split files are label
*names*, mapped to indices through the manifest's ordered label list.
"""

from __future__ import annotations

import json
import math
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping

SPLIT_NAMES = ("train", "dev", "test")

TSV_HEADER = ("id", "text", "label")


class CorpusError(Exception):
    """Base class for dataset loading and validation failures."""


class CorpusParseError(CorpusError):
    """A split file could not be parsed; message names file and line."""


class CorpusValidationError(CorpusError):
    """Parsed content violates a dataset invariant."""


class Tier(str, Enum):
    """Language resource tier derived from the 1-5 resource category."""

    LRL = "LRL"
    MRL = "MRL"
    HRL = "HRL"


def tier_for_category(category: int) -> Tier:
    """Map a resource category (1-5) to its tier: 5 HRL, 4-3 MRL, 2-1 LRL."""
    if category == 5:
        return Tier.HRL
    if category in (3, 4):
        return Tier.MRL
    if category in (1, 2):
        return Tier.LRL
    raise CorpusValidationError(f"resource category must be 1-5, got {category!r}")


@dataclass(frozen=True)
class LanguageInfo:
    """A language code plus its resource category; the tier is derived."""

    code: str
    category: int

    def __post_init__(self) -> None:
        if not self.code:
            raise CorpusValidationError("language code must be non-empty")
        tier_for_category(self.category)  # validates the range

    @property
    def tier(self) -> Tier:
        return tier_for_category(self.category)


@dataclass(frozen=True)
class Sample:
    """One labeled text. ``label`` indexes into the dataset's label list."""

    id: str
    text: str
    label: int

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise CorpusValidationError(f"sample {self.id!r}: text is empty")
        if self.label < 0:
            raise CorpusValidationError(f"sample {self.id!r}: negative label")


@dataclass(frozen=True)
class LabelDistribution:
    """A per-class probability vector; entries sum to 1 within 1e-6."""

    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.probs:
            raise CorpusValidationError("distribution must have at least one class")
        for p in self.probs:
            if not math.isfinite(p) or p < 0.0 or p > 1.0 + 1e-9:
                raise CorpusValidationError(f"probability out of range: {p!r}")
        total = math.fsum(self.probs)
        if abs(total - 1.0) > 1e-6:
            raise CorpusValidationError(f"probabilities sum to {total!r}, not 1")

    def __len__(self) -> int:
        return len(self.probs)

    @property
    def argmax(self) -> int:
        """Index of the most probable class; ties go to the lowest index."""
        best = 0
        for i in range(1, len(self.probs)):
            if self.probs[i] > self.probs[best]:
                best = i
        return best


@dataclass(frozen=True)
class LabeledDataset:
    """A named dataset: ordered labels, language metadata, per-split samples."""

    name: str
    language: LanguageInfo
    labels: tuple[str, ...]
    splits: Mapping[str, tuple[Sample, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(set(self.labels)) != len(self.labels):
            raise CorpusValidationError(f"dataset {self.name!r}: duplicate label names")
        if not self.labels:
            raise CorpusValidationError(f"dataset {self.name!r}: empty label set")
        seen: dict[str, str] = {}
        for split, samples in self.splits.items():
            if split not in SPLIT_NAMES:
                raise CorpusValidationError(f"unknown split name {split!r}")
            for sample in samples:
                if sample.label >= len(self.labels):
                    raise CorpusValidationError(
                        f"sample {sample.id!r}: label {sample.label} out of range "
                        f"for {len(self.labels)} labels"
                    )
                if sample.id in seen:
                    raise CorpusValidationError(
                        f"sample id {sample.id!r} appears in both "
                        f"{seen[sample.id]!r} and {split!r}"
                    )
                seen[sample.id] = split

    @property
    def label_count(self) -> int:
        return len(self.labels)

    def split(self, name: str) -> tuple[Sample, ...]:
        try:
            return self.splits[name]
        except KeyError:
            raise CorpusValidationError(
                f"dataset {self.name!r} has no {name!r} split"
            ) from None


def _nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


def _read_tsv(path: Path, label_index: Mapping[str, int]) -> list[Sample]:
    samples: list[Sample] = []
    with path.open("r", encoding="utf-8", newline="") as handle:
        lines = handle.read().splitlines()
    if not lines:
        raise CorpusParseError(f"{path}: empty file, expected a header row")
    header = tuple(lines[0].split("\t"))
    if header != TSV_HEADER:
        expected = "\t".join(TSV_HEADER)
        raise CorpusParseError(
            f"{path}:1: expected header {expected!r}, got {lines[0]!r}"
        )
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise CorpusParseError(
                f"{path}:{lineno}: expected 3 tab-separated fields "
                f"(id, text, label), got {len(fields)}"
            )
        sample_id, text, label_name = fields
        samples.append(_build_sample(path, lineno, sample_id, text, label_name, label_index))
    return samples


def _read_jsonl(path: Path, label_index: Mapping[str, int]) -> list[Sample]:
    samples: list[Sample] = []
    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusParseError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(record, dict):
                raise CorpusParseError(f"{path}:{lineno}: expected a JSON object")
            missing = [key for key in ("id", "text", "label") if key not in record]
            if missing:
                raise CorpusParseError(
                    f"{path}:{lineno}: missing key(s): {', '.join(missing)}"
                )
            if not isinstance(record["label"], str):
                raise CorpusValidationError(
                    f"{path}:{lineno}: label must be a label name string"
                )
            samples.append(
                _build_sample(
                    path, lineno, str(record["id"]), str(record["text"]),
                    record["label"], label_index,
                )
            )
    return samples


def _build_sample(
    path: Path,
    lineno: int,
    sample_id: str,
    text: str,
    label_name: str,
    label_index: Mapping[str, int],
) -> Sample:
    name = _nfc(label_name)
    if name not in label_index:
        raise CorpusValidationError(f"{path}:{lineno}: unknown label name {label_name!r}")
    normalized = _nfc(text)
    if not normalized.strip():
        raise CorpusValidationError(f"{path}:{lineno}: empty text")
    return Sample(id=sample_id, text=normalized, label=label_index[name])


def load_dataset(manifest_path: str | Path, format: str = "tsv") -> LabeledDataset:
    """Load a dataset from its JSON manifest.

    ``format`` declares how the split files referenced by the manifest are
    parsed (``tsv`` or ``jsonl``). Split paths are resolved relative to the
    manifest's directory. Sample order equals file order.
    """
    if format not in ("tsv", "jsonl"):
        raise CorpusValidationError(f"unknown dataset format {format!r}")
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise CorpusError(f"manifest not found: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorpusParseError(f"{manifest_path}: invalid JSON: {exc}") from exc
    for key in ("name", "language", "labels", "splits"):
        if key not in manifest:
            raise CorpusValidationError(f"{manifest_path}: manifest missing {key!r}")
    language = manifest["language"]
    if not isinstance(language, dict) or "code" not in language or "category" not in language:
        raise CorpusValidationError(
            f"{manifest_path}: language must be an object with code and category"
        )
    labels = tuple(_nfc(str(label)) for label in manifest["labels"])
    label_index = {label: i for i, label in enumerate(labels)}

    reader = _read_tsv if format == "tsv" else _read_jsonl
    splits: dict[str, tuple[Sample, ...]] = {}
    for split, rel_path in manifest["splits"].items():
        split_path = manifest_path.parent / rel_path
        if not split_path.exists():
            raise CorpusError(f"{manifest_path}: split file not found: {split_path}")
        splits[split] = tuple(reader(split_path, label_index))

    return LabeledDataset(
        name=str(manifest["name"]),
        language=LanguageInfo(code=str(language["code"]), category=int(language["category"])),
        labels=labels,
        splits=splits,
    )


def save_dataset(dataset: LabeledDataset, directory: str | Path, format: str = "tsv") -> Path:
    """Write a dataset as manifest + split files; returns the manifest path.

    The output re-loads to an identical dataset (round-trip stable). Texts
    containing tabs or newlines cannot be represented in TSV and are rejected.
    """
    if format not in ("tsv", "jsonl"):
        raise CorpusValidationError(f"unknown dataset format {format!r}")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    split_files: dict[str, str] = {}
    for split, samples in dataset.splits.items():
        filename = f"{split}.{format}"
        split_files[split] = filename
        path = directory / filename
        if format == "tsv":
            rows = [("\t".join(TSV_HEADER))]
            for sample in samples:
                if "\t" in sample.text or "\n" in sample.text or "\t" in sample.id:
                    raise CorpusValidationError(
                        f"sample {sample.id!r}: text/id not representable as TSV"
                    )
                rows.append(f"{sample.id}\t{sample.text}\t{dataset.labels[sample.label]}")
            path.write_text("\n".join(rows) + "\n", encoding="utf-8")
        else:
            with path.open("w", encoding="utf-8") as handle:
                for sample in samples:
                    record = {
                        "id": sample.id,
                        "text": sample.text,
                        "label": dataset.labels[sample.label],
                    }
                    handle.write(json.dumps(record, ensure_ascii=False, sort_keys=True))
                    handle.write("\n")
    manifest = {
        "name": dataset.name,
        "language": {"code": dataset.language.code, "category": dataset.language.category},
        "labels": list(dataset.labels),
        "splits": split_files,
    }
    manifest_path = directory / "manifest.json"
    manifest_path.write_text(
        json.dumps(manifest, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return manifest_path


def empirical_label_distribution(dataset: LabeledDataset, split: str) -> LabelDistribution:
    """Per-class relative frequencies over one split."""
    samples = dataset.split(split)
    if not samples:
        raise CorpusValidationError(f"split {split!r} is empty")
    counts = [0] * dataset.label_count
    for sample in samples:
        counts[sample.label] += 1
    total = len(samples)
    return LabelDistribution(tuple(count / total for count in counts))


def random_weighted_guess(dist: LabelDistribution) -> float:
    """Accuracy of guessing labels from the empirical class distribution.

    Equals the sum of squared class probabilities; it is minimal (1/k) for a
    uniform distribution and 1 for a single-class one.
    """
    return math.fsum(p * p for p in dist.probs)

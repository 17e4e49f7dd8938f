from __future__ import annotations

import json
import unicodedata
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from textsiege import (
    LabeledDataset,
    LanguageInfo,
    Sample,
    Tier,
    empirical_label_distribution,
    load_dataset,
    random_weighted_guess,
    save_dataset,
    tier_for_category,
)
from textsiege.corpus import (
    CorpusError,
    CorpusParseError,
    CorpusValidationError,
    LabelDistribution,
)


def write_manifest(directory: Path, labels=("A", "B"), splits=None, category=5) -> Path:
    manifest = {
        "name": "mini",
        "language": {"code": "eng_Latn", "category": category},
        "labels": list(labels),
        "splits": splits or {"train": "train.tsv"},
    }
    path = directory / "manifest.json"
    path.write_text(json.dumps(manifest), encoding="utf-8")
    return path


def write_tsv(path: Path, rows: list[str]) -> None:
    path.write_text("\n".join(["id\ttext\tlabel"] + rows) + "\n", encoding="utf-8")


class TestLoadDataset:
    def test_two_row_tsv(self, tmp_path):
        write_tsv(tmp_path / "train.tsv", ["a\thello there\tA", "b\tanother text\tB"])
        dataset = load_dataset(write_manifest(tmp_path), "tsv")
        assert len(dataset.split("train")) == 2
        assert dataset.labels == ("A", "B")
        assert dataset.split("train")[0] == Sample(id="a", text="hello there", label=0)

    def test_sib200_shaped_split_sizes(self, tmp_path):
        # 7 labels, 701/99/204 train/dev/test
        labels = [f"topic{i}" for i in range(7)]
        counts = {"train": 701, "dev": 99, "test": 204}
        splits = {}
        offset = 0
        for split, count in counts.items():
            rows = [
                f"{split}{i}\tsample text number {offset + i}\t{labels[i % 7]}"
                for i in range(count)
            ]
            write_tsv(tmp_path / f"{split}.tsv", rows)
            splits[split] = f"{split}.tsv"
            offset += count
        dataset = load_dataset(write_manifest(tmp_path, labels=labels, splits=splits), "tsv")
        assert {name: len(samples) for name, samples in dataset.splits.items()} == counts
        assert dataset.label_count == 7

    def test_row_with_missing_fields_names_line(self, tmp_path):
        write_tsv(tmp_path / "train.tsv", ["a\thello\tA", "justonefield"])
        with pytest.raises(CorpusParseError, match=r"train\.tsv:3"):
            load_dataset(write_manifest(tmp_path), "tsv")

    def test_unknown_label_name(self, tmp_path):
        write_tsv(tmp_path / "train.tsv", ["a\thello\tC"])
        with pytest.raises(CorpusValidationError, match="unknown label name 'C'"):
            load_dataset(write_manifest(tmp_path), "tsv")

    def test_empty_text_rejected(self, tmp_path):
        write_tsv(tmp_path / "train.tsv", ["a\t   \tA"])
        with pytest.raises(CorpusValidationError, match="empty text"):
            load_dataset(write_manifest(tmp_path), "tsv")

    def test_bad_header_rejected(self, tmp_path):
        (tmp_path / "train.tsv").write_text("text\tlabel\na\tA\n", encoding="utf-8")
        with pytest.raises(CorpusParseError, match="header"):
            load_dataset(write_manifest(tmp_path), "tsv")

    def test_duplicate_id_across_splits_rejected(self, tmp_path):
        write_tsv(tmp_path / "train.tsv", ["a\thello\tA"])
        write_tsv(tmp_path / "dev.tsv", ["a\tworld\tB"])
        manifest = write_manifest(tmp_path, splits={"train": "train.tsv", "dev": "dev.tsv"})
        with pytest.raises(CorpusValidationError, match="appears in both"):
            load_dataset(manifest, "tsv")

    def test_jsonl_round(self, tmp_path):
        path = tmp_path / "train.jsonl"
        rows = [
            {"id": "x", "text": "Ünïcode täxt", "label": "A"},
            {"id": "y", "text": "plain", "label": "B"},
        ]
        path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")
        manifest = write_manifest(tmp_path, splits={"train": "train.jsonl"})
        dataset = load_dataset(manifest, "jsonl")
        assert [s.id for s in dataset.split("train")] == ["x", "y"]

    def test_jsonl_missing_key_names_line(self, tmp_path):
        (tmp_path / "train.jsonl").write_text('{"id": "x", "text": "hi"}\n', encoding="utf-8")
        manifest = write_manifest(tmp_path, splits={"train": "train.jsonl"})
        with pytest.raises(CorpusParseError, match=r"train\.jsonl:1.*label"):
            load_dataset(manifest, "jsonl")

    def test_jsonl_integer_label_rejected(self, tmp_path):
        (tmp_path / "train.jsonl").write_text(
            '{"id": "x", "text": "hi", "label": 0}\n', encoding="utf-8"
        )
        manifest = write_manifest(tmp_path, splits={"train": "train.jsonl"})
        with pytest.raises(CorpusValidationError, match="label name"):
            load_dataset(manifest, "jsonl")

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(CorpusError, match="manifest not found"):
            load_dataset(tmp_path / "nope.json", "tsv")

    def test_texts_are_nfc_normalized(self, tmp_path):
        decomposed = "café"  # e + combining acute
        write_tsv(tmp_path / "train.tsv", [f"a\t{decomposed}\tA"])
        dataset = load_dataset(write_manifest(tmp_path), "tsv")
        text = dataset.split("train")[0].text
        assert text == unicodedata.normalize("NFC", decomposed)
        assert text != decomposed

    def test_round_trip_tsv_and_jsonl(self, tmp_path):
        samples = (
            Sample(id="a", text="first tiny text", label=0),
            Sample(id="b", text="ʞüriøus çontent", label=1),
            Sample(id="c", text="third entry", label=0),
        )
        dataset = LabeledDataset(
            name="round",
            language=LanguageInfo(code="dan_Latn", category=3),
            labels=("one", "two"),
            splits={"train": samples[:2], "dev": samples[2:]},
        )
        for fmt in ("tsv", "jsonl"):
            manifest = save_dataset(dataset, tmp_path / fmt, format=fmt)
            again = load_dataset(manifest, fmt)
            assert again == dataset
            # Serialize once more: files must be byte-identical.
            manifest2 = save_dataset(again, tmp_path / f"{fmt}2", format=fmt)
            assert manifest2.read_bytes() == manifest.read_bytes()


class TestDistributions:
    def test_empirical_symmetric(self, tmp_path):
        dataset = _dataset_with_labels([0, 0, 1, 1])
        assert empirical_label_distribution(dataset, "train").probs == (0.5, 0.5)

    def test_empirical_degenerate(self):
        dataset = _dataset_with_labels([0, 0, 0])
        assert empirical_label_distribution(dataset, "train").probs == (1.0, 0.0)

    def test_empirical_hand_count(self):
        dataset = _dataset_with_labels([0, 0, 0, 1, 2], k=3)
        assert empirical_label_distribution(dataset, "train").probs == (0.6, 0.2, 0.2)

    def test_empty_split_errors(self):
        dataset = _dataset_with_labels([0, 1])
        with pytest.raises(CorpusValidationError, match="no 'dev' split|empty"):
            empirical_label_distribution(dataset, "dev")

    def test_random_weighted_guess_examples(self):
        assert random_weighted_guess(LabelDistribution((0.5, 0.5))) == 0.5
        assert random_weighted_guess(LabelDistribution((1.0,))) == 1.0
        assert abs(random_weighted_guess(LabelDistribution((0.5, 0.3, 0.2))) - 0.38) <= 1e-12

    @given(
        st.lists(st.integers(min_value=1, max_value=50), min_size=1, max_size=6).map(
            lambda counts: tuple(c / sum(counts) for c in counts)
        )
    )
    def test_random_weighted_guess_at_least_uniform(self, probs):
        dist = LabelDistribution(probs)
        k = len(probs)
        value = random_weighted_guess(dist)
        assert value >= 1.0 / k - 1e-12
        uniform = all(abs(p - 1.0 / k) < 1e-12 for p in probs)
        if uniform:
            assert abs(value - 1.0 / k) <= 1e-12
        else:
            assert value > 1.0 / k

    def test_distribution_invariants(self):
        with pytest.raises(CorpusValidationError):
            LabelDistribution((0.5, 0.6))
        with pytest.raises(CorpusValidationError):
            LabelDistribution((-0.1, 1.1))
        with pytest.raises(CorpusValidationError):
            LabelDistribution(())


class TestTiers:
    # (category, tier, expected) for all 5x3 combinations.
    @pytest.mark.parametrize("category", [1, 2, 3, 4, 5])
    @pytest.mark.parametrize("tier", list(Tier))
    def test_all_category_tier_pairs(self, category, tier):
        expected = {1: Tier.LRL, 2: Tier.LRL, 3: Tier.MRL, 4: Tier.MRL, 5: Tier.HRL}
        assert (tier_for_category(category) == tier) is (expected[category] == tier)

    @pytest.mark.parametrize("category", [0, 6, -1])
    def test_invalid_categories(self, category):
        with pytest.raises(CorpusValidationError):
            tier_for_category(category)

    def test_language_info_carries_tier(self):
        assert LanguageInfo(code="yor_Latn", category=2).tier is Tier.LRL
        assert LanguageInfo(code="dan_Latn", category=3).tier is Tier.MRL
        assert LanguageInfo(code="eng_Latn", category=5).tier is Tier.HRL


def _dataset_with_labels(labels: list[int], k: int = 2) -> LabeledDataset:
    names = tuple(f"L{i}" for i in range(k))
    samples = tuple(
        Sample(id=f"s{i}", text=f"text {i}", label=label) for i, label in enumerate(labels)
    )
    return LabeledDataset(
        name="labels",
        language=LanguageInfo(code="eng_Latn", category=5),
        labels=names,
        splits={"train": samples},
    )

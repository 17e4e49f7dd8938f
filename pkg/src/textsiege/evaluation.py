"""Clean accuracy, attack sets, ASR, perturbation rates, tiered reports.

The campaign flow: measure clean accuracy (CACC) on the dev and test splits,
take the union of correctly-predicted samples as the attack set, attack it,
then report ASR (the share of attack-set samples whose prediction flipped,
which equals one minus post-attack accuracy because pre-attack accuracy on
this set is 100% by construction) alongside the mean perturbation rate and
query spend, aggregated per resource tier as mean +/- standard deviation.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import statistics
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

from .attacks.outcomes import AttackOutcome
from .attacks.textfooler import tokenize
from .corpus import LabeledDataset, Sample, Tier
from .victim import VictimModel

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CleanEvalResult:
    """Accuracy over one split plus the ids the model got right."""

    split: str
    correct_ids: tuple[str, ...]
    accuracy: float
    total: int

    @property
    def correct_id_set(self) -> frozenset[str]:
        return frozenset(self.correct_ids)


def clean_eval(dataset: LabeledDataset, split: str, model: VictimModel) -> CleanEvalResult:
    """Compare predictions to gold labels over one split."""
    samples = dataset.split(split)
    if not samples:
        raise ValueError(f"split {split!r} is empty")
    distributions = model.predict([s.text for s in samples])
    correct = tuple(
        sample.id
        for sample, dist in zip(samples, distributions)
        if dist.argmax == sample.label
    )
    return CleanEvalResult(
        split=split,
        correct_ids=correct,
        accuracy=len(correct) / len(samples),
        total=len(samples),
    )


def build_attack_set(
    dev: CleanEvalResult, test: CleanEvalResult, dataset: LabeledDataset
) -> list[Sample]:
    """Union of correctly-predicted dev and test samples, dataset order kept.

    An empty result is allowed (ASR becomes undefined); it logs a warning
    rather than failing the campaign.
    """
    wanted = dev.correct_id_set | test.correct_id_set
    picked: dict[str, Sample] = {}
    for split in ("dev", "test"):
        for sample in dataset.splits.get(split, ()):
            if sample.id in wanted and sample.id not in picked:
                picked[sample.id] = sample
    if not picked:
        log.warning(
            "dataset %s: no correctly-predicted dev/test samples; attack set is empty",
            dataset.name,
        )
    return list(picked.values())


def asr(outcomes: Sequence[AttackOutcome]) -> float | None:
    """Attack success rate: flipped / attempted. None for an empty list."""
    if not outcomes:
        return None
    return sum(1 for o in outcomes if o.success) / len(outcomes)


def post_attack_accuracy(outcomes: Sequence[AttackOutcome]) -> float | None:
    """Model accuracy on the attacked set: unflipped / attempted."""
    if not outcomes:
        return None
    return sum(1 for o in outcomes if not o.success) / len(outcomes)


def token_edit_distance(a: Sequence[str], b: Sequence[str]) -> int:
    """Levenshtein distance over token sequences."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, token_a in enumerate(a, start=1):
        current = [i]
        for j, token_b in enumerate(b, start=1):
            cost = 0 if token_a == token_b else 1
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost))
        previous = current
    return previous[-1]


def outcome_perturbation(outcome: AttackOutcome, original_text: str) -> float:
    """Perturbation rate of one outcome, in [0, 1]; 0 for failures.

    Word-level outcomes report substituted tokens over original tokens.
    Holistic outcomes (empty substitution list) report token-level edit
    distance over the original token count, clamped to 1.
    """
    if not outcome.success:
        return 0.0
    original_tokens = tokenize(original_text).tokens
    if not original_tokens:
        return 0.0
    if outcome.substitutions:
        return len(outcome.substitutions) / len(original_tokens)
    adversarial_tokens = tokenize(outcome.adversarial_text).tokens if outcome.adversarial_text else ()
    distance = token_edit_distance(original_tokens, adversarial_tokens)
    return min(1.0, distance / len(original_tokens))


def mean_perturbation(
    outcomes: Sequence[AttackOutcome], originals: Mapping[str, str]
) -> float | None:
    """Mean perturbation rate over all outcomes (failures contribute 0)."""
    if not outcomes:
        return None
    return math.fsum(
        outcome_perturbation(o, originals[o.sample_id]) for o in outcomes
    ) / len(outcomes)


def mean_perturbation_of_successes(
    outcomes: Sequence[AttackOutcome], originals: Mapping[str, str]
) -> float | None:
    """Mean perturbation rate over successful outcomes only."""
    wins = [o for o in outcomes if o.success]
    if not wins:
        return None
    return math.fsum(outcome_perturbation(o, originals[o.sample_id]) for o in wins) / len(wins)


@dataclass(frozen=True)
class ReportRow:
    """Per (dataset, language, attack, model) campaign metrics."""

    dataset: str
    language: str
    tier: Tier
    attack: str
    model: str
    cacc_dev: float
    cacc_test: float
    attack_set_size: int
    asr: float | None
    mean_perturbation: float | None
    mean_perturbation_success: float | None
    total_queries: int


@dataclass(frozen=True)
class TierAggregate:
    """Across-language mean and spread of ASR/perturbation within one tier."""

    dataset: str
    attack: str
    model: str
    tier: Tier
    n_languages: int
    asr_mean: float
    asr_std: float
    perturbation_mean: float
    perturbation_std: float


@dataclass(frozen=True)
class CampaignReport:
    rows: tuple[ReportRow, ...]
    aggregates: tuple[TierAggregate, ...]
    std_mode: str = "sample"


def _spread(values: Sequence[float], mode: str) -> float:
    """Mean spread: sample (n-1) std by default, population on request.

    A single value has zero spread by definition here, so one-language tiers
    report +/- 0 instead of blowing up.
    """
    if len(values) <= 1:
        return 0.0
    if mode == "population":
        return statistics.pstdev(values)
    return statistics.stdev(values)


def aggregate(rows: Sequence[ReportRow], std_mode: str = "sample") -> CampaignReport:
    """Group rows by (dataset, attack, model, tier) and summarize.

    Rows with undefined ASR (empty attack sets) are excluded from the
    aggregates but kept in the report rows. Aggregation is
    permutation-invariant: groups and their members are sorted.
    """
    if std_mode not in ("sample", "population"):
        raise ValueError(f"std_mode must be 'sample' or 'population', got {std_mode!r}")
    groups: dict[tuple[str, str, str, Tier], list[ReportRow]] = {}
    for row in rows:
        if row.asr is None:
            continue
        groups.setdefault((row.dataset, row.attack, row.model, row.tier), []).append(row)
    aggregates = []
    for (dataset, attack, model, tier), members in sorted(
        groups.items(), key=lambda item: (item[0][0], item[0][1], item[0][2], item[0][3].value)
    ):
        asrs = sorted(row.asr for row in members)
        perturbations = sorted(
            row.mean_perturbation for row in members if row.mean_perturbation is not None
        )
        aggregates.append(
            TierAggregate(
                dataset=dataset,
                attack=attack,
                model=model,
                tier=tier,
                n_languages=len(members),
                asr_mean=math.fsum(asrs) / len(asrs),
                asr_std=_spread(asrs, std_mode),
                perturbation_mean=(
                    math.fsum(perturbations) / len(perturbations) if perturbations else 0.0
                ),
                perturbation_std=_spread(perturbations, std_mode) if perturbations else 0.0,
            )
        )
    ordered = tuple(
        sorted(rows, key=lambda r: (r.dataset, r.attack, r.model, r.tier.value, r.language))
    )
    return CampaignReport(rows=ordered, aggregates=tuple(aggregates), std_mode=std_mode)


def merge_runs(runs: Sequence[Sequence[ReportRow]], std_mode: str = "sample") -> dict:
    """Average per-language metrics across runs, then aggregate per tier.

    Returns both spread decompositions: ``across_languages`` (std of
    run-averaged per-language ASR within a tier) and ``across_runs`` (per
    tier, std over runs of that run's tier mean). With a single run the two
    coincide with the plain report.
    """
    if not runs:
        raise ValueError("merge_runs requires at least one run")
    keyed: dict[tuple[str, str, str, str], list[ReportRow]] = {}
    for run in runs:
        for row in run:
            keyed.setdefault((row.dataset, row.attack, row.model, row.language), []).append(row)
    averaged: list[ReportRow] = []
    for key, versions in sorted(keyed.items()):
        asrs = [row.asr for row in versions if row.asr is not None]
        perts = [row.mean_perturbation for row in versions if row.mean_perturbation is not None]
        base = versions[0]
        averaged.append(
            replace(
                base,
                cacc_dev=math.fsum(r.cacc_dev for r in versions) / len(versions),
                cacc_test=math.fsum(r.cacc_test for r in versions) / len(versions),
                asr=math.fsum(asrs) / len(asrs) if asrs else None,
                mean_perturbation=math.fsum(perts) / len(perts) if perts else None,
                total_queries=sum(r.total_queries for r in versions),
            )
        )
    across_languages = aggregate(averaged, std_mode=std_mode)
    per_run_reports = [aggregate(run, std_mode=std_mode) for run in runs]
    across_runs: dict[tuple[str, str, str, str], dict] = {}
    for report in per_run_reports:
        for agg in report.aggregates:
            key = (agg.dataset, agg.attack, agg.model, agg.tier.value)
            across_runs.setdefault(key, {"tier_means": []})["tier_means"].append(agg.asr_mean)
    runs_decomposition = [
        {
            "dataset": key[0],
            "attack": key[1],
            "model": key[2],
            "tier": key[3],
            "n_runs": len(entry["tier_means"]),
            "asr_mean": math.fsum(entry["tier_means"]) / len(entry["tier_means"]),
            "asr_std": _spread(sorted(entry["tier_means"]), std_mode),
        }
        for key, entry in sorted(across_runs.items())
    ]
    return {
        "averaged_rows": averaged,
        "across_languages": across_languages,
        "across_runs": runs_decomposition,
    }


_CSV_COLUMNS = (
    "dataset",
    "language",
    "tier",
    "attack",
    "model",
    "cacc_dev",
    "cacc_test",
    "attack_set_size",
    "asr",
    "mean_perturbation",
    "mean_perturbation_success",
    "total_queries",
)


def _format_optional(value: float | None) -> str:
    return "" if value is None else repr(value)


def write_report_csv(report: CampaignReport, path: str | Path) -> None:
    """One CSV row per language per attack per model; floats round-trip."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(_CSV_COLUMNS)
        for row in report.rows:
            writer.writerow(
                [
                    row.dataset,
                    row.language,
                    row.tier.value,
                    row.attack,
                    row.model,
                    repr(row.cacc_dev),
                    repr(row.cacc_test),
                    str(row.attack_set_size),
                    _format_optional(row.asr),
                    _format_optional(row.mean_perturbation),
                    _format_optional(row.mean_perturbation_success),
                    str(row.total_queries),
                ]
            )


def read_report_csv(path: str | Path) -> list[ReportRow]:
    with Path(path).open("r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if tuple(header) != _CSV_COLUMNS:
            raise ValueError(f"unexpected report columns: {header}")
        rows = []
        for record in reader:
            fields = dict(zip(_CSV_COLUMNS, record))
            rows.append(
                ReportRow(
                    dataset=fields["dataset"],
                    language=fields["language"],
                    tier=Tier(fields["tier"]),
                    attack=fields["attack"],
                    model=fields["model"],
                    cacc_dev=float(fields["cacc_dev"]),
                    cacc_test=float(fields["cacc_test"]),
                    attack_set_size=int(fields["attack_set_size"]),
                    asr=float(fields["asr"]) if fields["asr"] else None,
                    mean_perturbation=(
                        float(fields["mean_perturbation"]) if fields["mean_perturbation"] else None
                    ),
                    mean_perturbation_success=(
                        float(fields["mean_perturbation_success"])
                        if fields["mean_perturbation_success"]
                        else None
                    ),
                    total_queries=int(fields["total_queries"]),
                )
            )
    return rows


def report_to_json_dict(report: CampaignReport) -> dict:
    """Nested-by-tier JSON structure for the campaign report."""
    by_tier: dict[str, list[dict]] = {}
    for row in report.rows:
        by_tier.setdefault(row.tier.value, []).append(
            {
                "dataset": row.dataset,
                "language": row.language,
                "attack": row.attack,
                "model": row.model,
                "cacc_dev": row.cacc_dev,
                "cacc_test": row.cacc_test,
                "attack_set_size": row.attack_set_size,
                "asr": row.asr,
                "mean_perturbation": row.mean_perturbation,
                "mean_perturbation_success": row.mean_perturbation_success,
                "total_queries": row.total_queries,
            }
        )
    return {
        "std_mode": report.std_mode,
        "tiers": by_tier,
        "aggregates": [
            {
                "dataset": agg.dataset,
                "attack": agg.attack,
                "model": agg.model,
                "tier": agg.tier.value,
                "n_languages": agg.n_languages,
                "asr_mean": agg.asr_mean,
                "asr_std": agg.asr_std,
                "perturbation_mean": agg.perturbation_mean,
                "perturbation_std": agg.perturbation_std,
            }
            for agg in report.aggregates
        ],
    }


def write_report_json(report: CampaignReport, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(report_to_json_dict(report), ensure_ascii=False, indent=2, sort_keys=True)
        + "\n",
        encoding="utf-8",
    )


def render_report_markdown(report: CampaignReport) -> str:
    """ASR summary table: one row per attack/model, tier columns, mean +/- std."""
    tiers = [t for t in (Tier.LRL, Tier.MRL, Tier.HRL) if any(a.tier == t for a in report.aggregates)]
    buffer = io.StringIO()
    datasets = sorted({agg.dataset for agg in report.aggregates})
    for dataset in datasets:
        buffer.write(f"## {dataset} (ASR)\n\n")
        header = ["Attack", "Model"] + [tier.value + "s" for tier in tiers]
        buffer.write("| " + " | ".join(header) + " |\n")
        buffer.write("|" + "---|" * len(header) + "\n")
        keys = sorted(
            {(agg.attack, agg.model) for agg in report.aggregates if agg.dataset == dataset}
        )
        lookup = {
            (agg.attack, agg.model, agg.tier): agg
            for agg in report.aggregates
            if agg.dataset == dataset
        }
        for attack_name, model_name in keys:
            cells = [attack_name, model_name]
            for tier in tiers:
                agg = lookup.get((attack_name, model_name, tier))
                if agg is None:
                    cells.append("-")
                else:
                    cells.append(f"{agg.asr_mean:.2f} ± {agg.asr_std:.2f} (n={agg.n_languages})")
            buffer.write("| " + " | ".join(cells) + " |\n")
        buffer.write("\n")
    return buffer.getvalue()


def write_report_markdown(report: CampaignReport, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_report_markdown(report), encoding="utf-8")

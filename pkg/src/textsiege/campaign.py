"""Campaign configuration and orchestration: clean eval, attacks, reports.

A campaign is declared in a single YAML file (validated before any network
activity), runs one victim against one or more datasets with the selected
attacks, and leaves a run directory of deterministic artifacts: per-split
clean-eval JSON, per-(dataset, attack) outcome JSONL, and the report in CSV,
JSON and markdown. Timestamps live only in ``metadata.json`` so reruns are
byte-identical everywhere else.
"""

from __future__ import annotations

import json
import logging
import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import yaml

from . import evaluation
from .attacks import (
    AttackOutcome,
    AttackParams,
    RtmtParams,
    StubTranslator,
    dump_outcomes_jsonl,
    rtmt_attack,
)
from .attacks import textfooler as tf
from .corpus import LabeledDataset, Sample, load_dataset
from .embeddings import EmbeddingStore, load_vectors
from .evaluation import CleanEvalResult, ReportRow
from .victim import (
    HttpClientConfig,
    HttpTranslator,
    HttpVictimModel,
    QueryLedger,
    Translator,
    VictimError,
    VictimModel,
    make_keyword_victim,
    with_cache,
)

log = logging.getLogger(__name__)

ATTACK_NAMES = ("textfooler", "rtmt")


class ConfigError(Exception):
    """The campaign configuration is invalid; nothing was run."""


class CampaignAbort(Exception):
    """The campaign was aborted at runtime (e.g. the victim went away)."""


@dataclass(frozen=True)
class DatasetConfig:
    manifest: Path
    format: str = "tsv"


@dataclass(frozen=True)
class VictimConfig:
    kind: str  # "keyword_toy" | "http"
    name: str
    keywords: tuple[tuple[str, ...], ...] = ()
    smoothing: float = 0.1
    url: str = ""
    token_env: str = "TEXTSIEGE_TOKEN"
    batch_size: int = 32
    max_retries: int = 3
    backoff: float = 0.5
    max_inflight: int = 4
    timeout: float = 30.0
    cache: bool = True


@dataclass(frozen=True)
class TranslatorConfig:
    kind: str = "identity"  # stub modes or "http"
    drop_words: tuple[str, ...] = ()
    url: str = ""


@dataclass(frozen=True)
class CampaignConfig:
    config_path: Path
    out_dir: Path
    attacks: tuple[str, ...]
    concurrency: int
    victim: VictimConfig
    datasets: tuple[DatasetConfig, ...]
    embeddings_path: Path | None
    attack_params: AttackParams
    rtmt_pivot: str
    translator: TranslatorConfig


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ConfigError(f"{context}: missing required key {key!r}")
    return mapping[key]


def load_config(
    path: str | Path,
    out_override: str | Path | None = None,
    attack_override: str | None = None,
) -> CampaignConfig:
    """Parse and validate a campaign config; all checks happen up front."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    base = path.parent

    campaign = raw.get("campaign", {})
    attacks = campaign.get("attacks", list(ATTACK_NAMES))
    if isinstance(attacks, str):
        attacks = [attacks]
    if attack_override:
        attacks = list(ATTACK_NAMES) if attack_override == "both" else [attack_override]
    for name in attacks:
        if name not in ATTACK_NAMES:
            raise ConfigError(f"unknown attack {name!r}; choose from {ATTACK_NAMES}")
    if not attacks:
        raise ConfigError("no attacks selected")

    concurrency = int(campaign.get("concurrency", 1))
    if concurrency < 1:
        raise ConfigError(f"concurrency must be >= 1, got {concurrency}")

    out_dir = Path(out_override) if out_override else base / campaign.get("out_dir", "out")

    victim_raw = raw.get("victim")
    if not isinstance(victim_raw, dict):
        raise ConfigError("config needs a 'victim' section")
    kind = _require(victim_raw, "kind", "victim")
    if kind == "keyword_toy":
        if "url" in victim_raw:
            raise ConfigError("victim: configure either a toy or an endpoint, not both")
        keywords_raw = _require(victim_raw, "keywords", "victim")
        if not isinstance(keywords_raw, list) or not all(isinstance(k, list) for k in keywords_raw):
            raise ConfigError("victim.keywords must be a list of per-label keyword lists")
        victim = VictimConfig(
            kind=kind,
            name=str(victim_raw.get("name", "keyword_toy")),
            keywords=tuple(tuple(str(w) for w in words) for words in keywords_raw),
            smoothing=float(victim_raw.get("smoothing", 0.1)),
            cache=bool(victim_raw.get("cache", True)),
        )
    elif kind == "http":
        if "keywords" in victim_raw:
            raise ConfigError("victim: configure either a toy or an endpoint, not both")
        url = str(_require(victim_raw, "url", "victim"))
        victim = VictimConfig(
            kind=kind,
            name=str(victim_raw.get("name", url)),
            url=url,
            token_env=str(victim_raw.get("token_env", "TEXTSIEGE_TOKEN")),
            batch_size=int(victim_raw.get("batch_size", 32)),
            max_retries=int(victim_raw.get("max_retries", 3)),
            backoff=float(victim_raw.get("backoff", 0.5)),
            max_inflight=int(victim_raw.get("max_inflight", 4)),
            timeout=float(victim_raw.get("timeout", 30.0)),
            cache=bool(victim_raw.get("cache", True)),
        )
    else:
        raise ConfigError(f"victim.kind must be 'keyword_toy' or 'http', got {kind!r}")

    datasets_raw = raw.get("datasets")
    if not isinstance(datasets_raw, list) or not datasets_raw:
        raise ConfigError("config needs a non-empty 'datasets' list")
    datasets = []
    for i, entry in enumerate(datasets_raw):
        manifest = base / str(_require(entry, "manifest", f"datasets[{i}]"))
        if not manifest.exists():
            raise ConfigError(f"datasets[{i}]: manifest not found: {manifest}")
        fmt = str(entry.get("format", "tsv"))
        if fmt not in ("tsv", "jsonl"):
            raise ConfigError(f"datasets[{i}]: format must be tsv or jsonl, got {fmt!r}")
        datasets.append(DatasetConfig(manifest=manifest, format=fmt))

    embeddings_path: Path | None = None
    embeddings_raw = raw.get("embeddings", {})
    if embeddings_raw.get("path"):
        embeddings_path = base / str(embeddings_raw["path"])
    if "textfooler" in attacks:
        if embeddings_path is None:
            raise ConfigError("textfooler selected but embeddings.path is not set")
        if not embeddings_path.exists():
            raise ConfigError(f"embeddings file not found: {embeddings_path}")

    attack_raw = raw.get("attack", {})
    try:
        attack_params = AttackParams(
            k=int(attack_raw.get("k", 50)),
            delta=float(attack_raw.get("delta", 0.6)),
            max_queries=int(attack_raw.get("max_queries", 2000)),
            max_perturb_fraction=float(attack_raw.get("max_perturb_fraction", 1.0)),
        )
    except ValueError as exc:
        raise ConfigError(f"attack params: {exc}") from exc

    rtmt_raw = raw.get("rtmt", {})
    pivot = str(rtmt_raw.get("pivot", "zul_Latn"))
    translator_raw = rtmt_raw.get("translator", {"kind": "identity"})
    t_kind = str(translator_raw.get("kind", "identity"))
    if t_kind not in ("identity", "keyword_drop", "reverse_tokens", "http"):
        raise ConfigError(f"unknown translator kind {t_kind!r}")
    if t_kind == "http" and not translator_raw.get("url"):
        raise ConfigError("http translator needs a url")
    if t_kind == "keyword_drop" and not translator_raw.get("drop_words"):
        raise ConfigError("keyword_drop translator needs drop_words")
    translator = TranslatorConfig(
        kind=t_kind,
        drop_words=tuple(str(w) for w in translator_raw.get("drop_words", ())),
        url=str(translator_raw.get("url", "")),
    )

    return CampaignConfig(
        config_path=path,
        out_dir=out_dir,
        attacks=tuple(attacks),
        concurrency=concurrency,
        victim=victim,
        datasets=tuple(datasets),
        embeddings_path=embeddings_path,
        attack_params=attack_params,
        rtmt_pivot=pivot,
        translator=translator,
    )


def build_victim(config: CampaignConfig, ledger: QueryLedger) -> VictimModel:
    if config.victim.kind == "keyword_toy":
        model: VictimModel = make_keyword_victim(config.victim.keywords, config.victim.smoothing)
    else:
        model = HttpVictimModel(
            config.victim.url,
            config=HttpClientConfig(
                timeout=config.victim.timeout,
                max_retries=config.victim.max_retries,
                backoff=config.victim.backoff,
                max_batch=config.victim.batch_size,
                max_inflight=config.victim.max_inflight,
                token=os.environ.get(config.victim.token_env) or None,
            ),
        )
    if config.victim.cache:
        return with_cache(model, ledger=ledger)
    return model


def build_translator(config: CampaignConfig) -> Translator:
    t = config.translator
    if t.kind == "identity":
        return StubTranslator.identity()
    if t.kind == "keyword_drop":
        return StubTranslator.keyword_drop(t.drop_words)
    if t.kind == "reverse_tokens":
        return StubTranslator.reverse_tokens()
    return HttpTranslator(
        t.url,
        config=HttpClientConfig(
            timeout=config.victim.timeout,
            max_retries=config.victim.max_retries,
            backoff=config.victim.backoff,
            max_batch=config.victim.batch_size,
            max_inflight=config.victim.max_inflight,
            token=os.environ.get(config.victim.token_env) or None,
        ),
    )


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name)


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


@dataclass
class SampleError:
    """A per-sample runtime failure; recorded, not fatal by itself."""

    dataset: str
    attack: str
    sample_id: str
    kind: str
    message: str

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "attack": self.attack,
            "id": self.sample_id,
            "kind": self.kind,
            "message": self.message,
        }


@dataclass
class CampaignArtifacts:
    report: evaluation.CampaignReport
    rows: list[ReportRow]
    errors: list[SampleError]
    clean: dict[str, dict[str, CleanEvalResult]]
    ledger: QueryLedger


def run_clean(
    config: CampaignConfig,
    model: VictimModel | None = None,
    ledger: QueryLedger | None = None,
) -> dict[str, dict[str, CleanEvalResult]]:
    """Clean-eval every dataset's dev and test splits; write one JSON each."""
    ledger = ledger or QueryLedger()
    model = model or build_victim(config, ledger)
    results: dict[str, dict[str, CleanEvalResult]] = {}
    clean_dir = config.out_dir / "clean"
    for ds_config in config.datasets:
        dataset = load_dataset(ds_config.manifest, ds_config.format)
        results[dataset.name] = {}
        for split in ("dev", "test"):
            result = evaluation.clean_eval(dataset, split, model)
            results[dataset.name][split] = result
            _write_json(
                clean_dir / f"{_slug(dataset.name)}__{split}.json",
                {
                    "dataset": dataset.name,
                    "split": split,
                    "accuracy": result.accuracy,
                    "total": result.total,
                    "correct_ids": list(result.correct_ids),
                },
            )
    return results


def _attack_worker(
    attack_name: str,
    dataset: LabeledDataset,
    model: VictimModel,
    store: EmbeddingStore | None,
    translator: Translator | None,
    config: CampaignConfig,
) -> Callable[[Sample], AttackOutcome | SampleError]:
    rtmt_params = None
    if attack_name == "rtmt":
        try:
            rtmt_params = RtmtParams(source=dataset.language.code, pivot=config.rtmt_pivot)
        except ValueError as exc:
            raise CampaignAbort(
                f"{dataset.name}: cannot round-trip through {config.rtmt_pivot!r}: {exc}"
            ) from exc

    def run_one(sample: Sample) -> AttackOutcome | SampleError:
        try:
            if attack_name == "textfooler":
                assert store is not None
                return tf.attack(sample, model, store, config.attack_params)
            assert translator is not None and rtmt_params is not None
            return rtmt_attack(sample, model, rtmt_params, translator)
        except VictimError as exc:
            return SampleError(
                dataset=dataset.name,
                attack=attack_name,
                sample_id=sample.id,
                kind=type(exc).__name__,
                message=str(exc),
            )

    return run_one


def run_campaign(config: CampaignConfig) -> CampaignArtifacts:
    """Run the configured attacks end to end and write all artifacts."""
    started = time.time()
    ledger = QueryLedger()
    model = build_victim(config, ledger)
    store: EmbeddingStore | None = None
    if "textfooler" in config.attacks:
        assert config.embeddings_path is not None  # enforced by load_config
        store = load_vectors(config.embeddings_path)
    translator = build_translator(config) if "rtmt" in config.attacks else None

    clean_results = run_clean(config, model=model, ledger=ledger)
    rows: list[ReportRow] = []
    errors: list[SampleError] = []
    outcome_dir = config.out_dir / "outcomes"

    for ds_config in config.datasets:
        dataset = load_dataset(ds_config.manifest, ds_config.format)
        dev = clean_results[dataset.name]["dev"]
        test = clean_results[dataset.name]["test"]
        attack_set = evaluation.build_attack_set(dev, test, dataset)
        originals = {sample.id: sample.text for sample in attack_set}

        for attack_name in config.attacks:
            worker = _attack_worker(attack_name, dataset, model, store, translator, config)
            results: list[AttackOutcome | SampleError]
            if attack_set and config.concurrency > 1:
                with ThreadPoolExecutor(max_workers=config.concurrency) as pool:
                    results = list(pool.map(worker, attack_set))
            else:
                results = [worker(sample) for sample in attack_set]

            outcomes = [r for r in results if isinstance(r, AttackOutcome)]
            unit_errors = [r for r in results if isinstance(r, SampleError)]
            errors.extend(unit_errors)
            transport_failures = sum(1 for e in unit_errors if e.kind == "TransportError")
            if attack_set and transport_failures > 0.5 * len(attack_set):
                raise CampaignAbort(
                    f"{dataset.name}/{attack_name}: {transport_failures} of "
                    f"{len(attack_set)} samples failed on transport; aborting"
                )

            for outcome in outcomes:
                ledger.record_sample(outcome.sample_id, outcome.queries_used)
            dump_outcomes_jsonl(
                outcomes, outcome_dir / f"{_slug(dataset.name)}__{attack_name}.jsonl"
            )
            rows.append(
                ReportRow(
                    dataset=dataset.name,
                    language=dataset.language.code,
                    tier=dataset.language.tier,
                    attack=attack_name,
                    model=config.victim.name,
                    cacc_dev=dev.accuracy,
                    cacc_test=test.accuracy,
                    attack_set_size=len(attack_set),
                    asr=evaluation.asr(outcomes),
                    mean_perturbation=evaluation.mean_perturbation(outcomes, originals),
                    mean_perturbation_success=evaluation.mean_perturbation_of_successes(
                        outcomes, originals
                    ),
                    total_queries=sum(o.queries_used for o in outcomes),
                )
            )

    report = evaluation.aggregate(rows)
    evaluation.write_report_csv(report, config.out_dir / "report.csv")
    evaluation.write_report_json(report, config.out_dir / "report.json")
    evaluation.write_report_markdown(report, config.out_dir / "report.md")
    if errors:
        errors_path = config.out_dir / "errors.jsonl"
        with errors_path.open("w", encoding="utf-8", newline="\n") as handle:
            for error in errors:
                handle.write(json.dumps(error.to_dict(), ensure_ascii=False, sort_keys=True))
                handle.write("\n")
    _write_json(
        config.out_dir / "metadata.json",
        {
            "config": str(config.config_path),
            "victim": config.victim.name,
            "attacks": list(config.attacks),
            "started_unix": started,
            "finished_unix": time.time(),
            "ledger": ledger.snapshot(),
            "errors": len(errors),
        },
    )
    return CampaignArtifacts(
        report=report,
        rows=rows,
        errors=errors,
        clean=clean_results,
        ledger=ledger,
    )


def describe_plan(config: CampaignConfig) -> str:
    """Human-readable dry-run plan; performs no queries."""
    lines = [
        f"out dir:      {config.out_dir}",
        f"victim:       {config.victim.kind} ({config.victim.name})"
        + (", cached" if config.victim.cache else ""),
        f"attacks:      {', '.join(config.attacks)}",
        f"concurrency:  {config.concurrency}",
    ]
    if "textfooler" in config.attacks:
        lines.append(f"embeddings:   {config.embeddings_path}")
        lines.append(
            f"attack knobs: k={config.attack_params.k} delta={config.attack_params.delta} "
            f"max_queries={config.attack_params.max_queries} "
            f"max_perturb_fraction={config.attack_params.max_perturb_fraction}"
        )
    if "rtmt" in config.attacks:
        lines.append(f"rtmt:         pivot={config.rtmt_pivot} translator={config.translator.kind}")
    lines.append("datasets:")
    for ds in config.datasets:
        lines.append(f"  - {ds.manifest} ({ds.format})")
    return "\n".join(lines)

"""Command-line front end for running attack campaigns from a config file.

Exit codes are a stable contract: 0 success, 1 configuration error,
2 runtime abort (victim unreachable, too many transport failures).
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import evaluation
from .campaign import (
    CampaignAbort,
    ConfigError,
    describe_plan,
    load_config,
    run_campaign,
    run_clean,
)
from .victim import TransportError, VictimError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def _load_or_die(config_path: str, out: str | None, attack: str | None):
    try:
        return load_config(config_path, out_override=out, attack_override=attack)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)


@click.group()
def main() -> None:
    """Black-box adversarial attacks against multilingual text classifiers."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(), help="Campaign config file.")
@click.option("--out", type=click.Path(), default=None, help="Override the output directory.")
@click.option("--dry-run", is_flag=True, help="Validate the config and print the plan; query nothing.")
def clean(config_path: str, out: str | None, dry_run: bool) -> None:
    """Measure clean accuracy (CACC) on every dataset's dev and test splits."""
    config = _load_or_die(config_path, out, None)
    if dry_run:
        click.echo(describe_plan(config))
        sys.exit(EXIT_OK)
    try:
        results = run_clean(config)
    except (TransportError, VictimError) as exc:
        click.echo(f"victim failure: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    for dataset_name, splits in results.items():
        for split, result in splits.items():
            click.echo(f"{dataset_name} {split}: accuracy {result.accuracy:.4f} ({len(result.correct_ids)}/{result.total})")
    sys.exit(EXIT_OK)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(), help="Campaign config file.")
@click.option("--out", type=click.Path(), default=None, help="Override the output directory.")
@click.option(
    "--attack",
    "attack_name",
    type=click.Choice(["textfooler", "rtmt", "both"]),
    default=None,
    help="Override the attack selection from the config.",
)
@click.option("--dry-run", is_flag=True, help="Validate the config and print the plan; query nothing.")
def attack(config_path: str, out: str | None, attack_name: str | None, dry_run: bool) -> None:
    """Run the full campaign: clean eval, attacks, outcome files, report."""
    config = _load_or_die(config_path, out, attack_name)
    if dry_run:
        click.echo(describe_plan(config))
        sys.exit(EXIT_OK)
    try:
        artifacts = run_campaign(config)
    except CampaignAbort as exc:
        click.echo(f"campaign aborted: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    except (TransportError, VictimError) as exc:
        click.echo(f"victim failure: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    for row in artifacts.report.rows:
        asr_text = "n/a" if row.asr is None else f"{row.asr:.4f}"
        click.echo(
            f"{row.dataset} [{row.language}] {row.attack}: "
            f"attack set {row.attack_set_size}, ASR {asr_text}"
        )
    ledger = artifacts.ledger.snapshot()
    click.echo(
        f"queries: {ledger['total_queries']} total, "
        f"{ledger['cache_hits']} cache hits, {ledger['misses']} misses"
    )
    if artifacts.errors:
        click.echo(f"{len(artifacts.errors)} sample(s) failed; see errors.jsonl", err=True)
    click.echo(f"artifacts written to {config.out_dir}")
    sys.exit(EXIT_OK)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(), help="Campaign config file.")
@click.option("--out", type=click.Path(), default=None, help="Run directory holding report.csv.")
@click.option(
    "--merge",
    "merge_dirs",
    type=click.Path(),
    multiple=True,
    help="Additional run directories to average (e.g. per-seed runs).",
)
def report(config_path: str, out: str | None, merge_dirs: tuple[str, ...]) -> None:
    """Re-emit (and optionally merge) reports from existing run artifacts."""
    config = _load_or_die(config_path, out, None)
    csv_path = config.out_dir / "report.csv"
    if not csv_path.exists():
        click.echo(f"no report.csv under {config.out_dir}; run the attack command first", err=True)
        sys.exit(EXIT_RUNTIME)
    try:
        rows = evaluation.read_report_csv(csv_path)
    except (OSError, ValueError) as exc:
        click.echo(f"cannot read {csv_path}: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)

    if merge_dirs:
        runs = [rows]
        for directory in merge_dirs:
            merge_csv = Path(directory) / "report.csv"
            if not merge_csv.exists():
                click.echo(f"no report.csv under {directory}", err=True)
                sys.exit(EXIT_RUNTIME)
            runs.append(evaluation.read_report_csv(merge_csv))
        merged = evaluation.merge_runs(runs)
        payload = {
            "across_languages": evaluation.report_to_json_dict(merged["across_languages"]),
            "across_runs": merged["across_runs"],
            "n_runs": len(runs),
        }
        merged_path = config.out_dir / "report_merged.json"
        merged_path.write_text(
            json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        click.echo(f"merged report over {len(runs)} runs written to {merged_path}")
        sys.exit(EXIT_OK)

    rebuilt = evaluation.aggregate(rows)
    evaluation.write_report_json(rebuilt, config.out_dir / "report.json")
    evaluation.write_report_markdown(rebuilt, config.out_dir / "report.md")
    click.echo(render_summary(rebuilt))
    sys.exit(EXIT_OK)


def render_summary(report: evaluation.CampaignReport) -> str:
    lines = []
    for agg in report.aggregates:
        lines.append(
            f"{agg.dataset} {agg.attack} {agg.tier.value}: "
            f"ASR {agg.asr_mean:.4f} ± {agg.asr_std:.4f} over {agg.n_languages} language(s)"
        )
    return "\n".join(lines) if lines else "no aggregates (empty attack sets?)"


if __name__ == "__main__":
    main()

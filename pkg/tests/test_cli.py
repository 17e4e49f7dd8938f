from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from fixtures import build_separable_fixture, write_separable_campaign
from textsiege.campaign import ConfigError, load_config
from textsiege.cli import main
from textsiege.evaluation import read_report_csv


@pytest.fixture()
def campaign_dir(tmp_path):
    config_path = write_separable_campaign(tmp_path)
    return tmp_path, config_path


def run_cli(*args):
    # click >= 8.2 separates stdout/stderr by default
    return CliRunner().invoke(main, list(args))


class TestConfigLoading:
    def test_valid_config_loads(self, campaign_dir):
        _, config_path = campaign_dir
        config = load_config(config_path)
        assert config.attacks == ("textfooler", "rtmt")
        assert config.victim.kind == "keyword_toy"
        assert config.embeddings_path and config.embeddings_path.exists()

    def test_missing_embeddings_is_config_error(self, campaign_dir):
        tmp_path, config_path = campaign_dir
        text = config_path.read_text(encoding="utf-8").replace("vectors.vec", "absent.vec")
        broken = tmp_path / "broken.yaml"
        broken.write_text(text, encoding="utf-8")
        with pytest.raises(ConfigError, match="embeddings"):
            load_config(broken)

    def test_rtmt_only_needs_no_embeddings(self, campaign_dir):
        tmp_path, config_path = campaign_dir
        text = config_path.read_text(encoding="utf-8").replace("vectors.vec", "absent.vec")
        broken = tmp_path / "rtmt_only.yaml"
        broken.write_text(text, encoding="utf-8")
        config = load_config(broken, attack_override="rtmt")
        assert config.attacks == ("rtmt",)

    def test_unknown_attack_rejected(self, campaign_dir):
        tmp_path, config_path = campaign_dir
        text = config_path.read_text(encoding="utf-8").replace(
            "[textfooler, rtmt]", "[textfooler, ddos]"
        )
        broken = tmp_path / "broken2.yaml"
        broken.write_text(text, encoding="utf-8")
        with pytest.raises(ConfigError, match="unknown attack"):
            load_config(broken)

    def test_victim_must_have_single_source(self, tmp_path):
        config = tmp_path / "c.yaml"
        config.write_text(
            """
victim:
  kind: keyword_toy
  url: http://example.invalid
  keywords: [[a], [b]]
datasets:
  - manifest: missing.json
""",
            encoding="utf-8",
        )
        with pytest.raises(ConfigError, match="not both"):
            load_config(config)

    def test_missing_config_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "nope.yaml")


class TestCliCommands:
    def test_dry_run_prints_plan_and_writes_nothing(self, campaign_dir):
        tmp_path, config_path = campaign_dir
        result = run_cli("attack", "--config", str(config_path), "--dry-run")
        assert result.exit_code == 0
        assert "textfooler" in result.output
        assert not (tmp_path / "out").exists()

    def test_config_error_exits_one(self, campaign_dir):
        tmp_path, config_path = campaign_dir
        text = config_path.read_text(encoding="utf-8").replace("vectors.vec", "absent.vec")
        broken = tmp_path / "broken.yaml"
        broken.write_text(text, encoding="utf-8")
        result = run_cli("attack", "--config", str(broken))
        assert result.exit_code == 1
        assert "config error" in result.stderr

    def test_clean_writes_per_split_json(self, campaign_dir):
        tmp_path, config_path = campaign_dir
        result = run_cli("clean", "--config", str(config_path))
        assert result.exit_code == 0
        for split in ("dev", "test"):
            path = tmp_path / "out" / "clean" / f"separable__{split}.json"
            payload = json.loads(path.read_text(encoding="utf-8"))
            assert payload["accuracy"] == 1.0
            assert payload["split"] == split

    def test_attack_campaign_end_to_end(self, campaign_dir):
        tmp_path, config_path = campaign_dir
        result = run_cli("attack", "--config", str(config_path))
        assert result.exit_code == 0, result.output
        rows = read_report_csv(tmp_path / "out" / "report.csv")
        by_attack = {row.attack: row for row in rows}
        assert by_attack["textfooler"].asr == 1.0
        assert by_attack["rtmt"].asr == 0.0  # identity translator never flips
        assert by_attack["textfooler"].attack_set_size == 50
        assert (tmp_path / "out" / "outcomes" / "separable__textfooler.jsonl").exists()
        assert (tmp_path / "out" / "report.md").exists()
        assert (tmp_path / "out" / "metadata.json").exists()

    def test_attack_override_flag(self, campaign_dir):
        tmp_path, config_path = campaign_dir
        result = run_cli("attack", "--config", str(config_path), "--attack", "rtmt")
        assert result.exit_code == 0
        rows = read_report_csv(tmp_path / "out" / "report.csv")
        assert {row.attack for row in rows} == {"rtmt"}

    def test_rerun_is_byte_identical(self, campaign_dir):
        tmp_path, config_path = campaign_dir
        out1 = tmp_path / "run1"
        out2 = tmp_path / "run2"
        assert run_cli("attack", "--config", str(config_path), "--out", str(out1)).exit_code == 0
        assert run_cli("attack", "--config", str(config_path), "--out", str(out2)).exit_code == 0
        for name in ("outcomes/separable__textfooler.jsonl", "outcomes/separable__rtmt.jsonl", "report.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name

    def test_report_regenerates_from_csv(self, campaign_dir):
        tmp_path, config_path = campaign_dir
        assert run_cli("attack", "--config", str(config_path)).exit_code == 0
        (tmp_path / "out" / "report.json").unlink()
        result = run_cli("report", "--config", str(config_path))
        assert result.exit_code == 0
        assert (tmp_path / "out" / "report.json").exists()
        assert "ASR" in result.output

    def test_report_merge_emits_both_decompositions(self, campaign_dir):
        tmp_path, config_path = campaign_dir
        out1 = tmp_path / "seed1"
        out2 = tmp_path / "seed2"
        assert run_cli("attack", "--config", str(config_path), "--out", str(out1)).exit_code == 0
        assert run_cli("attack", "--config", str(config_path), "--out", str(out2)).exit_code == 0
        result = run_cli(
            "report", "--config", str(config_path), "--out", str(out1), "--merge", str(out2)
        )
        assert result.exit_code == 0
        merged = json.loads((out1 / "report_merged.json").read_text(encoding="utf-8"))
        assert merged["n_runs"] == 2
        assert "across_languages" in merged and "across_runs" in merged

    def test_report_without_artifacts_exits_two(self, campaign_dir):
        _, config_path = campaign_dir
        result = run_cli("report", "--config", str(config_path))
        assert result.exit_code == 2

    def test_unreachable_victim_exits_two(self, tmp_path):
        fixture = build_separable_fixture(n_samples=4, dev_count=2)
        from textsiege import save_dataset

        save_dataset(fixture.dataset, tmp_path / "corpus", format="tsv")
        config = tmp_path / "campaign.yaml"
        config.write_text(
            """
campaign:
  out_dir: out
  attacks: [rtmt]
victim:
  kind: http
  url: http://127.0.0.1:9
  max_retries: 1
  backoff: 0.01
  timeout: 0.2
datasets:
  - manifest: corpus/manifest.json
    format: tsv
""",
            encoding="utf-8",
        )
        result = run_cli("clean", "--config", str(config))
        assert result.exit_code == 2
        assert "victim failure" in result.stderr

    def test_concurrency_produces_same_outcomes(self, tmp_path):
        serial_dir = tmp_path / "serial"
        threaded_dir = tmp_path / "threaded"
        serial_dir.mkdir()
        threaded_dir.mkdir()
        fixture = build_separable_fixture(n_samples=12, dev_count=6)
        cfg_serial = write_separable_campaign(serial_dir, fixture, concurrency=1)
        cfg_threaded = write_separable_campaign(threaded_dir, fixture, concurrency=4)
        assert run_cli("attack", "--config", str(cfg_serial)).exit_code == 0
        assert run_cli("attack", "--config", str(cfg_threaded)).exit_code == 0
        name = "outcomes/separable__textfooler.jsonl"
        assert (serial_dir / "out" / name).read_bytes() == (threaded_dir / "out" / name).read_bytes()

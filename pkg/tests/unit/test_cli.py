"""Unit tests for the command line: stage ordering, config errors and run records."""

import json

import pytest

from src.cli.app import build_parser, main, parse_set_overrides
from src.exceptions import ConfigError

from tests.fixtures.sample_sprites import MICRO_OVERRIDES


def micro_args(out, *extra):
    """--out plus the micro-scale --set flags."""
    sets = [arg for key, value in MICRO_OVERRIDES.items() for arg in ("--set", f"{key}={value}")]
    return ["--out", str(out), *sets, *extra]


class TestParser:
    """Unit tests for argument parsing."""

    def test_every_command_registered(self):
        parser = build_parser()
        for command in ("gen-data", "train-vae", "train-tvae", "train-vdm", "train-amcm", "evaluate", "ablate"):
            assert parser.parse_args([command]).command == command
        assert parser.parse_args(["generate", "--image", "cond.png"]).command == "generate"

    def test_generate_requires_image(self):
        """A missing required flag is a usage error."""
        with pytest.raises(SystemExit) as excinfo:
            build_parser().parse_args(["generate"])
        assert excinfo.value.code == 2

    def test_set_pairs(self):
        assert parse_set_overrides(["lr=1e-4", " frames = 4"]) == {"lr": "1e-4", "frames": "4"}

    def test_set_without_equals(self):
        with pytest.raises(ConfigError):
            parse_set_overrides(["lr"])


class TestStageOrder:
    """Commands run out of order should exit 3 and name the missing command."""

    @pytest.mark.parametrize(
        "command, missing",
        [
            ("train-vae", "gen-data"),
            ("train-tvae", "train-vae"),
            ("train-vdm", "train-vae"),
            ("train-amcm", "train-vdm"),
            ("evaluate", "train-vae"),
        ],
    )
    def test_missing_upstream(self, tmp_path, capsys, command, missing):
        code = main([command, *micro_args(tmp_path / "run")])
        assert code == 3
        assert missing in capsys.readouterr().err

    def test_generate_without_checkpoints(self, tmp_path, capsys):
        code = main(["generate", "--image", str(tmp_path / "x.png"), *micro_args(tmp_path / "run")])
        assert code == 3

    def test_failed_command_leaves_no_record(self, tmp_path):
        main(["train-vae", *micro_args(tmp_path / "run")])
        assert not (tmp_path / "run" / "run.json").exists()


class TestConfigErrors:
    """Bad configuration exits with code 2."""

    def test_unknown_key(self, tmp_path, capsys):
        code = main(["gen-data", "--out", str(tmp_path), "--set", "learning_rate=1"])
        assert code == 2
        assert "learning_rate" in capsys.readouterr().err

    def test_invalid_value(self, tmp_path):
        assert main(["gen-data", "--out", str(tmp_path), "--set", "resolution=20"]) == 2

    def test_missing_config_file(self, tmp_path):
        assert main(["gen-data", "--out", str(tmp_path), "--config", str(tmp_path / "none.cfg")]) == 2


class TestDataCommands:
    """Dataset generation, overwrite protection and the partial ablation report."""

    @pytest.fixture
    def run_dir(self, tmp_path):
        out = tmp_path / "run"
        assert main(["gen-data", *micro_args(out)]) == 0
        return out

    def test_run_record(self, run_dir):
        """run.json should hold the resolved config and the command log."""
        record = json.loads((run_dir / "run.json").read_text())
        assert record["config"]["resolution"] == 16
        assert [c["command"] for c in record["commands"]] == ["gen-data"]
        assert (run_dir / "data" / "manifest.jsonl").exists()
        assert (run_dir / "logs" / "gen-data.log").exists()

    def test_refuses_overwrite(self, run_dir):
        """Rerunning without --force is a usage error."""
        assert main(["gen-data", "--out", str(run_dir)]) == 2
        assert main(["gen-data", "--out", str(run_dir), "--force"]) == 0

    def test_stored_config_reused(self, run_dir):
        """Later commands start from the config stored in run.json."""
        assert main(["train-amcm", "--out", str(run_dir)]) == 3
        record = json.loads((run_dir / "run.json").read_text())
        assert record["config"]["frames"] == 4

    def test_ablate_writes_partial_report(self, run_dir, capsys):
        """Without checkpoints every method is MISSING, the report is written, and the exit code is 3."""
        code = main(["ablate", "--out", str(run_dir), "--baseline"])
        assert code == 3
        lines = (run_dir / "metrics" / "ablation.jsonl").read_text().splitlines()
        methods = [json.loads(line)["method"] for line in lines]
        assert methods == ["with-amcm", "without-amcm", "chroma-key"]
        assert "MISSING" in capsys.readouterr().out

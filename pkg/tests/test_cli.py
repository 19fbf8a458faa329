"""Tests for the command-line interface: subcommand behavior, output
files, exit codes, and diagnostics."""

import json
import subprocess
import sys

import pytest

from switchrl.cli import main
from switchrl.envs import SwitchingMdp


def run_main(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestGenEnv:
    def test_writes_parseable_document(self, tmp_path, capsys):
        out = tmp_path / "env.json"
        code, stdout, stderr = run_main(
            ["gen-env", "--out", str(out), "--states", "4", "--actions", "3",
             "--segments", "3", "--horizon", "900", "--min-segment-len", "100",
             "--seed", "7"],
            capsys,
        )
        assert code == 0
        assert stderr == ""
        switching = SwitchingMdp.from_json(out.read_text())
        assert switching.n_states == 4
        assert switching.n_actions == 3
        assert switching.n_segments == 3
        assert switching.horizon == 900

    def test_same_seed_same_bytes(self, tmp_path, capsys):
        args = ["gen-env", "--states", "3", "--actions", "2", "--segments", "2",
                "--horizon", "400", "--seed", "5"]
        for name in ("a.json", "b.json"):
            code, _, _ = run_main(args + ["--out", str(tmp_path / name)], capsys)
            assert code == 0
        assert (tmp_path / "a.json").read_bytes() == (
            tmp_path / "b.json"
        ).read_bytes()

    def test_invalid_dimensions_fail_with_diagnostic(self, tmp_path, capsys):
        code, _, stderr = run_main(
            ["gen-env", "--out", str(tmp_path / "e.json"), "--states", "3",
             "--actions", "2", "--segments", "10", "--horizon", "5"],
            capsys,
        )
        assert code == 1
        assert stderr.startswith("error: ")


@pytest.fixture
def run_setup(tmp_path, capsys):
    env_path = tmp_path / "env.json"
    code, _, _ = run_main(
        ["gen-env", "--out", str(env_path), "--states", "3", "--actions", "2",
         "--segments", "2", "--horizon", "500", "--min-segment-len", "100",
         "--seed", "3"],
        capsys,
    )
    assert code == 0
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps({
        "env_path": str(env_path),
        "agents": [{"tag": "oracle"}, {"tag": "ucrl2"}],
        "realizations": 2,
        "base_seed": 5,
        "delta": 0.05,
    }))
    return tmp_path, config_path


class TestRun:
    def test_writes_expected_files(self, run_setup, capsys):
        tmp_path, config_path = run_setup
        out_dir = tmp_path / "out"
        code, stdout, _ = run_main(
            ["run", "--config", str(config_path), "--out", str(out_dir)],
            capsys,
        )
        assert code == 0
        names = sorted(p.name for p in out_dir.iterdir())
        assert names == [
            "agent_oracle.csv", "agent_ucrl2.csv", "chart.svg",
            "curves_oracle.npy", "curves_ucrl2.npy", "run.json",
        ]
        assert "oracle: mean final reward" in stdout
        lines = (out_dir / "agent_oracle.csv").read_text().splitlines()
        assert len(lines) == 501

    def test_two_runs_byte_identical(self, run_setup, capsys):
        tmp_path, config_path = run_setup
        for name in ("r1", "r2"):
            code, _, _ = run_main(
                ["run", "--config", str(config_path),
                 "--out", str(tmp_path / name)],
                capsys,
            )
            assert code == 0
        names = sorted(p.name for p in (tmp_path / "r1").iterdir())
        for name in names:
            assert (tmp_path / "r1" / name).read_bytes() == (
                tmp_path / "r2" / name
            ).read_bytes()

    def test_realization_and_seed_overrides(self, run_setup, capsys):
        tmp_path, config_path = run_setup
        out_dir = tmp_path / "out"
        code, _, _ = run_main(
            ["run", "--config", str(config_path), "--out", str(out_dir),
             "--realizations", "1", "--seed", "99"],
            capsys,
        )
        assert code == 0
        doc = json.loads((out_dir / "run.json").read_text())
        assert doc["realizations"] == 1
        assert doc["base_seed"] == 99

    def test_missing_config_fails(self, tmp_path, capsys):
        code, _, stderr = run_main(
            ["run", "--config", str(tmp_path / "nope.json"),
             "--out", str(tmp_path / "o")],
            capsys,
        )
        assert code == 1
        assert stderr.startswith("error: ")


class TestReport:
    def test_reemits_identical_files(self, run_setup, capsys):
        tmp_path, config_path = run_setup
        out_dir = tmp_path / "out"
        code, _, _ = run_main(
            ["run", "--config", str(config_path), "--out", str(out_dir)],
            capsys,
        )
        assert code == 0
        targets = ["agent_oracle.csv", "agent_ucrl2.csv", "chart.svg"]
        before = {n: (out_dir / n).read_bytes() for n in targets}
        for n in targets:
            (out_dir / n).unlink()
        code, stdout, _ = run_main(["report", "--run", str(out_dir)], capsys)
        assert code == 0
        assert "re-emitted" in stdout
        after = {n: (out_dir / n).read_bytes() for n in targets}
        assert before == after

    def test_missing_run_dir_fails(self, tmp_path, capsys):
        code, _, stderr = run_main(
            ["report", "--run", str(tmp_path / "missing")], capsys
        )
        assert code == 1
        assert stderr.startswith("error: ")


class TestDetect:
    def test_file_input_prints_restart(self, tmp_path, capsys):
        stream = tmp_path / "stream.txt"
        stream.write_text("\n".join(["1"] * 300 + ["2"] * 100) + "\n")
        code, stdout, _ = run_main(
            ["detect", "--alphabet", "2", "--delta", "0.1",
             "--input", str(stream)],
            capsys,
        )
        assert code == 0
        restarts = [int(line) for line in stdout.split()]
        assert len(restarts) == 1
        assert 300 < restarts[0] <= 340

    def test_stdin_input(self, tmp_path):
        stream = "\n".join(["1"] * 300 + ["2"] * 100)
        proc = subprocess.run(
            [sys.executable, "-m", "switchrl.cli", "detect",
             "--alphabet", "2", "--delta", "0.1"],
            input=stream, capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert proc.stdout.strip().isdigit()

    def test_quiet_stream_prints_nothing(self, tmp_path, capsys):
        stream = tmp_path / "stream.txt"
        stream.write_text("\n".join(["1", "2"] * 200) + "\n")
        code, stdout, _ = run_main(
            ["detect", "--alphabet", "2", "--delta", "0.05",
             "--input", str(stream)],
            capsys,
        )
        assert code == 0
        assert stdout == ""

    def test_blank_lines_skipped(self, tmp_path, capsys):
        stream = tmp_path / "stream.txt"
        stream.write_text("1\n\n1\n  \n2\n")
        code, stdout, _ = run_main(
            ["detect", "--alphabet", "2", "--delta", "0.1",
             "--input", str(stream)],
            capsys,
        )
        assert code == 0

    def test_symbol_out_of_alphabet_fails(self, tmp_path, capsys):
        stream = tmp_path / "stream.txt"
        stream.write_text("1\n3\n")
        code, _, stderr = run_main(
            ["detect", "--alphabet", "2", "--delta", "0.1",
             "--input", str(stream)],
            capsys,
        )
        assert code == 1
        assert "outside alphabet" in stderr

    def test_non_integer_line_fails_with_line_number(self, tmp_path, capsys):
        stream = tmp_path / "stream.txt"
        stream.write_text("1\nfoo\n")
        code, _, stderr = run_main(
            ["detect", "--alphabet", "2", "--delta", "0.1",
             "--input", str(stream)],
            capsys,
        )
        assert code == 1
        assert "line 2" in stderr

    def test_empty_stream_fails(self, tmp_path, capsys):
        stream = tmp_path / "stream.txt"
        stream.write_text("\n")
        code, _, stderr = run_main(
            ["detect", "--alphabet", "2", "--delta", "0.1",
             "--input", str(stream)],
            capsys,
        )
        assert code == 1
        assert "empty" in stderr

    def test_constant_prior_flag(self, tmp_path, capsys):
        stream = tmp_path / "stream.txt"
        stream.write_text("\n".join(["1"] * 300 + ["2"] * 100) + "\n")
        code, stdout, _ = run_main(
            ["detect", "--alphabet", "2", "--delta", "0.1",
             "--input", str(stream), "--constant-prior", "0.01"],
            capsys,
        )
        assert code == 0
        assert stdout.strip() != "" and all(
            line.isdigit() for line in stdout.split()
        )


class TestEntryPoint:
    def test_console_script_help(self):
        proc = subprocess.run(
            [sys.executable, "-m", "switchrl.cli", "--help"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        for command in ("gen-env", "run", "detect", "report"):
            assert command in proc.stdout

    def test_no_subcommand_is_an_error(self):
        proc = subprocess.run(
            [sys.executable, "-m", "switchrl.cli"],
            capture_output=True, text=True,
        )
        assert proc.returncode != 0

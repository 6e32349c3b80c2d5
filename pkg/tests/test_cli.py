import json
import subprocess
import sys

import pytest

from qfuzzy.cli import main


def run_cli(capsys, *args):
    code = main(list(args))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_gen_synthetic_and_train(tmp_path, capsys):
    data = tmp_path / "syn.csv"
    code, out, _ = run_cli(capsys, "gen-synthetic", "--n", "60", "--output", str(data))
    assert code == 0 and json.loads(out)["rows"] == 60
    code, out, _ = run_cli(capsys, "train", "--dataset", str(data), "--epochs", "2",
                           "--output-dir", str(tmp_path / "run"))
    assert code == 0
    assert set(json.loads(out)["metrics"]) >= {"accuracy", "f1", "fd_rate"}
    assert (tmp_path / "run" / "metrics.json").exists()


def test_text_pipeline(tmp_path, capsys):
    data = tmp_path / "tweets.csv"
    assert run_cli(capsys, "gen-synthetic", "--variant", "tokens", "--scheme", "CVTD", "--n", "100",
                   "--output", str(data))[0] == 0
    code, out, _ = run_cli(capsys, "preprocess", "--dataset", str(data), "--scheme", "CVTD",
                           "--output", str(tmp_path / "pre.csv"))
    assert code == 0 and json.loads(out)["train"] == 50
    run_dir = tmp_path / "run"
    assert run_cli(capsys, "train", "--dataset", str(data), "--scheme", "CVTD", "--model", "cf",
                   "--output-dir", str(run_dir))[0] == 0
    code, out, _ = run_cli(capsys, "evaluate", "--run-dir", str(run_dir), "--dataset", str(data), "--scheme", "CVTD")
    assert code == 0 and (run_dir / "evaluation.json").exists()


def test_config_file_and_set(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("model = ann\nepochs = 1\nsynthetic_n = 40\n", encoding="utf-8")
    code, out, _ = run_cli(capsys, "train", "--config", str(cfg), "--set", f"output_dir={tmp_path / 'o'}",
                           "--set", "seed=3")
    assert code == 0
    text = (tmp_path / "o" / "config.txt").read_text()
    assert "model = ann" in text and "seed = 3" in text


def test_noise_sweep_command(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "noise-sweep", "--epochs", "1", "--synthetic-n", "40", "--noise-channels", "BF,DP",
                           "--noise-grid", "0,0.5", "--output-dir", str(tmp_path))
    assert code == 0 and json.loads(out)["rows"] == 4


@pytest.mark.parametrize("args,code", [
    (["train", "--model", "bogus"], "bad-config"),
    (["train", "--scheme", "generic", "--dataset", "/no/such.csv"], "io-error"),
    (["train", "--set", "epochs"], "bad-config"),
    (["noise-sweep", "--model", "ann"], "unsupported-model"),
    (["gen-synthetic", "--n", "3", "--output", "x.csv"], "invalid-args"),
])
def test_machine_readable_errors(args, code, capsys, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    status, _, err = run_cli(capsys, *args)
    assert status != 0
    last = err.strip().splitlines()[-1]
    assert last.startswith("error: ")
    assert json.loads(last[len("error: "):])["code"] == code


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "qfuzzy", "gen-synthetic", "--n", "20", "--output",
                           str(tmp_path / "s.csv")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "s.csv").exists()

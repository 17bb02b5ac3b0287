import json
import subprocess
import sys

import pytest

from physlearn import cli

EXPECTED = {"dw-mean", "dw-paths", "switch-sigmoid", "wait-time", "observed-trial", "bernoulli",
            "train-not", "train-xor", "weight-dist", "quartz", "quartz-noisy", "wald",
            "feed-forward", "rate-code", "jarzynski", "thermo-ledger", "qkernel"}


def _files(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_list_covers_catalog(capsys):
    assert {name for name, _, _ in cli.list_experiments()} == EXPECTED
    assert cli.main(["list"]) == 0
    out = capsys.readouterr().out
    assert "NOT-sim" in out and "train-not" in out


def test_manifest_echoes_overrides(tmp_path):
    assert cli.main(["run", "bernoulli", "--set", "beta=0.1", "--out", str(tmp_path)]) == 0
    manifest = json.loads((tmp_path / "bernoulli" / "manifest.json").read_text())
    assert manifest["params"]["beta"] == 0.1
    assert manifest["seed"] == 1 and manifest["files"] == ["bernoulli.csv"]


def test_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"beta": 2.0, "n_A": 11}))
    assert cli.main(["run", "bernoulli", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    params = json.loads((tmp_path / "bernoulli" / "manifest.json").read_text())["params"]
    assert params["beta"] == 2.0 and params["n_A"] == 11


@pytest.mark.parametrize("name,sets", [("train-not", ["epochs=40"]),
                                       ("dw-paths", ["t_end=5"]),
                                       ("qkernel", [])])
def test_rerun_byte_identical(tmp_path, name, sets):
    args = [a for s in sets for a in ("--set", s)]
    assert cli.main(["run", name, "--seed", "7", *args, "--out", str(tmp_path / "a")]) == 0
    assert cli.main(["run", name, "--seed", "7", *args, "--out", str(tmp_path / "b")]) == 0
    assert _files(tmp_path / "a") == _files(tmp_path / "b")
    assert cli.main(["run", name, "--seed", "8", *args, "--out", str(tmp_path / "c")]) == 0
    assert _files(tmp_path / "a") != _files(tmp_path / "c")


def test_workers_do_not_change_output(tmp_path):
    common = ["--set", "n_paths=9000", "--set", "n_times=11"]
    assert cli.main(["run", "switch-sigmoid", *common, "--out", str(tmp_path / "a")]) == 0
    assert cli.main(["run", "switch-sigmoid", *common, "--set", "workers=2",
                     "--out", str(tmp_path / "b")]) == 0
    a, b = (tmp_path / "a" / "switch-sigmoid"), (tmp_path / "b" / "switch-sigmoid")
    csvs = sorted(p.name for p in a.glob("*.csv"))
    assert csvs
    for name in csvs:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_unknown_parameter(tmp_path, capsys):
    assert cli.main(["run", "bernoulli", "--set", "bogus=1", "--out", str(tmp_path)]) == 1
    assert "bogus" in capsys.readouterr().err


def test_bad_value(tmp_path, capsys):
    assert cli.main(["run", "bernoulli", "--set", "beta=abc", "--out", str(tmp_path)]) == 1
    assert "beta" in capsys.readouterr().err
    assert cli.main(["run", "bernoulli", "--set", "beta", "--out", str(tmp_path)]) == 1


def test_unknown_experiment_suggests(tmp_path, capsys):
    assert cli.main(["run", "train-nto", "--out", str(tmp_path)]) == 1
    assert "train-not" in capsys.readouterr().err


def test_numerical_abort(tmp_path):
    code = cli.main(["run", "observed-trial", "--set", "Gamma=1e6", "--set", "dt=0.1",
                     "--out", str(tmp_path)])
    assert code == 2
    diag = json.loads((tmp_path / "observed-trial" / "diagnostics.json").read_text())
    assert "error" in diag


def test_output_env_var(tmp_path, monkeypatch):
    monkeypatch.setenv("PHYSLEARN_OUT", str(tmp_path))
    assert cli.main(["run", "wald"]) == 0
    assert (tmp_path / "wald" / "wald.csv").exists()


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "physlearn.cli", "list"], capture_output=True, text=True)
    assert res.returncode == 0 and "qkernel" in res.stdout

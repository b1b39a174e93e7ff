import csv
import json
import subprocess
import sys

import pytest

from jamlab import checkpoint, dataset
from jamlab.cli import build_parser, main

SUBCOMMANDS = ["generate", "train", "eval", "report-gates", "check"]


@pytest.mark.parametrize("cmd", SUBCOMMANDS)
def test_help(cmd, capsys):
    with pytest.raises(SystemExit) as e:
        main([cmd, "--help"])
    assert e.value.code == 0
    assert "usage" in capsys.readouterr().out


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "jamlab.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "generate" in r.stdout


def test_generate_full_grid_counts(tmp_path):
    out = tmp_path / "d"
    assert main(["generate", "--per-class", "1", "--out", str(out)]) == 0
    m = dataset.read_manifest(out)
    assert len(m.strata) == 21 * 21
    assert sum(s.count for s in m.strata) == 441


def test_generate_single_stratum(tmp_path, capsys):
    out = tmp_path / "d"
    rc = main(["generate", "--classes", "cwi", "--jsr-min", "40", "--jsr-max", "40",
               "--per-class", "5", "--out", str(out)])
    assert rc == 0
    m = dataset.read_manifest(out)
    assert len(m.strata) == 1
    assert m.strata[0].jsr_db == 40.0 and m.strata[0].count == 5
    assert "1 strata, 5 records" in capsys.readouterr().out


def test_generate_refuses_existing_output(tmp_path, capsys):
    out = tmp_path / "d"
    args = ["generate", "--classes", "cwi", "--jsr-min", "40", "--jsr-max", "40", "--per-class", "2", "--out", str(out)]
    assert main(args) == 0
    assert main(args) == 1
    assert "--force" in capsys.readouterr().err
    assert main(args + ["--force"]) == 0


def test_generate_rejects_bad_inputs(tmp_path):
    assert main(["generate", "--classes", "nope", "--out", str(tmp_path / "a")]) == 1
    assert main(["generate", "--jsr-min", "11", "--jsr-max", "11", "--per-class", "1", "--out", str(tmp_path / "b")]) == 1


def test_generate_output_independent_of_jobs(tmp_path):
    base = ["generate", "--classes", "cwi,qpsk", "--jsr-min", "30", "--jsr-max", "32", "--per-class", "3"]
    assert main(base + ["--out", str(tmp_path / "a"), "--jobs", "1"]) == 0
    assert main(base + ["--out", str(tmp_path / "b"), "--jobs", "2"]) == 0
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"data": {"classes": ["cwi"], "jsr_min": 20, "jsr_max": 24, "per_class": 2}}))
    out = tmp_path / "d"
    assert main(["generate", "--config", str(cfg), "--jsr-max", "20", "--out", str(out)]) == 0
    m = dataset.read_manifest(out)
    assert [s.jsr_db for s in m.strata] == [20.0]
    assert m.strata[0].count == 2
    cfg.write_text(json.dumps({"data": {"bogus": 1}}))
    assert main(["generate", "--config", str(cfg), "--out", str(tmp_path / "e")]) == 1


@pytest.fixture(scope="module")
def tiny_data(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "data"
    rc = main(["generate", "--classes", "cwi,blgni", "--jsr-min", "10", "--jsr-max", "50", "--jsr-step", "40",
               "--per-class", "5", "--test-per-class", "2", "--out", str(out)])
    assert rc == 0
    return out


def test_train_zero_epochs_hash_stable(tiny_data, tmp_path):
    hashes = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["train", "--data", str(tiny_data), "--out", str(out), "--epochs", "0"]) == 0
        hashes.append(checkpoint.checkpoint_hash(out / "checkpoint"))
    assert hashes[0] == hashes[1]


def test_eval_and_gates_untrained(tiny_data, tmp_path, capsys):
    run = tmp_path / "run"
    assert main(["train", "--data", str(tiny_data), "--out", str(run), "--epochs", "0"]) == 0
    ckpt = str(run / "checkpoint")
    assert main(["eval", "--ckpt", ckpt, "--data", str(tiny_data), "--bucket-by-jsr", "--out", str(tmp_path / "ev")]) == 0
    out = capsys.readouterr().out
    assert "overall accuracy" in out and "10.0" in out and "50.0" in out
    assert (tmp_path / "ev" / "accuracy_by_jsr.csv").exists()
    gates_csv = tmp_path / "gates.csv"
    assert main(["report-gates", "--ckpt", ckpt, "--data", str(tiny_data), "--out", str(gates_csv)]) == 0
    rows = list(csv.DictReader(open(gates_csv)))
    assert [float(r["jsr_db"]) for r in rows] == [10.0, 50.0]
    for r in rows:
        assert float(r["g_mean"]) == 0.5 and float(r["s_mean"]) == 0.5
        assert float(r["g_std"]) == 0.0
    assert main(["eval", "--ckpt", ckpt, "--data", str(tiny_data), "--gate", "0"]) == 0


def test_train_rejects_class_mismatch(tiny_data, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"data": {"classes": ["qpsk"]}}))
    assert main(["train", "--config", str(cfg), "--data", str(tiny_data), "--out", str(tmp_path / "r"),
                 "--epochs", "0"]) == 1


def test_eval_missing_checkpoint(tiny_data, tmp_path):
    assert main(["eval", "--ckpt", str(tmp_path / "none"), "--data", str(tiny_data)]) == 1


def test_check_reliability_one_row_per_jsr(tiny_data, tmp_path, capsys):
    out = tmp_path / "rel.csv"
    assert main(["check", "reliability", "--data", str(tiny_data), "--n", "50", "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out)))
    assert [float(r["jsr_db"]) for r in rows] == [10.0, 50.0]
    assert "PASS" in capsys.readouterr().out


def test_check_ambiguity(tmp_path, capsys):
    out = tmp_path / "amb.json"
    assert main(["check", "ambiguity", "--n", "20", "--out", str(out)]) in (0,)
    d = json.loads(out.read_text())
    assert d["jsr_db"] == 40.0 and d["n"] == 20
    assert capsys.readouterr().out.startswith(("PASS", "FAIL"))


def test_parser_rejects_unknown_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["bogus"])

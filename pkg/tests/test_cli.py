import csv
import io
import json
import subprocess
import sys

import pytest

from frtrust.cli import EXPERIMENTS, HEADERS, main
from frtrust.fuzzy import FuzzyEngine, FuzzyPartition


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_fis_eval(capsys):
    code, out, _ = run(capsys, "fis-eval", "0.1", "0.5", "0.9")
    assert code == 0
    assert out == "crisp=0.5000 label=M\n"


def test_fis_eval_corner(capsys):
    code, out, _ = run(capsys, "fis-eval", "0", "0", "0")
    assert code == 0
    assert out.strip() == f"crisp={FuzzyEngine().crisp((0, 0, 0)):.4f} label=L"


def test_fis_eval_with_engine_file(capsys, tmp_path):
    path = tmp_path / "tri.json"
    path.write_text(json.dumps(FuzzyEngine(FuzzyPartition.triangular()).to_dict()))
    code, out, _ = run(capsys, "fis-eval", "0", "0", "0", "--engine", str(path))
    assert (code, out) == (0, "crisp=0.1667 label=L\n")


@pytest.mark.parametrize("argv, expected", [
    (["fis-eval", "2", "0", "0"], 2),
    (["fis-eval", "x", "0", "0"], 1),
    (["fis-eval", "0.1"], 1),
    (["experiment", "nope"], 1),
    (["bogus"], 1),
    (["run"], 1),
    (["run", "/does/not/exist.json"], 2),
])
def test_exit_codes(capsys, argv, expected):
    code, _, err = run(capsys, *argv)
    assert code == expected
    assert err


def test_unknown_experiment_lists_names(capsys):
    _, _, err = run(capsys, "experiment", "nope")
    for name in EXPERIMENTS:
        assert name in err


def _config(tmp_path, **kw):
    doc = {"n_nodes": 20, "rounds": 4, "seed": 3, **kw}
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(doc))
    return path


def test_run_twice_identical_bytes(capsys, tmp_path):
    cfg = _config(tmp_path)
    assert run(capsys, "run", str(cfg), "--out", str(tmp_path / "a"))[0] == 0
    assert run(capsys, "run", "--config", str(cfg), "--out", str(tmp_path / "b"))[0] == 0
    for name in ("metrics.csv", "trust.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["seed"] == 3
    assert manifest["config"]["n_nodes"] == 20
    assert {"code_version", "timestamp", "artifacts"} <= set(manifest)


def test_run_seed_override_and_replicas(capsys, tmp_path):
    cfg = _config(tmp_path)
    run(capsys, "run", str(cfg), "--out", str(tmp_path / "a"), "--seed", "11")
    assert json.loads((tmp_path / "a" / "manifest.json").read_text())["seed"] == 11
    run(capsys, "run", str(cfg), "--out", str(tmp_path / "r1"), "--replicas", "2")
    run(capsys, "run", str(cfg), "--out", str(tmp_path / "r2"), "--replicas", "2", "--workers", "2")
    for rep in ("replica_000", "replica_001"):
        assert (tmp_path / "r1" / rep / "trust.csv").read_bytes() == (tmp_path / "r2" / rep / "trust.csv").read_bytes()


def test_run_rejects_zero_rounds(capsys, tmp_path):
    code, _, err = run(capsys, "run", str(_config(tmp_path, rounds=0)), "--out", str(tmp_path / "o"))
    assert code == 2
    assert "rounds" in err


def test_run_p4_scenario(capsys, tmp_path):
    cfg = _config(tmp_path, n_nodes=5, rounds=1, malicious_fraction=0.0,
                  transactions=[[0, 3, 0.2], [1, 3, 0.8], [2, 3, 0.5]])
    assert run(capsys, "run", str(cfg), "--out", str(tmp_path / "o"))[0] == 0
    table = rows((tmp_path / "o" / "trust.csv").read_text())
    p4 = [r for r in table[1:] if r[1] == "3"][0]
    assert float(p4[2]) == FuzzyEngine().crisp((0.2, 0.5, 0.8))


def test_experiment_table2_stdout(capsys):
    code, out, _ = run(capsys, "experiment", "table2")
    table = rows(out)
    assert code == 0
    assert table[0] == HEADERS["table2"]
    assert len(table) == 11
    assert table[5][-1] == "~0.8"


def test_experiment_surface(capsys, tmp_path):
    code, _, _ = run(capsys, "experiment", "surface", "--fixed", "p3=0.5", "--step", "0.05", "--out", str(tmp_path))
    assert code == 0
    table = rows((tmp_path / "surface.csv").read_text())
    assert len(table) == 1 + 21 * 21
    assert json.loads((tmp_path / "surface.manifest.json").read_text())["config"]["fixed"] == "p3=0.5"
    assert run(capsys, "experiment", "surface", "--fixed", "p9=1")[0] == 1


def test_experiment_chord_small(capsys):
    code, out, _ = run(capsys, "experiment", "chord", "--n", "4,8")
    table = rows(out)
    assert code == 0 and len(table) == 3
    assert all(r[3] == "2" for r in table[1:])


def test_experiment_rms_and_detect(capsys, tmp_path):
    cfg = _config(tmp_path)
    code, out, _ = run(capsys, "experiment", "rms", "--config", str(cfg), "--replicas", "2",
                       "--alphas", "0.5", "--fractions", "0.1,0.4")
    assert code == 0 and len(rows(out)) == 3
    code, out, _ = run(capsys, "experiment", "detect", "--config", str(cfg), "--replicas", "2")
    assert code == 0
    assert [r[0] for r in rows(out)] == ["replica", "0", "1", "mean"]


def test_experiment_output_deterministic(capsys, tmp_path):
    run(capsys, "experiment", "table3", "--out", str(tmp_path / "a"))
    run(capsys, "experiment", "table3", "--out", str(tmp_path / "b"))
    assert (tmp_path / "a" / "table3.csv").read_bytes() == (tmp_path / "b" / "table3.csv").read_bytes()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "frtrust", "fis-eval", "0.1", "0.5", "0.9"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("crisp=0.5000")

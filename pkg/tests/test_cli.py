import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from dickechaos.cli import main


def run(tmp_path, *args):
    return main(list(args) + ["--out", str(tmp_path)])


def snapshot(path):
    return {p.relative_to(path).as_posix(): p.read_bytes()
            for p in sorted(path.rglob("*")) if p.is_file()}


COMMANDS = [
    ["spectrum", "--lambda", "0.3", "--N", "6", "--K", "40"],
    ["eta", "--lambda", "0.3", "--N", "8", "--K", "60"],
    ["eta", "--goe", "200", "--poisson", "500", "--seed", "3"],
    ["echo", "--lambda", "0.3", "--n", "1", "--N", "6", "--t-max", "4"],
    ["echo-sweep", "--lambda", "0.1", "0.3", "--n", "0", "1", "--N", "6", "--t-eval", "10"],
    ["poincare", "--lambda", "0.3", "--n", "1", "--count", "2", "--t-max", "100", "--seed", "5"],
    ["lyapunov", "--lambda", "0.3", "--n", "1", "--count", "2", "--t-max", "20", "--seed", "5"],
    ["meanfield", "--lambda", "0.2", "0.6", "--n", "0", "1"],
]


@pytest.mark.parametrize("argv", COMMANDS, ids=[c[0] for c in COMMANDS])
def test_reruns_are_byte_identical(tmp_path, argv):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(a, *argv) == 0
    assert run(b, *argv) == 0
    sa, sb = snapshot(a), snapshot(b)
    assert sa and sa == sb


def test_uncoupled_spectrum_file(tmp_path):
    assert run(tmp_path, "spectrum", "--lambda", "0.0", "--N", "4", "--K", "30", "--sector", "even") == 0
    rows = list(csv.DictReader(open(tmp_path / "spectrum_n0_lam0.0_even.csv")))
    E = np.array([float(r["energy"]) for r in rows])
    m, k = np.meshgrid(np.arange(200), np.arange(5), indexing="ij")
    levels = (m + k - 2.0)[(m + k) % 2 == 0]
    assert np.allclose(E, np.sort(levels)[: E.size], atol=1e-9)
    meta = json.loads((tmp_path / "spectrum_n0_lam0.0_even.json").read_text())
    assert meta["converged_count"] == E.size >= 30


def test_cache_reuse_and_check(tmp_path, capsys):
    args = ["spectrum", "--lambda", "0.25", "--N", "5", "--K", "30", "--sector", "odd"]
    assert run(tmp_path, *args) == 0
    cache = sorted((tmp_path / ".cache").iterdir())
    assert len(cache) == 2
    first = snapshot(tmp_path)
    assert run(tmp_path, *args, "--check-cache") == 0
    assert snapshot(tmp_path) == first
    fresh = tmp_path / "fresh"
    assert run(fresh, *args, "--no-cache") == 0
    assert not (fresh / ".cache").exists()
    name = "spectrum_n0_lam0.25_odd.csv"
    assert (fresh / name).read_bytes() == (tmp_path / name).read_bytes()
    # a tampered cache entry is detected by the comparison mode
    entry = [p for p in cache if p.suffix == ".csv"][0]
    entry.write_text(entry.read_text().replace("1", "2", 1))
    assert run(tmp_path, *args, "--check-cache") == 2
    assert "differs" in capsys.readouterr().err


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"lambda": [0.2], "N": 30, "n": [1], "K": 40}))
    out = tmp_path / "o"
    assert run(out, "spectrum", "--config", str(cfg), "--N", "4", "--sector", "even") == 0
    meta = json.loads((out / "spectrum_n1_lam0.2_even.json").read_text())
    assert meta["N"] == 4 and meta["lambda"] == 0.2 and meta["n"] == 1


def test_eta_outputs(tmp_path):
    assert run(tmp_path, "eta", "--lambda", "0.3", "--N", "8", "--K", "60", "--format", "json") == 0
    table = json.loads((tmp_path / "eta_table.json").read_text())
    assert table[0]["lambda"] == 0.3 and 0 <= table[0]["eta"]
    hist = (tmp_path / "hist_n0_lam0.3.csv").read_text().splitlines()
    assert hist[0] == "s,count,density"
    res = json.loads((tmp_path / "eta_n0_lam0.3.json").read_text())
    assert set(res) == {"eta", "count", "s0", "degree", "trim"}


def test_eta_self_tests(tmp_path):
    assert run(tmp_path, "eta", "--goe", "1000", "--poisson", "20000", "--seed", "1") == 0
    rep = json.loads((tmp_path / "eta_selftest.json").read_text())
    assert rep["goe"]["eta"] < 0.1
    assert rep["poisson"]["eta"] > 0.9


def test_zero_detuning_echo_file(tmp_path):
    assert run(tmp_path, "echo", "--lambda", "0.2", "--n", "0", "--N", "6", "--delta-tilde", "0",
               "--t-max", "10", "--dt", "2.5") == 0
    rows = list(csv.DictReader(open(tmp_path / "echo_n0_lam0.2.csv")))
    assert [r["t"] for r in rows] == ["0.0", "2.5", "5.0", "7.5", "10.0"]
    assert all(abs(float(r["L"]) - 1.0) < 1e-12 for r in rows)


def test_sweep_grid_and_failures(tmp_path, capsys):
    rc = run(tmp_path, "echo-sweep", "--lambda-min", "0.1", "--lambda-max", "0.3",
             "--lambda-step", "0.1", "--n", "0", "2", "--N", "6", "--t-eval", "5")
    assert rc == 1  # 4 n g >= 1 for n = 2
    rows = list(csv.DictReader(open(tmp_path / "echo_sweep.csv")))
    assert [(r["n"], r["lambda"]) for r in rows] == [
        ("0", "0.1"), ("0", "0.2"), ("0", "0.3"), ("2", "0.1"), ("2", "0.2"), ("2", "0.3")]
    meta = json.loads((tmp_path / "echo_sweep.json").read_text())
    errs = [p["error"] for p in meta["points"]]
    assert all(e.startswith("SqueezingDiverges") for e in errs[3:]) and not any(errs[:3])
    assert capsys.readouterr().err.count("failed:") == 3


def test_uncoupled_sections_are_ellipses(tmp_path):
    assert run(tmp_path, "poincare", "--lambda", "0.0", "--n", "0", "--E", "-10", "--count", "2",
               "--t-max", "100") == 0
    rows = list(csv.DictReader(open(tmp_path / "section_n0_lam0.0.csv")))
    by_traj = {}
    for r in rows:
        by_traj.setdefault(r["traj_id"], []).append(float(r["q1"]) ** 2 + float(r["p1"]) ** 2)
    for vals in by_traj.values():
        assert np.ptp(vals) < 1e-8
    summary = json.loads((tmp_path / "poincare_summary.json").read_text())
    assert summary["points"][0]["crossings"] == len(rows)


def test_errors_give_nonzero_exit(tmp_path, capsys):
    assert run(tmp_path, "meanfield", "--g", "0.3", "--n", "5") == 2
    assert "SqueezingDiverges" in capsys.readouterr().err
    assert run(tmp_path, "poincare", "--E", "-1000", "--count", "1") == 2


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "dickechaos", "meanfield", "--lambda", "0.3",
                          "--n", "0", "1", "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert "superradiant" in out.stdout
    assert (tmp_path / "meanfield.csv").exists()

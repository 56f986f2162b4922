import csv
import io
from importlib import resources

import numpy as np
import pytest
from click.testing import CliRunner
from PIL import Image

from semcast import __version__
from semcast.cli import main
from semcast.rdp import RECONSTRUCTION_CURVE

EXAMPLE = str(resources.files("semcast") / "data" / "example.toml")

SMALL = """
[radio]
distances_m = [200, 350]
power_budget_mw = 150

[intent]
matrix = [[1, 0, 0], [0, 0, 1]]

[geometry]
num_classes = 3

[channel]
gains = [3e-11, 4e-12]
"""


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def small(tmp_path):
    p = tmp_path / "small.toml"
    p.write_text(SMALL)
    return str(p)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_version(runner):
    res = runner.invoke(main, ["--version"])
    assert res.exit_code == 0 and __version__ in res.output


def test_solve_text_and_csv(runner, small, tmp_path):
    res = runner.invoke(main, ["solve", small])
    assert res.exit_code == 0, res.output
    assert "converged" in res.output
    out = tmp_path / "s.csv"
    res = runner.invoke(main, ["solve", small, "-o", str(out)])
    assert res.exit_code == 0, res.output
    row = _rows(out)[0]
    si = tmp_path / "si.csv"
    runner.invoke(main, ["solve", small, "--units", "si", "-o", str(si)])
    row_si = _rows(si)[0]
    ms = [k for k in row if k.endswith("_ms")]
    assert ms
    for k in ms:
        assert float(row_si[k[:-3] + "_s"]) == pytest.approx(1e-3 * float(row[k]), rel=1e-8)


def test_solve_methods_agree(runner, small, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert runner.invoke(main, ["solve", small, "-o", str(a)]).exit_code == 0
    assert runner.invoke(main, ["solve", small, "--method", "reduced", "-o", str(b)]).exit_code == 0
    ta = float(_rows(a)[0]["objective_ms"])
    tb = float(_rows(b)[0]["objective_ms"])
    assert ta == pytest.approx(tb, rel=1e-5)


def test_solve_not_converged_exit_code(runner, tmp_path):
    out = tmp_path / "s.csv"
    res = runner.invoke(main, ["solve", EXAMPLE, "--max-iter", "1", "-o", str(out)])
    assert res.exit_code == 2
    assert _rows(out)[0]["converged"] == "0"


def test_bench(runner, tmp_path):
    out = tmp_path / "b.csv"
    res = runner.invoke(main, ["bench", EXAMPLE, "-o", str(out)])
    assert res.exit_code == 0, res.output
    rows = {r["benchmark"]: r for r in _rows(out)}
    assert set(rows) == {"proposed", "ngm", "fgm"}
    lat = {k: float(v["latency_ms"]) for k, v in rows.items()}
    assert lat["proposed"] < lat["ngm"]
    assert float(rows["fgm"]["power_ratio"]) == 1.0
    text = runner.invoke(main, ["bench", EXAMPLE]).output
    assert "proposed" in text and "ngm" in text


def test_montecarlo_deterministic(runner, tmp_path):
    args = ["montecarlo", "--users", "3,4", "--power-mw", "100,200", "--trials", "6", "--seed", "5"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert runner.invoke(main, args + ["-o", str(a)]).exit_code == 0
    assert runner.invoke(main, args + ["--jobs", "2", "-o", str(b)]).exit_code == 0
    assert a.read_bytes() == b.read_bytes()
    rows = [r for r in _rows(a) if r["benchmark"] == "proposed"]
    assert len(rows) == 4
    assert {(r["num_users"], r["power_budget_mW"]) for r in rows} == {
        ("3", "100"), ("3", "200"), ("4", "100"), ("4", "200")}
    c = tmp_path / "c.csv"
    runner.invoke(main, args + ["-o", str(c)])
    assert a.read_bytes() == c.read_bytes()
    d = tmp_path / "d.csv"
    runner.invoke(main, args[:-1] + ["7", "-o", str(d)])
    assert a.read_bytes() != d.read_bytes()


def test_montecarlo_plan_file_and_overrides(runner, tmp_path):
    plan = tmp_path / "plan.toml"
    plan.write_text('[plan]\nusers = [2]\npower_budget_mw = [120]\ntrials = 3\nseed = 1\n'
                    'requirements = [[0.03, 0.6]]\ngeneration_latency_ms = [4]\n'
                    'benchmarks = ["proposed", "fgm"]\n')
    out = tmp_path / "o.csv"
    res = runner.invoke(main, ["montecarlo", "--plan", str(plan), "--trials", "2", "-o", str(out)])
    assert res.exit_code == 0, res.output
    rows = _rows(out)
    assert [r["benchmark"] for r in rows] == ["proposed", "fgm"]
    r = rows[0]
    assert r["num_users"] == "2" and float(r["power_budget_mW"]) == 120
    assert float(r["generation_latency_ms"]) == 4 and float(r["recon_requirement"]) == 0.03
    assert r["trials"] == "2"
    assert float(rows[1]["power_ratio_mean"]) == 1.0


def test_montecarlo_overlapped_policy(runner, tmp_path):
    out = tmp_path / "o.csv"
    res = runner.invoke(main, ["montecarlo", "--users", "10", "--policy", "overlapped", "--per-user", "2",
                               "--total-classes", "10", "--trials", "2", "-o", str(out)])
    assert res.exit_code == 0, res.output


def test_montecarlo_unsatisfiable_policy(runner, tmp_path):
    res = runner.invoke(main, ["montecarlo", "--users", "36", "--trials", "1"])
    assert res.exit_code != 0


def test_fit(runner, tmp_path):
    r = np.linspace(0.02, 1.5, 40)
    p = tmp_path / "samples.csv"
    p.write_text("rate_bpp,metric\n" + "".join(f"{float(x)!r},{float(RECONSTRUCTION_CURVE(x))!r}\n" for x in r))
    out = tmp_path / "fit.csv"
    res = runner.invoke(main, ["fit", str(p), "-o", str(out)])
    assert res.exit_code == 0, res.output
    row = _rows(out)[0]
    got = [float(row[k]) for k in "abc"]
    assert got == pytest.approx(RECONSTRUCTION_CURVE.as_tuple(), rel=1e-6)
    assert "config:" in runner.invoke(main, ["fit", str(p)]).output


def test_ingest(runner, tmp_path):
    labels = np.repeat(np.arange(10, dtype=np.uint8), 13108)[:131072].reshape(256, 512)
    p = tmp_path / "map.pgm"
    Image.fromarray(labels, mode="L").save(p)
    out = tmp_path / "g.csv"
    res = runner.invoke(main, ["ingest", str(p), "--num-classes", "10", "-o", str(out)])
    assert res.exit_code == 0, res.output
    rows = _rows(out)
    assert rows[0]["pixels"] == "131072" and float(rows[0]["fraction"]) == pytest.approx(0.1)
    assert len(rows) == 11
    assert "131072" in runner.invoke(main, ["ingest", str(p), "--num-classes", "10"]).output


def test_table3(runner, tmp_path):
    out = tmp_path / "t.csv"
    res = runner.invoke(main, ["table3", "--trials", "2", "-o", str(out)])
    assert res.exit_code == 0, res.output
    rows = _rows(out)
    assert [int(r["num_users"]) for r in rows] == [1, 2, 3, 5, 10, 15]
    r1 = float(rows[0]["compression_rate_bpp"])
    assert r1 == pytest.approx(0.5170, abs=5e-4)


def test_semcast_errors_exit_1(tmp_path):
    import subprocess
    import sys
    p = tmp_path / "bad.csv"
    p.write_text("0,1\n2\n")
    proc = subprocess.run([sys.executable, "-m", "semcast", "ingest", str(p), "--num-classes", "3"],
                          capture_output=True, text=True)
    assert proc.returncode == 1
    assert proc.stderr.startswith("error:")

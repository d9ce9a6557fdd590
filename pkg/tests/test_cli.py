import subprocess
import sys

import numpy as np
import pytest

from invq import cli
from invq.workbench import Dataset, read_points, write_points


@pytest.fixture
def demo_file(tmp_path):
    """The 1D demo dataset {0,1,2,3,10}, stored on the x axis of the plane."""
    p = tmp_path / "demo.txt"
    write_points(Dataset.from_coords([[0, 0], [1, 0], [2, 0], [3, 0], [10, 0]]), p)
    return p


def run(capsys, *args):
    code = cli.main([str(a) for a in args])
    out = capsys.readouterr()
    return code, out.out, out.err


def result_ids(out):
    line = next(l for l in out.splitlines() if l.startswith("results:"))
    body = line.split(":", 1)[1].split()
    return set() if body == ["(none)"] else {int(v) for v in body}


def test_query_iknn_demo(capsys, demo_file):
    code, out, _ = run(capsys, "query", "--data", demo_file, "--type", "iknn", "--k", 2,
                       "--q", "1,0;2,0")
    assert code == 0
    assert result_ids(out) == {0, 1, 2, 3}
    assert "node reads:" in out and "time:" in out


@pytest.mark.parametrize("algo", ["mqf", "sqf", "naive"])
def test_query_algorithms_agree(capsys, demo_file, algo):
    code, out, _ = run(capsys, "query", "--data", demo_file, "--type", "idsq",
                       "--q", "1,0;3,0", "--algo", algo)
    assert code == 0 and result_ids(out) == {2}


def test_query_fast_validation_note(capsys, tmp_path):
    p = tmp_path / "d.txt"
    write_points(Dataset.from_coords([[0, 0], [5, 0], [1, 1]]), p)
    code, out, _ = run(capsys, "query", "--data", p, "--type", "ieps", "--eps", 2,
                       "--q", "0,0;5,0")
    assert code == 0
    assert result_ids(out) == set()
    assert "fast-validation: empty" in out


@pytest.mark.parametrize("extra", [
    ["--type", "ieps", "--eps", "-1", "--q", "0,0"],
    ["--type", "ieps", "--q", "0,0"],
    ["--type", "iknn", "--k", "0", "--q", "0,0"],
    ["--type", "iknn", "--k", "2", "--q", "0.5,0.5"],
    ["--type", "iknn", "--k", "2", "--q", "0,0,0"],
    ["--type", "iknn", "--k", "2", "--q", "a,b"],
])
def test_invalid_spec_exit_code(capsys, demo_file, extra):
    code, _, err = run(capsys, "query", "--data", demo_file, *extra)
    assert code == 2 and err.startswith("error:")


def test_query_file_wins_over_inline(capsys, demo_file, tmp_path):
    qf = tmp_path / "q.txt"
    qf.write_text("1,0\n2,0\n")
    code, out, _ = run(capsys, "query", "--data", demo_file, "--type", "iknn", "--k", 2,
                       "--q", "10,0", "--q-file", qf)
    assert code == 0 and result_ids(out) == {0, 1, 2, 3}


def test_query_bichromatic(capsys, demo_file, tmp_path):
    cf = tmp_path / "c.txt"
    write_points(Dataset(np.array([[1.5, 0], [9, 0]]), np.array([100, 101])), cf)
    code, out, _ = run(capsys, "query", "--data", demo_file, "--type", "ieps", "--eps", 1,
                       "--q", "1,0;2,0", "--bichromatic", cf)
    assert code == 0 and result_ids(out) == {100}


def test_gen_data_and_ingest(capsys, tmp_path):
    out = tmp_path / "u.txt"
    code, _, _ = run(capsys, "gen-data", "--dist", "clustered", "--n", 100, "--d", 3,
                     "--seed", 4, "--out", out)
    assert code == 0 and len(read_points(out)) == 100
    raw = tmp_path / "raw.txt"
    raw.write_text("10 20\n30 40\n20 25\n")
    norm = tmp_path / "n.txt"
    code, _, _ = run(capsys, "ingest", "--in", raw, "--out", norm)
    assert code == 0
    assert read_points(norm).coords.tolist() == [[0, 0], [1, 1], [0.5, 0.25]]


def test_gen_data_bad_params(capsys, tmp_path):
    code, _, _ = run(capsys, "gen-data", "--n", 0, "--d", 2, "--out", tmp_path / "x.txt")
    assert code == 2


def test_bench(capsys, tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("n = 800\nd = 2\npredicate = ieps\nparams = 0.1\nqcounts = 2\n"
                   "queries = 2\nextent = 0.01\n")
    code, out, _ = run(capsys, "bench", "--config", cfg, "--out", tmp_path / "r.csv")
    assert code == 0 and "3 rows" in out
    assert len((tmp_path / "r.csv").read_text().splitlines()) == 4


def test_verify_passes(capsys):
    code, out, _ = run(capsys, "verify", "--n", 500, "--d", 2, "--trials", 50, "--seed", 1)
    assert code == 0
    assert "150/150" in out


def test_verify_reports_and_shrinks_mismatch(capsys, monkeypatch):
    import invq.workbench as wb

    real = wb.run_inverse_query

    def broken(spec, data, **kw):
        rep = real(spec, data, **kw)
        rep.results = frozenset(set(rep.results) | {-1})
        return rep

    monkeypatch.setattr(wb, "run_inverse_query", broken)
    code, out, _ = run(capsys, "verify", "--n", 30, "--d", 2, "--trials", 1, "--seed", 0)
    assert code == 1
    assert "MISMATCH" in out and "minimal instance:" in out
    # the injected error survives on any instance, so shrinking keeps only Q
    block = out.split("minimal instance:")[1].split("queries:")[0]
    assert len([l for l in block.splitlines() if l.strip()]) <= 5


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "invq", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "verify" in res.stdout

import json

import numpy as np
import pytest

from aitkenras.cli import main
from aitkenras.partition import load_partition
from aitkenras.sparse import read_matrix_market, read_vector


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def solve_json(capsys, *argv):
    code, out, _ = run(capsys, "solve", *argv)
    return code, json.loads(out)


def test_identity_problem_one_iteration(capsys):
    code, summary = solve_json(capsys, "--problem", "identity:1", "-p", "1", "--delta", "0")
    assert code == 0
    assert summary["iterations"] == 1 and summary["converged"]
    assert summary["final_true_residual"] == 0.0
    assert summary["schema"] == 1


def test_json_summary_fields(capsys, tmp_path):
    path = tmp_path / "s.json"
    code, _, _ = run(
        capsys, "solve", "--problem", "poisson:12x10", "--precond", "ARAS2",
        "--basis", "svd:4", "--json", str(path), "--estimate-rho",
    )
    summary = json.loads(path.read_text())
    assert code == 0
    for key in ("schema", "preconditioner", "iterations", "converged", "final_true_residual",
                "counters", "build_counters", "cost", "partition", "rho", "timings"):
        assert key in summary
    assert summary["preconditioner"].startswith("ARAS2(")
    assert summary["rho_method"] == "dense"


def test_csv_is_byte_identical_across_runs(capsys, tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for path in paths:
        run(capsys, "solve", "--problem", "helmholtz:20", "-p", "3", "--partition", "greedy",
            "--precond", "ARAS", "--basis", "random:6,7", "--csv", str(path))
    a, b = (p.read_bytes() for p in paths)
    assert a == b
    lines = a.decode().splitlines()
    assert lines[0] == "iter,precond_resid,true_resid"
    assert len(lines) > 2


def test_generate_round_trip(capsys, tmp_path):
    mtx, rhs = tmp_path / "a.mtx", tmp_path / "b.txt"
    code, _, _ = run(capsys, "generate", "--problem", "poisson:8x7", "--out-matrix", str(mtx),
                     "--out-rhs", str(rhs))
    assert code == 0
    A = read_matrix_market(mtx)
    assert A.shape == (30, 30) and A.is_symmetric()
    code, summary = solve_json(capsys, "--matrix", str(mtx), "--rhs-file", str(rhs))
    assert code == 0 and summary["converged"]
    assert read_vector(rhs).size == 30


def test_partition_file_feeds_solve(capsys, tmp_path):
    path = tmp_path / "p.txt"
    code, out, _ = run(capsys, "partition", "--problem", "poisson:10x10", "--partition", "greedy",
                       "-p", "3", "--delta", "2", "--out", str(path))
    assert code == 0 and out.startswith("p=3 delta=2")
    owned, delta = load_partition(path)
    assert delta == 2 and sum(len(s) for s in owned) == 64
    code, summary = solve_json(capsys, "--problem", "poisson:10x10", "--partition", f"file:{path}")
    assert summary["partition"]["p"] == 3 and summary["partition"]["delta"] == 2


def test_saved_basis_reused(capsys, tmp_path):
    path = tmp_path / "u.bin"
    args = ["--problem", "poisson:14x14", "--precond", "ARAS"]
    _, first = solve_json(capsys, *args, "--basis", "svd:5", "--save-basis", str(path))
    _, again = solve_json(capsys, *args, "--basis", f"load:{path}", "--rhs", "random:3")
    assert again["coarse_dimension"] == first["coarse_dimension"]
    assert again["converged"]
    # a loaded space costs no build sweeps
    assert again["build_counters"]["local_solves"] == 0


def test_strict_flags_non_convergence(capsys):
    code, _, _ = run(capsys, "solve", "--problem", "poisson:16x16", "--solver", "richardson",
                     "--max-it", "3", "--strict")
    assert code == 2
    code, _, _ = run(capsys, "solve", "--problem", "poisson:16x16", "--solver", "richardson",
                     "--max-it", "3")
    assert code == 0


@pytest.mark.parametrize(
    "argv",
    [
        ["solve", "--problem", "poisson:abc"],
        ["solve", "--problem", "poisson:8x8", "--basis", "svd:x", "--precond", "ARAS"],
        ["solve", "--matrix", "/nonexistent.mtx"],
        ["solve", "--problem", "poisson:8x8", "-p", "100"],
        ["solve", "--problem", "poisson:8x8", "--precond", "ARAS", "--basis", "random:500"],
        ["bogus"],
    ],
)
def test_usage_errors_exit_one(capsys, argv):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_analyze_reports_predictions(capsys, tmp_path):
    path = tmp_path / "modes.csv"
    code, _, _ = run(capsys, "analyze", "--mx", "16", "--my", "16", "--q", "4", "--out", str(path))
    assert code == 0
    lines = path.read_text().splitlines()
    assert lines[0] == "mode,analytic_delta,numeric_abs_lambda"
    rows = [l.split(",") for l in lines[1:15]]
    for _, a, b in rows:
        assert float(a) == pytest.approx(float(b), abs=1e-10)
    tail = [l.split(",") for l in lines[-3:]]
    for _, pred, meas in tail:
        assert float(pred) == pytest.approx(float(meas), abs=1e-8)


def test_threads_do_not_change_results(capsys):
    base = ["--problem", "helmholtz:24", "-p", "4", "--precond", "ARAS2", "--basis", "svd:6"]
    _, one = solve_json(capsys, *base)
    _, two = solve_json(capsys, *base, "--threads", "2")
    assert one["iterations"] == two["iterations"]
    assert one["counters"] == two["counters"]
    np.testing.assert_allclose(one["final_true_residual"], two["final_true_residual"], rtol=1e-6)

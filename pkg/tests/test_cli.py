import json

import numpy as np

from spectral_sparse.cli import EXIT_OK, EXIT_PARTIAL, EXIT_USAGE, main
from spectral_sparse.linalg import write_matrix_csv
from spectral_sparse.results import RESULT_COLUMNS, read_results


def test_cs_bench_command(tmp_path):
    out = tmp_path / "out"
    code = main([
        "cs-bench", "--sizes", "20x20", "--trials", "2", "--seed", "4", "--out", str(out),
        "--algorithms", "l1_svd", "naive", "--alpha-rule", "oder_delta", "--no-timing",
    ])
    assert code == EXIT_OK
    assert (out / "results.csv").read_text(encoding="utf-8").splitlines()[0] == ",".join(RESULT_COLUMNS)
    rows = read_results(out / "results.csv")
    assert len(rows) == 4
    assert (out / "summary.csv").exists()
    assert json.loads((out / "meta.json").read_text(encoding="utf-8"))["config"]["seed"] == 4


def test_partial_failure_exit_code(tmp_path, capsys):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({
        "experiment": "cs_bench", "sizes": [[10, 5]], "sparsity": [8], "trials": 1,
        "algorithms": ["l1_svd"],
    }), encoding="utf-8")
    code = main(["cs-bench", "--config", str(config), "--out", str(tmp_path / "out")])
    assert code == EXIT_PARTIAL
    assert "l1_svd trial 0" in capsys.readouterr().err


def test_usage_errors(tmp_path):
    assert main([]) == EXIT_USAGE
    assert main(["cs-bench", "--sizes", "twenty"]) == EXIT_USAGE
    assert main(["cs-bench", "--config", str(tmp_path / "missing.json")]) == EXIT_USAGE
    assert main(["cs-bench", "--trials", "0", "--out", str(tmp_path)]) == EXIT_USAGE


def test_recover_missing_file(tmp_path, capsys):
    code = main([
        "recover", "--operator", str(tmp_path / "K.csv"), "--data", str(tmp_path / "y.csv"),
        "--alpha", "0.1", "--out", str(tmp_path),
    ])
    assert code == EXIT_USAGE
    assert "K.csv" in capsys.readouterr().err


def test_recover_identity(tmp_path):
    y = np.array([0.5, -1.0, 2.0])
    write_matrix_csv(tmp_path / "K.csv", np.eye(3))
    write_matrix_csv(tmp_path / "y.csv", y)
    code = main([
        "recover", "--operator", str(tmp_path / "K.csv"), "--data", str(tmp_path / "y.csv"),
        "--alpha", "1e-10", "--out", str(tmp_path / "out"),
    ])
    assert code == EXIT_OK
    x_hat = np.loadtxt(tmp_path / "out" / "x_hat.csv", delimiter=",", skiprows=1)
    assert np.allclose(x_hat, y, atol=1e-9)


def test_generate_then_recover(tmp_path):
    inst = tmp_path / "inst"
    assert main(["generate", "cs", "--size", "30x30", "--s", "3", "--seed", "5", "--out", str(inst)]) == EXIT_OK
    assert sorted(e.name for e in inst.iterdir()) == [
        "K.csv", "meta.json", "x_true.csv", "y_clean.csv", "y_noisy.csv",
    ]
    code = main([
        "recover", "--instance", str(inst), "--algorithms", "l1_svd", "--out", str(tmp_path / "out"),
    ])
    assert code == EXIT_OK
    sidecar = json.loads((tmp_path / "out" / "x_hat.json").read_text(encoding="utf-8"))
    assert sidecar["algorithm"] == "l1_svd"
    assert sidecar["rerror"] < 0.05

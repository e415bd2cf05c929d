import json

import numpy as np
import pytest

from spectral_sparse.archive import SingularSystemArchive
from spectral_sparse.config import ExperimentConfig
from spectral_sparse.experiments import (
    recover_single, run_algorithm, run_cs_bench, run_deblur_bench, run_rate_check,
    run_success_curve, score,
)
from spectral_sparse.linalg import svd, write_matrix_csv
from spectral_sparse.problems import BlurSpec, blur_operator, make_cs_instance
from spectral_sparse.results import RESULT_COLUMNS, read_results, read_rows
from spectral_sparse.tuning import success_probability


def _config(tmp_path, **kwargs):
    values = dict(seed=1, trials=2, timing="off", output_dir=tmp_path)
    values.update(kwargs)
    return ExperimentConfig(**values)


def test_score():
    assert score(np.zeros(3), np.zeros(3)) == 0.0
    assert score(np.array([3.0, 4.0]), np.zeros(2)) == 5.0
    assert score(np.zeros(2), np.array([1.0, 1.0])) == 1.0


@pytest.mark.parametrize("algorithm", ["naive", "tikhonov", "landweber", "tsvd", "l1_svd", "l_half_svd"])
def test_spectral_algorithms_recover_well_posed_instances(tmp_path, algorithm):
    config = _config(tmp_path, experiment="cs_bench")
    instance = make_cs_instance(40, 40, s=4, snr_db=100.0, seed=3)
    result = run_algorithm(algorithm, instance, config)
    assert result.iterations == 0
    assert result.alpha >= 0
    assert score(result.x_hat, instance.x_true) < 0.05


@pytest.mark.parametrize("algorithm", ["ista", "fista", "pg_half"])
def test_iterative_algorithms_run_on_scaled_operators(tmp_path, algorithm):
    config = _config(tmp_path, experiment="cs_bench", alpha_rule={"kind": "order_delta", "c": 1e-2})
    instance = make_cs_instance(60, 30, s=3, snr_db=80.0, seed=4)
    result = run_algorithm(algorithm, instance, config)
    assert result.iterations >= 1
    assert result.residual >= 0
    assert score(result.x_hat, instance.x_true) < 0.05


def test_cs_bench_files_and_determinism(tmp_path):
    config = _config(
        tmp_path / "a", experiment="cs_bench", sizes=[(30, 30), (20, 40)],
        algorithms=["l1_svd", "naive", "ista"],
    )
    report = run_cs_bench(config)
    assert report.ok
    rows = read_results(report.files["results"])
    assert len(rows) == 3 * 2 * 2
    assert [e.algorithm for e in rows[:4]] == ["ista"] * 4
    assert all(e.time_ms == 0.0 for e in rows)
    assert {(e.m, e.n, e.s) for e in rows} == {(30, 30, 3), (20, 40, 2)}

    summary = read_rows(report.files["summary"])
    assert len(summary) == 6
    meta = json.loads(report.files["meta"].read_text(encoding="utf-8"))
    assert meta["config"]["seed"] == 1
    assert meta["clock"]["timing"] == "off"

    again = run_cs_bench(config.model_copy(update={"output_dir": tmp_path / "b", "workers": 3}))
    assert again.files["results"].read_bytes() == report.files["results"].read_bytes()


def test_cs_bench_collects_failures(tmp_path):
    config = _config(tmp_path, experiment="cs_bench", sizes=[(10, 5)], sparsity=[8], trials=1)
    report = run_cs_bench(config)
    assert not report.ok
    assert {e.algorithm for e in report.failures} == set(config.algorithms)
    assert report.files["results"].read_text(encoding="utf-8").strip() == ",".join(RESULT_COLUMNS)


def test_success_curve(tmp_path):
    config = _config(
        tmp_path, experiment="success_curve", sizes=[(30, 30)], supports=[0, 3, 20],
        algorithms=["naive", "l1_svd", "l_half_svd", "ista"], trials=3,
    )
    report = run_success_curve(config)
    assert report.ok
    curve = read_rows(report.files["success"])
    assert len(curve) == 3 * 4
    assert all(0 <= e["success_rate"] <= 1 for e in curve)
    assert all(e["success_rate"] == 1.0 for e in curve if e["supp"] == 0)
    rows = read_results(report.files["results"])
    for entry in curve:
        members = [e for e in rows if e.s == entry["supp"] and e.algorithm == entry["algorithm"]]
        assert entry["trials"] == len(members) == 3
        assert entry["success_rate"] == success_probability([e.metrics() for e in members])

    with pytest.raises(ValueError):
        run_success_curve(config.model_copy(update={"supports": [31]}))


def test_deblur_bench_with_svd_cache(tmp_path):
    spec = BlurSpec(8, tau=0.7)
    cache = tmp_path / "systems.tar.gz"
    with SingularSystemArchive(cache, "w") as archive:
        archive.add(spec.key, svd(blur_operator(spec)))

    config = _config(
        tmp_path / "out", experiment="deblur_bench", image_sizes=[8], taus=[0.7, 0.8],
        algorithms=["l1_svd", "l_half_svd"], svd_cache=cache, trials=1,
    )
    report = run_deblur_bench(config)
    assert report.ok
    conditioning = read_rows(report.files["conditioning"])
    assert [e["tau"] for e in conditioning] == [0.7, 0.8]
    assert conditioning[0]["cond"] < conditioning[1]["cond"]
    rows = read_results(tmp_path / "out" / "n8-tau0.7" / "results.csv")
    assert {(e.m, e.n) for e in rows} == {(64, 64)}
    assert all(e.rerror < 0.05 for e in rows)


def test_rate_check(tmp_path):
    report = run_rate_check(_config(tmp_path, experiment="rate_check"))
    slopes = read_rows(report.files["slopes"])
    assert {e["regime"] for e in slopes} == {"range_adjoint", "range_normal"}
    rates = read_rows(report.files["rates"])
    assert len(rates) == 4 * 9


def test_recover_single_from_files(tmp_path):
    write_matrix_csv(tmp_path / "K.csv", np.eye(4))
    y = np.array([1.0, -2.0, 0.5, 3.0])
    write_matrix_csv(tmp_path / "y.csv", y)
    config = _config(
        tmp_path / "out", experiment="recover_single", alpha_rule={"kind": "fixed", "alpha": 1e-9}
    )
    report = recover_single(config, tmp_path / "K.csv", tmp_path / "y.csv")
    x_hat = np.loadtxt(report.files["x_hat"], delimiter=",", skiprows=1)
    assert np.allclose(x_hat, y, atol=1e-8)
    sidecar = json.loads(report.files["sidecar"].read_text(encoding="utf-8"))
    assert sidecar["alpha"] == 1e-9
    assert sidecar["residual"] < 1e-8


def test_recover_single_errors(tmp_path):
    write_matrix_csv(tmp_path / "K.csv", np.eye(4))
    write_matrix_csv(tmp_path / "y.csv", np.ones(3))
    config = _config(tmp_path / "out", experiment="recover_single")
    with pytest.raises(ValueError, match="y.csv"):
        recover_single(config, tmp_path / "K.csv", tmp_path / "y.csv", delta=0.1)
    write_matrix_csv(tmp_path / "y.csv", np.ones(4))
    with pytest.raises(ValueError, match="noise level"):
        recover_single(config, tmp_path / "K.csv", tmp_path / "y.csv")
    with pytest.raises(FileNotFoundError):
        recover_single(config, tmp_path / "missing.csv", tmp_path / "y.csv", delta=0.1)


def test_recover_single_from_instance(tmp_path):
    make_cs_instance(30, 30, s=3, seed=2).save(tmp_path / "inst")
    config = _config(tmp_path / "out", experiment="recover_single", algorithms=["l_half_svd"])
    report = recover_single(config, instance_dir=tmp_path / "inst")
    sidecar = report.rows[0]
    assert sidecar["algorithm"] == "l_half_svd"
    assert sidecar["rerror"] < 0.05

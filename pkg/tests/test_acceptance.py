"""Desk-scale reproductions of the benchmark tables and the success curve.

The runs marked slow take minutes; select them with `pytest -m slow`.
"""

import math

import numpy as np
import pytest

from spectral_sparse.config import ExperimentConfig
from spectral_sparse.experiments import run_cs_bench, run_deblur_bench, run_success_curve
from spectral_sparse.linalg import cond2, svd, symmetric_banded_toeplitz
from spectral_sparse.problems import BlurSpec, blur_operator
from spectral_sparse.results import read_results, read_rows, summarize

BLUR_CONDITION = {0.6: 8.7327, 0.7: 31.328, 0.8: 137.11, 0.9: 729.84}


@pytest.mark.parametrize("tau,expected", sorted(BLUR_CONDITION.items()))
def test_blur_condition_numbers_through_the_toeplitz_factor(tau, expected):
    # The singular values of T ⊗ T are the pairwise products of those of T.
    spec = BlurSpec(64, band=16, tau=tau)
    z = np.exp(-np.arange(spec.band) ** 2 / (2 * tau**2))
    T = symmetric_banded_toeplitz(z, spec.n)
    assert cond2(svd(T)) ** 2 == pytest.approx(expected, rel=0.01)


@pytest.mark.slow
def test_blur_condition_number_of_full_operator():
    system = svd(blur_operator(BlurSpec(64, band=16, tau=0.7)))
    assert system.shape == (4096, 4096)
    assert cond2(system) == pytest.approx(BLUR_CONDITION[0.7], rel=0.01)


@pytest.mark.slow
def test_compressive_sensing_table(tmp_path):
    config = ExperimentConfig(
        experiment="cs_bench", sizes=[(200, 200)], sparsity=[20], snr_db=80.0, trials=20,
        seed=2024, algorithms=["l1_svd", "l_half_svd", "ista", "fista"], output_dir=tmp_path,
    )
    report = run_cs_bench(config)
    assert report.ok
    summary = {e["algorithm"]: e for e in summarize(read_results(report.files["results"]))}
    for algorithm in ("l1_svd", "l_half_svd", "ista", "fista"):
        assert summary[algorithm]["median_rerror"] <= 1e-2, summary[algorithm]
    assert summary["l1_svd"]["median_time_ms"] < summary["ista"]["median_time_ms"]


@pytest.mark.slow
def test_deblurring_table(tmp_path):
    config = ExperimentConfig(
        experiment="deblur_bench", image_sizes=[32], taus=[0.7], snr_db=80.0, trials=5,
        seed=2024, algorithms=["l1_svd", "l_half_svd"], output_dir=tmp_path,
    )
    report = run_deblur_bench(config)
    assert report.ok
    rows = read_results(tmp_path / "n32-tau0.7" / "results.csv")
    half = [e.rerror for e in rows if e.algorithm == "l_half_svd"]
    assert float(np.median(half)) <= 5e-2


@pytest.mark.slow
def test_success_curve_ordering(tmp_path):
    config = ExperimentConfig(
        experiment="success_curve", family="cs", sizes=[(200, 200)], supports=[0, 120],
        snr_db=80.0, trials=50, seed=2024, algorithms=["l_half_svd", "ista"],
        output_dir=tmp_path,
    )
    report = run_success_curve(config)
    assert report.ok
    rates = {(int(e["supp"]), e["algorithm"]): e["success_rate"] for e in read_rows(report.files["success"])}
    assert rates[(0, "l_half_svd")] == 1.0
    assert rates[(0, "ista")] == 1.0
    assert rates[(120, "l_half_svd")] >= rates[(120, "ista")]
    assert rates[(120, "l_half_svd")] >= 0.5
    assert all(0 <= e <= 1 for e in rates.values())
    assert not math.isnan(sum(rates.values()))

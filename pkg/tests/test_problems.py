import math

import numpy as np
import pytest

from spectral_sparse.linalg import symmetric_banded_toeplitz, write_matrix_csv
from spectral_sparse.problems import (
    BlurSpec, ProblemInstance, awgn, blur_operator, gaussian_matrix, load_image_csv,
    make_cs_instance, make_deblur_instance, sparse_signal, trial_seed,
)


def test_gaussian_matrix_is_deterministic():
    assert np.array_equal(gaussian_matrix(5, 4, seed=3), gaussian_matrix(5, 4, seed=3))
    assert not np.array_equal(gaussian_matrix(5, 4, seed=3), gaussian_matrix(5, 4, seed=4))
    assert gaussian_matrix(5, 4, seed=3).shape == (5, 4)
    with pytest.raises(ValueError):
        gaussian_matrix(0, 4, seed=3)


def test_gaussian_matrix_moments():
    entries = gaussian_matrix(1000, 1000, seed=5)
    assert -0.01 < entries.mean() < 0.01
    assert 0.99 < entries.var() < 1.01


def test_sparse_signal():
    assert np.array_equal(sparse_signal(10, 0, seed=1), np.zeros(10))
    assert np.count_nonzero(sparse_signal(10, 10, seed=1)) == 10
    assert np.count_nonzero(sparse_signal(100, 7, seed=1)) == 7
    with pytest.raises(ValueError):
        sparse_signal(5, 6, seed=1)


def test_trial_seeds_are_deterministic_and_distinct():
    seeds = {trial_seed(42, 200, 200, trial) for trial in range(100)}
    assert len(seeds) == 100
    assert trial_seed(42, 1) == trial_seed(42, 1)
    assert trial_seed(42, 1) != trial_seed(43, 1)
    assert 0 <= trial_seed(-1, 5) < 2**64


def test_awgn():
    y = np.random.default_rng(0).standard_normal(10_000)
    noisy, delta = awgn(y, 20.0, seed=1)
    assert delta == pytest.approx(np.linalg.norm(noisy - y))
    expected = math.sqrt(y @ y / 10 ** (20.0 / 10))
    assert delta == pytest.approx(expected, rel=0.05)

    clean, delta = awgn(y, math.inf, seed=1)
    assert delta == 0.0
    assert np.array_equal(clean, y)

    with pytest.raises(ValueError):
        awgn(np.zeros(5), 80.0, seed=1)


def test_awgn_energy_ratio_at_80_db():
    y = np.random.default_rng(6).standard_normal(200)
    ratios = []
    for seed in range(100):
        _, delta = awgn(y, 80.0, seed=seed)
        ratios.append(delta**2 / (y @ y))
    ratios = np.array(ratios)
    assert np.mean(ratios) == pytest.approx(1e-8, rel=0.3)
    assert np.all((ratios > 0.5e-8) & (ratios < 2e-8))


def test_blur_spec():
    spec = BlurSpec(64)
    assert spec.band == 16
    assert spec.key == "blur-n64-band16-tau0.7"
    assert BlurSpec(2).band == 1
    with pytest.raises(ValueError):
        BlurSpec(8, band=9)
    with pytest.raises(ValueError):
        BlurSpec(8, tau=0.0)


def test_blur_operator():
    spec = BlurSpec(6, band=2, tau=0.7)
    K = blur_operator(spec)
    assert K.shape == (36, 36)
    assert np.array_equal(K, K.T)
    T = symmetric_banded_toeplitz(np.exp(-np.arange(2.0) ** 2 / (2 * 0.7**2)), 6)
    assert np.allclose(K, np.kron(T, T) / (2 * math.pi * 0.7**2))
    assert K[0, 1] == pytest.approx(math.exp(-1 / 0.98) / (2 * math.pi * 0.49))


def test_cs_instance():
    instance = make_cs_instance(40, 30, seed=5)
    assert instance.K.shape == (40, 30)
    assert instance.sparsity == 4
    assert np.allclose(instance.y_clean, instance.K @ instance.x_true)
    assert instance.delta == pytest.approx(np.linalg.norm(instance.y_noisy - instance.y_clean))
    assert instance.meta["family"] == "cs"

    again = make_cs_instance(40, 30, seed=5)
    assert np.array_equal(instance.y_noisy, again.y_noisy)


def test_zero_signal_instance_is_noise_free():
    instance = make_cs_instance(20, 20, s=0, seed=5)
    assert instance.delta == 0.0
    assert np.array_equal(instance.y_noisy, np.zeros(20))


def test_deblur_instance(tmp_path):
    spec = BlurSpec(4, band=2)
    instance = make_deblur_instance(spec, seed=2, sparsity=0.25)
    assert instance.K.shape == (16, 16)
    assert instance.sparsity == 4
    assert instance.meta == {"family": "deblur", "band": 2, "tau": 0.7}

    image = np.arange(16.0).reshape(4, 4)
    write_matrix_csv(tmp_path / "image.csv", image)
    loaded = load_image_csv(tmp_path / "image.csv", 4)
    instance = make_deblur_instance(spec, loaded, snr_db=math.inf)
    assert np.array_equal(instance.x_true, image.reshape(-1))
    assert instance.delta == 0.0

    with pytest.raises(ValueError):
        load_image_csv(tmp_path / "image.csv", 5)
    with pytest.raises(ValueError):
        make_deblur_instance(spec, np.ones(9))


def test_instance_save_and_load(tmp_path):
    instance = make_cs_instance(12, 10, s=3, snr_db=math.inf, seed=9)
    instance.save(tmp_path / "inst")
    loaded = ProblemInstance.load(tmp_path / "inst")
    assert np.array_equal(loaded.K, instance.K)
    assert np.array_equal(loaded.x_true, instance.x_true)
    assert np.array_equal(loaded.y_noisy, instance.y_noisy)
    assert math.isinf(loaded.snr_db)
    assert loaded.seed == 9
    assert loaded.meta == {"family": "cs"}

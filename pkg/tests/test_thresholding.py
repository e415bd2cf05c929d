import numpy as np
import pytest

from spectral_sparse.thresholding import (
    FilterKind, ThresholdParams, classical_filter, half_threshold, half_threshold_level,
    soft_threshold,
)


def test_soft_threshold_values():
    assert soft_threshold(0.0, 1.0) == 0.0
    assert soft_threshold(3.0, 2.0) == 2.0
    assert soft_threshold(-0.5, 1.0) == 0.0
    assert soft_threshold(-0.500001, 1.0) == pytest.approx(-1e-6, abs=1e-12)
    assert isinstance(soft_threshold(1.0, 1.0), float)


def test_soft_threshold_is_odd_and_nonexpansive():
    rng = np.random.default_rng(7)
    for alpha in rng.uniform(0.01, 5.0, size=10):
        a, b = rng.normal(scale=5.0, size=(2, 10_000))
        sa, sb = soft_threshold(a, alpha), soft_threshold(b, alpha)
        assert np.all(np.abs(sa - sb) <= np.abs(a - b) + 1e-12)
        assert np.array_equal(soft_threshold(-a, alpha), -sa)


def test_soft_threshold_rejects_nonpositive_alpha():
    with pytest.raises(ValueError):
        soft_threshold(1.0, 0.0)


def test_half_threshold_values():
    assert half_threshold(0.5, 1.0, 1.0) == 0.0
    assert half_threshold_level(1.0) == 0.75
    assert half_threshold(0.75, 1.0) == 0.0

    x = half_threshold(1.0, 1.0, 1.0)
    assert x == pytest.approx(0.70126, abs=1e-5)
    eta = np.sqrt(x)
    assert abs(eta**3 - eta + 0.25) <= 1e-6
    assert half_threshold(-1.0, 1.0, 1.0) == pytest.approx(-x)


@pytest.mark.parametrize("alpha", [0.01, 1.0, 10.0])
def test_half_threshold_jumps_at_the_level(alpha):
    level = half_threshold_level(alpha)
    assert half_threshold(level, alpha) == 0.0
    assert half_threshold(-level, alpha) == 0.0
    right = half_threshold(np.nextafter(level, np.inf), alpha)
    # The right limit is level / 3 = α^(2/3) / 4.
    assert right == pytest.approx(alpha ** (2.0 / 3.0) / 4.0, rel=1e-6)
    assert half_threshold(-np.nextafter(level, np.inf), alpha) == -right


def test_half_threshold_solves_cubic():
    rng = np.random.default_rng(11)
    alpha = rng.uniform(0.01, 4.0, size=10_000)
    level = 0.75 * alpha ** (2 / 3)
    t = np.sign(rng.normal(size=alpha.size)) * level * rng.uniform(1.0 + 1e-9, 20.0, size=alpha.size)
    x = np.array([half_threshold(a, b) for a, b in zip(t, alpha)])
    eta = np.sqrt(np.abs(x))
    assert np.all(np.sign(x) == np.sign(t))
    assert np.max(np.abs(eta**3 - np.abs(t) * eta + alpha / 4)) <= 1e-8


def test_half_threshold_sigma_prefactor():
    t, alpha, sigma = 2.0, 0.3, 0.5
    expected = half_threshold(t, alpha) / sigma ** (4 / 3)
    assert half_threshold(t, alpha, sigma) == pytest.approx(expected)
    with pytest.raises(ValueError):
        half_threshold(t, alpha, 0.0)


def test_threshold_params():
    params = ThresholdParams(alpha=1.0)
    assert params.soft(1.5) == 1.0
    assert params.half(0.5) == 0.0
    with pytest.raises(ValueError):
        ThresholdParams(alpha=0.0)
    with pytest.raises(ValueError):
        ThresholdParams(alpha=1.0, sigma_n=-1.0)


def test_classical_filters():
    assert classical_filter("tikhonov", 1.0, 1.0) == 0.5
    assert classical_filter(FilterKind.TSVD, 0.25, 0.6) == 1.0
    assert classical_filter(FilterKind.TSVD, 0.25, 0.4) == 0.0
    assert classical_filter("landweber", 0.5, 1.0) == pytest.approx(0.75)
    assert classical_filter("landweber", 0.5, 2.0) == 1.0
    assert classical_filter("landweber", 0.25, 1.0) == pytest.approx(0.9375)
    assert classical_filter("landweber", 0.25, 1.0, relaxation=0.25) == pytest.approx(0.68359375)


@pytest.mark.parametrize("kind", list(FilterKind))
def test_classical_filters_range_and_limit(kind):
    sigma = np.geomspace(1e-2, 1.0, 20)
    for alpha in (1e-1, 1.0, 10.0):
        q = classical_filter(kind, alpha, sigma)
        assert np.all((q >= 0) & (q <= 1))
    assert np.all(classical_filter(kind, 1e-12, sigma) >= 1 - 1e-6)


def test_classical_filter_rejects_bad_input():
    with pytest.raises(ValueError):
        classical_filter("gauss", 1.0, 1.0)
    with pytest.raises(ValueError):
        classical_filter("tikhonov", -1.0, 1.0)
    with pytest.raises(ValueError):
        classical_filter("tikhonov", 1.0, 0.0)

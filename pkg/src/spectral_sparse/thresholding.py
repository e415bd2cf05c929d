"""Pointwise thresholding functions and linear regularizing filters.

All functions accept scalars or numpy arrays and apply elementwise. Scalars in give
floats out.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "ThresholdParams",
    "FilterKind",
    "LANDWEBER_RELAXATION",
    "soft_threshold",
    "half_threshold",
    "half_threshold_level",
    "classical_filter",
]

LANDWEBER_RELAXATION = 0.5
"""Default relaxation a of the Landweber filter 1 - (1 - aσ²)^(1/α)."""

_ACOS_LOWER = 1e-16 - 1.0


@dataclass(frozen=True)
class ThresholdParams:
    """Parameters of the half thresholding function for one singular value."""

    alpha: float
    """Regularization parameter α."""

    sigma_n: float = 1.0
    """Singular value σₙ entering through the σₙ^(4/3) prefactor."""

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}.")
        if not self.sigma_n > 0:
            raise ValueError(f"sigma_n must be positive, got {self.sigma_n}.")

    def soft(self, t):
        return soft_threshold(t, self.alpha)

    def half(self, t):
        return half_threshold(t, self.alpha, self.sigma_n)


class FilterKind(str, Enum):
    """Classical linear regularizing filters q(α, σ)."""

    TIKHONOV = "tikhonov"
    LANDWEBER = "landweber"
    TSVD = "tsvd"


def _out(value, like):
    return float(value) if np.ndim(like) == 0 else value


def soft_threshold(t, alpha: float):
    """ Soft thresholding with dead zone [-α/2, α/2].

    Returns t + α/2 below -α/2, zero inside the dead zone and t - α/2 above α/2. The
    function is odd and nonexpansive.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}.")
    t_arr = np.asarray(t, dtype=np.float64)
    value = np.sign(t_arr) * np.maximum(np.abs(t_arr) - alpha / 2, 0.0)
    return _out(value, t)


def half_threshold_level(alpha: float) -> float:
    """ Magnitude (3/4)·α^(2/3) at or below which the half threshold returns zero."""
    return 0.75 * alpha ** (2.0 / 3.0)


def half_threshold(t, alpha: float, sigma_n=1.0):
    """ Half thresholding function H_{α,n}.

    Zero when |t| <= (3/4)·α^(2/3); otherwise

        (2 / (3 σₙ^(4/3))) · t · (1 + cos(2π/3 - (2/3)·φ_α(t)))

    with φ_α(t) = arccos((α/8)·(|t|/3)^(-3/2)). The cosine picks the largest real
    root of the cubic η³ - |t|η + α/4 = 0 (η² is the magnitude of the output for
    σₙ = 1), which is the root that minimizes the half functional.

    With t = σₙ^(1/3)·y this equals (2/3)·(y/σₙ)·(1 + cos(...)), the closed form used
    by the l1/2-SVD operator.

    Args:
        t: Input value(s).
        alpha: Regularization parameter α > 0.
        sigma_n: Singular value(s) σₙ > 0, broadcast against t.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}.")
    t_arr = np.asarray(t, dtype=np.float64)
    sigma = np.broadcast_to(np.asarray(sigma_n, dtype=np.float64), t_arr.shape)
    if np.any(sigma <= 0):
        raise ValueError("sigma_n must be positive.")

    value = np.zeros(t_arr.shape)
    active = np.abs(t_arr) > half_threshold_level(alpha)
    if np.any(active):
        ta, sa = t_arr[active], sigma[active]
        arg = (alpha / 8.0) * (np.abs(ta) / 3.0) ** -1.5
        phi = np.arccos(np.clip(arg, _ACOS_LOWER, 1.0))
        value[active] = (
            2.0 / (3.0 * sa ** (4.0 / 3.0))
            * ta
            * (1.0 + np.cos(2.0 * np.pi / 3.0 - 2.0 * phi / 3.0))
        )
    return _out(value, t)


def classical_filter(
    kind: FilterKind | str,
    alpha: float,
    sigma,
    relaxation: float = LANDWEBER_RELAXATION,
):
    """ Evaluate a linear regularizing filter q(α, σ) in [0, 1].

    Args:
        kind: tikhonov (σ² / (α + σ²)), landweber (1 - (1 - aσ²)^(1/α)) or tsvd
            (1 if σ² >= α, else 0).
        alpha: Regularization parameter α > 0. For Landweber, 1/α plays the role
            of the iteration count.
        sigma: Singular value(s) σ > 0.
        relaxation: Landweber relaxation a. Where aσ² >= 1 the base is clamped at 0
            and the filter is 1.

    The Landweber relaxation is a fixed constant and not α itself. With a = α the
    filter tends to 1 - exp(-σ²) as α → 0 instead of 1, so q(0.25, 1) is 0.9375
    here against 0.684 for that variant. Pass `relaxation` to change a.
    """
    kind = FilterKind(kind)
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}.")
    s = np.asarray(sigma, dtype=np.float64)
    if np.any(s <= 0):
        raise ValueError("sigma must be positive.")
    s2 = s * s

    if kind is FilterKind.TIKHONOV:
        value = s2 / (alpha + s2)
    elif kind is FilterKind.TSVD:
        value = np.where(s2 >= alpha, 1.0, 0.0)
    else:
        base = relaxation * s2
        with np.errstate(divide="ignore"):
            # (1 - aσ²)^(1/α) in log space; overflow-free for small α.
            power = np.exp(np.log1p(-np.minimum(base, 1.0)) / alpha)
        value = 1.0 - np.where(base >= 1.0, 0.0, power)
    return _out(np.clip(value, 0.0, 1.0), sigma)

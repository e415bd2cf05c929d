"""Spectral recovery operators built on a precomputed singular system.

Every operator works coefficient-wise in the singular basis: it forms the data
coefficients ⟨y, uₙ⟩, maps each one through a scalar rule that depends on σₙ and α,
and synthesizes the estimate from the right singular vectors vₙ.
"""

from dataclasses import dataclass

import numpy as np

from .linalg import SingularSystem, as_matrix, as_vector
from .thresholding import FilterKind, classical_filter, half_threshold, soft_threshold

__all__ = [
    "SPECTRAL_ALGORITHMS",
    "SpectralMethod",
    "naive_inverse",
    "filtered_inverse",
    "l1_svd",
    "l_half_svd",
    "recover",
    "l1_objective",
    "l_half_objective",
    "half_stationarity_residual",
]

SPECTRAL_ALGORITHMS = ("naive", "tikhonov", "landweber", "tsvd", "l1_svd", "l_half_svd")
"""Names of all algorithms that recover from a singular system."""


@dataclass(frozen=True)
class SpectralMethod:
    """A spectral recovery algorithm together with its regularization parameter."""

    tag: str
    """One of naive, filtered, l1_svd or l_half_svd."""

    alpha: float = 0.0
    """Regularization parameter. Ignored for the naive inverse."""

    kind: FilterKind | None = None
    """The linear filter if tag is filtered."""

    _TAGS = ("naive", "filtered", "l1_svd", "l_half_svd")

    def __post_init__(self):
        if self.tag not in self._TAGS:
            raise LookupError(f'Unknown spectral method "{self.tag}".')
        if self.tag == "filtered" and self.kind is None:
            raise ValueError("A filtered method needs a filter kind.")
        if self.tag != "naive" and not self.alpha > 0:
            raise ValueError(f"alpha must be positive for {self.tag}, got {self.alpha}.")

    @classmethod
    def parse(cls, name: str, alpha: float = 0.0) -> "SpectralMethod":
        """ Create a method from an algorithm name like "tikhonov" or "l1_svd"."""
        if name in {e.value for e in FilterKind}:
            return cls("filtered", alpha, FilterKind(name))
        return cls(name, alpha)

    @property
    def name(self) -> str:
        return self.kind.value if self.tag == "filtered" else self.tag


def _coefficients(system: SingularSystem, y) -> np.ndarray:
    if system.rank == 0:
        raise ValueError("The singular system is empty; the operator is zero.")
    return system.coefficients(y)


def naive_inverse(system: SingularSystem, y) -> np.ndarray:
    """ Unregularized inversion Σₙ (⟨y, uₙ⟩ / σₙ) vₙ."""
    coef = _coefficients(system, y)
    return system.synthesize(coef / system.sigma)


def filtered_inverse(
    system: SingularSystem, y, kind: FilterKind | str, alpha: float
) -> np.ndarray:
    """ Linear filtered inversion Σₙ (q(α, σₙ) / σₙ) ⟨y, uₙ⟩ vₙ."""
    coef = _coefficients(system, y)
    q = classical_filter(kind, alpha, system.sigma)
    return system.synthesize(q * coef / system.sigma)


def l1_svd(system: SingularSystem, y, alpha: float) -> np.ndarray:
    """ The l1-SVD operator Σₙ (1/σₙ²) S_α(σₙ⟨y, uₙ⟩) vₙ.

    On an operator that is diagonal in the vₙ basis this is the global minimizer of
    ‖Kx - y‖² + α‖x‖₁. A coefficient vanishes whenever |σₙ⟨y, uₙ⟩| <= α/2.
    """
    coef = _coefficients(system, y)
    sigma = system.sigma
    return system.synthesize(soft_threshold(sigma * coef, alpha) / sigma**2)


def l_half_svd(system: SingularSystem, y, alpha: float) -> np.ndarray:
    """ The l1/2-SVD operator Σₙ H_{α,n}(σₙ^(1/3)⟨y, uₙ⟩) vₙ.

    On a diagonal operator every nonzero coefficient is a stationary point of
    ‖Kx - y‖² + α Σ|xₙ|^(1/2). A coefficient vanishes whenever
    |σₙ^(1/3)⟨y, uₙ⟩| <= (3/4)·α^(2/3).
    """
    coef = _coefficients(system, y)
    sigma = system.sigma
    return system.synthesize(half_threshold(np.cbrt(sigma) * coef, alpha, sigma))


def recover(system: SingularSystem, y, method: SpectralMethod) -> np.ndarray:
    """ Dispatch to the operator named by `method`."""
    if method.tag == "naive":
        return naive_inverse(system, y)
    if method.tag == "filtered":
        return filtered_inverse(system, y, method.kind, method.alpha)
    if method.tag == "l1_svd":
        return l1_svd(system, y, method.alpha)
    return l_half_svd(system, y, method.alpha)


def l1_objective(K, x, y, alpha: float) -> float:
    """ ‖Kx - y‖² + α‖x‖₁."""
    r = as_matrix(K, "K") @ as_vector(x, "x") - as_vector(y, "y")
    return float(r @ r + alpha * np.sum(np.abs(x)))


def l_half_objective(K, x, y, alpha: float) -> float:
    """ ‖Kx - y‖² + α Σ|xₙ|^(1/2)."""
    r = as_matrix(K, "K") @ as_vector(x, "x") - as_vector(y, "y")
    return float(r @ r + alpha * np.sum(np.sqrt(np.abs(x))))


def half_stationarity_residual(
    system: SingularSystem, y, x, alpha: float
) -> np.ndarray:
    """ First-order residuals of the half functional on the nonzero coefficients.

    For each coefficient cₙ = ⟨x, vₙ⟩ ≠ 0 returns
    2σₙ(σₙcₙ - ⟨y, uₙ⟩) + α·sign(cₙ) / (2√|cₙ|). The residuals vanish when the
    operator is diagonal in the singular basis and x is a stationary point.
    """
    coef_y = _coefficients(system, y)
    c = system.V.T @ as_vector(x, "x")
    # Synthesis followed by analysis leaves rounding noise on zero coefficients.
    nz = np.abs(c) > 1e-13 * max(1.0, float(np.max(np.abs(c), initial=0.0)))
    sigma = system.sigma[nz]
    return 2 * sigma * (sigma * c[nz] - coef_y[nz]) + alpha * np.sign(c[nz]) / (
        2 * np.sqrt(np.abs(c[nz]))
    )

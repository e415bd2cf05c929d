"""Iterative thresholding baselines: ISTA, FISTA and iterative half thresholding.

The solvers expect an operator with spectral norm below one. Use `scale_operator`
first and scale the data by the same factor.
"""

from dataclasses import dataclass
from typing import Callable, Literal
import logging
import math

import numpy as np

from .linalg import as_matrix, as_vector
from .recovery import l1_objective, l_half_objective
from .thresholding import half_threshold, soft_threshold

__all__ = [
    "ITERATIVE_ALGORITHMS",
    "IterativeSpec",
    "IterateTrace",
    "spectral_norm",
    "scale_operator",
    "fista_momentum",
    "ista",
    "fista",
    "pg_half",
    "solve",
]

log = logging.getLogger(__name__)

ITERATIVE_ALGORITHMS = ("ista", "fista", "pg_half")

SCALE_TARGET = 0.99
"""Spectral norm of an operator after scaling."""


@dataclass(frozen=True)
class IterativeSpec:
    """Controls of one iterative solve."""

    algorithm: Literal["ista", "fista", "pg_half"]
    alpha: float
    max_iters: int = 2000
    rel_change_tol: float = 1e-5
    step_scale: float | None = None
    """Gradient step μ. None means 1 for ISTA/FISTA and 0.99/σ₁² for pg_half."""

    track_objective: bool = False
    """Record the objective after every iteration."""

    def __post_init__(self):
        if self.algorithm not in ITERATIVE_ALGORITHMS:
            raise LookupError(f'Unknown iterative algorithm "{self.algorithm}".')
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}.")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}.")
        if not self.rel_change_tol > 0:
            raise ValueError(f"rel_change_tol must be positive, got {self.rel_change_tol}.")
        if self.step_scale is not None and not self.step_scale > 0:
            raise ValueError(f"step_scale must be positive, got {self.step_scale}.")


@dataclass(frozen=True)
class IterateTrace:
    """What happened during an iterative solve."""

    iterations_run: int
    converged: bool
    objective_history: np.ndarray | None = None
    """Objective at x0 followed by the objective after each iteration."""


def spectral_norm(K) -> float:
    """ Largest singular value of K."""
    return float(np.linalg.norm(as_matrix(K, "K"), 2))


def scale_operator(K, sigma_max: float | None = None) -> tuple[np.ndarray, float]:
    """ Scale K so that its spectral norm is below one.

    Returns cK and c, with c = 0.99/σ₁ when σ₁ >= 1 and c = 1 otherwise. The
    condition number does not change. The caller must scale the data by c as well.

    Args:
        K: The operator.
        sigma_max: Known σ₁(K), e.g. from a singular system. Computed if None.
    """
    K = as_matrix(K, "K")
    sigma_max = spectral_norm(K) if sigma_max is None else float(sigma_max)
    if sigma_max <= 0:
        raise ValueError("Cannot scale the zero operator.")
    c = SCALE_TARGET / sigma_max if sigma_max >= 1 else 1.0
    return (c * K if c != 1.0 else K), c


def fista_momentum(t: float) -> float:
    """ Next FISTA momentum t_{k+1} = (1 + √(1 + 4t_k²)) / 2."""
    return (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0


def _prepare(K, y, x0, sigma_max):
    K, y = as_matrix(K, "K"), as_vector(y, "y")
    if K.shape[0] != y.shape[0]:
        raise ValueError(f"Operator {K.shape} does not match data of length {y.shape[0]}.")
    x0 = np.zeros(K.shape[1]) if x0 is None else as_vector(x0, "x0").copy()
    if x0.shape[0] != K.shape[1]:
        raise ValueError(f"x0 has length {x0.shape[0]}, expected {K.shape[1]}.")
    sigma_max = spectral_norm(K) if sigma_max is None else float(sigma_max)
    if sigma_max >= 1:
        raise ValueError(
            f"Operator norm {sigma_max:.6g} is not below 1; scale the operator first."
        )
    return K, y, x0, sigma_max


def _run(
    K: np.ndarray,
    y: np.ndarray,
    x: np.ndarray,
    spec: IterativeSpec,
    prox: Callable[[np.ndarray], np.ndarray],
    step: float,
    objective: Callable[[np.ndarray], float],
    accelerate: bool,
) -> tuple[np.ndarray, IterateTrace]:
    history = [objective(x)] if spec.track_objective else None
    x_prev, t = x, 1.0
    converged = False
    k = 0
    for k in range(1, spec.max_iters + 1):
        if accelerate:
            t_next = fista_momentum(t)
            z = x + ((t - 1.0) / t_next) * (x - x_prev)
            t = t_next
        else:
            z = x
        x_new = prox(z - step * (K.T @ (K @ z - y)))
        change = np.linalg.norm(x_new - x) / max(1.0, float(np.linalg.norm(x)))
        x_prev, x = x, x_new
        if history is not None:
            history.append(objective(x))
        if change < spec.rel_change_tol:
            converged = True
            break

    if not np.all(np.isfinite(x)):
        raise FloatingPointError(f"{spec.algorithm} diverged after {k} iterations.")
    if not converged:
        log.info("%s stopped at the iteration cap of %d.", spec.algorithm, spec.max_iters)
    trace = IterateTrace(
        iterations_run=k,
        converged=converged,
        objective_history=None if history is None else np.array(history),
    )
    return x, trace


def ista(K, y, spec: IterativeSpec, x0=None, sigma_max: float | None = None):
    """ Iterative soft thresholding xⁿ⁺¹ = S_{μα}(xⁿ - μKᵀ(Kxⁿ - y)).

    Args:
        K: Operator with spectral norm below one.
        y: Data vector.
        spec: Solver controls. μ is spec.step_scale or 1.
        x0: Initial iterate, zero if None.
        sigma_max: Known σ₁(K), computed if None.

    Returns:
        The final iterate and an IterateTrace.
    """
    K, y, x0, _ = _prepare(K, y, x0, sigma_max)
    step = spec.step_scale or 1.0
    return _run(
        K, y, x0, spec,
        prox=lambda v: soft_threshold(v, step * spec.alpha),
        step=step,
        objective=lambda v: l1_objective(K, v, y, spec.alpha),
        accelerate=False,
    )


def fista(K, y, spec: IterativeSpec, x0=None, sigma_max: float | None = None):
    """ ISTA with Nesterov momentum; same arguments as `ista`."""
    K, y, x0, _ = _prepare(K, y, x0, sigma_max)
    step = spec.step_scale or 1.0
    return _run(
        K, y, x0, spec,
        prox=lambda v: soft_threshold(v, step * spec.alpha),
        step=step,
        objective=lambda v: l1_objective(K, v, y, spec.alpha),
        accelerate=True,
    )


def pg_half(K, y, spec: IterativeSpec, x0=None, sigma_max: float | None = None):
    """ Iterative half thresholding xⁿ⁺¹ = H_{μα}(xⁿ - μKᵀ(Kxⁿ - y)).

    The proximal-gradient counterpart of the l1/2-SVD operator. The threshold uses a
    unit σ-prefactor; μ defaults to 0.99/σ₁².
    """
    K, y, x0, sigma_max = _prepare(K, y, x0, sigma_max)
    step = spec.step_scale or (SCALE_TARGET / sigma_max**2 if sigma_max > 0 else 1.0)
    return _run(
        K, y, x0, spec,
        prox=lambda v: half_threshold(v, step * spec.alpha),
        step=step,
        objective=lambda v: l_half_objective(K, v, y, spec.alpha),
        accelerate=False,
    )


_SOLVERS = {"ista": ista, "fista": fista, "pg_half": pg_half}


def solve(K, y, spec: IterativeSpec, x0=None, sigma_max: float | None = None):
    """ Run the solver named by spec.algorithm."""
    return _SOLVERS[spec.algorithm](K, y, spec, x0=x0, sigma_max=sigma_max)

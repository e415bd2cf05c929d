"""Regularization parameter choice and evaluation metrics."""

from dataclasses import dataclass
from typing import Callable, Literal, Sequence, TypeVar
import logging
import math
import time

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .linalg import SingularSystem, as_matrix, as_vector
from .problems import STREAM_NOISE, derive_rng
from .recovery import l1_svd

__all__ = [
    "DELTA_FLOOR",
    "RATE_EXPONENTS",
    "AlphaRule",
    "AlphaChoice",
    "Metrics",
    "RateRegime",
    "DEFAULT_RATE_REGIMES",
    "rerror",
    "select_alpha_discrepancy",
    "success",
    "success_probability",
    "timed",
    "loglog_slope",
    "run_rate_protocol",
]

log = logging.getLogger(__name__)

T = TypeVar("T")

DELTA_FLOOR = 1e-12
"""Noise level used in place of δ = 0 by rules that scale with δ."""

RATE_EXPONENTS = {
    "rate_two_thirds": 2.0 / 3.0,
    "rate_one_half": 0.5,
    "rate_four_thirds": 4.0 / 3.0,
    "rate_linear": 1.0,
}
"""Exponent p of the rules α(δ) = c·(δ/E)^p."""

RuleKind = Literal[
    "fixed", "order_delta", "discrepancy",
    "rate_two_thirds", "rate_one_half", "rate_four_thirds", "rate_linear",
]


class AlphaRule(BaseModel):
    """How the regularization parameter α is chosen.

    - fixed: α is given.
    - order_delta: α = c·δ.
    - discrepancy: Morozov's discrepancy principle on a geometric grid
      [grid_lo·δ, grid_hi·δ] with grid_points points and safety factor tau_d.
    - rate_*: α = c·(δ/E)^p with p from RATE_EXPONENTS.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: RuleKind = "order_delta"
    alpha: float | None = Field(default=None, gt=0)
    c: float = Field(default=1e-2, gt=0)
    E: float = Field(default=1.0, gt=0)
    tau_d: float = Field(default=1.01, gt=0)
    grid_lo: float = Field(default=1e-8, gt=0)
    grid_hi: float = Field(default=1e2, gt=0)
    grid_points: int = Field(default=40, ge=2)

    @field_validator("kind", mode="before")
    @classmethod
    def _spelling(cls, value):
        return "order_delta" if value == "oder_delta" else value

    @model_validator(mode="after")
    def _consistent(self):
        if self.grid_lo >= self.grid_hi:
            raise ValueError(f"grid_lo ({self.grid_lo}) must be below grid_hi ({self.grid_hi}).")
        if self.kind == "fixed" and self.alpha is None:
            raise ValueError("A fixed rule needs alpha.")
        return self

    @classmethod
    def fixed(cls, alpha: float) -> "AlphaRule":
        return cls(kind="fixed", alpha=alpha)

    @property
    def needs_delta(self) -> bool:
        return self.kind != "fixed"

    def resolve(self, delta: float) -> float:
        """ Evaluate a closed-form rule at noise level δ.

        Raises:
            ValueError: For the discrepancy rule, which needs a solver.
        """
        if self.kind == "fixed":
            return float(self.alpha)
        if self.kind == "discrepancy":
            raise ValueError("The discrepancy rule needs a solver; use select_alpha_discrepancy.")
        delta = max(float(delta), DELTA_FLOOR)
        if self.kind == "order_delta":
            return self.c * delta
        return self.c * (delta / self.E) ** RATE_EXPONENTS[self.kind]

    def grid(self, delta: float) -> np.ndarray:
        """ The ascending discrepancy grid for noise level δ."""
        delta = max(float(delta), DELTA_FLOOR)
        return np.geomspace(self.grid_lo * delta, self.grid_hi * delta, self.grid_points)


@dataclass(frozen=True)
class AlphaChoice:
    """Outcome of a discrepancy search."""

    alpha: float
    x_hat: np.ndarray
    """The estimate at the chosen α."""
    residual: float
    qualified: bool
    """False if no grid point reached the target residual and grid_hi was used."""
    evaluations: int
    """Number of solver calls made."""


def select_alpha_discrepancy(
    solver: Callable[[float], np.ndarray],
    K,
    y_noisy,
    delta: float,
    rule: AlphaRule | None = None,
) -> AlphaChoice:
    """ Choose α by the discrepancy principle ‖K x̂(α) - y‖ >= τ_d·δ.

    The grid is scanned from its largest value downwards and the smallest α of the
    leading run of grid points that meet the target is returned. For residuals that
    grow with α this is the smallest qualifying grid point; stopping at the first
    failure keeps residuals of unconverged solvers at tiny α from being picked.

    Args:
        solver: Maps α to an estimate x̂(α). Called in decreasing α order, so it may
            warm-start from its previous result.
        K: The operator used to form residuals.
        y_noisy: The data.
        delta: The noise level. Zero is replaced by DELTA_FLOOR.
        rule: A discrepancy rule; default parameters if None.

    Raises:
        ValueError: If the solver returns non-finite values.
    """
    rule = rule or AlphaRule(kind="discrepancy")
    K, y_noisy = as_matrix(K, "K"), as_vector(y_noisy, "y_noisy")
    target = rule.tau_d * max(float(delta), DELTA_FLOOR)

    best = None
    evaluations = 0
    for alpha in rule.grid(delta)[::-1]:
        x_hat = np.asarray(solver(float(alpha)), dtype=np.float64)
        evaluations += 1
        if not np.all(np.isfinite(x_hat)):
            raise ValueError(f"Solver returned non-finite values at alpha={alpha:.3g}.")
        residual = float(np.linalg.norm(K @ x_hat - y_noisy))
        if residual < target:
            if best is None:
                best = (float(alpha), x_hat, residual, False)
            break
        best = (float(alpha), x_hat, residual, True)

    alpha, x_hat, residual, qualified = best
    if not qualified:
        log.info("No grid point reached the discrepancy target %.3g; using grid_hi.", target)
    else:
        log.info("Discrepancy principle chose alpha=%.4g (residual %.4g).", alpha, residual)
    return AlphaChoice(alpha, x_hat, residual, qualified, evaluations)


@dataclass(frozen=True)
class Metrics:
    """Evaluation of one recovery."""

    rerror: float
    wall_time_ms: float
    iterations: int
    success: bool

    def __post_init__(self):
        if self.rerror < 0:
            raise ValueError(f"rerror must be nonnegative, got {self.rerror}.")


def rerror(x_hat, x_true) -> float:
    """ Relative error ‖x̂ - x‖₂ / ‖x‖₂."""
    x_hat, x_true = as_vector(x_hat, "x_hat"), as_vector(x_true, "x_true")
    norm = np.linalg.norm(x_true)
    if norm == 0:
        raise ValueError("Relative error against a zero ground truth is undefined.")
    return float(np.linalg.norm(x_hat - x_true) / norm)


def success(rerror: float, threshold: float = 1e-2) -> bool:
    """ A recovery succeeds when its relative error is at most the threshold."""
    if not threshold > 0:
        raise ValueError(f"threshold must be positive, got {threshold}.")
    return bool(rerror <= threshold)


def success_probability(trials: Sequence[Metrics]) -> float:
    """ Fraction of successful trials."""
    if not trials:
        raise ValueError("Success probability of an empty trial list is undefined.")
    return sum(1 for e in trials if e.success) / len(trials)


def timed(f: Callable[..., T], *args, **kwargs) -> tuple[T, float]:
    """ Call f and return its result with the elapsed wall time in milliseconds."""
    start = time.perf_counter()
    result = f(*args, **kwargs)
    return result, (time.perf_counter() - start) * 1e3


def loglog_slope(x, y) -> tuple[float, float]:
    """ Least-squares slope of log y against log x and the R² of the fit."""
    lx, ly = np.log10(as_vector(x, "x")), np.log10(as_vector(y, "y"))
    slope, intercept = np.polyfit(lx, ly, 1)
    fit = slope * lx + intercept
    total = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum((ly - fit) ** 2)) / total if total > 0 else 1.0
    return float(slope), r2


class RateRegime(BaseModel):
    """A synthetic diagonal family for checking convergence rates of l1-SVD.

    The operator is diag(σ) with σ uniformly (linear) or geometrically spaced. The
    true solution satisfies a source condition x = Kᵀz (adjoint) or x = KᵀKz
    (normal) for a constant z, and E = ‖z‖.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str
    source: Literal["adjoint", "normal"]
    spectrum: Literal["linear", "geometric"]
    size: int = Field(gt=1)
    decades: float = Field(default=6.0, gt=0)
    """Span of a geometric spectrum: σ from 1 down to 10^-decades."""
    z_scale: float | None = None
    """Entries of z; None means 1/√size so that E = 1."""
    c: float = Field(gt=0)
    delta_lo: float = Field(gt=0)
    delta_hi: float = Field(gt=0)
    delta_points: int = Field(default=9, ge=3)
    rules: tuple[str, ...]
    expected_slope: float
    tolerance: float = 0.15

    @field_validator("rules")
    @classmethod
    def _known_rules(cls, value):
        unknown = set(value) - set(RATE_EXPONENTS)
        if unknown:
            raise ValueError(f"Unknown rate rules: {', '.join(sorted(unknown))}.")
        return value

    def spectrum_values(self) -> np.ndarray:
        if self.spectrum == "linear":
            return np.arange(self.size, 0, -1, dtype=np.float64) / self.size
        return np.logspace(0.0, -self.decades, self.size)


DEFAULT_RATE_REGIMES = (
    RateRegime(
        name="range_adjoint", source="adjoint", spectrum="linear", size=2000,
        c=0.36, delta_lo=1e-9, delta_hi=1e-5,
        rules=("rate_two_thirds", "rate_four_thirds"), expected_slope=1.0 / 3.0,
    ),
    RateRegime(
        name="range_normal", source="normal", spectrum="geometric", size=1200,
        decades=6.0, z_scale=1.0, c=1.0, delta_lo=10**-12.25, delta_hi=10**-8.25,
        rules=("rate_linear", "rate_one_half"), expected_slope=0.5,
    ),
)


def run_rate_protocol(regime: RateRegime, seed: int = 0) -> tuple[list[dict], list[dict]]:
    """ Sweep δ over a regime and fit the error rate of l1-SVD for each rule.

    Returns:
        Per-point rows (regime, rule, delta, alpha, error) and per-rule fits
        (regime, rule, exponent, slope, r_squared, expected_slope, reproduces).
    """
    sigma = regime.spectrum_values()
    system = SingularSystem.diagonal(sigma)
    z_scale = regime.z_scale or 1.0 / math.sqrt(regime.size)
    z = np.full(regime.size, z_scale)
    x = sigma * z if regime.source == "adjoint" else sigma**2 * z
    y = sigma * x
    E = float(np.linalg.norm(z))

    direction = derive_rng(seed, STREAM_NOISE).standard_normal(regime.size)
    direction /= np.linalg.norm(direction)
    deltas = np.geomspace(regime.delta_lo, regime.delta_hi, regime.delta_points)

    rows, fits = [], []
    for kind in regime.rules:
        rule = AlphaRule(kind=kind, c=regime.c, E=E)
        errors = []
        for delta in deltas:
            alpha = rule.resolve(delta)
            error = float(np.linalg.norm(l1_svd(system, y + delta * direction, alpha) - x))
            errors.append(error)
            rows.append({
                "regime": regime.name, "rule": kind, "delta": float(delta),
                "alpha": alpha, "error": error,
            })
        slope, r2 = loglog_slope(deltas, errors)
        fits.append({
            "regime": regime.name,
            "rule": kind,
            "exponent": RATE_EXPONENTS[kind],
            "slope": slope,
            "r_squared": r2,
            "expected_slope": regime.expected_slope,
            "reproduces": abs(slope - regime.expected_slope) <= regime.tolerance,
        })
    return rows, fits

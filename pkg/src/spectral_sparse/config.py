"""Experiment configuration.

A configuration is a single JSON file. Command line flags override values of the
file, and the seed falls back to the environment variable SPECTRAL_SPARSE_SEED when
neither sets it.
"""

from pathlib import Path
from typing import Literal
import json
import os

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .iterative import ITERATIVE_ALGORITHMS
from .recovery import SPECTRAL_ALGORITHMS
from .tuning import DEFAULT_RATE_REGIMES, AlphaRule, RateRegime

__all__ = [
    "ALGORITHMS",
    "EXPERIMENTS",
    "SEED_ENV",
    "ExperimentConfig",
]

ALGORITHMS = SPECTRAL_ALGORITHMS + ITERATIVE_ALGORITHMS
"""Every algorithm name an experiment may reference."""

EXPERIMENTS = ("cs_bench", "deblur_bench", "success_curve", "rate_check", "recover_single")

SEED_ENV = "SPECTRAL_SPARSE_SEED"

_DEFAULT_ALGORITHMS = {
    "cs_bench": ["l1_svd", "l_half_svd", "ista", "fista"],
    "deblur_bench": ["l1_svd", "l_half_svd", "pg_half"],
    "success_curve": ["l1_svd", "l_half_svd", "ista"],
    "rate_check": ["l1_svd"],
    "recover_single": ["l1_svd"],
}


class ExperimentConfig(BaseModel):
    """All parameters of one experiment run."""

    model_config = ConfigDict(extra="forbid")

    experiment: Literal[
        "cs_bench", "deblur_bench", "success_curve", "rate_check", "recover_single"
    ]
    algorithms: list[str] | None = None
    """None selects the default algorithms of the experiment."""

    sizes: list[tuple[int, int]] = [(200, 200)]
    """Operator sizes (m, n) of the compressive sensing experiments."""

    sparsity: list[int] | float = 0.1
    """Nonzeros per size, or a ratio s = floor(ratio·m)."""

    snr_db: float = 80.0
    trials: int = Field(default=20, ge=1)
    seed: int | None = None

    alpha_rule: AlphaRule | None = None
    """Overrides both spectral_rule and iterative_rule when set."""

    spectral_rule: AlphaRule = AlphaRule(kind="order_delta", c=1e-2)
    iterative_rule: AlphaRule = AlphaRule(kind="discrepancy")
    success_threshold: float = Field(default=1e-2, gt=0)
    output_dir: Path = Path("results")
    workers: int = Field(default=1, ge=1)
    max_iters: int = Field(default=2000, ge=1)
    rel_change_tol: float = Field(default=1e-5, gt=0)
    timing: Literal["wall", "off"] = "wall"
    """With "off" every time_ms is written as 0 so results.csv is reproducible."""

    family: Literal["cs", "deblur"] = "cs"
    """Problem family of a success curve."""

    supports: list[int] = [0, 20, 40, 60, 80, 100, 120]
    image_sizes: list[int] = [32]
    taus: list[float] = [0.7]
    band: int | None = None
    image_sparsity: float = Field(default=0.1, gt=0, le=1)
    image_path: Path | None = None
    svd_cache: Path | None = None
    rate_regimes: list[RateRegime] = list(DEFAULT_RATE_REGIMES)

    @model_validator(mode="before")
    @classmethod
    def _seed_fallback(cls, data):
        if isinstance(data, dict) and data.get("seed") is None:
            data = {**data, "seed": int(os.environ.get(SEED_ENV, "0"))}
        return data

    @field_validator("algorithms")
    @classmethod
    def _known_algorithms(cls, value):
        if value is None:
            return value
        if not value:
            raise ValueError("At least one algorithm is required.")
        unknown = [e for e in value if e not in ALGORITHMS]
        if unknown:
            raise ValueError(
                f"Unknown algorithms {', '.join(unknown)}; choose from {', '.join(ALGORITHMS)}."
            )
        return value

    @field_validator("sizes")
    @classmethod
    def _positive_sizes(cls, value):
        for m, n in value:
            if m < 1 or n < 1:
                raise ValueError(f"Sizes must be positive, got {m}x{n}.")
        return value

    @field_validator("supports", "image_sizes")
    @classmethod
    def _nonnegative(cls, value):
        if any(e < 0 for e in value):
            raise ValueError(f"Values must be nonnegative, got {value}.")
        return value

    @model_validator(mode="after")
    def _consistent(self):
        if self.algorithms is None:
            self.algorithms = list(_DEFAULT_ALGORITHMS[self.experiment])
        if isinstance(self.sparsity, list) and len(self.sparsity) != len(self.sizes):
            raise ValueError(
                f"sparsity lists {len(self.sparsity)} values for {len(self.sizes)} sizes."
            )
        if isinstance(self.sparsity, float) and not 0 <= self.sparsity <= 1:
            raise ValueError(f"A sparsity ratio must lie in [0, 1], got {self.sparsity}.")
        return self

    @classmethod
    def load(cls, path: Path | str | None = None, **overrides) -> "ExperimentConfig":
        """ Read a JSON config file and apply overrides.

        Args:
            path: The JSON file. None starts from the defaults.
            overrides: Field values that win over the file. None values are ignored.

        Raises:
            OSError: If the file cannot be read.
            ValueError: If the file is not valid JSON or fails validation.
        """
        data = {}
        if path is not None:
            try:
                data = json.loads(Path(path).read_text(encoding="utf-8"))
            except json.JSONDecodeError as exc:
                raise ValueError(f'Config file "{path}" is not valid JSON: {exc}') from exc
            if not isinstance(data, dict):
                raise ValueError(f'Config file "{path}" must hold a JSON object.')
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls.model_validate(data)

    def rule_for(self, algorithm: str) -> AlphaRule:
        """ The α rule that applies to an algorithm."""
        if self.alpha_rule is not None:
            return self.alpha_rule
        return self.spectral_rule if algorithm in SPECTRAL_ALGORITHMS else self.iterative_rule

    def sparsity_for(self, index: int, m: int) -> int:
        """ Number of nonzeros for the size at position `index`."""
        if isinstance(self.sparsity, list):
            return self.sparsity[index]
        return int(self.sparsity * m)

    def echo(self) -> dict:
        """ The configuration as plain JSON data, as written to meta.json."""
        return self.model_dump(mode="json")

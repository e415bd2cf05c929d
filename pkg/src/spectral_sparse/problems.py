"""Problem generators for the compressive sensing and deblurring experiments.

Randomness comes from numpy's PCG64 generator. Every generator takes a 64-bit seed
and derives an independent stream from it, so instances are pure functions of
their parameters and seed:

    rng(seed, stream) = Generator(PCG64(SeedSequence([seed, stream])))

Per-trial seeds are mixed the same way, see `trial_seed`.
"""

from dataclasses import dataclass, field
from pathlib import Path
import json
import math

import numpy as np

from .linalg import (
    as_matrix, as_vector, kron, read_matrix_csv, symmetric_banded_toeplitz,
    write_matrix_csv,
)

__all__ = [
    "GENERATOR_VERSION",
    "BlurSpec",
    "ProblemInstance",
    "trial_seed",
    "derive_rng",
    "gaussian_matrix",
    "sparse_signal",
    "blur_operator",
    "awgn",
    "make_cs_instance",
    "make_deblur_instance",
    "load_image_csv",
]

GENERATOR_VERSION = "pcg64-seedsequence-1"
"""Identifies the random streams; bump when draws change for a given seed."""

_MASK64 = (1 << 64) - 1

STREAM_OPERATOR = 0
STREAM_SIGNAL = 1
STREAM_NOISE = 2


def _entropy(seed: int) -> int:
    return int(seed) & _MASK64


def trial_seed(seed: int, *keys: int) -> int:
    """ Mix a global seed with trial indices into a new 64-bit seed.

    The mix is numpy's SeedSequence hash of the words [seed, *keys], which gives
    well separated seeds for neighbouring trial indices.
    """
    words = [_entropy(seed)] + [_entropy(k) for k in keys]
    state = np.random.SeedSequence(words).generate_state(1, dtype=np.uint64)
    return int(state[0])


def derive_rng(seed: int, stream: int) -> np.random.Generator:
    """ Independent generator for one named stream of a seed."""
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([_entropy(seed), int(stream)]))
    )


@dataclass(frozen=True)
class BlurSpec:
    """Gaussian blur of an n x n image with a banded point spread function."""

    n: int
    """Image side length."""

    band: int | None = None
    """Half bandwidth of the Toeplitz factor. None means floor(n/4)."""

    tau: float = 0.7
    """Width of the Gaussian point spread function."""

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}.")
        if self.band is None:
            object.__setattr__(self, "band", max(1, self.n // 4))
        if not 1 <= self.band <= self.n:
            raise ValueError(f"band must lie in [1, {self.n}], got {self.band}.")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}.")

    @property
    def key(self) -> str:
        """Name of the operator in a singular-system archive."""
        return f"blur-n{self.n}-band{self.band}-tau{self.tau:g}"


def gaussian_matrix(m: int, n: int, seed: int) -> np.ndarray:
    """ m x n matrix with i.i.d. standard normal entries."""
    if m < 1 or n < 1:
        raise ValueError(f"Matrix dimensions must be positive, got {m}x{n}.")
    return derive_rng(seed, STREAM_OPERATOR).standard_normal((m, n))


def sparse_signal(n: int, s: int, seed: int) -> np.ndarray:
    """ Length-n vector with s standard normal entries at random distinct indices."""
    if not 0 <= s <= n:
        raise ValueError(f"Sparsity s must lie in [0, {n}], got {s}.")
    rng = derive_rng(seed, STREAM_SIGNAL)
    x = np.zeros(n)
    support = rng.choice(n, size=s, replace=False)
    x[support] = rng.standard_normal(s)
    return x


def blur_operator(spec: BlurSpec) -> np.ndarray:
    """ The n² x n² blur K = (2πτ²)⁻¹ · T ⊗ T.

    T is the symmetric banded Toeplitz matrix whose first row holds
    exp(-i² / (2τ²)) for i < band and zeros beyond.
    """
    i = np.arange(spec.band, dtype=np.float64)
    z = np.exp(-(i**2) / (2.0 * spec.tau**2))
    T = symmetric_banded_toeplitz(z, spec.n)
    return kron(T, T) / (2.0 * math.pi * spec.tau**2)


def awgn(y, snr_db: float, seed: int) -> tuple[np.ndarray, float]:
    """ Add white Gaussian noise at the given signal-to-noise ratio.

    The noise variance is P / 10^(snr_db/10) with P = ‖y‖² / len(y), the measured
    mean power of the signal. An infinite SNR adds no noise.

    Returns:
        The noisy data and δ = ‖y_noisy - y‖₂.
    """
    y = as_vector(y, "y")
    if math.isinf(snr_db) and snr_db > 0:
        return y.copy(), 0.0
    power = float(y @ y) / y.shape[0]
    if power == 0:
        raise ValueError("The SNR of a zero signal is undefined.")
    scale = math.sqrt(power / 10 ** (snr_db / 10))
    noisy = y + scale * derive_rng(seed, STREAM_NOISE).standard_normal(y.shape[0])
    return noisy, float(np.linalg.norm(noisy - y))


@dataclass(frozen=True)
class ProblemInstance:
    """Operator, ground truth and data of one trial."""

    K: np.ndarray
    x_true: np.ndarray
    y_clean: np.ndarray
    y_noisy: np.ndarray
    delta: float
    """Noise level ‖y_noisy - y_clean‖₂."""
    snr_db: float
    seed: int
    meta: dict = field(default_factory=dict)
    """Generator parameters written to meta.json (family, s, blur parameters)."""

    _FILES = ("K", "x_true", "y_clean", "y_noisy")

    @property
    def sparsity(self) -> int:
        return int(np.count_nonzero(self.x_true))

    def save(self, directory: Path | str) -> Path:
        """ Write the instance as CSV files plus meta.json into a directory."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for name in self._FILES:
            write_matrix_csv(directory / f"{name}.csv", getattr(self, name))
        meta = {
            "m": self.K.shape[0],
            "n": self.K.shape[1],
            "s": self.sparsity,
            "snr_db": None if math.isinf(self.snr_db) else self.snr_db,
            "delta": self.delta,
            "seed": self.seed,
            "generator": GENERATOR_VERSION,
            **self.meta,
        }
        (directory / "meta.json").write_text(json.dumps(meta, indent=2), encoding="utf-8")
        return directory

    @classmethod
    def load(cls, directory: Path | str) -> "ProblemInstance":
        """ Read an instance written by `save`."""
        directory = Path(directory)
        meta = json.loads((directory / "meta.json").read_text(encoding="utf-8"))
        arrays = {name: read_matrix_csv(directory / f"{name}.csv") for name in cls._FILES}
        snr = meta.pop("snr_db")
        extra = {
            k: v for k, v in meta.items()
            if k not in {"m", "n", "s", "delta", "seed", "generator"}
        }
        return cls(
            K=arrays["K"],
            x_true=as_vector(arrays["x_true"]),
            y_clean=as_vector(arrays["y_clean"]),
            y_noisy=as_vector(arrays["y_noisy"]),
            delta=float(meta["delta"]),
            snr_db=math.inf if snr is None else float(snr),
            seed=int(meta["seed"]),
            meta=extra,
        )


def _instance(K, x_true, snr_db, seed, meta) -> ProblemInstance:
    y_clean = K @ x_true
    if np.any(y_clean != 0):
        y_noisy, delta = awgn(y_clean, snr_db, seed)
    else:
        # The SNR of zero data is undefined; such instances stay noise free.
        y_noisy, delta = y_clean.copy(), 0.0
    return ProblemInstance(
        K=K, x_true=x_true, y_clean=y_clean, y_noisy=y_noisy,
        delta=delta, snr_db=snr_db, seed=seed, meta=meta,
    )


def make_cs_instance(
    m: int, n: int, s: int | None = None, snr_db: float = 80.0, seed: int = 0
) -> ProblemInstance:
    """ Random Gaussian compressive sensing instance.

    Args:
        m: Number of measurements.
        n: Signal length.
        s: Number of nonzeros; defaults to floor(0.1·m).
        snr_db: Signal-to-noise ratio of the data in dB.
        seed: Seed of the instance.
    """
    s = int(0.1 * m) if s is None else s
    K = gaussian_matrix(m, n, seed)
    x_true = sparse_signal(n, s, seed)
    return _instance(K, x_true, snr_db, seed, {"family": "cs"})


def make_deblur_instance(
    spec: BlurSpec,
    x_true=None,
    snr_db: float = 80.0,
    seed: int = 0,
    sparsity: float = 0.1,
    K=None,
) -> ProblemInstance:
    """ Deblurring instance for an n x n image.

    Args:
        spec: The blur operator parameters.
        x_true: The image, row-major as a vector of length n², or an n x n array. If
            None, a sparse random image with round(sparsity · n²) nonzero pixels is
            drawn.
        snr_db: Signal-to-noise ratio of the data in dB.
        seed: Seed of the instance.
        sparsity: Fraction of nonzero pixels of a random image.
        K: The blur operator if already built, to avoid rebuilding large operators.
    """
    size = spec.n * spec.n
    if x_true is None:
        x_true = sparse_signal(size, int(round(sparsity * size)), seed)
    x_true = as_vector(np.asarray(x_true, dtype=np.float64).reshape(-1), "x_true")
    if x_true.shape[0] != size:
        raise ValueError(f"Image has {x_true.shape[0]} pixels, expected {size}.")
    K = blur_operator(spec) if K is None else as_matrix(K, "K")
    meta = {"family": "deblur", "band": spec.band, "tau": spec.tau}
    return _instance(K, x_true, snr_db, seed, meta)


def load_image_csv(path: Path | str, n: int | None = None) -> np.ndarray:
    """ Read a grayscale image stored as a square CSV matrix."""
    image = read_matrix_csv(path)
    if image.shape[0] != image.shape[1] or (n is not None and image.shape[0] != n):
        raise ValueError(f'Image "{path}" has shape {image.shape}, expected {n}x{n}.')
    return image.reshape(-1)

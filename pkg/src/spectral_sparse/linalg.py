"""Dense real matrix and vector kernel.

Matrices and vectors are plain 64-bit numpy arrays. The helpers `as_matrix` and
`as_vector` are the single point where inputs are validated, so every other module
can assume finite, correctly shaped data.
"""

from dataclasses import dataclass, field
from pathlib import Path
import logging

import numpy as np
import scipy.linalg

__all__ = [
    "MAX_ENTRIES",
    "SingularSystem",
    "as_matrix",
    "as_vector",
    "svd",
    "kron",
    "symmetric_banded_toeplitz",
    "cond2",
    "fro_norm",
    "two_norm",
    "matvec",
    "matvec_transpose",
    "read_matrix_csv",
    "write_matrix_csv",
]

log = logging.getLogger(__name__)

MAX_ENTRIES = 2**28
"""Largest number of entries a dense matrix may have (a 128² x 128² operator)."""

_DRIVERS = ("gesdd", "gesvd")
"""LAPACK drivers tried in order. gesvd is slower but converges in cases gesdd
does not."""

_CSV_FORMAT = "%.17g"


def as_matrix(data, name: str = "matrix") -> np.ndarray:
    """ Return `data` as a C-contiguous 2-D float64 array with finite entries.

    Args:
        data: Anything numpy can turn into a 2-D array.
        name: Name used in error messages.
    """
    mat = np.ascontiguousarray(data, dtype=np.float64)
    if mat.ndim != 2 or 0 in mat.shape:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {mat.shape}.")
    if not np.all(np.isfinite(mat)):
        raise ValueError(f"{name} contains NaN or Inf entries.")
    return mat


def as_vector(data, name: str = "vector") -> np.ndarray:
    """ Return `data` as a 1-D float64 array with finite entries."""
    vec = np.ascontiguousarray(data, dtype=np.float64)
    if vec.ndim == 2 and 1 in vec.shape:
        vec = vec.reshape(-1)
    if vec.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {vec.shape}.")
    if not np.all(np.isfinite(vec)):
        raise ValueError(f"{name} contains NaN or Inf entries.")
    return vec


@dataclass(frozen=True)
class SingularSystem:
    """Ordered singular triplets (σₙ, uₙ, vₙ) of a dense operator K.

    The triplets satisfy K vₙ = σₙ uₙ and Kᵀ uₙ = σₙ vₙ. Only singular values above
    `rank_tol` are retained, so every stored σₙ can safely be divided by.
    """

    sigma: np.ndarray
    """Retained singular values in non-increasing order."""

    U: np.ndarray
    """Left singular vectors as columns (m x r)."""

    V: np.ndarray
    """Right singular vectors as columns (n x r)."""

    rank_tol: float = 0.0
    """Threshold below which singular values were dropped."""

    shape: tuple[int, int] = field(default=None)
    """Shape (m, n) of the decomposed operator."""

    def __post_init__(self):
        if self.shape is None:
            object.__setattr__(self, "shape", (self.U.shape[0], self.V.shape[0]))
        r = self.sigma.shape[0]
        if self.U.shape != (self.shape[0], r) or self.V.shape != (self.shape[1], r):
            raise ValueError(
                f"Inconsistent singular system: sigma {self.sigma.shape}, "
                f"U {self.U.shape}, V {self.V.shape}, operator {self.shape}."
            )

    @property
    def rank(self) -> int:
        return int(self.sigma.shape[0])

    @classmethod
    def diagonal(cls, sigma) -> "SingularSystem":
        """ Singular system of diag(sigma) with unit vectors as singular vectors.

        The entries must be positive and non-increasing. Useful for synthetic
        operators that are diagonal in a known basis without paying for an SVD.
        """
        sigma = as_vector(sigma, "sigma")
        if np.any(sigma <= 0) or np.any(np.diff(sigma) > 0):
            raise ValueError("sigma must be positive and non-increasing.")
        eye = np.eye(sigma.shape[0])
        return cls(sigma=sigma, U=eye, V=eye.copy(), rank_tol=0.0)

    def coefficients(self, y: np.ndarray) -> np.ndarray:
        """ Return the data coefficients ⟨y, uₙ⟩."""
        y = as_vector(y, "y")
        if y.shape[0] != self.shape[0]:
            raise ValueError(
                f"Data of length {y.shape[0]} does not match operator rows "
                f"{self.shape[0]}."
            )
        return self.U.T @ y

    def synthesize(self, coefficients: np.ndarray) -> np.ndarray:
        """ Return Σₙ cₙ vₙ for coefficients in the right singular basis."""
        return self.V @ coefficients

    def operator(self) -> np.ndarray:
        """ Reassemble U diag(sigma) Vᵀ."""
        return (self.U * self.sigma) @ self.V.T


def _signs(V: np.ndarray) -> np.ndarray:
    """Signs that make the first nonzero entry of each column nonnegative."""
    tol = 1e-14 * max(1.0, float(np.max(np.abs(V), initial=0.0)))
    nonzero = np.abs(V) > tol
    first = np.argmax(nonzero, axis=0)
    lead = V[first, np.arange(V.shape[1])]
    return np.where(lead < 0, -1.0, 1.0)


def svd(K, rank_tol: float | None = None) -> SingularSystem:
    """ Compute the singular system of a dense matrix.

    Args:
        K: The operator as a 2-D array.
        rank_tol: Singular values less than or equal to this value are dropped. If
            None, max(m, n) · eps · σ₁ is used.

    Raises:
        ValueError: If K is not finite or rank_tol is negative.
        numpy.linalg.LinAlgError: If no LAPACK driver converges.
    """
    K = as_matrix(K, "K")
    if rank_tol is not None and rank_tol < 0:
        raise ValueError(f"rank_tol must be nonnegative, got {rank_tol}.")

    error = None
    for driver in _DRIVERS:
        try:
            U, s, Vt = scipy.linalg.svd(
                K, full_matrices=False, lapack_driver=driver, check_finite=False
            )
            break
        except np.linalg.LinAlgError as exc:
            log.warning("SVD driver %s did not converge on a %s matrix.", driver, K.shape)
            error = exc
    else:
        raise np.linalg.LinAlgError(
            f"SVD did not converge for a {K.shape[0]}x{K.shape[1]} matrix."
        ) from error

    if rank_tol is None:
        rank_tol = max(K.shape) * np.finfo(np.float64).eps * (s[0] if s.size else 0.0)
    keep = s > rank_tol
    U, s, V = U[:, keep], s[keep], Vt[keep].T

    signs = _signs(V)
    return SingularSystem(
        sigma=np.ascontiguousarray(s),
        U=np.ascontiguousarray(U * signs),
        V=np.ascontiguousarray(V * signs),
        rank_tol=float(rank_tol),
        shape=K.shape,
    )


def kron(A, B) -> np.ndarray:
    """ Kronecker product; block (i, j) of the result is A[i, j] · B."""
    A, B = as_matrix(A, "A"), as_matrix(B, "B")
    rows = A.shape[0] * B.shape[0]
    cols = A.shape[1] * B.shape[1]
    if rows * cols > MAX_ENTRIES:
        raise ValueError(
            f"Kronecker product of {A.shape} and {B.shape} has {rows * cols} entries "
            f"(limit {MAX_ENTRIES})."
        )
    return np.kron(A, B)


def symmetric_banded_toeplitz(first_row, n: int | None = None) -> np.ndarray:
    """ Build the symmetric Toeplitz matrix with T[i, j] = first_row[|i - j|].

    Args:
        first_row: The band of the first row. Entries beyond its length are zero.
        n: Size of the square matrix. Defaults to the length of first_row.
    """
    first_row = as_vector(first_row, "first_row")
    if first_row.shape[0] == 0:
        raise ValueError("first_row must not be empty.")
    n = first_row.shape[0] if n is None else n
    if n < 1:
        raise ValueError(f"n must be positive, got {n}.")
    column = np.zeros(n)
    band = min(n, first_row.shape[0])
    column[:band] = first_row[:band]
    return scipy.linalg.toeplitz(column)


def cond2(system: SingularSystem) -> float:
    """ Spectral condition number σ_max / σ_min over the retained triplets."""
    if system.rank == 0:
        raise ValueError("Condition number of the zero operator is undefined.")
    return float(system.sigma[0] / system.sigma[-1])


def fro_norm(K) -> float:
    """Frobenius norm of a matrix."""
    return float(np.linalg.norm(as_matrix(K, "K"), "fro"))


def two_norm(x) -> float:
    """Euclidean norm of a vector."""
    return float(np.linalg.norm(as_vector(x, "x")))


def matvec(K, x) -> np.ndarray:
    K, x = as_matrix(K, "K"), as_vector(x, "x")
    if K.shape[1] != x.shape[0]:
        raise ValueError(f"Cannot multiply {K.shape} matrix with vector of length {x.shape[0]}.")
    return K @ x


def matvec_transpose(K, y) -> np.ndarray:
    K, y = as_matrix(K, "K"), as_vector(y, "y")
    if K.shape[0] != y.shape[0]:
        raise ValueError(
            f"Cannot multiply transpose of {K.shape} matrix with vector of length "
            f"{y.shape[0]}."
        )
    return K.T @ y


def write_matrix_csv(path: Path | str, data) -> None:
    """ Write a matrix or vector as CSV with a `rows,cols` header line.

    Vectors are written as a single column. Entries keep 17 significant digits so
    that reading the file back reproduces the floats exactly.
    """
    mat = np.asarray(data, dtype=np.float64)
    mat = mat.reshape(-1, 1) if mat.ndim == 1 else mat
    with open(path, "w", encoding="utf-8") as file:
        file.write(f"{mat.shape[0]},{mat.shape[1]}\n")
        np.savetxt(file, mat, delimiter=",", fmt=_CSV_FORMAT)


def read_matrix_csv(path: Path | str) -> np.ndarray:
    """ Read a CSV file written by `write_matrix_csv`.

    Raises:
        FileNotFoundError: If the file does not exist.
        ValueError: If the header or the entries cannot be parsed or do not agree.
    """
    path = Path(path)
    with open(path, encoding="utf-8") as file:
        header = file.readline().strip()
        try:
            rows, cols = (int(e) for e in header.split(","))
            data = np.loadtxt(file, delimiter=",", ndmin=2, dtype=np.float64)
        except ValueError as exc:
            raise ValueError(f'Cannot parse matrix file "{path}": {exc}') from exc
    if data.shape != (rows, cols):
        raise ValueError(
            f'Matrix file "{path}" declares {rows}x{cols} but holds {data.shape}.'
        )
    return as_matrix(data, str(path))

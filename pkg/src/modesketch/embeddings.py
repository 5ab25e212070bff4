"""Random linear maps used as per-mode sketching blocks.

Two families are provided: explicit Gaussian matrices, and an implicit
subsampled-DFT operator (random sign flip, unnormalized FFT, random row
restriction) that is applied through FFTs in O(n log n) time without ever
materializing the matrix.  An identity marker rounds out the set so that
sketch plans can leave modes untouched.

Both random families are scaled so that ``E ||A x||^2 = ||x||^2`` for any
fixed vector ``x``.  For the subsampled DFT that choice is ``1/sqrt(m)``
with the unnormalized transform; equivalently ``sqrt(n/m)`` with a unitary
DFT.  When ``m == n`` the operator is an exact isometry.

All randomness flows through explicitly seeded generators; identical
seeds reproduce identical maps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .tensor import DenseTensor, mode_product

__all__ = [
    "GaussianEmbedding",
    "FJLTEmbedding",
    "IdentityEmbedding",
    "Embedding",
    "gaussian_embedding",
    "fjlt_embedding",
    "make_rng",
    "derive_seed",
]


def make_rng(seed: int) -> np.random.Generator:
    """Deterministic generator for a 64-bit nonnegative seed."""
    seed = int(seed)
    if seed < 0:
        raise ValueError("seeds must be nonnegative")
    return np.random.Generator(np.random.PCG64(seed))


def derive_seed(seed: int, *key: int) -> int:
    """Mix a master seed with integer stream keys into a child seed.

    The mix is a fixed, documented function of ``(seed, *key)`` so that
    independent streams (per mode, per trial, per sweep) are reproducible
    from one master seed.
    """
    entropy = [int(seed)] + [int(k) for k in key]
    if any(e < 0 for e in entropy):
        raise ValueError("seed components must be nonnegative")
    return int(np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint64)[0])


def _check_vector_length(n: int, x: np.ndarray) -> None:
    if x.shape[0] != n:
        raise ValueError(f"embedding of source dim {n} applied to length-{x.shape[0]} input")


@dataclass(frozen=True)
class GaussianEmbedding:
    """Explicit ``m x n`` matrix with i.i.d. N(0, 1/m) real entries."""

    matrix: np.ndarray

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.matrix.shape[1]

    def apply(self, x) -> np.ndarray:
        """Multiply a vector (or the columns of a matrix) by the map."""
        x = np.asarray(x, dtype=np.complex128)
        _check_vector_length(self.n, x)
        return self.matrix @ x

    def apply_to_mode(self, X: DenseTensor, mode: int) -> DenseTensor:
        return mode_product(X, self.matrix, mode)

    def as_matrix(self) -> np.ndarray:
        return self.matrix.astype(np.complex128)


@dataclass(frozen=True)
class FJLTEmbedding:
    """Implicit restriction * DFT * random-sign operator.

    ``signs`` holds the +-1 diagonal, ``rows`` the m distinct sorted row
    indices kept after the unnormalized DFT, and the overall scale is
    ``1/sqrt(m)``.  Application never forms the dense matrix; it flips
    signs, runs an FFT (mixed radix, any length), restricts, and scales.
    """

    signs: np.ndarray
    rows: np.ndarray

    def __post_init__(self):
        signs = np.asarray(self.signs, dtype=np.float64)
        rows = np.asarray(self.rows, dtype=np.intp)
        if signs.ndim != 1 or rows.ndim != 1:
            raise ValueError("signs and rows must be one-dimensional")
        if not np.all(np.abs(signs) == 1.0):
            raise ValueError("sign diagonal entries must be +-1")
        n, m = signs.size, rows.size
        if not 1 <= m <= n:
            raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
        if np.any(rows < 0) or np.any(rows >= n):
            raise ValueError("row indices out of range")
        if np.any(np.diff(rows) <= 0):
            raise ValueError("row indices must be distinct and sorted")
        object.__setattr__(self, "signs", signs)
        object.__setattr__(self, "rows", rows)

    @property
    def m(self) -> int:
        return self.rows.size

    @property
    def n(self) -> int:
        return self.signs.size

    @property
    def scale(self) -> float:
        return 1.0 / math.sqrt(self.m)

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.complex128)
        _check_vector_length(self.n, x)
        flipped = self.signs.reshape((-1,) + (1,) * (x.ndim - 1)) * x
        spectrum = np.fft.fft(flipped, axis=0)
        return spectrum[self.rows] * self.scale

    def apply_to_mode(self, X: DenseTensor, mode: int) -> DenseTensor:
        if not 0 <= mode < X.ndim:
            raise IndexError(f"mode {mode} out of range for a {X.ndim}-mode tensor")
        if X.shape[mode] != self.n:
            raise ValueError(f"mode {mode} extent {X.shape[mode]} does not match "
                             f"embedding source dim {self.n}")
        shape = [1] * X.ndim
        shape[mode] = self.n
        spectrum = np.fft.fft(X.data * self.signs.reshape(shape), axis=mode)
        out = np.take(spectrum, self.rows, axis=mode) * self.scale
        return DenseTensor(out, copy=False)

    def as_matrix(self) -> np.ndarray:
        # Columns of the unnormalized DFT are FFTs of the standard basis.
        dft = np.fft.fft(np.eye(self.n), axis=0)
        return dft[self.rows] * self.signs[None, :] * self.scale


@dataclass(frozen=True)
class IdentityEmbedding:
    """Marker leaving a mode (or the second sketch stage) untouched."""

    n: int

    @property
    def m(self) -> int:
        return self.n

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.complex128)
        _check_vector_length(self.n, x)
        return x

    def apply_to_mode(self, X: DenseTensor, mode: int) -> DenseTensor:
        if X.shape[mode] != self.n:
            raise ValueError(f"mode {mode} extent {X.shape[mode]} does not match {self.n}")
        return X

    def as_matrix(self) -> np.ndarray:
        return np.eye(self.n, dtype=np.complex128)


Embedding = Union[GaussianEmbedding, FJLTEmbedding, IdentityEmbedding]


def gaussian_embedding(m: int, n: int, rng: np.random.Generator) -> GaussianEmbedding:
    """Draw an ``m x n`` Gaussian map scaled by ``1/sqrt(m)``."""
    if m < 1 or n < 1:
        raise ValueError(f"dimensions must be positive, got m={m}, n={n}")
    return GaussianEmbedding(rng.standard_normal((m, n)) / math.sqrt(m))


def fjlt_embedding(m: int, n: int, rng: np.random.Generator) -> FJLTEmbedding:
    """Draw the sign diagonal and a sorted without-replacement restriction.

    Draw order is fixed (signs first, then rows) so a seed fully determines
    the operator.
    """
    if not 1 <= m <= n:
        raise ValueError(f"restriction cannot oversample: need 1 <= m <= n, got m={m}, n={n}")
    signs = rng.integers(0, 2, size=n).astype(np.float64) * 2.0 - 1.0
    rows = np.sort(rng.choice(n, size=m, replace=False))
    return FJLTEmbedding(signs, rows)

"""CP models in standard form and their coherence diagnostics.

A rank-r CP model keeps r weights and, per mode, a matrix whose columns
are the factor vectors.  Standard form means every factor column has unit
2-norm; the coherence quantities below are only defined for models in
standard form, so those entry points validate and reject rather than
silently renormalizing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .embeddings import make_rng
from .tensor import DenseTensor, outer_product

__all__ = [
    "CpModel",
    "CoherenceReport",
    "CoefficientNormBound",
    "coherence",
    "coefficient_norm_bound",
    "subgaussian_coherence_check",
    "normalize",
]

# Unit-norm check used by all standard-form entry points.
STANDARD_FORM_TOL = 1e-12


@dataclass(frozen=True)
class CpModel:
    """Weights plus per-mode factor matrices (columns are factor vectors)."""

    weights: np.ndarray
    factors: tuple[np.ndarray, ...]

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.complex128).ravel()
        factors = tuple(np.asarray(f, dtype=np.complex128) for f in self.factors)
        r = weights.size
        if r < 1:
            raise ValueError("a CP model needs rank at least 1")
        if len(factors) < 1:
            raise ValueError("a CP model needs at least one mode")
        for mode, f in enumerate(factors):
            if f.ndim != 2 or f.shape[1] != r:
                raise ValueError(f"factor matrix for mode {mode} must have {r} columns, "
                                 f"got shape {f.shape}")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "factors", factors)

    @property
    def rank(self) -> int:
        return self.weights.size

    @property
    def ndim(self) -> int:
        return len(self.factors)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(f.shape[0] for f in self.factors)

    def factor_columns(self, k: int) -> list[np.ndarray]:
        return [f[:, k] for f in self.factors]

    def to_tensor(self) -> DenseTensor:
        """Dense expansion: the weighted sum of the rank-one terms."""
        acc = np.zeros(self.shape, dtype=np.complex128)
        for k in range(self.rank):
            acc += self.weights[k] * outer_product(self.factor_columns(k)).data
        return DenseTensor(acc, copy=False)

    def is_standard_form(self, tol: float = STANDARD_FORM_TOL) -> bool:
        return all(
            np.all(np.abs(np.linalg.norm(f, axis=0) - 1.0) <= tol) for f in self.factors
        )


def _require_standard_form(model: CpModel) -> None:
    if not model.is_standard_form():
        raise ValueError("model is not in standard form (factor columns must have unit "
                         "2-norm); call normalize() first")


def normalize(model: CpModel) -> CpModel:
    """Fold factor-column norms into the weights, leaving unit columns."""
    new_factors = []
    scale = np.ones(model.rank)
    for mode, f in enumerate(model.factors):
        norms = np.linalg.norm(f, axis=0)
        if np.any(norms == 0.0):
            raise ValueError(f"mode {mode} has a zero factor column; cannot normalize")
        new_factors.append(f / norms)
        scale = scale * norms
    return CpModel(model.weights * scale, tuple(new_factors))


@dataclass(frozen=True)
class CoherenceReport:
    """Per-mode and cross-mode coherences of a CP basis."""

    mode_coherences: tuple[float, ...]
    max_modewise: float
    basis_coherence: float
    rank: int
    admissible: bool

    @property
    def ndim(self) -> int:
        return len(self.mode_coherences)

    @property
    def product_of_mode_coherences(self) -> float:
        return float(np.prod(self.mode_coherences))

    def as_text(self) -> str:
        lines = [f"rank={self.rank}", f"modes={self.ndim}"]
        lines += [f"mode_coherence_{ell}={mu!r}" for ell, mu in enumerate(self.mode_coherences)]
        lines += [
            f"max_modewise_coherence={self.max_modewise!r}",
            f"basis_coherence={self.basis_coherence!r}",
            f"admissible={str(self.admissible).lower()}",
        ]
        return "\n".join(lines)


def coherence(model: CpModel) -> CoherenceReport:
    """Coherence report for a standard-form model.

    Per mode, the coherence is the largest absolute inner product between
    distinct factor columns; the basis coherence takes, over distinct
    column pairs, the largest product of those inner products across all
    modes.  Rank 1 has no pairs, so every coherence is 0 by convention.
    The admissibility flag records whether ``max_modewise ** (d-1)`` stays
    below ``1 / (2 r)``.
    """
    _require_standard_form(model)
    r, d = model.rank, model.ndim
    if r == 1:
        return CoherenceReport((0.0,) * d, 0.0, 0.0, 1, True)

    off = ~np.eye(r, dtype=bool)
    mode_mus = []
    pair_products = np.ones((r, r))
    for f in model.factors:
        gram_abs = np.abs(f.conj().T @ f)
        mode_mus.append(float(gram_abs[off].max()))
        pair_products = pair_products * gram_abs
    mu = max(mode_mus)
    mu_prime = float(pair_products[off].max())
    admissible = mu ** (d - 1) < 1.0 / (2.0 * r)
    return CoherenceReport(tuple(mode_mus), mu, mu_prime, r, admissible)


@dataclass(frozen=True)
class CoefficientNormBound:
    """Bounds on ``||weights||^2 / ||tensor||^2`` implied by the basis coherence.

    ``vacuous`` is set when the basis coherence reaches ``1/(r-1)`` and the
    upper bound carries no information (it is reported as ``inf``).  The
    lower bound holds regardless.  ``ratio`` is the empirically computed
    value from the dense expansion, for verification.
    """

    lower: float
    upper: float
    ratio: float
    vacuous: bool


def coefficient_norm_bound(model: CpModel) -> CoefficientNormBound:
    _require_standard_form(model)
    r = model.rank
    report = coherence(model)
    mu_prime = report.basis_coherence

    dense_norm_sq = float(np.linalg.norm(model.to_tensor().data.ravel()) ** 2)
    if dense_norm_sq == 0.0:
        raise ValueError("model expands to the zero tensor; the ratio is undefined")
    ratio = float(np.linalg.norm(model.weights) ** 2) / dense_norm_sq

    lower = 1.0 / (1.0 + (r - 1) * mu_prime)
    if (r - 1) * mu_prime < 1.0:
        return CoefficientNormBound(lower, 1.0 / (1.0 - (r - 1) * mu_prime), ratio, False)
    return CoefficientNormBound(lower, float("inf"), ratio, True)


@dataclass(frozen=True)
class SubgaussianCoherenceStats:
    """Max-modewise coherences observed over random Gaussian models."""

    coherences: tuple[float, ...]

    @property
    def max(self) -> float:
        return max(self.coherences)

    @property
    def median(self) -> float:
        return float(np.median(self.coherences))


def gaussian_cp_model(shape: Sequence[int], rank: int,
                      rng: np.random.Generator) -> CpModel:
    """Unit weights with i.i.d. standard Gaussian factors, columns normalized."""
    if rank < 1:
        raise ValueError("rank must be positive")
    factors = []
    for n in shape:
        f = rng.standard_normal((int(n), rank))
        factors.append(f / np.linalg.norm(f, axis=0))
    return CpModel(np.ones(rank), tuple(factors))


def subgaussian_coherence_check(n: int, r: int, d: int, trials: int,
                                seed: int = 0) -> SubgaussianCoherenceStats:
    """Empirical max-modewise coherence of random Gaussian CP bases.

    Draws ``trials`` models with n-dimensional normalized Gaussian factors
    and reports the max-modewise coherence of each; random bases of this
    kind are incoherent with high probability, and the returned statistics
    make that concrete for given ``(n, r, d)``.
    """
    if min(n, r, d, trials) < 1:
        raise ValueError("n, r, d and trials must all be positive")
    rng = make_rng(seed)
    samples = []
    for _ in range(trials):
        model = gaussian_cp_model((n,) * d, r, rng)
        samples.append(coherence(model).max_modewise)
    return SubgaussianCoherenceStats(tuple(samples))

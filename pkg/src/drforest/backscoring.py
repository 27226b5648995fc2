"""Map embedding coordinates back to the response representation space.

The map is a Gaussian-kernel ridge interpolant

    g(z) = sum_i C[i] * exp(-||z_i - z||^2 / sigma_G),
    (G + (N / gamma_G) I) C = Y,

with one shared kernel for all output coordinates.  The general multi-output
system is block diagonal under that kernel, so a single N x N Cholesky solve
with q right-hand sides gives the full coefficient matrix.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.spatial.distance import cdist

from .core import DimensionMismatch, DrfError, ValidationError


class SolveFailure(DrfError, ArithmeticError):
    code = "SolveFailure"


@dataclass(frozen=True)
class BackscorerConfig:
    sigma_g: float = 1.0
    gamma_g: float = 1.0

    def __post_init__(self):
        if not self.sigma_g > 0:
            raise ValidationError(f"sigma_g must be > 0, got {self.sigma_g}")
        if not self.gamma_g > 0:
            raise ValidationError(f"gamma_g must be > 0, got {self.gamma_g}")


@dataclass(frozen=True)
class Backscorer:
    C: np.ndarray
    Z_train: np.ndarray
    config: BackscorerConfig


def gaussian_kernel(A, B, sigma_g: float) -> np.ndarray:
    return np.exp(-cdist(np.atleast_2d(A), np.atleast_2d(B), "sqeuclidean") / sigma_g)


def gaussian_gram(Z, sigma_g: float) -> np.ndarray:
    if not sigma_g > 0:
        raise ValidationError(f"sigma_g must be > 0, got {sigma_g}")
    G = gaussian_kernel(Z, Z, sigma_g)
    np.fill_diagonal(G, 1.0)
    return G


def fit_backscorer(Z, Y, config: BackscorerConfig) -> Backscorer:
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Z.shape[0] != Y.shape[0]:
        raise DimensionMismatch(f"embedding has {Z.shape[0]} rows but responses have {Y.shape[0]}")
    n = Z.shape[0]
    A = gaussian_gram(Z, config.sigma_g)
    A[np.diag_indices(n)] += n / config.gamma_g
    try:
        C = cho_solve(cho_factor(A, lower=True), Y)
    except LinAlgError as exc:
        raise SolveFailure(f"kernel ridge system is not positive definite: {exc}") from exc
    if not np.all(np.isfinite(C)):
        raise SolveFailure("kernel ridge solve produced non-finite coefficients")
    return Backscorer(C=np.ascontiguousarray(C), Z_train=np.ascontiguousarray(Z), config=config)


def backscore(bs: Backscorer, z_hat) -> np.ndarray:
    """Evaluate the interpolant at one point (1-D input) or many (2-D input)."""
    z = np.asarray(z_hat, dtype=np.float64)
    single = z.ndim == 1
    kz = gaussian_kernel(z, bs.Z_train, bs.config.sigma_g)
    out = kz @ bs.C
    return out[0] if single else out

"""Classical MDS of the training distances and out-of-sample embedding."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DimensionMismatch, DrfError, ValidationError

EIG_REL_TOL = 1e-9


class InsufficientPositiveEigenvalues(DrfError, ValueError):
    code = "InsufficientPositiveEigenvalues"

    def __init__(self, n_positive: int, requested: int):
        self.n_positive = n_positive
        self.requested = requested
        super().__init__(
            f"only {n_positive} eigenvalues of the centered kernel are positive, "
            f"cannot embed in {requested} dimensions; lower the embedding dimension"
        )


@dataclass(frozen=True)
class MdsModel:
    """Fitted classical MDS solution.

    Attributes
    ----------
    Z : (N, m) array
        Embedding coordinates, ``Z[:, l] = sqrt(eigenvalues[l]) * eigenvectors[:, l]``.
    eigenvalues : (m,) array
        Retained eigenvalues, descending and positive.
    eigenvectors : (N, m) array
        Unit eigenvectors; each column's largest-magnitude entry is positive.
    d2_row_sums : (N,) array
        Row sums of the squared training distance matrix.
    d2_total : float
        Sum of all squared training distances.
    """

    Z: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    d2_row_sums: np.ndarray
    d2_total: float

    @property
    def m(self) -> int:
        return self.Z.shape[1]

    @property
    def n(self) -> int:
        return self.Z.shape[0]


def double_center(D) -> np.ndarray:
    """Centered kernel ``K = -1/2 H D^2 H`` with ``H = I - ee^T / N``."""
    D2 = np.square(np.asarray(D, dtype=np.float64))
    n = D2.shape[0]
    row = D2.sum(axis=1)
    col = D2.sum(axis=0)
    total = D2.sum()
    K = -0.5 * (D2 - row[:, None] / n - col[None, :] / n + total / n**2)
    return 0.5 * (K + K.T)


def fix_signs(U: np.ndarray) -> np.ndarray:
    """Flip columns so that each column's largest-magnitude entry is positive."""
    U = np.array(U, dtype=np.float64)
    pivot = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[pivot, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs


def fit_mds(D, m: int) -> MdsModel:
    """Embed the training responses in ``m`` dimensions by classical MDS.

    Eigenvalues at or below ``1e-9 * lambda_max`` (including every negative
    one that non-Euclidean distances such as Isomap produce) are not usable.
    """
    D = np.asarray(D, dtype=np.float64)
    n = D.shape[0]
    if not 1 <= m:
        raise ValidationError(f"embedding dimension must be >= 1, got {m}")
    K = double_center(D)
    evals, evecs = np.linalg.eigh(K)
    order = np.argsort(evals, kind="stable")[::-1]
    evals, evecs = evals[order], evecs[:, order]
    lam_max = evals[0] if n else 0.0
    n_pos = int(np.sum(evals > EIG_REL_TOL * lam_max)) if lam_max > 0 else 0
    if n_pos < m:
        raise InsufficientPositiveEigenvalues(n_pos, m)
    lam = evals[:m].copy()
    # C order so a model decoded from disk multiplies identically
    U = np.ascontiguousarray(fix_signs(evecs[:, :m]))
    D2 = D * D
    return MdsModel(
        Z=U * np.sqrt(lam),
        eigenvalues=lam,
        eigenvectors=U,
        d2_row_sums=D2.sum(axis=1),
        d2_total=float(D2.sum()),
    )


def oos_kernel_row(d2_new, mds: MdsModel) -> np.ndarray:
    """Centered-kernel values between a new point and every training point.

    The centering expectations are taken over the training set augmented
    with the new point, using ``d2_new`` (squared distances from the new
    point to each training point) for the unknown entries.
    """
    d2 = np.asarray(d2_new, dtype=np.float64)
    n = mds.n
    if d2.shape != (n,):
        raise DimensionMismatch(f"expected {n} squared distances, got shape {d2.shape}")
    s_new = d2.sum()
    n1 = n + 1.0
    return (-0.5 * d2
            + s_new / (2.0 * n1)
            + (mds.d2_row_sums + d2) / (2.0 * n1)
            - (mds.d2_total + 2.0 * s_new) / (2.0 * n1 * n1))


def oos_embed(k_row, mds: MdsModel) -> np.ndarray:
    """Project a kernel row onto the MDS axes: ``z_k = u_k . k_row / sqrt(lambda_k)``."""
    k_row = np.asarray(k_row, dtype=np.float64)
    return (k_row @ mds.eigenvectors) / np.sqrt(mds.eigenvalues)

"""Predict distances from an unseen response to all training responses."""
from __future__ import annotations

import numpy as np

from .core import DimensionMismatch, DrfError


class AllZeroAffinity(DrfError, ValueError):
    code = "AllZeroAffinity"


class DegenerateTrainingSet(DrfError, ValueError):
    code = "DegenerateTrainingSet"


def min_offdiagonal(D: np.ndarray) -> float:
    n = D.shape[0]
    if n < 2:
        raise DegenerateTrainingSet("need at least two training responses to define a pairwise distance")
    return float(np.min(D[~np.eye(n, dtype=bool)]))


def processing_order(a: np.ndarray, D: np.ndarray) -> np.ndarray:
    """Anchor first, then the rest by decreasing distance to the anchor.

    The anchor is the highest-affinity sample; all ties go to the lowest index.
    """
    anchor = int(np.argmax(a))
    rest = np.delete(np.arange(D.shape[0]), anchor)
    rest = rest[np.argsort(-D[rest, anchor], kind="stable")]
    return np.concatenate([[anchor], rest])


def predict_distances(a, D) -> np.ndarray:
    """Distances from a new response to every training response.

    The sample with largest affinity gets the smallest off-diagonal training
    distance.  The others are visited in decreasing distance from that anchor
    and each receives ``min_{q done} max(d_hat[q], D[q, p])``, a bound that
    keeps every triangle through an already placed point consistent.

    Parameters
    ----------
    a : (N,) array
        Forest affinity vector; must have a positive entry.
    D : (N, N) array
        Training distance matrix.

    Returns
    -------
    d_hat : (N,) array
    """
    a = np.asarray(a, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    n = D.shape[0]
    if a.ndim != 1 or a.shape[0] != n or D.shape != (n, n):
        raise DimensionMismatch(f"affinity of length {a.shape} does not match distance matrix {D.shape}")
    if n < 2:
        raise DegenerateTrainingSet("need at least two training responses to define a pairwise distance")
    if not np.max(a) > 0:
        raise AllZeroAffinity("affinity vector has no positive entry")

    order = processing_order(a, D)
    d_hat = np.empty(n)
    # bound[i] = min over processed q of max(d_hat[q], D[q, i]); exact since
    # only min/max are involved
    bound = np.full(n, np.inf)
    first = order[0]
    d_hat[first] = min_offdiagonal(D)
    np.minimum(bound, np.maximum(d_hat[first], D[first]), out=bound)
    for p in order[1:]:
        d_hat[p] = bound[p]
        np.minimum(bound, np.maximum(d_hat[p], D[p]), out=bound)
    return d_hat

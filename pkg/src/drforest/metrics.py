"""Evaluation of test-set predictions."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .core import DimensionMismatch, DrfError
from .simulate import radial_error


class PredictionNotInTrainingSet(DrfError, ValueError):
    code = "PredictionNotInTrainingSet"


@dataclass
class EvalReport:
    emse: float
    per_sample_errors: np.ndarray
    mean_radial_error: Optional[float] = None
    mean_abs_radial_error: Optional[float] = None
    match_rate: Optional[float] = None

    def scalars(self) -> dict:
        d = asdict(self)
        d.pop("per_sample_errors")
        d["n_test"] = int(self.per_sample_errors.shape[0])
        return {k: v for k, v in d.items() if v is not None}


def _pair(Y_true, Y_pred):
    Y_true = np.atleast_2d(np.asarray(Y_true, dtype=np.float64))
    Y_pred = np.atleast_2d(np.asarray(Y_pred, dtype=np.float64))
    if Y_true.shape != Y_pred.shape:
        raise DimensionMismatch(f"shape mismatch: truth {Y_true.shape} vs prediction {Y_pred.shape}")
    return Y_true, Y_pred


def emse(Y_true, Y_pred) -> float:
    """Mean over samples of the squared Euclidean prediction error."""
    Y_true, Y_pred = _pair(Y_true, Y_pred)
    return float(np.mean(np.sum((Y_true - Y_pred) ** 2, axis=1)))


def error_vectors_projection(Y_true, Y_pred, dims=(0, 2)) -> np.ndarray:
    """Columns ``(y_i, y_j, err_i, err_j)`` with ``err = y_pred - y_true``."""
    Y_true, Y_pred = _pair(Y_true, Y_pred)
    i, j = dims
    q = Y_true.shape[1]
    if not (0 <= i < q and 0 <= j < q):
        raise DimensionMismatch(f"projection dims {dims} out of range for {q} response columns")
    err = Y_pred - Y_true
    return np.column_stack([Y_true[:, i], Y_true[:, j], err[:, i], err[:, j]])


def match_training_rows(Y_pred, Y_train) -> np.ndarray:
    """Index of the first training row exactly equal to each prediction."""
    Y_pred = np.atleast_2d(np.asarray(Y_pred, dtype=np.float64))
    Y_train = np.atleast_2d(np.asarray(Y_train, dtype=np.float64))
    if Y_pred.shape[1] != Y_train.shape[1]:
        raise DimensionMismatch("predictions and training responses differ in width")
    lookup = {}
    for j, row in enumerate(Y_train):
        lookup.setdefault(row.tobytes(), j)
    out = np.empty(Y_pred.shape[0], dtype=np.int64)
    for r, row in enumerate(Y_pred):
        j = lookup.get(row.tobytes())
        if j is None:
            raise PredictionNotInTrainingSet(f"prediction {r} does not equal any training response")
        out[r] = j
    return out


def match_rate(Y_pred, Y_train, labels_train, labels_true) -> float:
    """Share of training-drawn predictions whose source row has the true label."""
    idx = match_training_rows(Y_pred, Y_train)
    labels_train = np.asarray(labels_train).ravel()
    labels_true = np.asarray(labels_true).ravel()
    if labels_true.shape[0] != idx.shape[0]:
        raise DimensionMismatch("one true label per prediction is required")
    return float(np.mean(labels_train[idx] == labels_true))


def evaluate(Y_true, Y_pred, t_true=None, Y_train=None, labels_train=None, labels_true=None) -> EvalReport:
    Y_true, Y_pred = _pair(Y_true, Y_pred)
    report = EvalReport(emse=emse(Y_true, Y_pred), per_sample_errors=Y_pred - Y_true)
    if t_true is not None:
        r = radial_error(Y_pred, t_true)
        report.mean_radial_error = float(np.mean(r))
        report.mean_abs_radial_error = float(np.mean(np.abs(r)))
    if labels_true is not None and labels_train is not None and Y_train is not None:
        report.match_rate = match_rate(Y_pred, Y_train, labels_train, labels_true)
    return report

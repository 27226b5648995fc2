"""End-to-end fit/predict for the distance forest, baselines, and model files.

Prediction chain for a new input ``x``:

1. forest affinity of ``x`` to every training sample,
2. predicted response distances from the affinity and training distances,
3. centered-kernel row from the squared predicted distances,
4. out-of-sample MDS coordinates,
5. kernel ridge backscoring to the response space.
"""
from __future__ import annotations

import base64
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

from .backscoring import Backscorer, BackscorerConfig, backscore, fit_backscorer
from .core import (
    DimensionMismatch,
    DrfError,
    MatrixIOError,
    ValidationError,
    as_input_matrix,
    as_response_matrix,
    validate_distance_matrix,
)
from .distance_prediction import DegenerateTrainingSet, predict_distances
from .distances import euclidean_distances, isomap_distances
from .embedding import MdsModel, fit_mds, oos_embed, oos_kernel_row
from .forest import Forest, ForestConfig, Tree, affinity, affinity_matrix, compute_leaf_means, fit_forest

FORMAT_VERSION = 1
FORMAT_NAME = "drforest-model"
METRICS = ("euclidean", "isomap", "precomputed")


class VersionMismatch(DrfError):
    code = "VersionMismatch"


class CorruptModel(DrfError):
    code = "CorruptModel"


@dataclass(frozen=True)
class PipelineConfig:
    forest: ForestConfig = field(default_factory=ForestConfig)
    metric: str = "isomap"
    isomap_k: int = 7
    embedding_dim: int = 2
    backscore: BackscorerConfig = field(default_factory=BackscorerConfig)

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValidationError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if self.embedding_dim < 1:
            raise ValidationError(f"embedding_dim must be >= 1, got {self.embedding_dim}")
        if self.metric == "isomap" and self.isomap_k < 1:
            raise ValidationError(f"isomap_k must be >= 1, got {self.isomap_k}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        return cls(
            forest=ForestConfig(**d["forest"]),
            metric=d["metric"],
            isomap_k=d["isomap_k"],
            embedding_dim=d["embedding_dim"],
            backscore=BackscorerConfig(**d["backscore"]),
        )


@dataclass
class PipelineModel:
    forest: Forest
    D_train: np.ndarray
    mds: MdsModel
    backscorer: Backscorer
    X_train: np.ndarray
    config: PipelineConfig
    format_version: int = FORMAT_VERSION

    @property
    def n_train(self) -> int:
        return self.X_train.shape[0]

    @property
    def n_features(self) -> int:
        return self.X_train.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.backscorer.C.shape[1]


def response_distances(Y, config: PipelineConfig, n_jobs: int = 1) -> np.ndarray:
    if config.metric == "euclidean":
        return euclidean_distances(Y)
    if config.metric == "isomap":
        return isomap_distances(Y, config.isomap_k, n_jobs=n_jobs)
    raise ValidationError("metric 'precomputed' requires an explicit distance matrix")


def fit(X, Y, config: PipelineConfig = PipelineConfig(), D=None, n_jobs: int = 1) -> PipelineModel:
    """Fit forest, MDS embedding and backscorer on one training set.

    ``Y`` is always needed because backscoring maps onto it.  ``D`` must be
    given exactly when ``config.metric == "precomputed"``.
    """
    X = as_input_matrix(X)
    Y = as_response_matrix(Y, X.shape[0])
    if config.metric == "precomputed":
        if D is None:
            raise ValidationError("metric 'precomputed' requires a distance matrix")
        D = validate_distance_matrix(D)
        if D.shape[0] != X.shape[0]:
            raise DimensionMismatch(f"distance matrix is {D.shape[0]}x{D.shape[0]}, expected {X.shape[0]}")
    else:
        if D is not None:
            raise ValidationError(f"a distance matrix was given but metric is {config.metric!r}")
        D = response_distances(Y, config, n_jobs=n_jobs)
    forest = fit_forest(X, D, config.forest, n_jobs=n_jobs)
    mds = fit_mds(D, config.embedding_dim)
    bs = fit_backscorer(mds.Z, Y, config.backscore)
    return PipelineModel(forest=forest, D_train=D, mds=mds, backscorer=bs, X_train=X,
                         config=PipelineConfig(forest=forest.config, metric=config.metric,
                                               isomap_k=config.isomap_k,
                                               embedding_dim=config.embedding_dim,
                                               backscore=config.backscore))


def _check_inputs(model_p: int, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model_p:
        raise DimensionMismatch(f"model expects {model_p} input features, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise ValidationError("inputs contain non-finite entries")
    return X


def _predict_from_affinity(model: PipelineModel, a: np.ndarray) -> np.ndarray:
    d_hat = predict_distances(a, model.D_train)
    z_hat = oos_embed(oos_kernel_row(d_hat * d_hat, model.mds), model.mds)
    return backscore(model.backscorer, z_hat)


def predict(model: PipelineModel, x_new) -> np.ndarray:
    """Predicted response (q-vector) for one input vector."""
    if model.n_train < 2:
        raise DegenerateTrainingSet("a model trained on one sample cannot predict distances")
    x = _check_inputs(model.n_features, x_new)
    if x.shape[0] != 1:
        raise DimensionMismatch("predict takes a single input vector; use predict_batch")
    return _predict_from_affinity(model, affinity(model.forest, x[0]))


def predict_batch(model: PipelineModel, X_new, n_jobs: int = 1) -> np.ndarray:
    """Row-wise :func:`predict`; results do not depend on ``n_jobs``."""
    if model.n_train < 2:
        raise DegenerateTrainingSet("a model trained on one sample cannot predict distances")
    X_new = _check_inputs(model.n_features, X_new)
    A = affinity_matrix(model.forest, X_new)
    if n_jobs > 1 and len(A) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            rows = list(pool.map(lambda a: _predict_from_affinity(model, a), A))
    else:
        rows = [_predict_from_affinity(model, a) for a in A]
    return np.vstack(rows) if rows else np.empty((0, model.n_outputs))


# baselines ---------------------------------------------------------------

def knn_predict(X_train, Y_train, x_new, k: int) -> np.ndarray:
    """Mean response of the ``k`` training inputs nearest to ``x_new``."""
    X_train = np.asarray(X_train, dtype=np.float64)
    Y_train = np.asarray(Y_train, dtype=np.float64)
    if not 1 <= k <= X_train.shape[0]:
        raise ValidationError(f"k must be in [1, {X_train.shape[0]}], got {k}")
    x = np.asarray(x_new, dtype=np.float64)
    dist = np.sqrt(np.sum((X_train - x) ** 2, axis=1))
    nearest = np.argsort(dist, kind="stable")[:k]
    return Y_train[nearest].mean(axis=0)


def fit_rf_baseline(X, Y, config: ForestConfig, n_jobs: int = 1) -> Forest:
    """Ordinary regression forest: Euclidean response distances, leaf means stored."""
    Y = as_response_matrix(Y)
    return fit_forest(X, euclidean_distances(Y), config, Y=Y, n_jobs=n_jobs)


def rf_mean_predict(forest: Forest, Y_train, x_new) -> np.ndarray:
    """Average over trees of the mean in-bag response of the leaf reached."""
    x = np.atleast_2d(np.asarray(x_new, dtype=np.float64))
    Y_train = np.asarray(Y_train, dtype=np.float64)
    if Y_train.ndim == 1:
        Y_train = Y_train[:, None]
    total = np.zeros(Y_train.shape[1])
    for tree in forest.trees:
        means = tree.leaf_mean if tree.leaf_mean is not None else compute_leaf_means(tree, Y_train)
        total += means[tree.apply(x)[0]]
    return total / len(forest.trees)


def output_gram(Y, sigma: float) -> np.ndarray:
    """``exp(-||y_i - y_j||^2 / (2 sigma^2))`` over training responses."""
    Y = np.asarray(Y, dtype=np.float64)
    return np.exp(-cdist(Y, Y, "sqeuclidean") / (2.0 * sigma * sigma))


def fit_krf_baseline(X, Y, config: ForestConfig, sigma: float, n_jobs: int = 1) -> Forest:
    """Output-kernel forest: splits use the kernel-induced distance ``sqrt(2 - 2 g)``."""
    if not sigma > 0:
        raise ValidationError(f"sigma must be > 0, got {sigma}")
    G = output_gram(as_response_matrix(Y), sigma)
    D = np.sqrt(np.maximum(2.0 - 2.0 * G, 0.0))
    np.fill_diagonal(D, 0.0)
    return fit_forest(X, D, config, n_jobs=n_jobs)


def krf_predict(forest: Forest, Y_train, x_new, sigma: float, gram: Optional[np.ndarray] = None) -> np.ndarray:
    """Training response minimizing the kernel pre-image criterion.

    With ``g(y, y) = 1`` the criterion ``g(y,y) - 2 sum_i a_i g(y, y_i)`` is
    minimized by the training response ``y_j`` maximizing ``sum_i a_i g(y_j, y_i)``;
    ties go to the lowest ``j``.  ``gram`` may carry a precomputed
    :func:`output_gram`.
    """
    if not sigma > 0:
        raise ValidationError(f"sigma must be > 0, got {sigma}")
    Y_train = np.asarray(Y_train, dtype=np.float64)
    if gram is None:
        gram = output_gram(Y_train, sigma)
    a = affinity(forest, x_new)
    return Y_train[int(np.argmax(gram @ a))]


# serialization -----------------------------------------------------------

def _enc(a) -> dict:
    a = np.ascontiguousarray(a)
    dt = "<f8" if a.dtype.kind == "f" else "<i8"
    return {"dtype": dt, "shape": list(a.shape),
            "data": base64.b64encode(a.astype(dt).tobytes()).decode("ascii")}


def _dec(d: dict) -> np.ndarray:
    if d["dtype"] not in ("<f8", "<i8"):
        raise CorruptModel(f"unsupported array dtype {d['dtype']!r}")
    raw = base64.b64decode(d["data"], validate=True)
    a = np.frombuffer(raw, dtype=d["dtype"]).reshape(d["shape"])
    return a.astype(np.float64 if d["dtype"] == "<f8" else np.int64)


_TREE_FIELDS = ("feature", "threshold", "left", "right", "gain", "leaf_start", "leaf_stop", "samples")


def model_to_dict(model: PipelineModel) -> dict:
    trees = []
    for t in model.forest.trees:
        enc = {name: _enc(getattr(t, name)) for name in _TREE_FIELDS}
        if t.leaf_mean is not None:
            enc["leaf_mean"] = _enc(t.leaf_mean)
        trees.append(enc)
    return {
        "format": FORMAT_NAME,
        "format_version": model.format_version,
        "config": model.config.to_dict(),
        "X_train": _enc(model.X_train),
        "D_train": _enc(model.D_train),
        "forest": {"n_train": model.forest.n_train, "n_features": model.forest.n_features, "trees": trees},
        "mds": {
            "Z": _enc(model.mds.Z),
            "eigenvalues": _enc(model.mds.eigenvalues),
            "eigenvectors": _enc(model.mds.eigenvectors),
            "d2_row_sums": _enc(model.mds.d2_row_sums),
            "d2_total": model.mds.d2_total,
        },
        "backscorer": {"C": _enc(model.backscorer.C), "Z_train": _enc(model.backscorer.Z_train)},
    }


def model_from_dict(d: dict) -> PipelineModel:
    if d.get("format") != FORMAT_NAME:
        raise CorruptModel("not a drforest model file")
    version = d.get("format_version")
    if not isinstance(version, int) or version != FORMAT_VERSION:
        raise VersionMismatch(f"model format_version {version!r} is not supported (expected {FORMAT_VERSION})")
    config = PipelineConfig.from_dict(d["config"])
    trees = []
    for enc in d["forest"]["trees"]:
        t = Tree(**{name: _dec(enc[name]) for name in _TREE_FIELDS})
        if "leaf_mean" in enc:
            t.leaf_mean = _dec(enc["leaf_mean"])
        trees.append(t)
    forest = Forest(trees=trees, config=config.forest, n_train=int(d["forest"]["n_train"]),
                    n_features=int(d["forest"]["n_features"]))
    m = d["mds"]
    mds = MdsModel(Z=_dec(m["Z"]), eigenvalues=_dec(m["eigenvalues"]), eigenvectors=_dec(m["eigenvectors"]),
                   d2_row_sums=_dec(m["d2_row_sums"]), d2_total=float(m["d2_total"]))
    bs = Backscorer(C=_dec(d["backscorer"]["C"]), Z_train=_dec(d["backscorer"]["Z_train"]), config=config.backscore)
    model = PipelineModel(forest=forest, D_train=_dec(d["D_train"]), mds=mds, backscorer=bs,
                          X_train=_dec(d["X_train"]), config=config, format_version=version)
    n = model.n_train
    if not (forest.n_train == n == model.D_train.shape[0] == mds.n == bs.C.shape[0]
            and len(trees) == config.forest.n_trees and mds.m == config.embedding_dim):
        raise CorruptModel("model components have inconsistent dimensions")
    return model


def dumps_model(model: PipelineModel) -> str:
    return json.dumps(model_to_dict(model), sort_keys=True, separators=(",", ":"))


def save_model(model: PipelineModel, path) -> None:
    path = Path(path)
    try:
        path.write_text(dumps_model(model))
    except OSError as exc:
        raise MatrixIOError(f"cannot write model {path}: {exc.strerror or exc}") from exc


def load_model(path) -> PipelineModel:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise MatrixIOError(f"cannot read model {path}: {exc.strerror or exc}") from exc
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptModel(f"{path}: invalid JSON ({exc.msg})") from exc
    if not isinstance(d, dict):
        raise CorruptModel(f"{path}: not a model document")
    try:
        return model_from_dict(d)
    except (VersionMismatch, CorruptModel):
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptModel(f"{path}: {type(exc).__name__}: {exc}") from exc

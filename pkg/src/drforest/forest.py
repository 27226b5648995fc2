"""Distance random forest: trees grown from pairwise response distances only.

A node's impurity is the pairwise dispersion

    disp(S) = 1 / (2 |S|) * sum_{i in S} sum_{j in S} D_ij ** 2

and a split is scored by ``disp(parent) - disp(left) - disp(right)``.  With
Euclidean distances this is exactly the CART sum-of-squares reduction.

Random streams
--------------
Every tree gets its own ``numpy.random.Generator`` (PCG64) seeded from
``SeedSequence(config.seed).spawn(n_trees)[t]``.  Inside a tree the draws are,
in order: the bootstrap sample ``rng.integers(0, N, size=N)`` (when
bootstrapping), then one ``rng.choice(p, size=mtry, replace=False)`` per
splittable node, visiting nodes depth-first with the left child first.  Trees
are therefore independent of each other and of the number of worker threads.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import DimensionMismatch, DrfError, ValidationError, as_input_matrix, validate_distance_matrix


TIE_REL_TOL = 1e-12


class EmptyNode(DrfError, ValueError):
    code = "EmptyNode"


class InvalidPartition(DrfError, ValueError):
    code = "InvalidPartition"


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    mtry: Optional[int] = None  # None: max(1, p // 3)
    min_leaf: int = 1
    bootstrap: bool = True
    seed: int = 0

    def resolve(self, n_features: int) -> "ForestConfig":
        mtry = self.mtry if self.mtry is not None else max(1, n_features // 3)
        cfg = ForestConfig(self.n_trees, int(mtry), self.min_leaf, self.bootstrap, self.seed)
        if cfg.n_trees < 1:
            raise ValidationError(f"n_trees must be >= 1, got {cfg.n_trees}")
        if not 1 <= cfg.mtry <= n_features:
            raise ValidationError(f"mtry must be in [1, {n_features}], got {cfg.mtry}")
        if cfg.min_leaf < 1:
            raise ValidationError(f"min_leaf must be >= 1, got {cfg.min_leaf}")
        return cfg


@dataclass(frozen=True)
class SplitRule:
    feature: int
    threshold: float  # go left iff x[feature] <= threshold


@dataclass(eq=False)
class Tree:
    """Flat array representation of one tree.

    ``feature[k] == -1`` marks node ``k`` as a leaf; its in-bag training
    indices (with bootstrap multiplicity) are
    ``samples[leaf_start[k]:leaf_stop[k]]``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    gain: np.ndarray
    leaf_start: np.ndarray
    leaf_stop: np.ndarray
    samples: np.ndarray
    leaf_mean: Optional[np.ndarray] = None
    _leaf_sets: dict = field(default=None, init=False, repr=False, compare=False)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def is_leaf(self, node: int) -> bool:
        return self.feature[node] < 0

    def leaf_samples(self, node: int) -> np.ndarray:
        return self.samples[self.leaf_start[node]:self.leaf_stop[node]]

    def unique_leaf_samples(self, node: int) -> np.ndarray:
        if self._leaf_sets is None:
            self._leaf_sets = {}
        out = self._leaf_sets.get(node)
        if out is None:
            out = np.unique(self.leaf_samples(node))
            self._leaf_sets[node] = out
        return out

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of ``X``."""
        X = np.atleast_2d(X)
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        active = self.feature[node] >= 0
        while active.any():
            r = rows[active]
            nd = node[active]
            go_left = X[r, self.feature[nd]] <= self.threshold[nd]
            node[r] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] >= 0
        return node

    def split_sequence(self) -> list[tuple[int, float, float]]:
        """(feature, threshold, gain) of internal nodes, depth-first, left first."""
        out, stack = [], [0]
        while stack:
            k = stack.pop()
            if self.feature[k] >= 0:
                out.append((int(self.feature[k]), float(self.threshold[k]), float(self.gain[k])))
                stack.extend((int(self.right[k]), int(self.left[k])))
        return out


@dataclass
class Forest:
    trees: list
    config: ForestConfig
    n_train: int
    n_features: int

    @property
    def has_leaf_means(self) -> bool:
        return all(t.leaf_mean is not None for t in self.trees)


def node_dispersion(indices, D) -> float:
    """Pairwise dispersion ``sum_ij D_ij^2 / (2n)`` of the samples in ``indices``."""
    idx = np.asarray(indices, dtype=np.intp)
    if idx.size == 0:
        raise EmptyNode("node has no samples")
    D = np.asarray(D)
    sub = D[np.ix_(idx, idx)]
    return float(np.sum(sub * sub) / (2.0 * idx.size))


def split_gain(parent, left, right, D) -> float:
    """Dispersion reduction of splitting ``parent`` into ``left`` and ``right``.

    Index sets are compared as multisets so bootstrap duplicates are allowed.
    """
    parent, left, right = (np.asarray(s, dtype=np.intp) for s in (parent, left, right))
    if left.size == 0 or right.size == 0:
        raise InvalidPartition("both children must be non-empty")
    if not np.array_equal(np.sort(parent), np.sort(np.concatenate([left, right]))):
        raise InvalidPartition("left and right do not partition parent")
    return node_dispersion(parent, D) - node_dispersion(left, D) - node_dispersion(right, D)


def sweep_gains(P: np.ndarray) -> np.ndarray:
    """Split gains for every boundary of an ordered squared-distance block.

    ``P`` is the squared-distance matrix of a node with samples already in
    split order.  Entry ``k - 1`` of the result is the gain of sending the
    first ``k`` samples left, for ``k = 1 .. n-1``.  Each left/right block sum
    is grown one sample at a time from row partial sums, O(n^2) overall.
    """
    n = P.shape[0]
    diag = np.diagonal(P)
    lower = np.zeros(n)
    upper = np.zeros(n)
    if n > 1:
        # sum_{j<k} P[k, j] and sum_{j>k} P[k, j]
        lower[1:] = np.diagonal(np.cumsum(P, axis=1), offset=-1)
        upper[:-1] = np.diagonal(np.cumsum(P[:, ::-1], axis=1)[::-1], offset=-1)[::-1]
    left_sum = np.cumsum(diag + 2.0 * lower)
    right_sum = np.cumsum((diag + 2.0 * upper)[::-1])[::-1]
    total = left_sum[-1]
    k = np.arange(1, n, dtype=np.float64)
    return total / (2.0 * n) - left_sum[:-1] / (2.0 * k) - right_sum[1:] / (2.0 * (n - k))


def _midpoint(a: float, b: float) -> float:
    mid = 0.5 * (a + b)
    # adjacent floats: keep a <= mid < b
    return a if mid >= b else mid


def _best_split_sq(idx: np.ndarray, X: np.ndarray, D2: np.ndarray,
                   features, min_leaf: int) -> Optional[tuple[SplitRule, float]]:
    n = idx.size
    if n < 2 * min_leaf or n < 2:
        return None
    block = D2[np.ix_(idx, idx)]
    # gains closer than this are ties (identical partitions reached through
    # different features differ only by summation order)
    tol = TIE_REL_TOL * float(block.sum()) / (2.0 * n)
    sizes = np.arange(1, n)
    size_ok = (sizes >= min_leaf) & (n - sizes >= min_leaf)
    best = None
    best_gain = tol
    for f in sorted(int(f) for f in features):
        xs = X[idx, f]
        order = np.argsort(xs, kind="stable")
        xs = xs[order]
        valid = size_ok & (xs[:-1] < xs[1:])
        if not valid.any():
            continue
        gains = np.where(valid, sweep_gains(block[np.ix_(order, order)]), -np.inf)
        top = gains.max()
        if top > best_gain + (tol if best is not None else 0.0):
            k = int(np.flatnonzero(gains >= top - tol)[0])
            best_gain = float(gains[k])
            best = SplitRule(f, _midpoint(float(xs[k]), float(xs[k + 1])))
    if best is None:
        return None
    return best, best_gain


def best_split(node_indices, X, D, mtry: int, rng: np.random.Generator,
               min_leaf: int = 1) -> Optional[tuple[SplitRule, float]]:
    """Best axis-aligned split of a node over ``mtry`` randomly drawn features.

    Candidate thresholds are midpoints between consecutive distinct feature
    values.  Gains within ``1e-12`` times the node dispersion of each other
    are tied; ties go to the lower feature index, then the lower threshold.
    Returns ``None`` when no split leaves ``min_leaf`` samples on both sides
    or no gain exceeds that same tolerance.
    """
    X = np.asarray(X, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    idx = np.asarray(node_indices, dtype=np.intp)
    feats = rng.choice(X.shape[1], size=mtry, replace=False)
    return _best_split_sq(idx, X, D * D, feats, min_leaf)


def _grow_tree(X: np.ndarray, D2: np.ndarray, cfg: ForestConfig,
               rng: np.random.Generator, Y: Optional[np.ndarray]) -> Tree:
    n, p = X.shape
    in_bag = rng.integers(0, n, size=n) if cfg.bootstrap else np.arange(n)
    feature, threshold, left, right, gain = [], [], [], [], []
    leaf_start, leaf_stop, samples = [], [], []

    def new_node():
        for lst, v in ((feature, -1), (threshold, 0.0), (left, -1), (right, -1),
                       (gain, 0.0), (leaf_start, 0), (leaf_stop, 0)):
            lst.append(v)
        return len(feature) - 1

    stack = [(new_node(), in_bag)]
    n_samples = 0
    while stack:
        node, idx = stack.pop()
        found = None
        if idx.size >= max(2, 2 * cfg.min_leaf):
            feats = rng.choice(p, size=cfg.mtry, replace=False)
            found = _best_split_sq(idx, X, D2, feats, cfg.min_leaf)
        if found is None:
            members = np.sort(idx)
            leaf_start[node] = n_samples
            n_samples += members.size
            leaf_stop[node] = n_samples
            samples.append(members)
            continue
        rule, g = found
        go_left = X[idx, rule.feature] <= rule.threshold
        lnode, rnode = new_node(), new_node()
        feature[node], threshold[node], gain[node] = rule.feature, rule.threshold, g
        left[node], right[node] = lnode, rnode
        stack.append((rnode, idx[~go_left]))
        stack.append((lnode, idx[go_left]))

    tree = Tree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        gain=np.array(gain, dtype=np.float64),
        leaf_start=np.array(leaf_start, dtype=np.int64),
        leaf_stop=np.array(leaf_stop, dtype=np.int64),
        samples=np.concatenate(samples).astype(np.int64),
    )
    if Y is not None:
        tree.leaf_mean = compute_leaf_means(tree, Y)
    return tree


def compute_leaf_means(tree: Tree, Y: np.ndarray) -> np.ndarray:
    """Mean in-bag response of every leaf (zeros on internal nodes)."""
    Y = np.asarray(Y, dtype=np.float64)
    out = np.zeros((tree.n_nodes, Y.shape[1]))
    for k in np.flatnonzero(tree.feature < 0):
        out[k] = Y[tree.leaf_samples(k)].mean(axis=0)
    return out


def tree_streams(seed: int, n_trees: int) -> list[np.random.Generator]:
    return [np.random.Generator(np.random.PCG64(s))
            for s in np.random.SeedSequence(seed).spawn(n_trees)]


def fit_forest(X, D, config: ForestConfig = ForestConfig(), Y=None, n_jobs: int = 1) -> Forest:
    """Grow a distance random forest on inputs ``X`` and response distances ``D``.

    If ``Y`` is given, each leaf also stores its mean in-bag response so the
    forest can serve as an ordinary (Euclidean mean) random forest.
    """
    X = as_input_matrix(X)
    D = validate_distance_matrix(D)
    n, p = X.shape
    if D.shape[0] != n:
        raise DimensionMismatch(f"X has {n} rows but D is {D.shape[0]}x{D.shape[0]}")
    if Y is not None:
        Y = np.asarray(Y, dtype=np.float64)
        if Y.ndim == 1:
            Y = Y[:, None]
        if Y.shape[0] != n:
            raise DimensionMismatch(f"Y has {Y.shape[0]} rows, expected {n}")
    cfg = config.resolve(p)
    D2 = D * D
    rngs = tree_streams(cfg.seed, cfg.n_trees)
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = list(pool.map(lambda r: _grow_tree(X, D2, cfg, r, Y), rngs))
    else:
        trees = [_grow_tree(X, D2, cfg, r, Y) for r in rngs]
    return Forest(trees=trees, config=cfg, n_train=n, n_features=p)


def _check_point(forest: Forest, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != forest.n_features:
        raise DimensionMismatch(f"expected {forest.n_features} input features, got {x.shape[-1]}")
    return x


def affinity(forest: Forest, x_new) -> np.ndarray:
    """Fraction of trees in which ``x_new`` shares a leaf with each training sample.

    A training index counts once per tree regardless of its bootstrap
    multiplicity in the leaf.
    """
    return affinity_matrix(forest, np.atleast_2d(_check_point(forest, x_new)))[0]


def affinity_matrix(forest: Forest, X_new) -> np.ndarray:
    """Row ``r`` holds the affinity vector of ``X_new[r]``."""
    X_new = np.atleast_2d(_check_point(forest, X_new))
    A = np.zeros((X_new.shape[0], forest.n_train))
    for tree in forest.trees:
        leaves = tree.apply(X_new)
        for r, leaf in enumerate(leaves):
            A[r, tree.unique_leaf_samples(int(leaf))] += 1.0
    return A / len(forest.trees)

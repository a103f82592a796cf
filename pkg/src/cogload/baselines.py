"""Classical classifiers: Gaussian naive Bayes, nearest centroid, k-NN and a CART tree.

All models take flat feature rows ``X`` (n, d) and integer labels ``y`` in
[0, n_classes). Each ``predict_proba`` returns (n, n_classes) rows summing to 1;
``predict`` is its argmax with ties going to the lowest class index.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from cogload.errors import KOutOfRange, MissingClass

N_CLASSES = 3


def _check_classes(y: np.ndarray, n_classes: int) -> np.ndarray:
    counts = np.bincount(y, minlength=n_classes)[:n_classes]
    if np.any(counts == 0):
        raise MissingClass(f"no training samples for classes {np.flatnonzero(counts == 0).tolist()}")
    return counts


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


# -- Gaussian naive Bayes ---------------------------------------------------


@dataclass(frozen=True)
class GaussianNB:
    log_prior: np.ndarray  # (k,)
    means: np.ndarray  # (k, d)
    variances: np.ndarray  # (k, d)

    def joint_log_likelihood(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        out = np.empty((X.shape[0], len(self.log_prior)))
        for c in range(len(self.log_prior)):
            var = self.variances[c]
            out[:, c] = self.log_prior[c] - 0.5 * (
                np.log(2.0 * np.pi * var).sum() + (((X - self.means[c]) ** 2) / var).sum(axis=1)
            )
        return out

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return _softmax_rows(self.joint_log_likelihood(X))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.predict_proba(X).argmax(axis=1)


def gaussian_nb_fit(X: np.ndarray, y: np.ndarray, n_classes: int = N_CLASSES, var_floor: float = 1e-9) -> GaussianNB:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    counts = _check_classes(y, n_classes)
    means = np.stack([X[y == c].mean(axis=0) for c in range(n_classes)])
    variances = np.stack([X[y == c].var(axis=0) for c in range(n_classes)])
    return GaussianNB(np.log(counts / counts.sum()), means, np.maximum(variances, var_floor))


def gaussian_nb_predict(model: GaussianNB, X: np.ndarray) -> np.ndarray:
    return model.predict_proba(X)


# -- nearest centroid --------------------------------------------------------


@dataclass(frozen=True)
class NearestCentroid:
    centroids: np.ndarray  # (k, d)

    def distances(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.sqrt(((X[:, None, :] - self.centroids[None, :, :]) ** 2).sum(axis=2))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.distances(X).argmin(axis=1)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Scores as a softmax of negative Euclidean distances."""
        return _softmax_rows(-self.distances(X))


def nearest_centroid_fit(X: np.ndarray, y: np.ndarray, n_classes: int = N_CLASSES) -> NearestCentroid:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    _check_classes(y, n_classes)
    return NearestCentroid(np.stack([X[y == c].mean(axis=0) for c in range(n_classes)]))


def nearest_centroid_predict(model: NearestCentroid, X: np.ndarray) -> np.ndarray:
    return model.predict(X)


# -- k nearest neighbours ----------------------------------------------------


@dataclass(frozen=True)
class KNN:
    X: np.ndarray
    y: np.ndarray
    k: int = 5
    n_classes: int = N_CLASSES

    def __post_init__(self):
        if not 1 <= self.k <= len(self.y):
            raise KOutOfRange(f"k={self.k} outside [1, {len(self.y)}]")

    def neighbors(self, X: np.ndarray, chunk: int = 32) -> np.ndarray:
        """Indices of the k nearest training rows; equal distances keep training order."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        out = np.empty((X.shape[0], self.k), dtype=np.int64)
        for s in range(0, X.shape[0], chunk):
            d = ((X[s : s + chunk, None, :] - self.X[None, :, :]) ** 2).sum(axis=2)
            out[s : s + chunk] = np.argsort(d, axis=1, kind="stable")[:, : self.k]
        return out

    def votes(self, X: np.ndarray) -> np.ndarray:
        nb = self.y[self.neighbors(X)]
        return np.stack([(nb == c).sum(axis=1) for c in range(self.n_classes)], axis=1)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.votes(X) / self.k

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.votes(X).argmax(axis=1)


def knn_fit(X: np.ndarray, y: np.ndarray, k: int = 5, n_classes: int = N_CLASSES) -> KNN:
    return KNN(np.asarray(X, dtype=np.float64), np.asarray(y, dtype=np.int64), k, n_classes)


def knn_predict(X_train: np.ndarray, y_train: np.ndarray, x: np.ndarray, k: int = 5) -> np.ndarray:
    """Majority vote among the k Euclidean-nearest training rows."""
    return knn_fit(X_train, y_train, k).predict(x)


# -- CART decision tree --------------------------------------------------------


@dataclass
class TreeNode:
    counts: np.ndarray
    feature: int = -1
    threshold: float = 0.0
    left: TreeNode | None = None
    right: TreeNode | None = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    @property
    def prediction(self) -> int:
        return int(np.argmax(self.counts))


@dataclass
class DecisionTree:
    root: TreeNode
    n_classes: int = N_CLASSES
    max_depth: int = 12
    min_leaf: int = 1
    n_nodes: int = field(default=0)

    def _leaves(self, X: np.ndarray) -> list[TreeNode]:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        out = []
        for row in X:
            node = self.root
            while not node.is_leaf:
                node = node.left if row[node.feature] <= node.threshold else node.right
            out.append(node)
        return out

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.array([leaf.prediction for leaf in self._leaves(X)], dtype=np.int64)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return np.array([leaf.counts / leaf.counts.sum() for leaf in self._leaves(X)])

    def depth(self) -> int:
        def d(node):
            return 0 if node.is_leaf else 1 + max(d(node.left), d(node.right))

        return d(self.root)


# Weighted child impurities closer than this are treated as equal.
_TIE_TOL = 1e-12


def _best_split(X: np.ndarray, y: np.ndarray, n_classes: int, min_leaf: int):
    """Exhaustive Gini scan over midpoints of sorted unique values.

    Returns (feature, threshold) or None. Ties go to the lowest feature index,
    then the lowest threshold.
    """
    n, d = X.shape
    order = np.argsort(X, axis=0, kind="stable")
    xs = np.take_along_axis(X, order, axis=0)  # (n, d)
    onehot = np.eye(n_classes)[y]  # (n, k)
    left_counts = np.cumsum(onehot[order], axis=0)[:-1]  # (n-1, d, k): split after row i
    total = onehot.sum(axis=0)
    right_counts = total - left_counts
    n_left = np.arange(1, n)[:, None].astype(np.float64)
    n_right = n - n_left
    valid = (xs[1:] > xs[:-1]) & (n_left >= min_leaf) & (n_right >= min_leaf)
    if not valid.any():
        return None
    # n * weighted Gini = n_L - sum(c_L^2)/n_L + n_R - sum(c_R^2)/n_R
    score = (n_left - (left_counts**2).sum(axis=2) / n_left) + (n_right - (right_counts**2).sum(axis=2) / n_right)
    score = np.where(valid, score, np.inf)
    best = score.min()
    tied = score <= best + _TIE_TOL * max(1.0, abs(best))
    thresholds = 0.5 * (xs[1:] + xs[:-1])
    # Adjacent floats can round the midpoint up onto the right value.
    thresholds = np.where(thresholds >= xs[1:], xs[:-1], thresholds)
    # Lowest feature first, then lowest threshold within it.
    feat = int(np.flatnonzero(tied.any(axis=0))[0])
    thr = float(thresholds[tied[:, feat], feat].min())
    return feat, thr


def decision_tree_fit(
    X: np.ndarray, y: np.ndarray, max_depth: int = 12, min_leaf: int = 1, n_classes: int = N_CLASSES
) -> DecisionTree:
    """Binary CART with Gini impurity; leaves predict their majority class.

    Any impure node with a valid split is split, even when the split does not
    lower impurity (needed for XOR-like data).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    tree = DecisionTree(TreeNode(np.bincount(y, minlength=n_classes).astype(np.float64)), n_classes, max_depth, min_leaf)
    stack = [(tree.root, np.arange(len(y)), 0)]
    n_nodes = 1
    while stack:
        node, idx, depth = stack.pop()
        if depth >= max_depth or np.count_nonzero(node.counts) <= 1 or len(idx) < 2 * min_leaf:
            continue
        split = _best_split(X[idx], y[idx], n_classes, min_leaf)
        if split is None:
            continue
        node.feature, node.threshold = split
        go_left = X[idx, node.feature] <= node.threshold
        li, ri = idx[go_left], idx[~go_left]
        node.left = TreeNode(np.bincount(y[li], minlength=n_classes).astype(np.float64))
        node.right = TreeNode(np.bincount(y[ri], minlength=n_classes).astype(np.float64))
        n_nodes += 2
        stack.append((node.right, ri, depth + 1))
        stack.append((node.left, li, depth + 1))
    tree.n_nodes = n_nodes
    return tree


def decision_tree_predict(tree: DecisionTree, X: np.ndarray) -> np.ndarray:
    return tree.predict(X)

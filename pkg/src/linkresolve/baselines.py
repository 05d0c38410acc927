"""Non-graph baselines: a CART-style decision tree and a small MLP, both
trained on concatenated endpoint features for link prediction, with a
regression variant of each for the downstream risk task."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin

from .gat import stable_sigmoid
from .optim import Adam, GradCheckReport, TrainingDivergedError, gradient_check
from .validation import (
    as_binary_labels,
    as_float_matrix,
    as_float_vector,
    as_index_pairs,
    check_fitted,
)


def make_pair_samples(pairs, labels, features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Concatenate source-then-destination feature rows for each pair."""
    features = as_float_matrix(features, "features")
    pairs = as_index_pairs(pairs, features.shape[0])
    labels = as_binary_labels(labels, "labels", length=len(pairs))
    if len(pairs) == 0:
        return np.zeros((0, 2 * features.shape[1])), labels
    return np.hstack([features[pairs[:, 0]], features[pairs[:, 1]]]), labels


# ---------------------------------------------------------------------------
# Decision tree (CART)
# ---------------------------------------------------------------------------


@dataclass
class TreeNode:
    depth: int
    n_samples: int
    value: float  # leaf prediction: positive fraction (gini) or mean (mse)
    class_counts: tuple[float, float] | None = None  # weighted (neg, pos), gini only
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


def gini_impurity(counts) -> float:
    """Gini impurity of a weighted class-count vector."""
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        return 0.0
    p = counts / total
    return float(1.0 - np.sum(p * p))


def _node_impurity(y: np.ndarray, w: np.ndarray, criterion: str) -> float:
    total = w.sum()
    if criterion == "gini":
        pos = float(w[y == 1].sum())
        return gini_impurity([total - pos, pos])
    mean = float(np.average(y, weights=w))
    return float(np.average((y - mean) ** 2, weights=w))


def _best_split(X, y, w, criterion: str, min_leaf: int):
    """Exhaustive search over midpoints of sorted distinct values per feature;
    returns (feature, threshold, weighted_child_impurity) or None."""
    n, n_features = X.shape
    best = None
    total_w = w.sum()
    for f in range(n_features):
        order = np.argsort(X[:, f], kind="mergesort")
        xs, ys, ws = X[order, f], y[order], w[order]
        distinct_breaks = np.nonzero(np.diff(xs))[0]  # split after these positions
        for b in distinct_breaks:
            n_left = b + 1
            if n_left < min_leaf or n - n_left < min_leaf:
                continue
            threshold = (xs[b] + xs[b + 1]) / 2.0
            wl, wr = ws[: b + 1], ws[b + 1 :]
            score = (
                wl.sum() * _node_impurity(ys[: b + 1], wl, criterion)
                + wr.sum() * _node_impurity(ys[b + 1 :], wr, criterion)
            ) / total_w
            if best is None or score < best[2]:
                best = (f, float(threshold), float(score))
    return best


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    sample_weight: np.ndarray | None = None,
    criterion: str = "gini",
    max_depth: int = 8,
    min_leaf: int = 2,
) -> TreeNode:
    X = as_float_matrix(X, "X")
    y = np.asarray(y, dtype=np.float64)
    w = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight, float)
    if criterion not in ("gini", "mse"):
        raise ValueError(f"unknown criterion {criterion!r}")
    if len(y) < 2:
        raise ValueError("need at least 2 samples to grow a tree")

    def build(idx: np.ndarray, depth: int) -> TreeNode:
        yi, wi = y[idx], w[idx]
        total = wi.sum()
        if criterion == "gini":
            pos = float(wi[yi == 1].sum())
            value = pos / total
            counts = (total - pos, pos)
        else:
            value = float(np.average(yi, weights=wi))
            counts = None
        node = TreeNode(
            depth=depth, n_samples=len(idx), value=value, class_counts=counts
        )
        impurity = _node_impurity(yi, wi, criterion)
        if impurity <= 1e-12 or depth >= max_depth or len(idx) < 2 * min_leaf:
            return node
        found = _best_split(X[idx], yi, wi, criterion, min_leaf)
        if found is None:
            return node
        # zero-gain splits are allowed (CART keeps growing until purity/depth/size)
        f, threshold, _score = found
        node.feature = f
        node.threshold = threshold
        left_mask = X[idx, f] <= threshold
        node.left = build(idx[left_mask], depth + 1)
        node.right = build(idx[~left_mask], depth + 1)
        return node

    return build(np.arange(len(y)), 0)


def tree_predict_one(node: TreeNode, x: np.ndarray) -> float:
    while not node.is_leaf:
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node.value


def tree_predict(node: TreeNode, X: np.ndarray, n_features: int) -> np.ndarray:
    X = as_float_matrix(X, "X", n_cols=n_features)
    return np.array([tree_predict_one(node, row) for row in X])


def tree_top_splits(root: TreeNode, k: int) -> list[tuple[int, int, float]]:
    """First k internal splits in breadth-first order: (feature, depth, threshold)."""
    out = []
    queue = [root]
    while queue and len(out) < k:
        node = queue.pop(0)
        if node.is_leaf:
            continue
        out.append((node.feature, node.depth, node.threshold))
        queue.append(node.left)
        queue.append(node.right)
    return out


def tree_export_text(root: TreeNode, feature_names: list[str]) -> str:
    """Indented dump of splits with attribute names and class distributions."""
    lines: list[str] = []

    def walk(node: TreeNode, indent: int):
        pad = "  " * indent
        if node.is_leaf:
            dist = (
                f" counts={tuple(round(c, 3) for c in node.class_counts)}"
                if node.class_counts is not None
                else ""
            )
            lines.append(f"{pad}leaf value={node.value:.4f} n={node.n_samples}{dist}")
            return
        lines.append(
            f"{pad}{feature_names[node.feature]} <= {node.threshold:.6g} (n={node.n_samples})"
        )
        walk(node.left, indent + 1)
        lines.append(f"{pad}{feature_names[node.feature]} > {node.threshold:.6g}")
        walk(node.right, indent + 1)

    walk(root, 0)
    return "\n".join(lines) + "\n"


class DecisionTreeLinkModel(BaseEstimator, ClassifierMixin):
    """CART with Gini impurity over concatenated endpoint features."""

    def __init__(self, max_depth: int = 8, min_leaf: int = 2, decision_threshold: float = 0.5):
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.decision_threshold = decision_threshold

    def fit(self, X, y, sample_weight=None):
        X = as_float_matrix(X, "X")
        y = as_binary_labels(y, "y", length=X.shape[0])
        self.n_features_in_ = X.shape[1]
        self.tree_ = grow_tree(
            X, y, sample_weight, criterion="gini",
            max_depth=self.max_depth, min_leaf=self.min_leaf,
        )
        return self

    def predict_proba(self, X) -> np.ndarray:
        check_fitted(self, "tree_")
        return tree_predict(self.tree_, X, self.n_features_in_)

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) >= self.decision_threshold).astype(np.int64)

    def top_splits(self, k: int, feature_names: list[str] | None = None):
        check_fitted(self, "tree_")
        splits = tree_top_splits(self.tree_, k)
        if feature_names is None:
            return splits
        return [(feature_names[f], depth) for f, depth, _t in splits]

    def export_text(self, feature_names: list[str]) -> str:
        check_fitted(self, "tree_")
        return tree_export_text(self.tree_, feature_names)


class DecisionTreeRiskModel(BaseEstimator, RegressorMixin):
    """Regression tree with variance-reduction splits."""

    def __init__(self, max_depth: int = 8, min_leaf: int = 2):
        self.max_depth = max_depth
        self.min_leaf = min_leaf

    def fit(self, X, y, sample_weight=None):
        X = as_float_matrix(X, "X")
        y = as_float_vector(y, "y", length=X.shape[0])
        self.n_features_in_ = X.shape[1]
        self.tree_ = grow_tree(
            X, y, sample_weight, criterion="mse",
            max_depth=self.max_depth, min_leaf=self.min_leaf,
        )
        return self

    def predict(self, X) -> np.ndarray:
        check_fitted(self, "tree_")
        return tree_predict(self.tree_, X, self.n_features_in_)


# ---------------------------------------------------------------------------
# MLP
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MlpConfig:
    lr: float = 0.01
    epochs: int = 2000
    weight_decay: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0 or self.epochs < 0 or self.weight_decay < 0:
            raise ValueError("lr must be > 0, epochs >= 0, weight_decay >= 0")


def init_mlp(sizes: list[int], seed: int = 0) -> list[np.ndarray]:
    """Glorot-uniform weights and zero biases, stored [W0, b0, W1, b1, ...]."""
    rng = np.random.Generator(np.random.PCG64(seed))
    params: list[np.ndarray] = []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        params.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        params.append(np.zeros(fan_out))
    return params


def mlp_forward(params: list[np.ndarray], X: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Hidden layers ReLU, scalar logistic output. Returns (probs, activations)."""
    acts = [np.asarray(X, dtype=np.float64)]
    h = acts[0]
    n_layers = len(params) // 2
    for k in range(n_layers):
        W, b = params[2 * k], params[2 * k + 1]
        z = h @ W.T + b
        h = stable_sigmoid(z) if k == n_layers - 1 else np.maximum(z, 0.0)
        acts.append(h)
    return h[:, 0] if h.ndim == 2 and h.shape[1] == 1 else h, acts


def mlp_loss_and_grads(
    params: list[np.ndarray],
    X: np.ndarray,
    y: np.ndarray,
    loss: str = "bce",
    sample_weight: np.ndarray | None = None,
) -> tuple[float, list[np.ndarray]]:
    """Full-batch loss and analytic gradients.

    bce: mean binary cross-entropy against 0/1 labels.
    wmse: weighted mean squared error of the logistic output against targets.
    """
    y = np.asarray(y, dtype=np.float64)
    w = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight, float)
    probs, acts = mlp_forward(params, X)
    eps = 1e-12
    p = np.clip(probs, eps, 1.0 - eps)
    if loss == "bce":
        value = float(-np.average(y * np.log(p) + (1.0 - y) * np.log(1.0 - p), weights=w))
        # d(loss)/d(logit) for sigmoid+BCE
        dz = (w * (p - y) / w.sum())[:, None]
    elif loss == "wmse":
        value = float(np.average((probs - y) ** 2, weights=w))
        dz = (w * 2.0 * (probs - y) * probs * (1.0 - probs) / w.sum())[:, None]
    else:
        raise ValueError(f"unknown loss {loss!r}")

    grads: list[np.ndarray] = [np.zeros_like(pm) for pm in params]
    n_layers = len(params) // 2
    delta = dz  # gradient at the pre-activation of the output layer
    for k in range(n_layers - 1, -1, -1):
        W = params[2 * k]
        h_in = acts[k]
        grads[2 * k] = delta.T @ h_in
        grads[2 * k + 1] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ W) * (acts[k] > 0)
    return value, grads


def train_mlp(
    sizes: list[int],
    X: np.ndarray,
    y: np.ndarray,
    config: MlpConfig,
    loss: str = "bce",
    sample_weight: np.ndarray | None = None,
) -> list[np.ndarray]:
    X = as_float_matrix(X, "X", n_cols=sizes[0])
    params = init_mlp(sizes, seed=config.seed)
    optimizer = Adam(params, lr=config.lr, weight_decay=config.weight_decay)
    for epoch in range(1, config.epochs + 1):
        with np.errstate(all="ignore"):
            value, grads = mlp_loss_and_grads(params, X, y, loss, sample_weight)
        if not np.isfinite(value):
            raise TrainingDivergedError(f"MLP loss diverged at epoch {epoch}")
        optimizer.step(params, grads)
    return params


def mlp_grad_check(
    sizes: list[int],
    X: np.ndarray,
    y: np.ndarray,
    loss: str = "bce",
    seed: int = 0,
    delta: float = 1e-5,
    tolerance: float = 1e-4,
) -> GradCheckReport:
    params = init_mlp(sizes, seed=seed)
    _, analytic = mlp_loss_and_grads(params, X, y, loss)
    names = []
    for k in range(len(params) // 2):
        names.extend([f"W{k}", f"b{k}"])

    def loss_fn(ps):
        value, _ = mlp_loss_and_grads(ps, X, y, loss)
        return value

    return gradient_check(loss_fn, params, analytic, names=names, delta=delta, tolerance=tolerance)


class MlpLinkModel(BaseEstimator, ClassifierMixin):
    """Two-hidden-layer perceptron over concatenated endpoint features."""

    def __init__(
        self,
        hidden: tuple[int, ...] = (64, 32),
        lr: float = 0.01,
        epochs: int = 2000,
        weight_decay: float = 0.0,
        decision_threshold: float = 0.5,
        seed: int = 0,
    ):
        self.hidden = hidden
        self.lr = lr
        self.epochs = epochs
        self.weight_decay = weight_decay
        self.decision_threshold = decision_threshold
        self.seed = seed

    def fit(self, X, y, sample_weight=None):
        X = as_float_matrix(X, "X")
        y = as_binary_labels(y, "y", length=X.shape[0])
        self.n_features_in_ = X.shape[1]
        self.sizes_ = [X.shape[1], *self.hidden, 1]
        cfg = MlpConfig(
            lr=self.lr, epochs=self.epochs, weight_decay=self.weight_decay, seed=self.seed
        )
        self.params_ = train_mlp(self.sizes_, X, y, cfg, loss="bce", sample_weight=sample_weight)
        return self

    def predict_proba(self, X) -> np.ndarray:
        check_fitted(self, "params_")
        X = as_float_matrix(X, "X", n_cols=self.n_features_in_)
        return mlp_forward(self.params_, X)[0]

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) >= self.decision_threshold).astype(np.int64)


class MlpRiskModel(BaseEstimator, RegressorMixin):
    """MLP regressor with logistic output for targets normalized into (0, 1)."""

    def __init__(
        self,
        hidden: tuple[int, ...] = (64, 32),
        lr: float = 0.01,
        epochs: int = 2000,
        weight_decay: float = 0.0,
        seed: int = 0,
    ):
        self.hidden = hidden
        self.lr = lr
        self.epochs = epochs
        self.weight_decay = weight_decay
        self.seed = seed

    def fit(self, X, y, sample_weight=None):
        X = as_float_matrix(X, "X")
        y = as_float_vector(y, "y", length=X.shape[0])
        self.n_features_in_ = X.shape[1]
        self.sizes_ = [X.shape[1], *self.hidden, 1]
        cfg = MlpConfig(
            lr=self.lr, epochs=self.epochs, weight_decay=self.weight_decay, seed=self.seed
        )
        self.params_ = train_mlp(self.sizes_, X, y, cfg, loss="wmse", sample_weight=sample_weight)
        return self

    def predict(self, X) -> np.ndarray:
        check_fitted(self, "params_")
        X = as_float_matrix(X, "X", n_cols=self.n_features_in_)
        return mlp_forward(self.params_, X)[0]

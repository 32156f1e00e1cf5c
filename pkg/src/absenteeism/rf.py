"""Random forest with Gini splits and impurity-based feature importance.

Trees grow depth-unbounded on bootstrap samples, drawing a fresh random
subset of candidate features at every node. Split quality is ranked by the
weighted child quality sum(counts^2)/n_left + sum(counts^2)/n_right, which
orders splits identically to Gini impurity decrease but stays in integer
arithmetic: equal-quality candidates compare exactly, so the documented tie
rule (lowest feature index, then lowest threshold) is deterministic instead
of at the mercy of float rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import RngStream

LEAF = -1


class TreeError(ValueError):
    """Invalid input to tree growth or traversal."""


def gini(counts: np.ndarray) -> float:
    """Gini impurity 1 - sum(p^2) of a class count vector."""
    counts = np.asarray(counts, dtype=np.float64)
    if counts.ndim != 1 or counts.size == 0:
        raise TreeError("counts must be a non-empty vector")
    if np.any(counts < 0):
        raise TreeError("counts must be non-negative")
    n = counts.sum()
    if n == 0:
        raise TreeError("cannot score an empty node")
    p = counts / n
    return float(1.0 - np.sum(p * p))


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 500
    features_per_split: int | None = None   # default ceil(sqrt(d))
    min_split: int = 2
    n_classes: int = 3
    seed: int = 0


@dataclass
class TreeNodes:
    """One tree in flat arrays; children of node i are left[i] / right[i].

    Rows with feature value <= threshold go left. Leaves carry feature
    LEAF and the majority label of their training rows.
    """

    feature: np.ndarray     # int32, LEAF marks leaves
    threshold: np.ndarray   # float64
    left: np.ndarray        # int32
    right: np.ndarray       # int32
    label: np.ndarray       # int8, valid at leaves


@dataclass
class ForestModel:
    trees: list[TreeNodes]
    n_features: int
    n_classes: int
    importances: np.ndarray                  # normalized to sum 1
    oob_indices: list[np.ndarray] = field(default_factory=list)


def best_split(X: np.ndarray, y: np.ndarray, feature_indices: np.ndarray,
               n_classes: int = 3) -> tuple[int, float, float] | None:
    """Best (feature, midpoint threshold, impurity decrease) at one node.

    Candidates are midpoints between consecutive distinct sorted values of
    each offered feature. The winner maximizes impurity decrease; exact
    ties go to the lowest feature index, then the lowest threshold.
    Returns None when no candidate strictly reduces impurity.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = X.shape[0]
    if n < 2:
        return None
    feats = np.sort(np.asarray(feature_indices, dtype=np.int64))

    Xn = X[:, feats]
    order = np.argsort(Xn, axis=0, kind="stable")
    sx = np.take_along_axis(Xn, order, axis=0)
    onehot = np.eye(n_classes, dtype=np.int64)[y]
    pre = np.cumsum(onehot[order], axis=0)          # (n, m, k) prefix class counts

    total = pre[-1]                                  # (m, k), same for every column
    nl = np.arange(1, n, dtype=np.int64)[:, None]    # rows on the left of boundary b
    nr = n - nl
    left = pre[:-1]                                  # (n-1, m, k)
    right = total[None, :, :] - left
    sum_l2 = np.sum(left * left, axis=2)             # (n-1, m)
    sum_r2 = np.sum(right * right, axis=2)

    # Quality as an exact fraction: (sum_l2 * nr + sum_r2 * nl) / (nl * nr).
    num = sum_l2 * nr + sum_r2 * nl
    den = nl * nr
    valid = sx[:-1] != sx[1:]                        # boundary between distinct values
    if not valid.any():
        return None

    # IEEE division is correctly rounded, hence monotone: every exact-maximum
    # fraction lands on the float maximum, so the float argmax set is a safe
    # superset to refine with integer cross products.
    quality = np.where(valid, num / den, -np.inf)
    best = quality.max()
    near = np.argwhere(quality == best)
    best_num, best_den = None, None
    winners = []
    for b, f in near:
        a, c = int(num[b, f]), int(den[b, 0])   # den depends on the boundary only
        if best_num is None or a * best_den > best_num * c:
            best_num, best_den = a, c
            winners = [(b, f)]
        elif a * best_den == best_num * c:
            winners.append((b, f))

    # No-gain check, exact: quality must exceed sum(total^2)/n.
    tot2 = int(np.sum(total[0] * total[0]))
    if best_num * n <= tot2 * best_den:
        return None

    # Tie rule: lowest feature index, then lowest threshold. feats is sorted
    # and boundaries ascend with thresholds, so lexicographic (f, b) works.
    b, f = min(winners, key=lambda bf: (bf[1], bf[0]))
    threshold = float((sx[b, f] + sx[b + 1, f]) / 2.0)

    parent = gini(total[0])
    nl_v, nr_v = b + 1, n - (b + 1)
    child = (nl_v / n) * gini(left[b, f]) + (nr_v / n) * gini(right[b, f])
    return int(feats[f]), threshold, float(parent - child)


def _grow_tree(X: np.ndarray, y: np.ndarray, config: ForestConfig, m_features: int,
               rng: RngStream, importance_acc: np.ndarray, n_total_rows: int) -> TreeNodes:
    n, d = X.shape
    feature, threshold, left, right, label = [], [], [], [], []

    def new_node():
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        label.append(0)
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.arange(n))]
    while stack:
        node, rows = stack.pop()
        yn = y[rows]
        counts = np.bincount(yn, minlength=config.n_classes)
        label[node] = int(np.argmax(counts))
        if len(rows) < config.min_split or np.max(counts) == len(rows):
            continue
        feats = rng.choice(d, m_features, replace=False)
        found = best_split(X[rows], yn, feats, config.n_classes)
        if found is None:
            continue
        f, thr, decrease = found
        importance_acc[f] += (len(rows) / n_total_rows) * decrease
        go_left = X[rows, f] <= thr
        feature[node] = f
        threshold[node] = thr
        l_id, r_id = new_node(), new_node()
        left[node], right[node] = l_id, r_id
        stack.append((l_id, rows[go_left]))
        stack.append((r_id, rows[~go_left]))

    return TreeNodes(
        feature=np.array(feature, dtype=np.int32),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int32),
        right=np.array(right, dtype=np.int32),
        label=np.array(label, dtype=np.int8),
    )


def forest_fit(X: np.ndarray, y: np.ndarray,
               config: ForestConfig = ForestConfig()) -> ForestModel:
    """Grow the forest on bootstrap samples of the rows.

    Every tree gets its own derived random stream, a bootstrap sample of
    the full training size, and records its out-of-bag row indices.
    Importance accumulates row-weighted impurity decreases over all trees
    and is normalized to sum one at the end.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n, d = X.shape
    if n == 0:
        raise TreeError("cannot fit on zero rows")
    if y.shape[0] != n:
        raise TreeError("X and y row counts differ")
    m = config.features_per_split or math.ceil(math.sqrt(d))
    if not 1 <= m <= d:
        raise TreeError(f"features_per_split {m} outside 1..{d}")

    root_rng = RngStream(config.seed)
    importance_acc = np.zeros(d)
    trees, oob = [], []
    for t in range(config.n_trees):
        rng = root_rng.spawn(t)
        sample = rng.integers(0, n, size=n)
        oob.append(np.setdiff1d(np.arange(n), np.unique(sample)))
        trees.append(_grow_tree(X[sample], y[sample], config, m, rng,
                                importance_acc, n))

    total = importance_acc.sum()
    importances = importance_acc / total if total > 0 else importance_acc
    return ForestModel(trees=trees, n_features=d, n_classes=config.n_classes,
                       importances=importances, oob_indices=oob)


def _tree_votes(tree: TreeNodes, X: np.ndarray) -> np.ndarray:
    """Leaf label per row, descending all rows level-synchronously."""
    node = np.zeros(X.shape[0], dtype=np.int32)
    active = tree.feature[node] != LEAF
    while active.any():
        idx = np.flatnonzero(active)
        cur = node[idx]
        go_left = X[idx, tree.feature[cur]] <= tree.threshold[cur]
        node[idx] = np.where(go_left, tree.left[cur], tree.right[cur])
        active = tree.feature[node] != LEAF
    return tree.label[node].astype(np.int64)


def forest_votes(model: ForestModel, X: np.ndarray) -> np.ndarray:
    """Per-class tree vote counts, shape (n_rows, n_classes)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.n_features:
        raise TreeError(
            f"input has {X.shape[1]} columns, forest expects {model.n_features}"
        )
    votes = np.zeros((X.shape[0], model.n_classes), dtype=np.int64)
    rows = np.arange(X.shape[0])
    for tree in model.trees:
        votes[rows, _tree_votes(tree, X)] += 1
    return votes


def forest_predict(model: ForestModel, X: np.ndarray) -> np.ndarray:
    """Plurality vote; ties resolve toward the less severe class."""
    return np.argmax(forest_votes(model, X), axis=1)


def feature_importance(model: ForestModel) -> np.ndarray:
    """Normalized impurity-decrease importance, one entry per feature."""
    return model.importances.copy()

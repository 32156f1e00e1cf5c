"""Random forest: impurity, exhaustive split oracle, voting, importance."""

from fractions import Fraction

import numpy as np
import pytest

from absenteeism.numerics import RngStream
from absenteeism.rf import (
    LEAF,
    ForestConfig,
    ForestModel,
    TreeError,
    TreeNodes,
    _tree_votes,
    best_split,
    feature_importance,
    forest_fit,
    forest_predict,
    forest_votes,
    gini,
)

XOR_X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
XOR_Y = np.array([0, 0, 1, 1])


def _blobs(n_per=20, seed=5):
    rng = np.random.default_rng(seed)
    centers = np.array([[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]])
    X = np.vstack([c + 0.4 * rng.normal(size=(n_per, 2)) for c in centers])
    y = np.repeat(np.arange(3), n_per)
    return X, y


def _leaf_tree(label):
    return TreeNodes(
        feature=np.array([LEAF], dtype=np.int32),
        threshold=np.array([0.0]),
        left=np.array([LEAF], dtype=np.int32),
        right=np.array([LEAF], dtype=np.int32),
        label=np.array([label], dtype=np.int8),
    )


# ---------------------------------------------------------------------------
# gini


def test_gini_pure_node_is_zero():
    assert gini(np.array([10, 0, 0])) == 0.0


def test_gini_even_two_class():
    assert gini(np.array([5, 5])) == pytest.approx(0.5, abs=1e-15)


def test_gini_even_three_class():
    assert gini(np.array([1, 1, 1])) == pytest.approx(2.0 / 3.0, abs=1e-15)


def test_gini_rejects_degenerate_counts():
    with pytest.raises(TreeError, match="empty node"):
        gini(np.array([0, 0, 0]))
    with pytest.raises(TreeError, match="non-negative"):
        gini(np.array([3, -1]))
    with pytest.raises(TreeError, match="non-empty"):
        gini(np.array([]))


# ---------------------------------------------------------------------------
# best_split


def test_hand_worked_split():
    X = np.array([[0.0], [0.0], [1.0], [1.0]])
    y = np.array([0, 0, 1, 1])
    found = best_split(X, y, np.array([0]), n_classes=2)
    assert found is not None
    f, thr, dec = found
    assert f == 0
    assert thr == pytest.approx(0.5)
    assert dec == pytest.approx(0.5, abs=1e-15)


def test_pure_rows_yield_no_split():
    X = np.array([[0.0], [1.0], [2.0]])
    assert best_split(X, np.array([1, 1, 1]), np.array([0])) is None


def test_single_row_yields_no_split():
    assert best_split(np.array([[1.0]]), np.array([0]), np.array([0])) is None


def test_constant_feature_yields_no_split():
    X = np.ones((6, 1))
    y = np.array([0, 1, 0, 1, 0, 1])
    assert best_split(X, y, np.array([0])) is None


def _oracle_best_split(X, y, n_classes):
    """Exhaustive candidate scan with exact rational comparison."""
    n, d = X.shape
    best = None          # (quality, feature, threshold, decrease)
    for f in range(d):
        vals = np.sort(np.unique(X[:, f]))
        for lo, hi in zip(vals[:-1], vals[1:]):
            thr = (lo + hi) / 2.0
            go_left = X[:, f] <= thr
            nl, nr = int(go_left.sum()), int((~go_left).sum())
            cl = np.bincount(y[go_left], minlength=n_classes)
            cr = np.bincount(y[~go_left], minlength=n_classes)
            quality = Fraction(
                int(np.sum(cl * cl)) * nr + int(np.sum(cr * cr)) * nl, nl * nr
            )
            if best is None or quality > best[0]:
                parent = 1.0 - float(np.sum((np.bincount(y, minlength=n_classes) / n) ** 2))
                child = (nl / n) * (1.0 - float(np.sum((cl / nl) ** 2))) + (
                    nr / n
                ) * (1.0 - float(np.sum((cr / nr) ** 2)))
                best = (quality, f, thr, parent - child)
    if best is None:
        return None
    total = np.bincount(y, minlength=n_classes)
    if best[0] <= Fraction(int(np.sum(total * total)), n):
        return None
    return best[1], best[2], best[3]


@pytest.mark.parametrize("trial", range(12))
def test_split_matches_exhaustive_oracle(trial):
    rng = np.random.default_rng(200 + trial)
    n = int(rng.integers(4, 50))
    d = int(rng.integers(1, 5))
    # A coarse value lattice forces frequent exact ties.
    X = rng.integers(0, 4, size=(n, d)).astype(np.float64)
    y = rng.integers(0, 3, size=n)
    got = best_split(X, y, np.arange(d))
    want = _oracle_best_split(X, y, 3)
    if want is None:
        assert got is None
        return
    assert got is not None
    assert got[0] == want[0]
    assert got[1] == pytest.approx(want[1], abs=1e-12)
    assert got[2] == pytest.approx(want[2], abs=1e-12)


def test_returned_decrease_survives_recount():
    rng = np.random.default_rng(42)
    X = rng.normal(size=(30, 3))
    y = rng.integers(0, 3, size=30)
    f, thr, dec = best_split(X, y, np.arange(3))
    go_left = X[:, f] <= thr
    n, nl, nr = 30, int(go_left.sum()), int((~go_left).sum())

    def impurity(labels):
        p = np.bincount(labels, minlength=3) / len(labels)
        return 1.0 - float(np.sum(p * p))

    recount = impurity(y) - (nl / n) * impurity(y[go_left]) - (nr / n) * impurity(y[~go_left])
    assert dec == pytest.approx(recount, abs=1e-12)


def test_tie_breaks_to_lowest_feature_then_threshold():
    # Features 0 and 1 are identical, so every split quality ties.
    X = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [1.0, 1.0]])
    y = np.array([0, 0, 1, 1])
    f, thr, _ = best_split(X, y, np.array([0, 1]), n_classes=2)
    assert f == 0
    assert thr == pytest.approx(0.5)


# ---------------------------------------------------------------------------
# forest


def test_single_tree_reproduces_stump():
    X = np.array([[0.0], [1.0]])
    y = np.array([0, 1])
    # Find a seed whose bootstrap draw contains both rows, so the lone
    # tree actually splits.
    for seed in range(30):
        if set(RngStream(seed).spawn(0).integers(0, 2, size=2)) == {0, 1}:
            break
    model = forest_fit(X, y, ForestConfig(n_trees=1, n_classes=2, seed=seed))
    assert np.array_equal(forest_predict(model, X), y)
    assert feature_importance(model)[0] == pytest.approx(1.0)


def test_plurality_vote():
    model = ForestModel(
        trees=[_leaf_tree(0), _leaf_tree(0), _leaf_tree(2)],
        n_features=2,
        n_classes=3,
        importances=np.array([0.5, 0.5]),
    )
    assert forest_predict(model, np.zeros((1, 2)))[0] == 0
    assert forest_votes(model, np.zeros((1, 2))).tolist() == [[2, 0, 1]]


def test_vote_tie_resolves_to_lower_ordinal():
    model = ForestModel(
        trees=[_leaf_tree(1), _leaf_tree(0)],
        n_features=2,
        n_classes=3,
        importances=np.array([0.5, 0.5]),
    )
    assert forest_predict(model, np.zeros((1, 2)))[0] == 0


def test_xor_forest_memorizes():
    # Ten copies of each corner keep bootstrap samples representative.
    X = np.tile(XOR_X, (10, 1))
    y = np.tile(XOR_Y, 10)
    model = forest_fit(X, y, ForestConfig(n_trees=100, n_classes=2, seed=0))
    acc = float(np.mean(forest_predict(model, XOR_X) == XOR_Y))
    assert acc >= 0.95


def test_tree_order_permutation_invariance():
    X, y = _blobs()
    model = forest_fit(X, y, ForestConfig(n_trees=31, seed=2))
    probe = np.random.default_rng(1).normal(size=(20, 2)) * 2.0 + 0.5
    base = forest_predict(model, probe)
    shuffled = ForestModel(
        trees=list(reversed(model.trees)),
        n_features=model.n_features,
        n_classes=model.n_classes,
        importances=model.importances,
    )
    assert np.array_equal(forest_predict(shuffled, probe), base)


def test_trees_memorize_their_bootstrap_sample():
    X, y = _blobs(n_per=15)
    cfg = ForestConfig(n_trees=10, seed=9)
    model = forest_fit(X, y, cfg)
    root = RngStream(cfg.seed)
    for t, tree in enumerate(model.trees):
        sample = root.spawn(t).integers(0, len(y), size=len(y))
        assert np.array_equal(_tree_votes(tree, X[sample]), y[sample])
        # Out-of-bag rows are exactly the complement of the sample.
        expected_oob = np.setdiff1d(np.arange(len(y)), np.unique(sample))
        assert np.array_equal(model.oob_indices[t], expected_oob)


def test_tree_structure_is_well_formed():
    X, y = _blobs(n_per=10)
    model = forest_fit(X, y, ForestConfig(n_trees=3, seed=4))
    for tree in model.trees:
        n_nodes = tree.feature.size
        for i in range(n_nodes):
            if tree.feature[i] == LEAF:
                assert tree.left[i] == LEAF and tree.right[i] == LEAF
            else:
                assert 0 <= tree.left[i] < n_nodes
                assert 0 <= tree.right[i] < n_nodes
                assert tree.left[i] != tree.right[i]


# ---------------------------------------------------------------------------
# importance


def test_importances_are_a_distribution():
    X, y = _blobs()
    model = forest_fit(X, y, ForestConfig(n_trees=25, seed=3))
    imp = feature_importance(model)
    assert imp.shape == (2,)
    assert np.all(imp >= 0)
    assert imp.sum() == pytest.approx(1.0, abs=1e-9)


def test_never_split_feature_scores_zero():
    X, y = _blobs()
    X = np.hstack([X, np.full((len(y), 1), 7.0)])    # constant third column
    model = forest_fit(X, y, ForestConfig(n_trees=20, features_per_split=3, seed=1))
    assert feature_importance(model)[2] == 0.0


def test_single_split_feature_takes_all_importance():
    X = np.array([[0.0, 5.0], [1.0, 5.0]])
    y = np.array([0, 1])
    for seed in range(30):
        if set(RngStream(seed).spawn(0).integers(0, 2, size=2)) == {0, 1}:
            break
    model = forest_fit(
        X, y, ForestConfig(n_trees=1, features_per_split=2, n_classes=2, seed=seed)
    )
    assert np.allclose(feature_importance(model), [1.0, 0.0])


# ---------------------------------------------------------------------------
# errors


def test_empty_input_rejected():
    with pytest.raises(TreeError, match="zero rows"):
        forest_fit(np.zeros((0, 2)), np.zeros(0, dtype=int))


def test_row_count_mismatch_rejected():
    with pytest.raises(TreeError, match="row counts"):
        forest_fit(np.zeros((3, 2)), np.zeros(2, dtype=int))


def test_features_per_split_bounds_checked():
    X, y = _blobs(n_per=4)
    with pytest.raises(TreeError, match="features_per_split"):
        forest_fit(X, y, ForestConfig(n_trees=1, features_per_split=5))


def test_predict_dimension_mismatch():
    X, y = _blobs(n_per=4)
    model = forest_fit(X, y, ForestConfig(n_trees=2, seed=1))
    with pytest.raises(TreeError, match="columns"):
        forest_predict(model, np.zeros((1, 3)))

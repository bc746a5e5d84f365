import numpy as np
import pytest

from noduleml.models.tree import Tree, fit_tree


def brute_force_best_split(X, y, rows, min_leaf=1):
    """Exhaustive impurity scan over all features and thresholds (Gini)."""
    rows = np.asarray(rows)
    best = None  # (weighted_gini, feature, threshold)
    m = rows.size
    for f in range(X.shape[1]):
        v = X[rows, f]
        for thr in np.unique(v)[:-1]:
            # candidate threshold between thr and the next distinct value
            left = rows[v <= thr]
            right = rows[v > thr]
            if left.size < min_leaf or right.size < min_leaf:
                continue

            def gini(rr):
                p = y[rr].mean()
                return 1.0 - p * p - (1 - p) * (1 - p)

            score = (left.size * gini(left) + right.size * gini(right)) / m
            if best is None or score < best[0] - 1e-12:
                best = (score, f, thr)
    return best


class TestTreeBasics:
    def test_pure_node_no_split(self):
        X = np.array([[1.0], [2.0], [3.0]])
        y = np.array([1.0, 1.0, 1.0])
        t = fit_tree(X, y, np.arange(3))
        assert t.n_nodes == 1
        assert t.feature[0] == -1
        assert t.value[0] == 1.0

    def test_depth_zero_majority_fraction(self):
        X = np.array([[0.0], [1.0], [2.0], [3.0]])
        y = np.array([1.0, 1.0, 1.0, 0.0])
        t = fit_tree(X, y, np.arange(4), depth=0)
        assert t.n_nodes == 1
        assert t.value[0] == pytest.approx(0.75)

    def test_single_perfect_splitter_at_root(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(60, 5))
        y = (X[:, 3] > 0.2).astype(float)
        t = fit_tree(X, y, np.arange(60))
        assert t.feature[0] == 3
        oracle = brute_force_best_split(X, y, np.arange(60))
        assert oracle[1] == 3

    def test_splits_match_brute_force_oracle(self):
        rng = np.random.default_rng(8)
        for trial in range(20):
            n = int(rng.integers(8, 30))
            X = rng.integers(0, 4, size=(n, 3)).astype(float)
            y = (rng.random(n) < 0.5).astype(float)
            t = fit_tree(X, y, np.arange(n), depth=1)
            oracle = brute_force_best_split(X, y, np.arange(n))
            if oracle is None or y.min() == y.max():
                continue
            got_f = t.feature[0]

            def gini(rr):
                p = y[rr].mean()
                return 1 - p * p - (1 - p) * (1 - p)

            if got_f >= 0:
                rows = np.arange(n)
                left = rows[X[:, got_f] <= t.threshold[0]]
                right = rows[X[:, got_f] > t.threshold[0]]
                got_score = (left.size * gini(left) + right.size * gini(right)) / n
                assert got_score == pytest.approx(oracle[0], abs=1e-12), trial
            else:
                # no split found: the oracle must offer no strict improvement
                assert oracle[0] >= gini(np.arange(n)) - 1e-12

    def test_min_leaf_respected(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(40, 3))
        y = (rng.random(40) < 0.5).astype(float)
        t = fit_tree(X, y, np.arange(40), min_leaf=5)
        # count rows reaching each leaf
        leaf_of = np.empty(40, dtype=int)
        for i in range(40):
            node = 0
            while t.feature[node] >= 0:
                node = (t.left[node] if X[i, t.feature[node]] <= t.threshold[node]
                        else t.right[node])
            leaf_of[i] = node
        _, counts = np.unique(leaf_of, return_counts=True)
        assert counts.min() >= 5

    def test_duplicate_rows_act_as_weights(self):
        X = np.array([[0.0], [1.0]])
        y = np.array([0.0, 1.0])
        t = fit_tree(X, y, np.array([0, 1, 1, 1]), depth=0)
        assert t.value[0] == pytest.approx(0.75)

    def test_regression_mode_leaf_means(self):
        X = np.array([[0.0], [0.0], [1.0], [1.0]])
        y = np.array([1.0, 3.0, 10.0, 14.0])
        t = fit_tree(X, y, np.arange(4), regression=True)
        pred = t.predict(X)
        assert pred[:2] == pytest.approx([2.0, 2.0])
        assert pred[2:] == pytest.approx([12.0, 12.0])

    def test_newton_leaf_denominator(self):
        X = np.array([[0.0], [1.0]])
        y = np.array([0.4, 0.4])
        den = np.array([0.2, 0.2])
        t = fit_tree(X, y, np.arange(2), regression=True, leaf_den=den, depth=0)
        assert t.value[0] == pytest.approx(0.8 / 0.4)


class TestDeterminismAndTies:
    def test_tie_breaks_to_lowest_feature_then_threshold(self):
        # two identical features: the split must use feature 0
        X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        y = np.array([0.0, 0.0, 1.0, 1.0])
        t = fit_tree(X, y, np.arange(4))
        assert t.feature[0] == 0

    def test_rebuild_identical(self):
        rng = np.random.default_rng(10)
        X = rng.normal(size=(100, 6))
        y = (rng.random(100) < 0.5).astype(float)
        rows = rng.integers(0, 100, 100)
        a = fit_tree(X, y, rows, mtry=3, mtry_seed=42)
        b = fit_tree(X, y, rows, mtry=3, mtry_seed=42)
        np.testing.assert_array_equal(a.feature, b.feature)
        np.testing.assert_array_equal(a.threshold, b.threshold)
        np.testing.assert_array_equal(a.value, b.value)

    def test_monotone_transform_same_structure(self):
        rng = np.random.default_rng(11)
        X = rng.normal(size=(80, 4))
        y = (rng.random(80) < 0.5).astype(float)
        rows = np.arange(80)
        base = fit_tree(X, y, rows, mtry=2, mtry_seed=5)
        X2 = X.copy()
        X2[:, 1] = np.exp(X2[:, 1])  # strictly increasing transform
        X2[:, 3] = X2[:, 3] ** 3
        other = fit_tree(X2, y, rows, mtry=2, mtry_seed=5)
        np.testing.assert_array_equal(base.feature, other.feature)
        np.testing.assert_array_equal(base.value, other.value)
        np.testing.assert_array_equal(base.predict(X), other.predict(X2))


class TestSerialization:
    def test_round_trip(self):
        rng = np.random.default_rng(12)
        X = rng.normal(size=(30, 3))
        y = (rng.random(30) < 0.5).astype(float)
        t = fit_tree(X, y, np.arange(30))
        back = Tree.from_jsonable(t.to_jsonable())
        np.testing.assert_array_equal(t.predict(X), back.predict(X))

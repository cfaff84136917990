import numpy as np
import pytest

from oracles import grid_search_hinge

from formcheck.errors import ConfigError, DegenerateLabelsError, StructureError
from formcheck.learn import (
    FeatureMask,
    ForestConfig,
    SelectionConfig,
    SvmConfig,
    decision_value,
    decision_values,
    hinge_objective,
    importances,
    rbf_decision_values,
    select_features,
    train_forest,
    train_linear,
    train_rbf,
)


def separable_1d(rng, n=60):
    x = np.concatenate([rng.uniform(-3, -0.5, n // 2), rng.uniform(0.5, 3, n // 2)])
    y = (x > 0).astype(int)
    return x[:, None], y


def xor_2d(rng, per_cluster=20, spread=0.25):
    centers = [(-1, -1, 0), (1, 1, 0), (-1, 1, 1), (1, -1, 1)]
    X, y = [], []
    for cx, cy, lab in centers:
        X.append(np.column_stack([
            rng.normal(cx, spread, per_cluster), rng.normal(cy, spread, per_cluster)
        ]))
        y.extend([lab] * per_cluster)
    return np.vstack(X), np.array(y)


def blobs_2d(rng, n=40, gap=5.0):
    X = np.vstack([
        rng.normal((-gap / 2, 0), 0.5, (n // 2, 2)),
        rng.normal((gap / 2, 0), 0.5, (n // 2, 2)),
    ])
    y = np.array([0] * (n // 2) + [1] * (n // 2))
    return X, y


class TestForest:
    def test_separable_oob_perfect(self):
        rng = np.random.default_rng(0)
        X, y = separable_1d(rng)
        forest = train_forest(X, y, ForestConfig(n_trees=60, seed=1))
        assert forest.oob_accuracy == 1.0

    def test_noise_importances_spread(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(80, 30))
        y = rng.integers(0, 2, 80)
        forest = train_forest(X, y, ForestConfig(n_trees=200, seed=2))
        imp = importances(forest)
        assert imp.max() < 5 * imp.mean()

    def test_xor_training_accuracy(self):
        rng = np.random.default_rng(2)
        X, y = xor_2d(rng)
        forest = train_forest(X, y, ForestConfig(n_trees=50, seed=3))
        assert np.mean(forest.predict(X) == y) == 1.0

    def test_importances_sum_to_one(self):
        rng = np.random.default_rng(3)
        X, y = xor_2d(rng)
        forest = train_forest(X, y, ForestConfig(n_trees=40, seed=4))
        assert importances(forest).sum() == pytest.approx(1.0, abs=1e-9)

    def test_single_informative_feature_wins(self):
        rng = np.random.default_rng(4)
        noise = rng.normal(size=(100, 50))
        signal = np.concatenate([rng.uniform(-2, -0.5, 50), rng.uniform(0.5, 2, 50)])
        X = np.hstack([noise[:, :25], signal[:, None], noise[:, 25:]])
        y = (signal > 0).astype(int)
        forest = train_forest(X, y, ForestConfig(n_trees=80, seed=5))
        assert int(np.argmax(importances(forest))) == 25

    def test_constant_features_get_zero(self):
        rng = np.random.default_rng(5)
        signal = np.concatenate([rng.uniform(-2, -0.5, 30), rng.uniform(0.5, 2, 30)])
        X = np.hstack([np.ones((60, 3)), signal[:, None], np.full((60, 2), 7.0)])
        y = (signal > 0).astype(int)
        forest = train_forest(X, y, ForestConfig(n_trees=40, seed=6))
        imp = importances(forest)
        assert imp[3] == pytest.approx(1.0, abs=1e-9)
        assert np.all(imp[[0, 1, 2, 4, 5]] == 0.0)

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(6)
        X, y = xor_2d(rng)
        f1 = train_forest(X, y, ForestConfig(n_trees=20, seed=7))
        f2 = train_forest(X, y, ForestConfig(n_trees=20, seed=7))
        for t1, t2 in zip(f1.trees, f2.trees):
            assert np.array_equal(t1.feature, t2.feature)
            assert np.array_equal(t1.threshold, t2.threshold)
            assert np.array_equal(t1.value, t2.value)

    def test_leaves_pure_or_tiny(self):
        rng = np.random.default_rng(7)
        X, y = xor_2d(rng, spread=0.6)
        forest = train_forest(X, y, ForestConfig(n_trees=10, seed=8))
        # Leaf values are class fractions; purity means 0 or 1 unless the
        # leaf holds fewer than two bootstrap samples (then anything goes).
        for tree in forest.trees:
            leaves = tree.feature < 0
            fracs = tree.value[leaves]
            assert np.all((fracs == 0.0) | (fracs == 1.0) | (fracs == 0.5))

    def test_degenerate_labels_rejected(self):
        X = np.zeros((10, 3))
        with pytest.raises(DegenerateLabelsError):
            train_forest(X, np.ones(10), ForestConfig(n_trees=5))


class TestSelectFeatures:
    def test_planted_block_recovered(self, planted_block_selection):
        # The discriminative signal lives in the knee-flexion channels of the
        # descent/hold window; selection must concentrate there.
        mask, layout, in_block = planted_block_selection
        assert not mask.fallback
        assert in_block.mean() >= 0.8
        assert len(mask) < 0.05 * layout.size

    def test_noise_labels_small_or_fallback(self):
        # Features far outnumber tree splits here, the regime the probe
        # threshold is designed for.
        rng = np.random.default_rng(9)
        X = rng.normal(size=(40, 4000))
        y = rng.integers(0, 2, 40)
        col_frames = np.repeat(np.arange(200), 20)
        mask = select_features(X, y, col_frames, SelectionConfig(seed=2))
        assert mask.fallback or len(mask) < 0.15 * 4000

    def test_never_returns_probe_columns(self):
        rng = np.random.default_rng(10)
        X = rng.normal(size=(40, 60))
        y = (X[:, 3] > 0).astype(int)
        col_frames = np.repeat(np.arange(6), 10)
        mask = select_features(X, y, col_frames, SelectionConfig(seed=3))
        assert len(mask) >= 1
        assert mask.indices.max() < 60
        assert mask.n_total == 60

    def test_fallback_top_k(self):
        # Constant X: nothing can beat the probes, fallback must trigger.
        X = np.ones((20, 40))
        y = np.array([0, 1] * 10)
        col_frames = np.repeat(np.arange(4), 10)
        mask = select_features(X, y, col_frames, SelectionConfig(seed=4, fallback_top_k=7))
        assert mask.fallback
        assert len(mask) == 7

    def test_mask_validation(self):
        with pytest.raises(StructureError):
            FeatureMask(np.array([1, 1]), 10, 0.0)
        with pytest.raises(StructureError):
            FeatureMask(np.array([11]), 10, 0.0)


class TestTrainLinear:
    def test_separable_blobs_zero_training_errors(self):
        rng = np.random.default_rng(11)
        X, y = blobs_2d(rng)
        model = train_linear(X, y, C=10.0)
        pred = decision_values(model, X) > 0
        assert np.array_equal(pred, y == 1)

    def test_noise_weights_small(self):
        # Boundary-heavy separable data: many support points, so noise
        # contributions average out as the margin only needs feature 0.
        rng = np.random.default_rng(12)
        n = 200
        x = np.concatenate([rng.uniform(-3.0, -2.0, n // 2), rng.uniform(2.0, 3.0, n // 2)])
        y = (x > 0).astype(int)
        X = np.column_stack([x, rng.normal(0, 0.5, n)])
        X = np.hstack([X, 0.5 * rng.normal(size=(n, 5))])
        model = train_linear(X, y, C=1.0)
        w = np.abs(model.weights)
        assert w[1:].max() < 0.1 * w.max()

    def test_label_flip_symmetry(self):
        rng = np.random.default_rng(13)
        X, y = blobs_2d(rng)
        m1 = train_linear(X, y, C=1.0)
        m2 = train_linear(X, 1 - y, C=1.0)
        assert np.allclose(m1.weights, -m2.weights)
        assert m1.bias == pytest.approx(-m2.bias)

    def test_objective_history_non_increasing(self):
        rng = np.random.default_rng(14)
        X, y = xor_2d(rng)  # not separable: plenty of hinge activity
        model = train_linear(X, y, C=1.0)
        h = np.array(model.objective_history)
        assert np.all(np.diff(h) <= 1e-12)

    def test_matches_grid_search_small_instances(self):
        rng = np.random.default_rng(15)
        for trial in range(4):
            n, d = 12, int(rng.integers(1, 4))
            X = rng.normal(size=(n, d))
            y = rng.integers(0, 2, n)
            if y.min() == y.max():
                y[0] = 1 - y[0]
            ys = np.where(y > 0, 1.0, -1.0)
            C = float(rng.choice([0.5, 1.0, 2.0]))
            model = train_linear(X, y, C=C, cfg=SvmConfig(C=C, max_epochs=3000))
            ours = hinge_objective(model.weights, model.bias, X, ys, C)
            brute, _ = grid_search_hinge(X, ys, C)
            assert ours <= brute + 1e-3

    def test_degenerate_labels(self):
        X = np.random.default_rng(16).normal(size=(8, 2))
        with pytest.raises(DegenerateLabelsError):
            train_linear(X, np.zeros(8))


class TestDecisionValue:
    def _model(self):
        rng = np.random.default_rng(17)
        X, y = blobs_2d(rng)
        return train_linear(X, y, C=10.0), X, y

    def test_on_hyperplane_zero(self):
        model, _, _ = self._model()
        w = model.weights
        x = -model.bias * w / np.dot(w, w)
        assert decision_value(model, x) == pytest.approx(0.0, abs=1e-9)

    def test_margin_on_separable_training_points(self):
        model, X, y = self._model()
        vals = decision_values(model, X)
        signed = np.where(y > 0, vals, -vals)
        assert signed.min() >= 0.99  # soft margin with large C reaches ~1

    def test_linearity(self):
        model, X, _ = self._model()
        x = X[0]
        f0 = decision_value(model, np.zeros_like(x))
        for alpha in (0.0, 0.5, 2.0, -1.0):
            assert decision_value(model, alpha * x) - f0 == pytest.approx(
                alpha * (decision_value(model, x) - f0), abs=1e-9
            )

    def test_length_mismatch(self):
        model, _, _ = self._model()
        with pytest.raises(StructureError):
            decision_value(model, np.zeros(5))


class TestTrainRbf:
    def test_xor_perfect_where_linear_cannot(self):
        rng = np.random.default_rng(18)
        X, y = xor_2d(rng)
        linear = train_linear(X, y, C=1.0)
        lin_acc = np.mean((decision_values(linear, X) > 0) == (y == 1))
        rbf = train_rbf(X, y, C=10.0, gamma=1.0)
        rbf_acc = np.mean((rbf_decision_values(rbf, X) > 0) == (y == 1))
        assert rbf_acc == 1.0
        assert lin_acc < 0.8

    def test_comparable_on_separable(self):
        rng = np.random.default_rng(19)
        X, y = blobs_2d(rng, n=60)
        Xt, yt = blobs_2d(rng, n=40)
        linear = train_linear(X, y, C=1.0)
        rbf = train_rbf(X, y, C=1.0, gamma=0.5)
        lin_acc = np.mean((decision_values(linear, Xt) > 0) == (yt == 1))
        rbf_acc = np.mean((rbf_decision_values(rbf, Xt) > 0) == (yt == 1))
        assert abs(lin_acc - rbf_acc) <= 0.02

    def test_gamma_to_zero_degenerates(self):
        rng = np.random.default_rng(20)
        X, y = blobs_2d(rng)
        model = train_rbf(X, y, C=1.0, gamma=1e-9)
        vals = rbf_decision_values(model, X)
        assert vals.std() < 0.05 * (abs(vals.mean()) + 1.0)
        with pytest.raises(ConfigError):
            train_rbf(X, y, C=1.0, gamma=0.0)

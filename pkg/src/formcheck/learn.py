"""From-scratch learners: CART trees, random forest, probe-based feature
selection, and max-margin linear/RBF classifiers.

The forest is used for feature importance (Gini impurity decrease); trees are
grown to purity or until a node holds fewer than two bootstrap samples. The
margin classifiers solve the soft-margin hinge objective

    J(u) = 0.5 ||u||^2 + C * sum_i max(0, 1 - y_i <u, x~_i>)

where x~ is the input with a constant 1 appended, so the bias is part of the
regularized weight vector. Training uses dual coordinate descent with a
seeded per-epoch order and keeps the iterate with the best primal objective,
so the recorded objective history is non-increasing by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from numba import njit

from .errors import (
    ConfigError,
    DegenerateLabelsError,
    InvalidInputError,
    StructureError,
)


# ---------------------------------------------------------------------------
# decision trees / random forest


@njit(cache=True)
def _grow_tree(X, y, w, max_features, seed, cap):
    """Grow one CART tree on bootstrap-weighted rows; returns flat node arrays.

    Candidate features are drawn without replacement per node; the draw keeps
    going past max_features until a valid split is found (or all features are
    exhausted), so leaves are pure, hold < 2 samples, or are constant in X.
    """
    n, d = X.shape
    np.random.seed(seed)
    samples = np.empty(n, dtype=np.int64)
    ns = 0
    for i in range(n):
        if w[i] > 0:
            samples[ns] = i
            ns += 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)
    importance = np.zeros(d)
    stack_start = np.empty(cap, dtype=np.int64)
    stack_end = np.empty(cap, dtype=np.int64)
    stack_node = np.empty(cap, dtype=np.int64)
    perm = np.arange(d)
    vals = np.empty(n)
    n_nodes = 1
    stack_start[0] = 0
    stack_end[0] = ns
    stack_node[0] = 0
    top = 1
    w_root = 0.0
    for t in range(ns):
        w_root += w[samples[t]]
    while top > 0:
        top -= 1
        start = stack_start[top]
        end = stack_end[top]
        node = stack_node[top]
        w_node = 0.0
        p_node = 0.0
        count = 0
        for t in range(start, end):
            s = samples[t]
            w_node += w[s]
            p_node += w[s] * y[s]
            count += int(w[s])
        value[node] = p_node / w_node
        frac = p_node / w_node
        gini_node = 2.0 * frac * (1.0 - frac)
        if p_node == 0.0 or p_node == w_node or count < 2:
            continue
        best_gain = -1.0
        best_f = -1
        best_thr = 0.0
        nn = end - start
        for c in range(d):
            r = c + np.random.randint(0, d - c)
            perm[c], perm[r] = perm[r], perm[c]
            f = perm[c]
            for t in range(nn):
                vals[t] = X[samples[start + t], f]
            order = np.argsort(vals[:nn], kind="mergesort")
            cw = 0.0
            cp = 0.0
            for t in range(nn - 1):
                s = samples[start + order[t]]
                cw += w[s]
                cp += w[s] * y[s]
                v_here = vals[order[t]]
                v_next = vals[order[t + 1]]
                if not v_next > v_here:
                    continue
                wl = cw
                wr = w_node - cw
                if wl <= 0.0 or wr <= 0.0:
                    continue
                pl = cp / wl
                pr = (p_node - cp) / wr
                child = (wl * 2.0 * pl * (1.0 - pl) + wr * 2.0 * pr * (1.0 - pr)) / w_node
                gain = gini_node - child
                if gain > best_gain + 1e-15:
                    best_gain = gain
                    best_f = f
                    best_thr = 0.5 * (v_here + v_next)
            if c + 1 >= max_features and best_f >= 0:
                break
        if best_f < 0:
            continue
        i0 = start
        j0 = end - 1
        while i0 <= j0:
            if X[samples[i0], best_f] <= best_thr:
                i0 += 1
            else:
                samples[i0], samples[j0] = samples[j0], samples[i0]
                j0 -= 1
        mid = i0
        if mid == start or mid == end:
            continue
        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        importance[best_f] += (w_node / w_root) * best_gain
        stack_start[top] = start
        stack_end[top] = mid
        stack_node[top] = left[node]
        top += 1
        stack_start[top] = mid
        stack_end[top] = end
        stack_node[top] = right[node]
        top += 1
        n_nodes += 2
    return (
        feature[:n_nodes],
        threshold[:n_nodes],
        left[:n_nodes],
        right[:n_nodes],
        value[:n_nodes],
        importance,
    )


@njit(cache=True)
def _tree_predict(feature, threshold, left, right, value, X):
    n = X.shape[0]
    out = np.empty(n)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out


@dataclass(frozen=True)
class DecisionTree:
    """Flat-array CART tree; feature < 0 marks a leaf, value is the positive fraction."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict_fraction(self, X: np.ndarray) -> np.ndarray:
        return _tree_predict(
            self.feature, self.threshold, self.left, self.right, self.value,
            np.ascontiguousarray(X, dtype=np.float64),
        )

    @property
    def n_nodes(self) -> int:
        return self.feature.size


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ConfigError("n_trees must be >= 1")


@dataclass(frozen=True)
class RandomForest:
    trees: Tuple[DecisionTree, ...]
    importances_: np.ndarray  # normalized, sums to 1
    oob_accuracy: Optional[float]
    seed: int

    def predict_fraction(self, X: np.ndarray) -> np.ndarray:
        """Fraction of trees voting positive for each row (valid ROC score)."""
        X = np.ascontiguousarray(X, dtype=np.float64)
        votes = np.zeros(X.shape[0])
        for tree in self.trees:
            votes += tree.predict_fraction(X) > 0.5
        return votes / len(self.trees)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.predict_fraction(X) > 0.5).astype(np.int64)


def _validate_xy(X, y):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2:
        raise StructureError(f"X must be 2-D, got shape {X.shape}")
    if y.shape != (X.shape[0],):
        raise StructureError("y must have one label per row of X")
    if X.shape[0] < 2:
        raise InvalidInputError("need at least 2 samples")
    yb = (y > 0).astype(np.float64) if y.dtype != bool else y.astype(np.float64)
    if yb.min() == yb.max():
        raise DegenerateLabelsError("labels contain a single class")
    return X, yb


def train_forest(X, y, cfg: ForestConfig = ForestConfig()) -> RandomForest:
    """Fit a bootstrap forest of Gini trees; deterministic under cfg.seed."""
    X, yb = _validate_xy(X, y)
    n, d = X.shape
    max_features = max(1, int(math.sqrt(d)))
    rng = np.random.default_rng(cfg.seed)
    tree_seeds = rng.integers(0, 2**31 - 1, size=cfg.n_trees)
    trees: List[DecisionTree] = []
    imp_sum = np.zeros(d)
    oob_votes = np.zeros(n)
    oob_counts = np.zeros(n)
    cap = 4 * n + 8
    for t in range(cfg.n_trees):
        counts = np.bincount(rng.integers(0, n, size=n), minlength=n).astype(np.float64)
        out = _grow_tree(X, yb, counts, max_features, int(tree_seeds[t]), cap)
        tree = DecisionTree(*(np.array(a) for a in out[:5]))
        trees.append(tree)
        imp = out[5]
        total = imp.sum()
        if total > 0:
            imp_sum += imp / total
        oob = counts == 0
        if oob.any():
            frac = tree.predict_fraction(X[oob])
            oob_votes[oob] += frac > 0.5
            oob_counts[oob] += 1
    total = imp_sum.sum()
    importances_ = imp_sum / total if total > 0 else imp_sum
    covered = oob_counts > 0
    oob_accuracy = None
    if covered.any():
        pred = oob_votes[covered] / oob_counts[covered] > 0.5
        oob_accuracy = float(np.mean(pred == (yb[covered] > 0.5)))
    importances_.setflags(write=False)
    return RandomForest(tuple(trees), importances_, oob_accuracy, cfg.seed)


def importances(forest: RandomForest) -> np.ndarray:
    """Per-feature impurity-decrease importances, averaged over trees, sum 1."""
    return forest.importances_


# ---------------------------------------------------------------------------
# random-probe feature selection


@dataclass(frozen=True)
class SelectionConfig:
    probes_per_frame: int = 20
    fallback_top_k: int = 32
    forest: ForestConfig = field(default_factory=ForestConfig)
    seed: int = 0


@dataclass(frozen=True)
class FeatureMask:
    """Indices of surviving features; fallback marks an empty-selection rescue."""

    indices: np.ndarray
    n_total: int
    threshold: float
    fallback: bool = False

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        if idx.ndim != 1:
            raise StructureError("mask indices must be 1-D")
        if idx.size and (idx.min() < 0 or idx.max() >= self.n_total):
            raise StructureError("mask indices out of range")
        if idx.size != np.unique(idx).size:
            raise StructureError("mask indices must be unique")
        idx = np.sort(idx)
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return self.indices.size

    def apply(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X)[..., self.indices]


def select_features(
    X: np.ndarray,
    y,
    column_frames: np.ndarray,
    cfg: SelectionConfig = SelectionConfig(),
) -> FeatureMask:
    """Keep features whose forest importance beats the mean of random probes.

    ``column_frames`` maps each column of X to its frame on the reference
    timeline; probes_per_frame seeded standard-normal columns are appended per
    distinct frame before the forest is trained. An empty selection falls back
    to the top ``fallback_top_k`` features and is flagged.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    column_frames = np.asarray(column_frames)
    if column_frames.shape != (X.shape[1],):
        raise StructureError("column_frames must map every column of X to a frame")
    n_frames = int(column_frames.max()) + 1 if column_frames.size else 0
    n_probes = cfg.probes_per_frame * n_frames
    rng = np.random.default_rng(cfg.seed)
    probes = rng.standard_normal((X.shape[0], n_probes))
    forest = train_forest(np.hstack([X, probes]), y, cfg.forest)
    imp = forest.importances_
    d = X.shape[1]
    probe_mean = float(imp[d:].mean()) if n_probes else 0.0
    selected = np.flatnonzero(imp[:d] > probe_mean)
    if selected.size == 0:
        top = min(cfg.fallback_top_k, d)
        selected = np.sort(np.argsort(imp[:d], kind="stable")[::-1][:top])
        return FeatureMask(selected, d, probe_mean, fallback=True)
    return FeatureMask(selected, d, probe_mean)


# ---------------------------------------------------------------------------
# max-margin classifiers


@dataclass(frozen=True)
class SvmConfig:
    C: float = 1.0
    max_epochs: int = 1000
    tol: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        if self.C <= 0:
            raise ConfigError("C must be positive")


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    bias: float
    C: float
    objective_history: Tuple[float, ...] = ()  # best-so-far primal per epoch

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1:
            raise StructureError("weights must be 1-D")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)


def hinge_objective(weights, bias, X, y_signed, C) -> float:
    """The primal objective J (bias regularized), used by tests as the contract."""
    margins = y_signed * (X @ weights + bias)
    return float(
        0.5 * (np.dot(weights, weights) + bias * bias)
        + C * np.sum(np.maximum(0.0, 1.0 - margins))
    )


def _signed_labels(y) -> np.ndarray:
    y = np.asarray(y)
    ys = np.where(y > 0, 1.0, -1.0)
    if ys.min() == ys.max():
        raise DegenerateLabelsError("labels contain a single class")
    return ys


def train_linear(X, y, C: float = 1.0, cfg: Optional[SvmConfig] = None) -> LinearModel:
    """Soft-margin linear classifier via dual coordinate descent.

    Deterministic given cfg.seed; the returned model is the iterate with the
    lowest primal objective seen at any epoch end.
    """
    cfg = cfg or SvmConfig(C=C)
    if cfg.C != C:
        cfg = SvmConfig(C=C, max_epochs=cfg.max_epochs, tol=cfg.tol, seed=cfg.seed)
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise StructureError(f"X must be 2-D, got {X.shape}")
    ys = _signed_labels(y)
    if ys.shape[0] != X.shape[0]:
        raise StructureError("y must have one label per row of X")
    n, d = X.shape
    Xa = np.hstack([X, np.ones((n, 1))])
    qdiag = np.einsum("ij,ij->i", Xa, Xa)
    rng = np.random.default_rng(cfg.seed)
    alpha = np.zeros(n)
    u = np.zeros(d + 1)
    best_u = u.copy()
    best_obj = hinge_objective(u[:d], u[d], X, ys, C)
    history: List[float] = []
    for _ in range(cfg.max_epochs):
        order = rng.permutation(n)
        max_violation = 0.0
        for i in order:
            g = ys[i] * float(Xa[i] @ u) - 1.0
            a = alpha[i]
            if a <= 0.0:
                pg = min(g, 0.0)
            elif a >= C:
                pg = max(g, 0.0)
            else:
                pg = g
            if abs(pg) > max_violation:
                max_violation = abs(pg)
            if abs(pg) > 1e-12 and qdiag[i] > 0.0:
                new_a = min(max(a - g / qdiag[i], 0.0), C)
                if new_a != a:
                    u += (new_a - a) * ys[i] * Xa[i]
                    alpha[i] = new_a
        obj = hinge_objective(u[:d], u[d], X, ys, C)
        if obj < best_obj:
            best_obj = obj
            best_u = u.copy()
        history.append(best_obj)
        if max_violation < cfg.tol:
            break
    return LinearModel(best_u[:d], float(best_u[d]), C, tuple(history))


def decision_value(model: LinearModel, x) -> float:
    """Signed distance proxy w.x + b; the sign is the predicted class."""
    x = np.asarray(x, dtype=float)
    if x.shape != model.weights.shape:
        raise StructureError(f"expected {model.weights.size} features, got {x.shape}")
    return float(x @ model.weights + model.bias)


def decision_values(model: LinearModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != model.weights.size:
        raise StructureError(f"expected {model.weights.size} features, got {X.shape[-1]}")
    return X @ model.weights + model.bias


def classify(model: LinearModel, x) -> int:
    return 1 if decision_value(model, x) > 0 else 0


@dataclass(frozen=True)
class RbfModel:
    support: np.ndarray  # training rows
    alpha_y: np.ndarray  # alpha_i * y_i per row
    gamma: float
    C: float
    objective_history: Tuple[float, ...] = ()


def _rbf_kernel(A, B, gamma):
    sq = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    return np.exp(-gamma * np.maximum(sq, 0.0))


def train_rbf(X, y, C: float = 1.0, gamma: float = 0.1,
              cfg: Optional[SvmConfig] = None) -> RbfModel:
    """Kernelized variant of train_linear (RBF kernel, bias via constant offset)."""
    cfg = cfg or SvmConfig(C=C)
    X = np.ascontiguousarray(X, dtype=np.float64)
    ys = _signed_labels(y)
    n = X.shape[0]
    if gamma <= 0:
        raise ConfigError("gamma must be positive")
    K = _rbf_kernel(X, X, gamma) + 1.0  # +1 acts as the regularized bias feature
    rng = np.random.default_rng(cfg.seed)
    alpha = np.zeros(n)
    f = np.zeros(n)  # f_j = sum_i alpha_i y_i K[i, j]
    best_alpha = alpha.copy()

    def primal(alpha_vec, f_vec):
        ay = alpha_vec * ys
        reg = 0.5 * float(ay @ f_vec)
        hinge = np.maximum(0.0, 1.0 - ys * f_vec).sum()
        return reg + C * hinge

    best_obj = primal(alpha, f)
    history: List[float] = []
    for _ in range(cfg.max_epochs):
        order = rng.permutation(n)
        max_violation = 0.0
        for i in order:
            g = ys[i] * f[i] - 1.0
            a = alpha[i]
            if a <= 0.0:
                pg = min(g, 0.0)
            elif a >= C:
                pg = max(g, 0.0)
            else:
                pg = g
            if abs(pg) > max_violation:
                max_violation = abs(pg)
            if abs(pg) > 1e-12:
                new_a = min(max(a - g / K[i, i], 0.0), C)
                if new_a != a:
                    f += (new_a - a) * ys[i] * K[i]
                    alpha[i] = new_a
        obj = primal(alpha, f)
        if obj < best_obj:
            best_obj = obj
            best_alpha = alpha.copy()
        history.append(best_obj)
        if max_violation < cfg.tol:
            break
    keep = best_alpha > 0
    return RbfModel(X[keep].copy(), (best_alpha * ys)[keep], gamma, C, tuple(history))


def rbf_decision_values(model: RbfModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if model.support.size == 0:
        return np.zeros(X.shape[0])
    K = _rbf_kernel(model.support, X, model.gamma) + 1.0
    return model.alpha_y @ K

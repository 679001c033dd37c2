"""Base regressors: histogram gradient-boosted trees and ridge regression."""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from ..errors import InvalidConfig, DimensionMismatch

LEARNERS = ("gradient_boosted_trees", "ridge_linear")


@dataclass(frozen=True)
class BaseLearnerConfig:
    learner: str = "gradient_boosted_trees"
    tree_count: int = 200
    max_depth: int = 4
    learning_rate: float = 0.1
    min_leaf: int = 20
    histogram_bins: int = 64
    l2_penalty: float = 1e-4
    max_iterations: int = 1000
    tolerance: float = 1e-10

    def validate(self):
        if self.learner not in LEARNERS:
            raise InvalidConfig(f"unknown learner {self.learner!r}; expected one of {LEARNERS}")
        if self.tree_count < 1 or self.max_depth < 0 or self.min_leaf < 1:
            raise InvalidConfig("tree_count and min_leaf must be positive, max_depth >= 0")
        if not 0 < self.learning_rate <= 1:
            raise InvalidConfig("learning_rate must be in (0, 1]")
        if self.histogram_bins < 2:
            raise InvalidConfig("histogram_bins must be >= 2")
        if self.l2_penalty <= 0 or self.max_iterations < 1 or self.tolerance <= 0:
            raise InvalidConfig("ridge hyperparameters must be positive")
        return self

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidConfig(f"unknown base learner fields: {sorted(unknown)}")
        return cls(**d).validate()


def _as_matrix(x, n_features=None):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    if n_features is not None and x.shape[1] != n_features:
        raise DimensionMismatch(f"expected {n_features} feature columns, got {x.shape[1]}")
    return x


class RidgeRegression:
    """L2-penalised least squares with an unpenalised intercept.

    Minimises ``(1/2n)||y - b - Xw||^2 + (l2/2)||w||^2`` by conjugate gradient
    on the centred normal equations, stopping once the gradient norm is at or
    below ``tolerance``.
    """

    def __init__(self, l2_penalty=1e-4, max_iterations=1000, tolerance=1e-10):
        self.l2_penalty = l2_penalty
        self.max_iterations = max_iterations
        self.tolerance = tolerance

    def fit(self, x, y):
        x = _as_matrix(x)
        y = np.asarray(y, dtype=float).ravel()
        n, m = x.shape
        self.x_mean_ = x.mean(axis=0)
        self.y_mean_ = float(y.mean())
        xc = x - self.x_mean_
        yc = y - self.y_mean_
        gram = xc.T @ xc / n + self.l2_penalty * np.eye(m)
        rhs = xc.T @ yc / n
        w = np.zeros(m)
        r = rhs - gram @ w
        p = r.copy()
        rs = float(r @ r)
        it = 0
        while np.sqrt(rs) > self.tolerance and it < self.max_iterations:
            ap = gram @ p
            step = rs / float(p @ ap)
            w += step * p
            r -= step * ap
            rs_new = float(r @ r)
            p = r + (rs_new / rs) * p
            rs = rs_new
            it += 1
        self.coef_ = w
        self.intercept_ = self.y_mean_ - float(self.x_mean_ @ w)
        self.n_iter_ = it
        self.gradient_norm_ = float(np.linalg.norm(gram @ w - rhs))
        self.n_features_ = m
        return self

    def predict(self, x):
        x = _as_matrix(x, self.n_features_)
        return self.intercept_ + x @ self.coef_

    def to_dict(self):
        return {"learner": "ridge_linear", "coef": self.coef_.tolist(),
                "intercept": self.intercept_, "n_features": self.n_features_,
                "l2_penalty": self.l2_penalty}

    @classmethod
    def from_dict(cls, d):
        obj = cls(l2_penalty=d["l2_penalty"])
        obj.coef_ = np.asarray(d["coef"], dtype=float)
        obj.intercept_ = float(d["intercept"])
        obj.n_features_ = int(d["n_features"])
        return obj


def _bin_edges(column, n_bins):
    qs = np.quantile(column, np.arange(1, n_bins) / n_bins)
    edges = np.unique(qs)
    # the top edge would leave an empty right bin
    return edges[edges < column.max()]


class GradientBoostedTrees:
    """Least-squares gradient boosting over histogram-binned features.

    Trees are grown level by level to ``max_depth``. Each candidate split
    is ``x <= edge`` on a quantile bin edge; ties in gain go to the lowest
    feature index, then the lowest threshold. Leaves hold the shrunken mean
    residual, so the training loss never increases between rounds.
    """

    def __init__(self, tree_count=200, max_depth=4, learning_rate=0.1, min_leaf=20,
                 histogram_bins=64):
        self.tree_count = tree_count
        self.max_depth = max_depth
        self.learning_rate = learning_rate
        self.min_leaf = min_leaf
        self.histogram_bins = histogram_bins

    def fit(self, x, y):
        x = _as_matrix(x)
        y = np.asarray(y, dtype=float).ravel()
        n, m = x.shape
        self.n_features_ = m
        self.edges_ = [_bin_edges(x[:, j], self.histogram_bins) for j in range(m)]
        binned = np.empty((n, m), dtype=np.int64)
        for j in range(m):
            binned[:, j] = np.searchsorted(self.edges_[j], x[:, j], side="left")
        self.init_ = float(y.mean())
        pred = np.full(n, self.init_)
        self.trees_ = []
        self.loss_history_ = [float(np.mean((y - pred) ** 2))]
        for _ in range(self.tree_count):
            tree, update = self._grow(binned, y - pred)
            self.trees_.append(tree)
            pred += update
            self.loss_history_.append(float(np.mean((y - pred) ** 2)))
        return self

    def _grow(self, binned, resid):
        n, m = binned.shape
        n_bins = max((len(e) + 1 for e in self.edges_), default=1)
        feature, threshold, left, right, value = [-1], [0.0], [-1], [-1], [0.0]
        node_of = np.zeros(n, dtype=np.int64)
        frontier = [0]
        for _depth in range(self.max_depth):
            if not frontier:
                break
            local = np.full(len(feature), -1, dtype=np.int64)
            local[frontier] = np.arange(len(frontier))
            slot = local[node_of]
            act = slot >= 0
            slot_a = slot[act]
            r_a = resid[act]
            k = len(frontier)
            g_tot = np.bincount(slot_a, weights=r_a, minlength=k)
            c_tot = np.bincount(slot_a, minlength=k).astype(float)
            gains = np.full((k, m, n_bins), -np.inf)
            for j in range(m):
                nb = len(self.edges_[j]) + 1
                if nb < 2:
                    continue
                key = slot_a * n_bins + binned[act, j]
                gh = np.bincount(key, weights=r_a, minlength=k * n_bins).reshape(k, n_bins)
                ch = np.bincount(key, minlength=k * n_bins).reshape(k, n_bins).astype(float)
                gl = np.cumsum(gh, axis=1)[:, : nb - 1]
                cl = np.cumsum(ch, axis=1)[:, : nb - 1]
                gr = g_tot[:, None] - gl
                cr = c_tot[:, None] - cl
                ok = (cl >= self.min_leaf) & (cr >= self.min_leaf)
                with np.errstate(divide="ignore", invalid="ignore"):
                    gain = gl ** 2 / cl + gr ** 2 / cr - (g_tot ** 2 / c_tot)[:, None]
                gains[:, j, : nb - 1] = np.where(ok, gain, -np.inf)
            next_frontier = []
            flat = gains.reshape(k, -1)
            best = np.argmax(flat, axis=1)
            parent_split = {}
            for s, node in enumerate(frontier):
                g = flat[s, best[s]]
                if not np.isfinite(g) or g <= 1e-12:
                    continue
                j, b = divmod(int(best[s]), n_bins)
                feature[node] = j
                threshold[node] = float(self.edges_[j][b])
                for side in (0, 1):
                    feature.append(-1)
                    threshold.append(0.0)
                    left.append(-1)
                    right.append(-1)
                    value.append(0.0)
                left[node], right[node] = len(feature) - 2, len(feature) - 1
                next_frontier += [left[node], right[node]]
                parent_split[node] = (j, b)
            if parent_split:
                for node, (j, b) in parent_split.items():
                    rows = node_of == node
                    go_left = binned[:, j] <= b
                    node_of[rows & go_left] = left[node]
                    node_of[rows & ~go_left] = right[node]
            frontier = next_frontier
        feature = np.asarray(feature, dtype=np.int64)
        leaves = feature < 0
        sums = np.bincount(node_of, weights=resid, minlength=len(feature))
        counts = np.bincount(node_of, minlength=len(feature))
        value = np.zeros(len(feature))
        with np.errstate(invalid="ignore", divide="ignore"):
            value[leaves] = self.learning_rate * np.where(counts[leaves] > 0,
                                                          sums[leaves] / counts[leaves], 0.0)
        tree = {
            "feature": feature,
            "threshold": np.asarray(threshold, dtype=float),
            "left": np.asarray(left, dtype=np.int64),
            "right": np.asarray(right, dtype=np.int64),
            "value": value,
        }
        return tree, value[node_of]

    @staticmethod
    def _apply(tree, x):
        node = np.zeros(x.shape[0], dtype=np.int64)
        rows = np.arange(x.shape[0])
        while True:
            f = tree["feature"][node]
            internal = f >= 0
            if not internal.any():
                return tree["value"][node]
            fx = x[rows, np.where(internal, f, 0)]
            go_left = fx <= tree["threshold"][node]
            nxt = np.where(go_left, tree["left"][node], tree["right"][node])
            node = np.where(internal, nxt, node)

    def predict(self, x):
        x = _as_matrix(x, self.n_features_)
        out = np.full(x.shape[0], self.init_)
        for tree in self.trees_:
            out += self._apply(tree, x)
        return out

    def to_dict(self):
        return {
            "learner": "gradient_boosted_trees",
            "init": self.init_,
            "n_features": self.n_features_,
            "trees": [{k: v.tolist() for k, v in t.items()} for t in self.trees_],
        }

    @classmethod
    def from_dict(cls, d):
        obj = cls(tree_count=len(d["trees"]))
        obj.init_ = float(d["init"])
        obj.n_features_ = int(d["n_features"])
        obj.trees_ = []
        for t in d["trees"]:
            obj.trees_.append({
                "feature": np.asarray(t["feature"], dtype=np.int64),
                "threshold": np.asarray(t["threshold"], dtype=float),
                "left": np.asarray(t["left"], dtype=np.int64),
                "right": np.asarray(t["right"], dtype=np.int64),
                "value": np.asarray(t["value"], dtype=float),
            })
        return obj


def make_learner(config: BaseLearnerConfig):
    config.validate()
    if config.learner == "ridge_linear":
        return RidgeRegression(config.l2_penalty, config.max_iterations, config.tolerance)
    return GradientBoostedTrees(config.tree_count, config.max_depth, config.learning_rate,
                                config.min_leaf, config.histogram_bins)


def learner_from_dict(d):
    if d["learner"] == "ridge_linear":
        return RidgeRegression.from_dict(d)
    return GradientBoostedTrees.from_dict(d)

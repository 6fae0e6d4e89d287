"""Gradient-boosted decision trees with logistic loss.

Second-order boosting: each round fits a regression tree to the gradient and
hessian of the logistic loss, with split gain
0.5 * (GL^2/(HL+lam) + GR^2/(HR+lam) - G^2/(H+lam)) - gamma.
Split finding is histogram-based: features are quantile-binned once per fit
(exact when a feature has at most n_bins distinct values) and trees are grown
level-wise by numba kernels.  Everything is deterministic: no subsampling, no
randomized tie-breaking, fixed summation order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from topicality.errors import ValidationError

_MAX_BINS = 256


@dataclass(frozen=True)
class GBTConfig:
    n_rounds: int = 100
    max_depth: int = 6
    learning_rate: float = 0.3
    reg_lambda: float = 1.0
    gamma: float = 0.0
    min_child_weight: float = 1.0
    n_bins: int = 64

    def validate(self) -> None:
        if self.n_rounds < 1:
            raise ValidationError("n_rounds must be >= 1")
        if self.max_depth < 1:
            raise ValidationError("max_depth must be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValidationError("learning_rate must be in (0, 1]")
        if self.reg_lambda < 0 or self.gamma < 0 or self.min_child_weight < 0:
            raise ValidationError("regularization terms must be >= 0")
        if not 2 <= self.n_bins <= _MAX_BINS:
            raise ValidationError(f"n_bins must be in [2, {_MAX_BINS}]")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _log_loss(y: np.ndarray, p: np.ndarray) -> float:
    p = np.clip(p, 1e-12, 1.0 - 1e-12)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def _bin_features(X: np.ndarray, n_bins: int):
    """Per-feature split candidates and the binned matrix.

    A feature with at most n_bins distinct values is binned exactly on those
    values; otherwise split points come from evenly spaced quantiles.
    """
    n, d = X.shape
    max_splits = n_bins - 1
    splits = np.zeros((d, max_splits), dtype=np.float64)
    n_splits = np.zeros(d, dtype=np.int32)
    binned = np.empty((n, d), dtype=np.uint8)
    qs = np.arange(1, n_bins) / n_bins
    for j in range(d):
        col = X[:, j]
        uniq = np.unique(col)
        if uniq.size <= n_bins:
            cand = uniq[:-1]
        else:
            cand = np.unique(np.quantile(col, qs))
            if cand.size and cand[-1] >= uniq[-1]:
                cand = cand[:-1]
        k = min(cand.size, max_splits)
        splits[j, :k] = cand[:k]
        n_splits[j] = k
        binned[:, j] = np.searchsorted(cand[:k], col, side="left").astype(np.uint8)
    return splits, n_splits, binned


@njit(cache=True)
def _grow_tree(binned, n_splits, g, h, max_depth, lam, gamma, mcw, max_bins):
    n, d = binned.shape
    max_nodes = 2 ** (max_depth + 1) - 1
    feat = np.full(max_nodes, -1, dtype=np.int32)
    thr_bin = np.full(max_nodes, -1, dtype=np.int32)
    left = np.full(max_nodes, -1, dtype=np.int32)
    right = np.full(max_nodes, -1, dtype=np.int32)
    value = np.zeros(max_nodes, dtype=np.float64)
    split_gain = np.zeros(max_nodes, dtype=np.float64)
    node_g = np.zeros(max_nodes, dtype=np.float64)
    node_h = np.zeros(max_nodes, dtype=np.float64)

    total_g = 0.0
    total_h = 0.0
    for i in range(n):
        total_g += g[i]
        total_h += h[i]
    node_g[0] = total_g
    node_h[0] = total_h

    row_node = np.zeros(n, dtype=np.int32)
    frontier = np.empty(max_nodes, dtype=np.int32)
    frontier[0] = 0
    n_frontier = 1
    node_count = 1
    slot_of = np.full(max_nodes, -1, dtype=np.int32)

    for depth in range(max_depth + 1):
        if n_frontier == 0:
            break
        if depth == max_depth:
            for t in range(n_frontier):
                nid = frontier[t]
                value[nid] = -node_g[nid] / (node_h[nid] + lam)
            break

        for t in range(n_frontier):
            slot_of[frontier[t]] = t

        hist_g = np.zeros((n_frontier, d, max_bins), dtype=np.float64)
        hist_h = np.zeros((n_frontier, d, max_bins), dtype=np.float64)
        for i in range(n):
            s = slot_of[row_node[i]]
            if s < 0:
                continue
            gi = g[i]
            hi = h[i]
            for j in range(d):
                b = binned[i, j]
                hist_g[s, j, b] += gi
                hist_h[s, j, b] += hi

        new_frontier = np.empty(max_nodes, dtype=np.int32)
        n_new = 0
        for t in range(n_frontier):
            nid = frontier[t]
            tg = node_g[nid]
            th = node_h[nid]
            parent_score = tg * tg / (th + lam)
            best_gain = 0.0
            best_feat = -1
            best_bin = -1
            best_gl = 0.0
            best_hl = 0.0
            for j in range(d):
                gl = 0.0
                hl = 0.0
                for b in range(n_splits[j]):
                    gl += hist_g[t, j, b]
                    hl += hist_h[t, j, b]
                    hr = th - hl
                    if hr < mcw:
                        break
                    if hl < mcw:
                        continue
                    gr = tg - gl
                    gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent_score) - gamma
                    if gain > best_gain:
                        best_gain = gain
                        best_feat = j
                        best_bin = b
                        best_gl = gl
                        best_hl = hl
            if best_feat >= 0 and best_gain > 0.0:
                feat[nid] = best_feat
                thr_bin[nid] = best_bin
                split_gain[nid] = best_gain
                lid = node_count
                rid = node_count + 1
                node_count += 2
                left[nid] = lid
                right[nid] = rid
                node_g[lid] = best_gl
                node_h[lid] = best_hl
                node_g[rid] = tg - best_gl
                node_h[rid] = th - best_hl
                new_frontier[n_new] = lid
                new_frontier[n_new + 1] = rid
                n_new += 2
            else:
                value[nid] = -tg / (th + lam)

        for i in range(n):
            nid = row_node[i]
            if feat[nid] >= 0:
                if binned[i, feat[nid]] <= thr_bin[nid]:
                    row_node[i] = left[nid]
                else:
                    row_node[i] = right[nid]

        for t in range(n_frontier):
            slot_of[frontier[t]] = -1
        for t in range(n_new):
            frontier[t] = new_frontier[t]
        n_frontier = n_new

    return feat, thr_bin, left, right, value, split_gain, row_node, node_count


@njit(cache=True)
def _predict_trees(X, feats, thrs, lefts, rights, values, offsets, out):
    n_trees = offsets.shape[0] - 1
    for i in range(X.shape[0]):
        acc = 0.0
        for t in range(n_trees):
            base = offsets[t]
            nid = 0
            while feats[base + nid] >= 0:
                if X[i, feats[base + nid]] <= thrs[base + nid]:
                    nid = lefts[base + nid]
                else:
                    nid = rights[base + nid]
            acc += values[base + nid]
        out[i] = acc


class GradientBoostedTrees:
    """Boosted binary classifier; also the importance model for probe selection."""

    def __init__(self, config: GBTConfig | None = None):
        self.config = config or GBTConfig()
        self.config.validate()
        self.n_features_: int | None = None
        self.feature_importances_: np.ndarray | None = None
        self.train_losses_: list[float] = []
        # flat tree storage: per-node arrays plus per-tree offsets
        self._feat = np.empty(0, dtype=np.int32)
        self._thr = np.empty(0, dtype=np.float64)
        self._left = np.empty(0, dtype=np.int32)
        self._right = np.empty(0, dtype=np.int32)
        self._value = np.empty(0, dtype=np.float64)
        self._offsets = np.zeros(1, dtype=np.int64)

    def fit(self, X: np.ndarray, y: np.ndarray) -> "GradientBoostedTrees":
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.ascontiguousarray(y, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ValidationError("X rows must align with y")
        n, d = X.shape
        if d == 0:
            raise ValidationError("no features")
        if not np.all(np.isfinite(X)):
            raise ValidationError("non-finite features")
        if np.unique(y).size < 2:
            raise ValidationError("single-class y")

        cfg = self.config
        splits, n_splits, binned = _bin_features(X, cfg.n_bins)
        self.n_features_ = d
        importances = np.zeros(d, dtype=np.float64)

        margin = np.zeros(n, dtype=np.float64)
        feats: list[np.ndarray] = []
        thrs: list[np.ndarray] = []
        lefts: list[np.ndarray] = []
        rights: list[np.ndarray] = []
        values: list[np.ndarray] = []
        sizes: list[int] = []
        losses: list[float] = []

        for _ in range(cfg.n_rounds):
            p = _sigmoid(margin)
            g = p - y
            h = p * (1.0 - p)
            feat, thr_bin, left, right, value, split_gain, row_node, count = _grow_tree(
                binned,
                n_splits,
                g,
                h,
                cfg.max_depth,
                cfg.reg_lambda,
                cfg.gamma,
                cfg.min_child_weight,
                cfg.n_bins,
            )
            value = value[:count] * cfg.learning_rate
            feat = feat[:count]
            internal = feat >= 0
            np.add.at(importances, feat[internal], split_gain[:count][internal])
            thr = np.zeros(count, dtype=np.float64)
            thr[internal] = splits[feat[internal], thr_bin[:count][internal]]
            feats.append(feat)
            thrs.append(thr)
            lefts.append(left[:count])
            rights.append(right[:count])
            values.append(value)
            sizes.append(count)
            margin += value[row_node]
            losses.append(_log_loss(y, _sigmoid(margin)))

        self._feat = np.concatenate(feats)
        self._thr = np.concatenate(thrs)
        self._left = np.concatenate(lefts)
        self._right = np.concatenate(rights)
        self._value = np.concatenate(values)
        self._offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        self.feature_importances_ = importances
        self.train_losses_ = losses
        return self

    def _check_fitted(self, X: np.ndarray) -> np.ndarray:
        if self.n_features_ is None:
            raise ValidationError("model is not fitted")
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features_:
            raise ValidationError(
                f"dimension mismatch: expected {self.n_features_} features"
            )
        return X

    def predict_margin(self, X: np.ndarray) -> np.ndarray:
        X = self._check_fitted(X)
        out = np.empty(X.shape[0], dtype=np.float64)
        if X.shape[0]:
            _predict_trees(
                X, self._feat, self._thr, self._left, self._right, self._value, self._offsets, out
            )
        return out

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return _sigmoid(self.predict_margin(X))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(np.int64)

    def tree_arrays(self) -> dict[str, np.ndarray]:
        return {
            "feat": self._feat,
            "thr": self._thr,
            "left": self._left,
            "right": self._right,
            "value": self._value,
            "offsets": self._offsets,
        }

    def load_tree_arrays(self, arrays: dict[str, np.ndarray], n_features: int) -> None:
        self._feat = np.ascontiguousarray(arrays["feat"], dtype=np.int32)
        self._thr = np.ascontiguousarray(arrays["thr"], dtype=np.float64)
        self._left = np.ascontiguousarray(arrays["left"], dtype=np.int32)
        self._right = np.ascontiguousarray(arrays["right"], dtype=np.int32)
        self._value = np.ascontiguousarray(arrays["value"], dtype=np.float64)
        self._offsets = np.ascontiguousarray(arrays["offsets"], dtype=np.int64)
        self.n_features_ = int(n_features)

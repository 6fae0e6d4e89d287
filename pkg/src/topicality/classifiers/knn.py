"""k-nearest-neighbour voting on Euclidean distance.

Ties in distance at the neighbourhood boundary resolve to the lower
training index.  Vote ties (possible only for even k) resolve by summed
inverse distance over each side's neighbours, then to label 0; the score
encodes that resolution as a half-step nudge so thresholding at 0.5
reproduces the vote exactly.
"""

from __future__ import annotations

import numpy as np

from topicality.classifiers.common import check_training_inputs
from topicality.errors import ValidationError

KNN_DEFAULTS = {"k": 5}
KNN_THRESHOLD = 0.5

_CHUNK_CELLS = 2_000_000


def knn_validate(hyper: dict) -> None:
    if int(hyper["k"]) < 1:
        raise ValidationError("KNN: k must be >= 1")


def knn_fit(X: np.ndarray, y: np.ndarray, hyper: dict, seed: int) -> tuple[dict, dict]:
    X, y = check_training_inputs(X, y)
    if int(hyper["k"]) > X.shape[0]:
        raise ValidationError(f"KNN: k={hyper['k']} exceeds training size {X.shape[0]}")
    return {"train_X": X, "train_y": y.astype(np.float64)}, {}


def knn_score(params: dict, hyper: dict, X: np.ndarray) -> np.ndarray:
    train_X, train_y = params["train_X"], params["train_y"]
    k = int(hyper["k"])
    n_train = train_X.shape[0]
    scores = np.empty(X.shape[0])
    chunk = max(1, _CHUNK_CELLS // max(n_train, 1))
    train_sq = (train_X**2).sum(axis=1)
    for start in range(0, X.shape[0], chunk):
        Q = X[start : start + chunk]
        d2 = (Q**2).sum(axis=1)[:, None] - 2.0 * Q @ train_X.T + train_sq[None, :]
        np.maximum(d2, 0.0, out=d2)
        dist = np.sqrt(d2)
        order = np.argsort(dist, axis=1, kind="stable")[:, :k]
        rows = np.arange(Q.shape[0])[:, None]
        nb_dist = dist[rows, order]
        nb_y = train_y[order]
        votes = nb_y.sum(axis=1)
        frac = votes / k
        tied = votes * 2 == k
        if tied.any():
            with np.errstate(divide="ignore"):
                inv = 1.0 / nb_dist[tied]
            w1 = (inv * nb_y[tied]).sum(axis=1)
            w0 = (inv * (1.0 - nb_y[tied])).sum(axis=1)
            nudge = 1.0 / (4.0 * k)
            frac[tied] = np.where(w1 > w0, 0.5 + nudge, 0.5 - nudge)
        scores[start : start + chunk] = frac
    return scores

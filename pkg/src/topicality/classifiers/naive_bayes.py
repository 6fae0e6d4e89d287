"""Gaussian and Bernoulli naive Bayes."""

from __future__ import annotations

import numpy as np

from topicality.classifiers.common import check_training_inputs
from topicality.errors import ValidationError

GNB_DEFAULTS = {"var_smoothing": 1e-9}
BNB_DEFAULTS = {"alpha": 1.0, "binarize": 0.0}

GNB_THRESHOLD = 0.5
BNB_THRESHOLD = 0.5


def gnb_validate(hyper: dict) -> None:
    if hyper["var_smoothing"] <= 0:
        raise ValidationError("GNB: var_smoothing must be > 0")


def gnb_fit(X: np.ndarray, y: np.ndarray, hyper: dict, seed: int) -> tuple[dict, dict]:
    X, y = check_training_inputs(X, y)
    smoothing = float(hyper["var_smoothing"])
    counts = np.array([(y == 0).sum(), (y == 1).sum()], dtype=np.float64)
    mean = np.stack([X[y == c].mean(axis=0) for c in (0, 1)])
    var = np.stack([X[y == c].var(axis=0) for c in (0, 1)])
    # Same smoothing floor for every feature, tied to the largest overall
    # feature variance so it scales with the data.
    var += smoothing * X.var(axis=0).max()
    params = {"class_count": counts, "mean": mean, "var": var}
    return params, {}


def _posterior_from_joint(joint: np.ndarray) -> np.ndarray:
    shifted = joint - joint.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    return expd[:, 1] / expd.sum(axis=1)


def gnb_score(params: dict, hyper: dict, X: np.ndarray) -> np.ndarray:
    counts, mean, var = params["class_count"], params["mean"], params["var"]
    log_prior = np.log(counts / counts.sum())
    joint = np.empty((X.shape[0], 2))
    for c in (0, 1):
        ll = -0.5 * (np.log(2.0 * np.pi * var[c]) + (X - mean[c]) ** 2 / var[c]).sum(axis=1)
        joint[:, c] = log_prior[c] + ll
    return _posterior_from_joint(joint)


def bnb_validate(hyper: dict) -> None:
    if hyper["alpha"] <= 0:
        raise ValidationError("BNB: alpha must be > 0")


def bnb_fit(X: np.ndarray, y: np.ndarray, hyper: dict, seed: int) -> tuple[dict, dict]:
    X, y = check_training_inputs(X, y)
    alpha, threshold = float(hyper["alpha"]), float(hyper["binarize"])
    B = (X > threshold).astype(np.float64)
    counts = np.array([(y == 0).sum(), (y == 1).sum()], dtype=np.float64)
    ones = np.stack([B[y == c].sum(axis=0) for c in (0, 1)])
    theta = (ones + alpha) / (counts[:, None] + 2.0 * alpha)
    params = {
        "class_count": counts,
        "log_theta": np.log(theta),
        "log_one_minus_theta": np.log1p(-theta),
    }
    return params, {}


def bnb_score(params: dict, hyper: dict, X: np.ndarray) -> np.ndarray:
    counts = params["class_count"]
    threshold = float(hyper["binarize"])
    B = (X > threshold).astype(np.float64)
    log_prior = np.log(counts / counts.sum())
    joint = np.empty((X.shape[0], 2))
    for c in (0, 1):
        ll = B @ params["log_theta"][c] + (1.0 - B) @ params["log_one_minus_theta"][c]
        joint[:, c] = log_prior[c] + ll
    return _posterior_from_joint(joint)

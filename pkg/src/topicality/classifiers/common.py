"""Shared numerics and input checks for the classifier families."""

from __future__ import annotations

import numpy as np

from topicality.errors import ValidationError


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def check_training_inputs(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2:
        raise ValidationError(f"X must be 2-D, got shape {X.shape}")
    if y.ndim != 1 or y.shape[0] != X.shape[0]:
        raise ValidationError(f"y length {y.shape} does not match X rows {X.shape[0]}")
    if X.shape[0] < 2:
        raise ValidationError("need at least 2 training samples")
    if not np.isfinite(X).all():
        raise ValidationError("X contains non-finite values")
    uniq = np.unique(y)
    if not np.isin(uniq, [0, 1]).all():
        raise ValidationError(f"labels must be binary 0/1, got {uniq.tolist()}")
    if uniq.size < 2:
        raise ValidationError("training labels contain a single class")
    return X, y.astype(np.int64)


def check_predict_inputs(X: np.ndarray, train_dim: int) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError(f"X must be 2-D, got shape {X.shape}")
    if X.shape[1] != train_dim:
        raise ValidationError(
            f"feature dimension {X.shape[1]} does not match training dimension {train_dim}"
        )
    return X

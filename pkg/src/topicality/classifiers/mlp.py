"""Single-hidden-layer perceptron trained with Adam on cross-entropy.

Fan-in-scaled seeded init, ReLU hidden units, sigmoid output, minibatch
updates, and early stopping on the full-set training loss.
"""

from __future__ import annotations

import numpy as np

from topicality.classifiers.common import check_training_inputs, sigmoid
from topicality.errors import ValidationError

MLP_DEFAULTS = {
    "hidden": 100,
    "lr": 1e-3,
    "batch_size": 32,
    "max_epochs": 200,
    "tol": 1e-4,
    "patience": 10,
    "beta1": 0.9,
    "beta2": 0.999,
    "eps": 1e-8,
}
MLP_THRESHOLD = 0.5


def mlp_validate(hyper: dict) -> None:
    if int(hyper["hidden"]) < 1:
        raise ValidationError("MLP: hidden must be >= 1")
    if hyper["lr"] <= 0:
        raise ValidationError("MLP: lr must be > 0")
    if int(hyper["batch_size"]) < 1:
        raise ValidationError("MLP: batch_size must be >= 1")
    if int(hyper["max_epochs"]) < 1:
        raise ValidationError("MLP: max_epochs must be >= 1")
    if int(hyper["patience"]) < 1:
        raise ValidationError("MLP: patience must be >= 1")


def _forward(params: dict, X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    Z1 = X @ params["W1"] + params["b1"]
    A1 = np.maximum(Z1, 0.0)
    z2 = A1 @ params["W2"] + params["b2"][0]
    return Z1, A1, sigmoid(z2)


def _bce(p: np.ndarray, y: np.ndarray) -> float:
    p = np.clip(p, 1e-12, 1.0 - 1e-12)
    return float(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)).mean())


def loss_and_grads(params: dict, X: np.ndarray, y: np.ndarray) -> tuple[float, dict]:
    """Cross-entropy over the batch plus gradients for every parameter."""
    n = X.shape[0]
    Z1, A1, p = _forward(params, X)
    dz2 = (p - y) / n
    grads = {
        "W2": A1.T @ dz2,
        "b2": np.array([dz2.sum()]),
    }
    dZ1 = np.outer(dz2, params["W2"]) * (Z1 > 0.0)
    grads["W1"] = X.T @ dZ1
    grads["b1"] = dZ1.sum(axis=0)
    return _bce(p, y), grads


def init_params(d: int, hidden: int, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    return {
        "W1": rng.normal(0.0, np.sqrt(2.0 / d), size=(d, hidden)),
        "b1": np.zeros(hidden),
        "W2": rng.normal(0.0, np.sqrt(2.0 / hidden), size=hidden),
        "b2": np.zeros(1),
    }


def mlp_fit(X: np.ndarray, y: np.ndarray, hyper: dict, seed: int) -> tuple[dict, dict]:
    X, y_int = check_training_inputs(X, y)
    y = y_int.astype(np.float64)
    n, d = X.shape
    hidden = int(hyper["hidden"])
    lr, batch = float(hyper["lr"]), int(hyper["batch_size"])
    beta1, beta2, eps = float(hyper["beta1"]), float(hyper["beta2"]), float(hyper["eps"])
    tol, patience = float(hyper["tol"]), int(hyper["patience"])

    rng = np.random.default_rng(seed)
    params = init_params(d, hidden, seed)
    m = {k: np.zeros_like(v) for k, v in params.items()}
    v = {k: np.zeros_like(v_) for k, v_ in params.items()}
    step = 0
    loss_curve = []
    best_loss = np.inf
    stall = 0
    for epoch in range(int(hyper["max_epochs"])):
        order = rng.permutation(n)
        for start in range(0, n, batch):
            idx = order[start : start + batch]
            _, grads = loss_and_grads(params, X[idx], y[idx])
            step += 1
            for key in params:
                m[key] = beta1 * m[key] + (1.0 - beta1) * grads[key]
                v[key] = beta2 * v[key] + (1.0 - beta2) * grads[key] ** 2
                m_hat = m[key] / (1.0 - beta1**step)
                v_hat = v[key] / (1.0 - beta2**step)
                params[key] = params[key] - lr * m_hat / (np.sqrt(v_hat) + eps)
        _, _, p_full = _forward(params, X)
        loss = _bce(p_full, y)
        loss_curve.append(loss)
        if loss < best_loss - tol:
            best_loss = loss
            stall = 0
        else:
            stall += 1
            if stall >= patience:
                break
    diag = {
        "loss_curve": np.asarray(loss_curve),
        "iterations": len(loss_curve),
        "final_loss": loss_curve[-1],
    }
    return params, diag


def mlp_score(params: dict, hyper: dict, X: np.ndarray) -> np.ndarray:
    return _forward(params, X)[2]

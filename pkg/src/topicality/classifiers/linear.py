"""Linear models: L2-regularized logistic regression and a linear SVM.

Logistic regression runs full-batch gradient descent with Armijo
backtracking, so its objective trace is non-increasing by construction.
The SVM is a seeded Pegasos-style subgradient solver with iterate
averaging; a pocket rule keeps the best averaged iterate seen so far,
which makes the reported objective trace non-increasing as well.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from topicality.classifiers.common import check_training_inputs, sigmoid
from topicality.errors import ValidationError

LR_DEFAULTS = {"reg": 1.0, "tol": 1e-6, "max_iter": 1000}
SVM_DEFAULTS = {"C": 1.0, "epochs": 30}

LR_THRESHOLD = 0.5
SVM_THRESHOLD = 0.0


def lr_validate(hyper: dict) -> None:
    if hyper["reg"] < 0:
        raise ValidationError("LR: reg must be >= 0")
    if hyper["tol"] <= 0:
        raise ValidationError("LR: tol must be > 0")
    if int(hyper["max_iter"]) < 1:
        raise ValidationError("LR: max_iter must be >= 1")


def _lr_objective(X, y_pm, w, b, reg):
    z = X @ w + b
    margins = y_pm * z
    return float(np.mean(np.logaddexp(0.0, -margins)) + reg * (w @ w) / (2.0 * X.shape[0]))


def lr_fit(X: np.ndarray, y: np.ndarray, hyper: dict, seed: int) -> tuple[dict, dict]:
    X, y = check_training_inputs(X, y)
    reg, tol, max_iter = float(hyper["reg"]), float(hyper["tol"]), int(hyper["max_iter"])
    n, d = X.shape
    y_pm = 2.0 * y - 1.0
    w = np.zeros(d)
    b = 0.0
    obj = _lr_objective(X, y_pm, w, b, reg)
    trace = [obj]
    step = 1.0
    converged = False
    for _ in range(max_iter):
        p = sigmoid(X @ w + b)
        residual = p - y
        grad_w = X.T @ residual / n + reg * w / n
        grad_b = float(residual.mean())
        grad_sq = float(grad_w @ grad_w) + grad_b * grad_b
        if np.sqrt(grad_sq) <= tol:
            converged = True
            break
        # Armijo backtracking from twice the last accepted step.
        step = min(step * 2.0, 1e6)
        while True:
            w_new = w - step * grad_w
            b_new = b - step * grad_b
            obj_new = _lr_objective(X, y_pm, w_new, b_new, reg)
            if obj_new <= obj - 1e-4 * step * grad_sq or step < 1e-12:
                break
            step *= 0.5
        w, b, obj = w_new, b_new, obj_new
        trace.append(obj)
    params = {"w": w, "b": np.array([b])}
    diag = {
        "objective_trace": np.asarray(trace),
        "iterations": len(trace) - 1,
        "converged": converged,
        "final_objective": obj,
    }
    return params, diag


def lr_score(params: dict, hyper: dict, X: np.ndarray) -> np.ndarray:
    return sigmoid(X @ params["w"] + params["b"][0])


def svm_validate(hyper: dict) -> None:
    if hyper["C"] <= 0:
        raise ValidationError("SVM: C must be > 0")
    if int(hyper["epochs"]) < 1:
        raise ValidationError("SVM: epochs must be >= 1")


@njit(cache=True)
def _pegasos(Xa, y_pm, orders, lam):  # pragma: no cover - exercised via svm_fit
    n, d = Xa.shape
    epochs = orders.shape[0]
    w = np.zeros(d)
    avg = np.zeros(d)
    snapshots = np.empty((epochs, d))
    cap = 1.0 / np.sqrt(lam)
    t = 0
    for e in range(epochs):
        for k in range(n):
            i = orders[e, k]
            t += 1
            margin = y_pm[i] * np.dot(w, Xa[i])
            eta = 1.0 / (lam * t)
            w *= 1.0 - 1.0 / t
            if margin < 1.0:
                for j in range(d):
                    w[j] += eta * y_pm[i] * Xa[i, j]
            nrm = np.sqrt(np.dot(w, w))
            if nrm > cap:
                w *= cap / nrm
            for j in range(d):
                avg[j] += (w[j] - avg[j]) / t
        snapshots[e] = avg
    return snapshots


def _svm_objective(Xa, y_pm, w, lam):
    margins = 1.0 - y_pm * (Xa @ w)
    hinge = np.maximum(margins, 0.0).mean()
    return float(lam / 2.0 * (w @ w) + hinge)


def svm_fit(X: np.ndarray, y: np.ndarray, hyper: dict, seed: int) -> tuple[dict, dict]:
    X, y = check_training_inputs(X, y)
    C, epochs = float(hyper["C"]), int(hyper["epochs"])
    n, d = X.shape
    y_pm = 2.0 * y - 1.0
    # Bias enters as a constant augmented coordinate so the whole weight
    # vector shares one regularizer.
    Xa = np.hstack([X, np.ones((n, 1))])
    lam = 1.0 / (C * n)
    rng = np.random.default_rng(seed)
    orders = np.stack([rng.permutation(n) for _ in range(epochs)]).astype(np.int64)
    snapshots = _pegasos(Xa, y_pm, orders, lam)
    objectives = np.array([_svm_objective(Xa, y_pm, s, lam) for s in snapshots])
    best = int(np.argmin(objectives))
    w_best = snapshots[best]
    params = {"w": w_best[:d], "b": np.array([w_best[d]])}
    diag = {
        "objective_trace": np.minimum.accumulate(objectives),
        "iterations": epochs,
        "best_epoch": best,
        "final_objective": float(objectives[best]),
    }
    return params, diag


def svm_score(params: dict, hyper: dict, X: np.ndarray) -> np.ndarray:
    return X @ params["w"] + params["b"][0]

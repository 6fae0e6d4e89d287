"""Boosted-trees classifier family, backed by the shared tree engine."""

from __future__ import annotations

import numpy as np

from topicality.boosted_trees import GBTConfig, GradientBoostedTrees
from topicality.classifiers.common import check_training_inputs

GBT_DEFAULTS = {
    "rounds": 100,
    "depth": 6,
    "learning_rate": 0.3,
    "reg_lambda": 1.0,
    "gamma": 0.0,
    "min_child_weight": 1.0,
    "bins": 64,
}
GBT_THRESHOLD = 0.5


def config_from_hyper(hyper: dict) -> GBTConfig:
    return GBTConfig(
        n_rounds=int(hyper["rounds"]),
        max_depth=int(hyper["depth"]),
        learning_rate=float(hyper["learning_rate"]),
        reg_lambda=float(hyper["reg_lambda"]),
        gamma=float(hyper["gamma"]),
        min_child_weight=float(hyper["min_child_weight"]),
        n_bins=int(hyper["bins"]),
    )


def gbt_validate(hyper: dict) -> None:
    config_from_hyper(hyper).validate()


def gbt_fit(X: np.ndarray, y: np.ndarray, hyper: dict, seed: int) -> tuple[dict, dict]:
    X, y = check_training_inputs(X, y)
    model = GradientBoostedTrees(config_from_hyper(hyper)).fit(X, y)
    params = dict(model.tree_arrays())
    params["n_features"] = np.array([X.shape[1]], dtype=np.int64)
    params["importances"] = model.feature_importances_
    diag = {
        "loss_curve": np.asarray(model.train_losses_),
        "iterations": len(model.train_losses_),
        "final_loss": model.train_losses_[-1],
    }
    return params, diag


def _rebuild(params: dict, hyper: dict) -> GradientBoostedTrees:
    model = GradientBoostedTrees(config_from_hyper(hyper))
    model.load_tree_arrays(params, int(params["n_features"][0]))
    return model


def gbt_score(params: dict, hyper: dict, X: np.ndarray) -> np.ndarray:
    return _rebuild(params, hyper).predict_proba(X)

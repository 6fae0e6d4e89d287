"""Seven binary classifier families behind one fit/predict interface.

Every family trains from a (X, y) pair and produces a TrainedModel whose
parameters are plain numpy arrays, so one binary container serializes all
of them.  predict is defined as predict_score thresholded at the family's
threshold (0.5 for probability-like scores, 0 for the SVM margin).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from topicality.classifiers import gbt, knn, linear, mlp, naive_bayes
from topicality.classifiers.common import check_predict_inputs
from topicality.errors import ValidationError

MODEL_MAGIC = b"QMDL"
MODEL_VERSION = 1


@dataclass(frozen=True)
class _Family:
    defaults: dict
    validate: Callable[[dict], None]
    fit: Callable[..., tuple[dict, dict]]
    score: Callable[..., np.ndarray]
    threshold: float


_FAMILIES: dict[str, _Family] = {
    "LR": _Family(linear.LR_DEFAULTS, linear.lr_validate, linear.lr_fit, linear.lr_score, linear.LR_THRESHOLD),
    "SVM": _Family(linear.SVM_DEFAULTS, linear.svm_validate, linear.svm_fit, linear.svm_score, linear.SVM_THRESHOLD),
    "GNB": _Family(naive_bayes.GNB_DEFAULTS, naive_bayes.gnb_validate, naive_bayes.gnb_fit, naive_bayes.gnb_score, naive_bayes.GNB_THRESHOLD),
    "BNB": _Family(naive_bayes.BNB_DEFAULTS, naive_bayes.bnb_validate, naive_bayes.bnb_fit, naive_bayes.bnb_score, naive_bayes.BNB_THRESHOLD),
    "KNN": _Family(knn.KNN_DEFAULTS, knn.knn_validate, knn.knn_fit, knn.knn_score, knn.KNN_THRESHOLD),
    "GBT": _Family(gbt.GBT_DEFAULTS, gbt.gbt_validate, gbt.gbt_fit, gbt.gbt_score, gbt.GBT_THRESHOLD),
    "MLP": _Family(mlp.MLP_DEFAULTS, mlp.mlp_validate, mlp.mlp_fit, mlp.mlp_score, mlp.MLP_THRESHOLD),
}

KINDS = tuple(_FAMILIES)


@dataclass(frozen=True)
class ModelSpec:
    """A classifier kind plus fully resolved hyperparameters."""

    kind: str
    hyperparams: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in _FAMILIES:
            raise ValidationError(f"unknown model kind {self.kind!r}; choose from {list(KINDS)}")
        family = _FAMILIES[self.kind]
        unknown = set(self.hyperparams) - set(family.defaults)
        if unknown:
            raise ValidationError(f"{self.kind}: unknown hyperparameters {sorted(unknown)}")
        merged = {**family.defaults, **self.hyperparams}
        family.validate(merged)
        object.__setattr__(self, "hyperparams", merged)


@dataclass
class TrainedModel:
    spec: ModelSpec
    params: dict[str, np.ndarray]
    train_dim: int
    diagnostics: dict = field(default_factory=dict)


def fit(spec: ModelSpec, X: np.ndarray, y: np.ndarray) -> TrainedModel:
    family = _FAMILIES[spec.kind]
    X = np.asarray(X)
    if X.ndim != 2:
        raise ValidationError(f"X must be 2-D, got shape {X.shape}")
    params, diag = family.fit(X, y, spec.hyperparams, spec.seed)
    return TrainedModel(spec=spec, params=params, train_dim=X.shape[1], diagnostics=diag)


def predict_score(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    """Real-valued confidence for class 1: a probability for LR, GNB, BNB,
    MLP, and GBT, the signed margin for SVM, and the vote fraction for KNN."""
    X = check_predict_inputs(X, model.train_dim)
    if X.shape[0] == 0:
        return np.empty(0, dtype=np.float64)
    return np.asarray(_FAMILIES[model.spec.kind].score(model.params, model.spec.hyperparams, X), dtype=np.float64)


def predict(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    scores = predict_score(model, X)
    return (scores >= _FAMILIES[model.spec.kind].threshold).astype(np.int64)


def _write_str(fh, text: str) -> None:
    raw = text.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise ValidationError("string field too long for model container")
    fh.write(struct.pack("<H", len(raw)))
    fh.write(raw)


def _read_exact(fh, size: int, what: str) -> bytes:
    raw = fh.read(size)
    if len(raw) != size:
        raise ValidationError(f"model file truncated while reading {what}")
    return raw


def _read_str(fh, what: str) -> str:
    (size,) = struct.unpack("<H", _read_exact(fh, 2, what))
    return _read_exact(fh, size, what).decode("utf-8")


def save_model(model: TrainedModel, path: str | Path) -> None:
    """Versioned binary container: kind, seed, hyperparameters, and every
    parameter array raw (dtype + shape + little-endian C-order bytes)."""
    meta = {
        "hyperparams": model.spec.hyperparams,
        "diagnostics": {
            k: (float(v) if np.isscalar(v) else None) for k, v in model.diagnostics.items()
        },
    }
    meta["diagnostics"] = {k: v for k, v in meta["diagnostics"].items() if v is not None}
    meta_raw = json.dumps(meta, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<I", MODEL_VERSION))
        _write_str(fh, model.spec.kind)
        fh.write(struct.pack("<q", model.spec.seed))
        fh.write(struct.pack("<I", model.train_dim))
        fh.write(struct.pack("<I", len(meta_raw)))
        fh.write(meta_raw)
        fh.write(struct.pack("<I", len(model.params)))
        for name, arr in model.params.items():
            arr = np.ascontiguousarray(arr)
            if arr.dtype.byteorder == ">":
                arr = arr.astype(arr.dtype.newbyteorder("<"))
            _write_str(fh, name)
            _write_str(fh, arr.dtype.str)
            fh.write(struct.pack("<B", arr.ndim))
            for dim in arr.shape:
                fh.write(struct.pack("<Q", dim))
            fh.write(arr.tobytes())


def load_model(path: str | Path) -> TrainedModel:
    with open(path, "rb") as fh:
        if _read_exact(fh, 4, "magic") != MODEL_MAGIC:
            raise ValidationError(f"{path}: not a model container")
        (version,) = struct.unpack("<I", _read_exact(fh, 4, "version"))
        if version != MODEL_VERSION:
            raise ValidationError(f"{path}: unsupported model version {version}")
        kind = _read_str(fh, "kind")
        (seed,) = struct.unpack("<q", _read_exact(fh, 8, "seed"))
        (train_dim,) = struct.unpack("<I", _read_exact(fh, 4, "train_dim"))
        (meta_size,) = struct.unpack("<I", _read_exact(fh, 4, "meta"))
        meta = json.loads(_read_exact(fh, meta_size, "meta"))
        (n_arrays,) = struct.unpack("<I", _read_exact(fh, 4, "array count"))
        params = {}
        for _ in range(n_arrays):
            name = _read_str(fh, "array name")
            dtype = np.dtype(_read_str(fh, "array dtype"))
            (ndim,) = struct.unpack("<B", _read_exact(fh, 1, "array ndim"))
            shape = tuple(
                struct.unpack("<Q", _read_exact(fh, 8, "array shape"))[0] for _ in range(ndim)
            )
            count = int(np.prod(shape)) if shape else 1
            raw = _read_exact(fh, count * dtype.itemsize, f"array {name!r} data")
            params[name] = np.frombuffer(raw, dtype=dtype).reshape(shape).copy()
        if fh.read(1):
            raise ValidationError(f"{path}: trailing data after model payload")
    spec = ModelSpec(kind=kind, hyperparams=meta["hyperparams"], seed=seed)
    return TrainedModel(spec=spec, params=params, train_dim=train_dim, diagnostics=meta.get("diagnostics", {}))

"""Random-probe feature selection.

A standard-normal probe column is appended to the features; a boosted-tree
model ranks everything by total split gain, and any real feature whose
importance does not strictly beat the probe's is dropped.  Monte Carlo
repetition aggregates per-run keep masks into keep fractions and a final
thresholded mask.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from topicality.boosted_trees import GBTConfig, GradientBoostedTrees
from topicality.embeddings import LabeledDataset
from topicality.errors import ValidationError
from topicality.seeding import derive_seed

MASK_MAGIC = b"QMSK"
MASK_VERSION = 1


@dataclass
class ProbeRunResult:
    kept_mask: np.ndarray  # bool, length d
    probe_importance: float
    importances: np.ndarray  # length d, total gain per real feature
    seed: int


@dataclass
class SelectionReport:
    keep_fraction_per_feature: np.ndarray
    final_mask: np.ndarray
    runs: int
    tau: float
    mean_reduction: float
    seed: int = 0

    def to_json(self) -> str:
        payload = {
            "runs": self.runs,
            "tau": self.tau,
            "seed": self.seed,
            "mean_reduction": self.mean_reduction,
            "kept_features": int(self.final_mask.sum()),
            "total_features": int(self.final_mask.size),
            "keep_fraction_per_feature": [round(float(v), 10) for v in self.keep_fraction_per_feature],
            "final_mask": [bool(v) for v in self.final_mask],
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def probe_run(
    data: LabeledDataset,
    seed: int,
    importance_model: GBTConfig | None = None,
    _observer: Callable[[list[str]], None] | None = None,
) -> ProbeRunResult:
    """One selection run: append a seeded N(0,1) probe, rank by gain.

    A feature is kept only when its total gain strictly exceeds the
    probe's; ties (typically both zero) count as useless.
    """
    if data.d < 1:
        raise ValidationError("probe_run: no features")
    if np.unique(data.y).size < 2:
        raise ValidationError("probe_run: single-class y")
    if _observer is not None:
        _observer(list(data.ids))
    rng = np.random.default_rng(seed)
    probe = rng.standard_normal(data.n)
    augmented = np.hstack([data.X, probe[:, None]])
    model = GradientBoostedTrees(importance_model or GBTConfig()).fit(augmented, data.y)
    importances = model.feature_importances_
    probe_importance = float(importances[-1])
    real = importances[: data.d].copy()
    return ProbeRunResult(
        kept_mask=real > probe_importance,
        probe_importance=probe_importance,
        importances=real,
        seed=seed,
    )


def probe_select_mc(
    data: LabeledDataset,
    runs: int = 1000,
    tau: float = 0.5,
    seed: int = 0,
    importance_model: GBTConfig | None = None,
) -> SelectionReport:
    """Aggregate `runs` independent probe runs with derived seeds.

    A feature lands in the final mask when kept in at least a tau fraction
    of runs; mean_reduction averages the per-run fraction of dropped
    features.
    """
    if runs < 1:
        raise ValidationError("probe_select_mc: runs must be >= 1")
    if not 0.0 < tau <= 1.0:
        raise ValidationError("probe_select_mc: tau must be in (0, 1]")
    keep_counts = np.zeros(data.d, dtype=np.int64)
    reduction_sum = 0.0
    for r in range(runs):
        result = probe_run(data, derive_seed(seed, "probe", r), importance_model)
        keep_counts += result.kept_mask
        reduction_sum += 1.0 - result.kept_mask.sum() / data.d
    keep_fraction = keep_counts / runs
    return SelectionReport(
        keep_fraction_per_feature=keep_fraction,
        final_mask=keep_fraction >= tau,
        runs=runs,
        tau=tau,
        mean_reduction=reduction_sum / runs,
        seed=seed,
    )


def apply_mask(data: LabeledDataset, mask: np.ndarray) -> LabeledDataset:
    """Keep the columns where mask is true, preserving order."""
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 1 or mask.size != data.d:
        raise ValidationError(f"mask length {mask.size} != feature count {data.d}")
    if not mask.any():
        raise ValidationError("apply_mask: mask drops every feature")
    return LabeledDataset(X=data.X[:, mask], y=data.y.copy(), ids=list(data.ids))


def write_mask(mask: np.ndarray, path: str | Path) -> None:
    """Compact bitset file: QMSK magic, version, length, packed bits."""
    mask = np.asarray(mask, dtype=bool)
    with open(path, "wb") as fh:
        fh.write(MASK_MAGIC)
        fh.write(struct.pack("<I", MASK_VERSION))
        fh.write(struct.pack("<Q", mask.size))
        fh.write(np.packbits(mask).tobytes())


def read_mask(path: str | Path) -> np.ndarray:
    with open(path, "rb") as fh:
        if fh.read(4) != MASK_MAGIC:
            raise ValidationError(f"{path}: not a mask bitset file")
        version = struct.unpack("<I", fh.read(4))[0]
        if version != MASK_VERSION:
            raise ValidationError(f"{path}: unsupported mask version {version}")
        size = struct.unpack("<Q", fh.read(8))[0]
        packed = np.frombuffer(fh.read(), dtype=np.uint8)
        if packed.size != (size + 7) // 8:
            raise ValidationError(f"{path}: truncated mask payload")
    return np.unpackbits(packed)[:size].astype(bool)

"""Monte Carlo evaluation: paired shuffle splits, metric summaries, sweeps.

Every run draws a stratified train/test split from a seed derived off the
master seed and the run index, so runs are independent but exactly
reproducible, and all models inside one run share the same split.  With
reduction enabled, each run fits its own probe-selection mask on the
training half only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from topicality import classifiers
from topicality.boosted_trees import GBTConfig
from topicality.embeddings import LabeledDataset
from topicality.errors import ValidationError
from topicality.feature_select import apply_mask, probe_run
from topicality.seeding import derive_seed


@dataclass
class RunMetrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    run_index: int = -1
    seed: int = 0
    model_kind: str = ""
    reduced: bool = False
    degenerate: bool = False


@dataclass
class StatBlock:
    mean: float
    median: float
    std: float
    min: float
    max: float

    @classmethod
    def of(cls, values: np.ndarray) -> "StatBlock":
        return cls(
            mean=float(values.mean()),
            median=float(np.median(values)),
            std=float(values.std(ddof=0)),
            min=float(values.min()),
            max=float(values.max()),
        )

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "median": self.median,
            "std": self.std,
            "min": self.min,
            "max": self.max,
        }


@dataclass
class MetricSummary:
    accuracy: StatBlock
    precision: StatBlock
    recall: StatBlock
    f1: StatBlock
    n_runs: int
    f1_hist_counts: list[int]
    f1_hist_edges: list[float]

    @classmethod
    def from_runs(cls, runs: list["RunMetrics"], bins: int = 20) -> "MetricSummary":
        if not runs:
            raise ValidationError("cannot summarize zero runs")
        f1 = np.array([r.f1 for r in runs])
        counts, edges = np.histogram(f1, bins=bins)
        return cls(
            accuracy=StatBlock.of(np.array([r.accuracy for r in runs])),
            precision=StatBlock.of(np.array([r.precision for r in runs])),
            recall=StatBlock.of(np.array([r.recall for r in runs])),
            f1=StatBlock.of(f1),
            n_runs=len(runs),
            f1_hist_counts=[int(c) for c in counts],
            f1_hist_edges=[float(e) for e in edges],
        )

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy.to_dict(),
            "precision": self.precision.to_dict(),
            "recall": self.recall.to_dict(),
            "f1": self.f1.to_dict(),
            "n_runs": self.n_runs,
            "f1_hist_counts": self.f1_hist_counts,
            "f1_hist_edges": self.f1_hist_edges,
        }


@dataclass
class CompareResult:
    summaries: dict[str, MetricSummary]
    runs: list[RunMetrics]
    n_runs: int
    train_frac: float
    seed: int
    reduced: bool

    def runs_for(self, kind: str) -> list[RunMetrics]:
        return [r for r in self.runs if r.model_kind == kind]


@dataclass
class SweepResult:
    fractions: list[float]
    summaries: list[MetricSummary]
    per_fraction_runs: list[list[RunMetrics]] = field(default_factory=list)


def metrics(y_true: np.ndarray, y_pred: np.ndarray) -> RunMetrics:
    """Accuracy, precision, recall, f1 for positive class 1.

    Undefined ratios (empty denominator) score 0.0 and set the degenerate
    flag rather than raising.
    """
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.ndim != 1 or y_true.shape != y_pred.shape:
        raise ValidationError(f"label shapes differ: {y_true.shape} vs {y_pred.shape}")
    if y_true.size == 0:
        raise ValidationError("cannot score zero samples")
    for arr, name in ((y_true, "y_true"), (y_pred, "y_pred")):
        if not np.isin(np.unique(arr), [0, 1]).all():
            raise ValidationError(f"{name} must be binary 0/1")
    tp = int(((y_true == 1) & (y_pred == 1)).sum())
    fp = int(((y_true == 0) & (y_pred == 1)).sum())
    fn = int(((y_true == 1) & (y_pred == 0)).sum())
    degenerate = False
    accuracy = float((y_true == y_pred).mean())
    if tp + fp == 0:
        precision, degenerate = 0.0, True
    else:
        precision = tp / (tp + fp)
    if tp + fn == 0:
        recall, degenerate = 0.0, True
    else:
        recall = tp / (tp + fn)
    if precision + recall == 0.0:
        f1, degenerate = 0.0, True
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return RunMetrics(accuracy=accuracy, precision=precision, recall=recall, f1=f1, degenerate=degenerate)


def stratified_split(
    y: np.ndarray, train_frac: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Per-class shuffled split keeping at least one sample of every class
    on each side.  Train size per class is round(train_frac * class size)."""
    if not 0.0 < train_frac < 1.0:
        raise ValidationError(f"train_frac must be in (0, 1), got {train_frac}")
    y = np.asarray(y)
    train_parts, test_parts = [], []
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        if idx.size < 2:
            raise ValidationError(
                f"class {cls} has {idx.size} sample(s); need >= 2 to stratify"
            )
        n_train = int(round(train_frac * idx.size))
        n_train = min(max(n_train, 1), idx.size - 1)
        perm = rng.permutation(idx.size)
        train_parts.append(idx[perm[:n_train]])
        test_parts.append(idx[perm[n_train:]])
    return np.sort(np.concatenate(train_parts)), np.sort(np.concatenate(test_parts))


def _run_models(
    specs: list[classifiers.ModelSpec],
    train: LabeledDataset,
    test: LabeledDataset,
    master_seed: int,
    run_index: int,
    split_seed: int,
    reduced: bool,
) -> list[RunMetrics]:
    out = []
    for spec in specs:
        fit_seed = derive_seed(master_seed, "fit", run_index, spec.kind, spec.seed)
        seeded = classifiers.ModelSpec(spec.kind, dict(spec.hyperparams), seed=fit_seed)
        model = classifiers.fit(seeded, train.X, train.y)
        pred = classifiers.predict(model, test.X)
        m = metrics(test.y, pred)
        m.run_index = run_index
        m.seed = split_seed
        m.model_kind = spec.kind
        m.reduced = reduced
        out.append(m)
    return out


def mc_compare(
    data: LabeledDataset,
    specs: list[classifiers.ModelSpec],
    runs: int = 1000,
    train_frac: float = 0.66,
    seed: int = 0,
    reduced: bool = False,
    selection_config: GBTConfig | None = None,
    global_mask: np.ndarray | None = None,
    trace: list | None = None,
) -> CompareResult:
    """Repeated stratified shuffle-split comparison, paired across models.

    reduced=True fits a probe-selection mask per run on that run's training
    half; passing global_mask instead applies one fixed mask everywhere
    (the single-mask mode, which trades leak-freedom for comparability).
    A failed run aborts the whole comparison, naming the run index.
    """
    if runs < 1:
        raise ValidationError("mc_compare: runs must be >= 1")
    if not specs:
        raise ValidationError("mc_compare: no model specs")
    kinds = [s.kind for s in specs]
    if len(set(kinds)) != len(kinds):
        raise ValidationError(f"mc_compare: duplicate model kinds {kinds}")
    all_runs: list[RunMetrics] = []
    for r in range(runs):
        try:
            split_seed = derive_seed(seed, "split", r)
            rng = np.random.default_rng(split_seed)
            train_idx, test_idx = stratified_split(data.y, train_frac, rng)
            train = data.subset(train_idx)
            test = data.subset(test_idx)
            mask = global_mask
            selection_ids: list[str] = []
            if reduced and mask is None:
                probe = probe_run(
                    train,
                    derive_seed(seed, "probe", r),
                    selection_config,
                    _observer=selection_ids.extend,
                )
                mask = probe.kept_mask
            if mask is not None:
                train = apply_mask(train, mask)
                test = apply_mask(test, mask)
            run_metrics = _run_models(
                specs, train, test, seed, r, split_seed, reduced or global_mask is not None
            )
        except Exception as exc:
            raise RuntimeError(f"evaluation run {r} failed: {exc}") from exc
        all_runs.extend(run_metrics)
        if trace is not None:
            trace.append(
                {
                    "run": r,
                    "train_ids": list(train.ids),
                    "test_ids": list(test.ids),
                    "selection_ids": selection_ids,
                    "kept_features": int(mask.sum()) if mask is not None else data.d,
                }
            )
    summaries = {
        kind: MetricSummary.from_runs([m for m in all_runs if m.model_kind == kind])
        for kind in kinds
    }
    return CompareResult(
        summaries=summaries,
        runs=all_runs,
        n_runs=runs,
        train_frac=train_frac,
        seed=seed,
        reduced=reduced or global_mask is not None,
    )


def train_size_sweep(
    data: LabeledDataset,
    spec: classifiers.ModelSpec,
    fractions: list[float] | None = None,
    runs_per_fraction: int = 10,
    seed: int = 0,
    reduced: bool = False,
    selection_config: GBTConfig | None = None,
) -> SweepResult:
    """One mc_compare per training fraction, seeds derived per fraction."""
    if fractions is None:
        fractions = [round(0.05 * i, 2) for i in range(1, 20)]
    if not fractions:
        raise ValidationError("train_size_sweep: no fractions")
    if sorted(set(fractions)) != list(fractions):
        raise ValidationError("train_size_sweep: fractions must be strictly increasing")
    if any(not 0.0 < f < 1.0 for f in fractions):
        raise ValidationError("train_size_sweep: fractions must lie in (0, 1)")
    summaries, per_fraction = [], []
    for i, frac in enumerate(fractions):
        result = mc_compare(
            data,
            [spec],
            runs=runs_per_fraction,
            train_frac=frac,
            seed=derive_seed(seed, "sweep", i),
            reduced=reduced,
            selection_config=selection_config,
        )
        summaries.append(result.summaries[spec.kind])
        per_fraction.append(result.runs)
    return SweepResult(fractions=list(fractions), summaries=summaries, per_fraction_runs=per_fraction)


def shuffle_split_cv(
    data: LabeledDataset,
    spec: classifiers.ModelSpec,
    iterations: int = 10,
    train_frac: float = 0.2,
    seed: int = 0,
    reduced: bool = False,
    selection_config: GBTConfig | None = None,
) -> MetricSummary:
    """Shuffle-split cross-validation is the same machinery with few
    iterations and a small training fraction."""
    result = mc_compare(
        data,
        [spec],
        runs=iterations,
        train_frac=train_frac,
        seed=seed,
        reduced=reduced,
        selection_config=selection_config,
    )
    return result.summaries[spec.kind]

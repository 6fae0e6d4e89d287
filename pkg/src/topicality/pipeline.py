"""End-to-end pipeline: load, agreement, fusion, balance, join, optional
feature selection, Monte Carlo evaluation, and report rendering.

One master seed drives every stage through counter-based derivation, so
any stage's draws are independent of the others and two identical runs
produce byte-identical report bundles.  Fused/balanced labels and joined
datasets are cached under the output directory keyed by content digest.
"""

from __future__ import annotations

import hashlib
import json
from contextlib import contextmanager
from dataclasses import dataclass, field, fields as dataclass_fields
from pathlib import Path

import numpy as np

import topicality
from topicality import classifiers
from topicality.agreement import FusedLabels, alpha_by_room, balance, fuse_labels, krippendorff_alpha
from topicality.boosted_trees import GBTConfig
from topicality.corpus import load_annotations, load_corpus
from topicality.embeddings import LabeledDataset, join, read_embeddings
from topicality.errors import StageError, ValidationError
from topicality.evaluation import mc_compare, shuffle_split_cv, train_size_sweep
from topicality.feature_select import probe_select_mc, write_mask
from topicality.reporting import (
    ExperimentResults,
    ReportBundle,
    compare_result_from_runs,
    emit_figure_data,
    parse_runs_csv,
    render_table2,
    runs_csv,
    sweep_csv,
)
from topicality.seeding import derive_seed

_EXPERIMENTS = ("model_compare", "agreement_compare", "sweep", "cv")
_FUSION_MODES = ("CAg", "MAg")


@dataclass
class PipelineConfig:
    corpus: str = ""
    annotations: str = ""
    embeddings: str = ""
    out: str = "out"
    corpus_format: str = "jsonl"
    fusion_mode: str = "CAg"
    quorum: int = 3
    join_policy: str = "skip"
    master_seed: int = 0
    reduction: str = "both"  # both | on | off
    mask_mode: str = "per-run"  # per-run | aggregate
    select_runs: int = 50
    select_tau: float = 0.5
    gbt_rounds: int = 100
    gbt_depth: int = 6
    gbt_learning_rate: float = 0.3
    gbt_reg_lambda: float = 1.0
    gbt_gamma: float = 0.0
    gbt_min_child_weight: float = 1.0
    gbt_bins: int = 64
    models: list[str] = field(default_factory=lambda: list(classifiers.KINDS))
    eval_runs: int = 100
    train_frac: float = 0.66
    cv_iterations: int = 10
    cv_train_frac: float = 0.2
    sweep_fractions: list[float] | None = None
    sweep_runs: int = 10
    sweep_reduced: bool = False
    experiments: list[str] = field(default_factory=lambda: list(_EXPERIMENTS))

    def gbt_config(self) -> GBTConfig:
        return GBTConfig(
            n_rounds=self.gbt_rounds,
            max_depth=self.gbt_depth,
            learning_rate=self.gbt_learning_rate,
            reg_lambda=self.gbt_reg_lambda,
            gamma=self.gbt_gamma,
            min_child_weight=self.gbt_min_child_weight,
            n_bins=self.gbt_bins,
        )

    def validate(self) -> None:
        for name in ("corpus", "annotations", "embeddings"):
            path = getattr(self, name)
            if not path:
                raise ValidationError(f"config: {name} path is required")
            if not Path(path).exists():
                raise ValidationError(f"config: {name} path {path!r} does not exist")
        if self.fusion_mode not in _FUSION_MODES:
            raise ValidationError(f"config: fusion_mode must be one of {_FUSION_MODES}")
        if self.reduction not in ("both", "on", "off"):
            raise ValidationError("config: reduction must be both, on, or off")
        if self.mask_mode not in ("per-run", "aggregate"):
            raise ValidationError("config: mask_mode must be per-run or aggregate")
        if self.join_policy not in ("skip", "strict"):
            raise ValidationError("config: join_policy must be skip or strict")
        if self.quorum < 1:
            raise ValidationError("config: quorum must be >= 1")
        for name in ("select_runs", "eval_runs", "cv_iterations", "sweep_runs"):
            if getattr(self, name) < 1:
                raise ValidationError(f"config: {name} must be >= 1")
        for name in ("train_frac", "cv_train_frac"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ValidationError(f"config: {name} must be in (0, 1)")
        if not 0.0 < self.select_tau <= 1.0:
            raise ValidationError("config: select_tau must be in (0, 1]")
        if self.sweep_fractions is not None and any(
            not 0.0 < f < 1.0 for f in self.sweep_fractions
        ):
            raise ValidationError("config: sweep fractions must lie in (0, 1)")
        if not self.models:
            raise ValidationError("config: at least one model required")
        for kind in self.models:
            if kind not in classifiers.KINDS:
                raise ValidationError(f"config: unknown model kind {kind!r}")
        unknown = set(self.experiments) - set(_EXPERIMENTS)
        if unknown:
            raise ValidationError(f"config: unknown experiments {sorted(unknown)}")
        if "model_compare" not in self.experiments:
            raise ValidationError("config: the model_compare experiment is mandatory")
        self.gbt_config().validate()

    def as_flat_dict(self) -> dict[str, str]:
        out = {}
        for f in dataclass_fields(self):
            v = getattr(self, f.name)
            if isinstance(v, list):
                out[f.name] = ",".join(str(x) for x in v)
            elif v is None:
                out[f.name] = "default"
            else:
                out[f.name] = str(v)
        return out


def _parse_bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValidationError(f"cannot parse boolean from {raw!r}")


_CONFIG_KEYS: dict[str, tuple[str, str]] = {
    "corpus": ("corpus", "path"),
    "annotations": ("annotations", "path"),
    "embeddings": ("embeddings", "path"),
    "out": ("out", "path"),
    "corpus.format": ("corpus_format", "str"),
    "fusion.mode": ("fusion_mode", "str"),
    "fusion.quorum": ("quorum", "int"),
    "join.policy": ("join_policy", "str"),
    "seed": ("master_seed", "int"),
    "reduction": ("reduction", "str"),
    "select.mask_mode": ("mask_mode", "str"),
    "select.runs": ("select_runs", "int"),
    "select.tau": ("select_tau", "float"),
    "gbt.rounds": ("gbt_rounds", "int"),
    "gbt.depth": ("gbt_depth", "int"),
    "gbt.learning_rate": ("gbt_learning_rate", "float"),
    "gbt.reg_lambda": ("gbt_reg_lambda", "float"),
    "gbt.gamma": ("gbt_gamma", "float"),
    "gbt.min_child_weight": ("gbt_min_child_weight", "float"),
    "gbt.bins": ("gbt_bins", "int"),
    "models": ("models", "str_list"),
    "eval.runs": ("eval_runs", "int"),
    "eval.train_frac": ("train_frac", "float"),
    "eval.cv_iterations": ("cv_iterations", "int"),
    "eval.cv_train_frac": ("cv_train_frac", "float"),
    "sweep.fractions": ("sweep_fractions", "float_list_or_default"),
    "sweep.runs_per_fraction": ("sweep_runs", "int"),
    "sweep.reduced": ("sweep_reduced", "bool"),
    "experiments": ("experiments", "str_list"),
}


def parse_config_text(text: str, base_dir: Path | None = None) -> PipelineConfig:
    """Flat key=value format; '#' starts a comment, blank lines ignored.
    Relative paths resolve against the config file's directory."""
    config = PipelineConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"config line {lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ValidationError(f"config line {lineno}: unknown key {key!r}")
        attr, kind = _CONFIG_KEYS[key]
        try:
            if kind == "path":
                resolved = Path(value)
                if base_dir is not None and not resolved.is_absolute():
                    resolved = base_dir / resolved
                parsed: object = str(resolved)
            elif kind == "int":
                parsed = int(value)
            elif kind == "float":
                parsed = float(value)
            elif kind == "bool":
                parsed = _parse_bool(value)
            elif kind == "str_list":
                parsed = [part.strip() for part in value.split(",") if part.strip()]
            elif kind == "float_list_or_default":
                parsed = None if value == "default" else [float(p) for p in value.split(",")]
            else:
                parsed = value
        except ValueError as exc:
            raise ValidationError(f"config line {lineno}: {exc}") from exc
        setattr(config, attr, parsed)
    return config


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"config file {path} does not exist")
    return parse_config_text(path.read_text(encoding="utf-8"), base_dir=path.parent)


def _digest_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _cache_key(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:24]


class _Cache:
    """Content-addressed stage cache under <out>/cache."""

    def __init__(self, root: Path):
        self.root = root

    def _dir(self, kind: str, key: str) -> Path:
        return self.root / f"{kind}_{key}"

    def load_labels(self, key: str) -> FusedLabels | None:
        path = self._dir("labels", key) / "labels.json"
        if not path.exists():
            return None
        blob = json.loads(path.read_text(encoding="utf-8"))
        return FusedLabels(
            mode=blob["mode"],
            entries=[(e[0], int(e[1])) for e in blob["entries"]],
            excluded=[(e[0], e[1]) for e in blob["excluded"]],
        )

    def store_labels(self, key: str, fused: FusedLabels) -> None:
        d = self._dir("labels", key)
        d.mkdir(parents=True, exist_ok=True)
        blob = {
            "mode": fused.mode,
            "entries": [[i, l] for i, l in fused.entries],
            "excluded": [[i, r] for i, r in fused.excluded],
        }
        (d / "labels.json").write_text(json.dumps(blob, sort_keys=True), encoding="utf-8")

    def load_dataset(self, key: str) -> LabeledDataset | None:
        d = self._dir("join", key)
        if not (d / "ids.json").exists():
            return None
        ids = json.loads((d / "ids.json").read_text(encoding="utf-8"))
        X = np.load(d / "X.npy")
        y = np.load(d / "y.npy")
        return LabeledDataset(X=X, y=y, ids=ids)

    def store_dataset(self, key: str, data: LabeledDataset) -> None:
        d = self._dir("join", key)
        d.mkdir(parents=True, exist_ok=True)
        np.save(d / "X.npy", data.X)
        np.save(d / "y.npy", data.y)
        (d / "ids.json").write_text(json.dumps(list(data.ids)), encoding="utf-8")


@contextmanager
def _stage(name: str):
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def run_pipeline(config: PipelineConfig) -> ReportBundle:
    config.validate()
    outdir = Path(config.out)
    outdir.mkdir(parents=True, exist_ok=True)
    cache = _Cache(outdir / "cache")
    master = config.master_seed
    summary: dict = {}

    with _stage("load"):
        corpus = load_corpus(config.corpus, format=config.corpus_format)
        annotations = load_annotations(config.annotations, corpus=corpus)
        matrix = read_embeddings(config.embeddings)
        digests = {
            "corpus": _digest_file(config.corpus),
            "annotations": _digest_file(config.annotations),
            "embeddings": _digest_file(config.embeddings),
        }

    with _stage("alpha"):
        overall_alpha = krippendorff_alpha(annotations)
        by_room, mean_room_alpha = alpha_by_room(annotations, corpus)
        summary["alpha"] = {
            "overall": overall_alpha,
            "mean_by_room": mean_room_alpha,
            "by_room": by_room,
        }

    fused: dict[str, FusedLabels] = {}
    with _stage("fuse"):
        for mode in _FUSION_MODES:
            key = _cache_key(
                {
                    "stage": "fuse",
                    "annotations": digests["annotations"],
                    "mode": mode,
                    "quorum": config.quorum,
                }
            )
            cached = cache.load_labels(key)
            if cached is None:
                cached = fuse_labels(annotations, mode=mode, quorum=config.quorum)
                cache.store_labels(key, cached)
            fused[mode] = cached
        if not fused[config.fusion_mode].entries:
            raise ValidationError(f"fusion {config.fusion_mode} produced no labels")

    balanced: dict[str, FusedLabels] = {}
    with _stage("balance"):
        for mode in _FUSION_MODES:
            if not fused[mode].entries:
                balanced[mode] = fused[mode]
                continue
            seed = derive_seed(master, "balance", mode)
            key = _cache_key(
                {
                    "stage": "balance",
                    "annotations": digests["annotations"],
                    "mode": mode,
                    "quorum": config.quorum,
                    "seed": seed,
                }
            )
            cached = cache.load_labels(key)
            if cached is None:
                cached = balance(fused[mode], seed=seed)
                cache.store_labels(key, cached)
            balanced[mode] = cached
        summary["fusion"] = {
            mode: {
                "fused": len(fused[mode].entries),
                "excluded": len(fused[mode].excluded),
                "balanced": len(balanced[mode].entries),
            }
            for mode in _FUSION_MODES
        }

    datasets: dict[str, LabeledDataset] = {}
    with _stage("join"):
        for mode in _FUSION_MODES:
            if not balanced[mode].entries:
                continue
            key = _cache_key(
                {
                    "stage": "join",
                    "annotations": digests["annotations"],
                    "embeddings": digests["embeddings"],
                    "mode": mode,
                    "quorum": config.quorum,
                    "seed": derive_seed(master, "balance", mode),
                    "policy": config.join_policy,
                }
            )
            cached = cache.load_dataset(key)
            if cached is None:
                cached = join(balanced[mode], matrix, policy=config.join_policy)
                cache.store_dataset(key, cached)
            datasets[mode] = cached
    primary = datasets[config.fusion_mode]

    global_mask = None
    if config.reduction != "off" and config.mask_mode == "aggregate":
        with _stage("select"):
            report = probe_select_mc(
                primary,
                runs=config.select_runs,
                tau=config.select_tau,
                seed=derive_seed(master, "select"),
                importance_model=config.gbt_config(),
            )
            global_mask = report.final_mask
            (outdir / "selection_report.json").write_text(
                report.to_json() + "\n", encoding="utf-8"
            )
            write_mask(report.final_mask, outdir / "selection_mask.bin")
            summary["selection"] = {
                "mean_reduction": report.mean_reduction,
                "kept_features": int(report.final_mask.sum()),
                "runs": report.runs,
                "tau": report.tau,
            }

    specs = [classifiers.ModelSpec(kind) for kind in config.models]
    results = ExperimentResults()
    cv_summary = None
    with _stage("evaluate"):
        gbt_cfg = config.gbt_config()
        if config.reduction in ("both", "off"):
            results.compare_raw = mc_compare(
                primary,
                specs,
                runs=config.eval_runs,
                train_frac=config.train_frac,
                seed=derive_seed(master, "eval", "raw"),
            )
        if config.reduction in ("both", "on"):
            results.compare_reduced = mc_compare(
                primary,
                specs,
                runs=config.eval_runs,
                train_frac=config.train_frac,
                seed=derive_seed(master, "eval", "reduced"),
                reduced=True,
                selection_config=gbt_cfg,
                global_mask=global_mask,
            )
        if "agreement_compare" in config.experiments:
            for mode in _FUSION_MODES:
                if mode == config.fusion_mode and results.compare_raw is not None:
                    results.agreement[mode] = results.compare_raw
                    continue
                if mode not in datasets:
                    raise ValidationError(
                        f"agreement comparison needs fusion {mode}, which produced no labels"
                    )
                results.agreement[mode] = mc_compare(
                    datasets[mode],
                    specs,
                    runs=config.eval_runs,
                    train_frac=config.train_frac,
                    seed=derive_seed(master, "eval", "agreement", mode),
                )
        sweep_model = classifiers.ModelSpec("SVM" if "SVM" in config.models else config.models[0])
        if "sweep" in config.experiments:
            results.sweep = train_size_sweep(
                primary,
                sweep_model,
                fractions=config.sweep_fractions,
                runs_per_fraction=config.sweep_runs,
                seed=derive_seed(master, "sweep"),
                reduced=config.sweep_reduced,
                selection_config=gbt_cfg,
            )
        if "cv" in config.experiments:
            cv_summary = shuffle_split_cv(
                primary,
                sweep_model,
                iterations=config.cv_iterations,
                train_frac=config.cv_train_frac,
                seed=derive_seed(master, "cv"),
                reduced=config.reduction != "off",
                selection_config=gbt_cfg,
            )
            summary["cv"] = {
                "model": sweep_model.kind,
                "f1_mean": cv_summary.f1.mean,
                "f1_std": cv_summary.f1.std,
                "iterations": config.cv_iterations,
                "train_frac": config.cv_train_frac,
            }

    with _stage("report"):
        table_blocks = {}
        if results.compare_raw is not None:
            table_blocks["without reduction"] = results.compare_raw.summaries
        if results.compare_reduced is not None:
            table_blocks["with reduction"] = results.compare_reduced.summaries
        provenance = {
            "package_version": topicality.__version__,
            "config": config.as_flat_dict(),
            "master_seed": master,
            "inputs": digests,
        }
        bundle = ReportBundle(
            table2=render_table2(table_blocks),
            figure_csvs=emit_figure_data(results),
            provenance=provenance,
        )
        bundle.write(outdir)
        stored_runs = []
        if results.compare_raw is not None:
            stored_runs.extend(results.compare_raw.runs)
        if results.compare_reduced is not None:
            stored_runs.extend(results.compare_reduced.runs)
        (outdir / "runs.csv").write_text(runs_csv(stored_runs), encoding="utf-8")
        for mode, result in results.agreement.items():
            if mode != config.fusion_mode:
                (outdir / f"agreement_{mode}_runs.csv").write_text(
                    runs_csv(result.runs), encoding="utf-8"
                )
        if results.sweep is not None:
            (outdir / "sweep_runs.csv").write_text(sweep_csv(results.sweep), encoding="utf-8")
        (outdir / "summary.json").write_text(
            json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return bundle


def render_from_dir(results_dir: str | Path, outdir: str | Path, fusion_mode: str = "CAg") -> ReportBundle:
    """Re-render table and figures from the per-run CSVs a pipeline run
    stored; pure re-rendering, no evaluation."""
    results_dir = Path(results_dir)
    runs_path = results_dir / "runs.csv"
    if not runs_path.exists():
        raise ValidationError(f"no stored results: {runs_path} missing")
    all_runs = parse_runs_csv(runs_path.read_text(encoding="utf-8"))
    raw = [r for r in all_runs if not r.reduced]
    red = [r for r in all_runs if r.reduced]
    results = ExperimentResults()
    table_blocks = {}
    if raw:
        results.compare_raw = compare_result_from_runs(raw)
        table_blocks["without reduction"] = results.compare_raw.summaries
    if red:
        results.compare_reduced = compare_result_from_runs(red)
        table_blocks["with reduction"] = results.compare_reduced.summaries
    for path in sorted(results_dir.glob("agreement_*_runs.csv")):
        mode = path.name[len("agreement_") : -len("_runs.csv")]
        results.agreement[mode] = compare_result_from_runs(
            parse_runs_csv(path.read_text(encoding="utf-8"))
        )
    if results.agreement and results.compare_raw is not None:
        results.agreement[fusion_mode] = results.compare_raw
    sweep_path = results_dir / "sweep_runs.csv"
    if sweep_path.exists():
        from topicality.evaluation import MetricSummary, SweepResult

        rows = sweep_path.read_text(encoding="utf-8").splitlines()
        per_fraction: dict[float, list] = {}
        header = "fraction,run,seed,accuracy,precision,recall,f1,reduced"
        if not rows or rows[0] != header:
            raise ValidationError(f"sweep CSV must start with header {header!r}")
        from topicality.evaluation import RunMetrics

        for line in rows[1:]:
            if not line.strip():
                continue
            parts = line.split(",")
            per_fraction.setdefault(float(parts[0]), []).append(
                RunMetrics(
                    run_index=int(parts[1]),
                    seed=int(parts[2]),
                    accuracy=float(parts[3]),
                    precision=float(parts[4]),
                    recall=float(parts[5]),
                    f1=float(parts[6]),
                    reduced=bool(int(parts[7])),
                )
            )
        fractions = sorted(per_fraction)
        results.sweep = SweepResult(
            fractions=fractions,
            summaries=[MetricSummary.from_runs(per_fraction[f]) for f in fractions],
            per_fraction_runs=[per_fraction[f] for f in fractions],
        )
    provenance = {
        "package_version": topicality.__version__,
        "rendered_from": {
            p.name: _digest_file(p)
            for p in sorted(results_dir.glob("*.csv"))
            if p.name.endswith("runs.csv") or p.name == "runs.csv"
        },
    }
    bundle = ReportBundle(
        table2=render_table2(table_blocks),
        figure_csvs=emit_figure_data(results),
        provenance=provenance,
    )
    bundle.write(outdir)
    return bundle

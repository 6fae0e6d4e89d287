"""Command-line entrypoint.

Exit codes: 0 success, 2 validation failure (bad inputs or config),
3 pipeline stage failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from topicality import classifiers
from topicality.agreement import (
    alpha_by_room,
    balance,
    fuse_labels,
    krippendorff_alpha,
    load_fused_csv,
    save_fused_csv,
)
from topicality.boosted_trees import GBTConfig
from topicality.corpus import corpus_stats, load_annotations, load_corpus, save_annotations, save_corpus
from topicality.embeddings import join, read_embeddings, write_embeddings
from topicality.errors import StageError, ValidationError
from topicality.evaluation import mc_compare, shuffle_split_cv, train_size_sweep
from topicality.feature_select import probe_select_mc, write_mask
from topicality.pipeline import load_config, render_from_dir, run_pipeline
from topicality.reporting import ExperimentResults, emit_figure_data, runs_csv, sweep_csv
from topicality.synthetic import SyntheticSpec, generate


def _add_gbt_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--gbt-rounds", type=int, default=100)
    parser.add_argument("--gbt-depth", type=int, default=6)
    parser.add_argument("--gbt-learning-rate", type=float, default=0.3)
    parser.add_argument("--gbt-reg-lambda", type=float, default=1.0)
    parser.add_argument("--gbt-gamma", type=float, default=0.0)
    parser.add_argument("--gbt-min-child-weight", type=float, default=1.0)
    parser.add_argument("--gbt-bins", type=int, default=64)


def _gbt_config(args: argparse.Namespace) -> GBTConfig:
    return GBTConfig(
        n_rounds=args.gbt_rounds,
        max_depth=args.gbt_depth,
        learning_rate=args.gbt_learning_rate,
        reg_lambda=args.gbt_reg_lambda,
        gamma=args.gbt_gamma,
        min_child_weight=args.gbt_min_child_weight,
        n_bins=args.gbt_bins,
    )


def _load_dataset(embeddings_path: str, labels_path: str, policy: str = "skip"):
    matrix = read_embeddings(embeddings_path)
    fused = load_fused_csv(labels_path)
    return join(fused, matrix, policy=policy)


def _seed(args: argparse.Namespace) -> int:
    return args.seed if args.seed is not None else 0


def _outdir(args: argparse.Namespace) -> Path:
    out = Path(args.out if args.out is not None else "out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_hyper(pairs: list[str]) -> dict:
    hyper: dict = {}
    for pair in pairs:
        if "=" not in pair:
            raise ValidationError(f"--hyper expects key=value, got {pair!r}")
        key, raw = pair.split("=", 1)
        try:
            value: object = int(raw)
        except ValueError:
            try:
                value = float(raw)
            except ValueError:
                value = raw
        hyper[key.strip()] = value
    return hyper


def cmd_stats(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus, format=args.format)
    for label, include in (("with_moderator", True), ("without_moderator", False)):
        stats = corpus_stats(corpus, include_moderator=include)
        print(f"[{label}]")
        print(f"  room_count: {stats.room_count}")
        print(f"  message_count_with_moderator: {stats.message_count_with_moderator}")
        print(f"  message_count_without_moderator: {stats.message_count_without_moderator}")
        print(f"  user_count: {stats.user_count}")
        print(f"  mean_chars: {stats.mean_chars:.2f}")
        print(f"  median_chars: {stats.median_chars:.2f}")
        print(f"  mean_tokens: {stats.mean_tokens:.2f}")
        print(f"  median_tokens: {stats.median_tokens:.2f}")
    return 0


def cmd_agreement(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus, format=args.format)
    annotations = load_annotations(args.annotations, corpus=corpus)
    overall = krippendorff_alpha(annotations)
    by_room, mean_alpha = alpha_by_room(annotations, corpus)
    print(f"overall_alpha: {overall:.4f}")
    print(f"mean_room_alpha: {mean_alpha:.4f}")
    for room in sorted(by_room):
        print(f"  {room}: {by_room[room]:.4f}")
    return 0


def cmd_fuse(args: argparse.Namespace) -> int:
    annotations = load_annotations(args.annotations)
    fused = fuse_labels(annotations, mode=args.mode, quorum=args.quorum)
    save_fused_csv(fused, args.out_labels)
    counts = fused.class_counts()
    print(f"mode: {fused.mode}")
    print(f"kept: {len(fused.entries)} (class 0: {counts.get(0, 0)}, class 1: {counts.get(1, 0)})")
    reasons: dict[str, int] = {}
    for _, reason in fused.excluded:
        reasons[reason] = reasons.get(reason, 0) + 1
    for reason in sorted(reasons):
        print(f"excluded[{reason}]: {reasons[reason]}")
    return 0


def cmd_balance(args: argparse.Namespace) -> int:
    fused = load_fused_csv(args.labels)
    balanced = balance(fused, seed=_seed(args))
    save_fused_csv(balanced, args.out_labels)
    counts = balanced.class_counts()
    print(f"kept: {len(balanced.entries)} (class 0: {counts.get(0, 0)}, class 1: {counts.get(1, 0)})")
    return 0


def cmd_select(args: argparse.Namespace) -> int:
    data = _load_dataset(args.embeddings, args.labels)
    report = probe_select_mc(
        data,
        runs=args.runs,
        tau=args.tau,
        seed=_seed(args),
        importance_model=_gbt_config(args),
    )
    out = _outdir(args)
    (out / "selection_report.json").write_text(report.to_json() + "\n", encoding="utf-8")
    write_mask(report.final_mask, out / "selection_mask.bin")
    print(f"kept: {int(report.final_mask.sum())}/{report.final_mask.size}")
    print(f"mean_reduction: {report.mean_reduction:.4f}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    data = _load_dataset(args.embeddings, args.labels)
    spec = classifiers.ModelSpec(args.kind, _parse_hyper(args.hyper), seed=_seed(args))
    model = classifiers.fit(spec, data.X, data.y)
    classifiers.save_model(model, args.model_out)
    iters = model.diagnostics.get("iterations")
    print(f"trained {args.kind} on {data.n} samples x {data.d} features"
          + (f" ({iters} iterations)" if iters is not None else ""))
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    model = classifiers.load_model(args.model)
    matrix = read_embeddings(args.embeddings)
    labels = classifiers.predict(model, matrix.vectors.astype(np.float64))
    lines = ["message_id,label,score"] if args.scores else ["message_id,label"]
    scores = classifiers.predict_score(model, matrix.vectors.astype(np.float64)) if args.scores else None
    for i, mid in enumerate(matrix.ids):
        if scores is not None:
            lines.append(f"{mid},{labels[i]},{scores[i]:.10g}")
        else:
            lines.append(f"{mid},{labels[i]}")
    Path(args.out_csv).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"predicted {len(matrix.ids)} messages -> {args.out_csv}")
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    data = _load_dataset(args.embeddings, args.labels)
    specs = [classifiers.ModelSpec(kind) for kind in args.models.split(",") if kind]
    reduced = args.reduction != "off"
    global_mask = None
    if args.reduction == "aggregate":
        report = probe_select_mc(
            data, runs=args.select_runs, tau=args.tau, seed=_seed(args),
            importance_model=_gbt_config(args),
        )
        global_mask = report.final_mask
    result = mc_compare(
        data,
        specs,
        runs=args.runs,
        train_frac=args.train_frac,
        seed=_seed(args),
        reduced=reduced and args.reduction == "per-run",
        selection_config=_gbt_config(args),
        global_mask=global_mask,
    )
    out = _outdir(args)
    (out / "runs.csv").write_text(runs_csv(result.runs), encoding="utf-8")
    results = ExperimentResults(
        compare_raw=None if reduced else result, compare_reduced=result if reduced else None
    )
    for name, blob in emit_figure_data(results).items():
        (out / name).write_text(blob, encoding="utf-8")
    summary = {kind: s.to_dict() for kind, s in result.summaries.items()}
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    for kind, s in result.summaries.items():
        print(f"{kind}: f1 mean={s.f1.mean:.4f} std={s.f1.std:.4f}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    data = _load_dataset(args.embeddings, args.labels)
    fractions = None if args.fractions == "default" else [float(f) for f in args.fractions.split(",")]
    result = train_size_sweep(
        data,
        classifiers.ModelSpec(args.model),
        fractions=fractions,
        runs_per_fraction=args.runs_per_fraction,
        seed=_seed(args),
        reduced=args.reduced,
        selection_config=_gbt_config(args),
    )
    out = _outdir(args)
    (out / "sweep_runs.csv").write_text(sweep_csv(result), encoding="utf-8")
    blob = emit_figure_data(ExperimentResults(sweep=result))["fig8.csv"]
    (out / "fig8.csv").write_text(blob, encoding="utf-8")
    for frac, s in zip(result.fractions, result.summaries):
        print(f"fraction {frac:.2f}: f1 mean={s.f1.mean:.4f}")
    return 0


def cmd_cv(args: argparse.Namespace) -> int:
    data = _load_dataset(args.embeddings, args.labels)
    summary = shuffle_split_cv(
        data,
        classifiers.ModelSpec(args.model),
        iterations=args.iterations,
        train_frac=args.train_frac,
        seed=_seed(args),
        reduced=args.reduced,
        selection_config=_gbt_config(args),
    )
    print(f"f1 mean={summary.f1.mean:.4f} std={summary.f1.std:.4f} over {summary.n_runs} iterations")
    if args.out:
        out = _outdir(args)
        (out / "cv.json").write_text(
            json.dumps(summary.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    render_from_dir(args.results, args.out)
    print(f"report rendered to {args.out}")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config.master_seed = args.seed
    if args.out is not None:
        config.out = args.out
    if args.reduction is not None:
        config.reduction = args.reduction
    run_pipeline(config)
    print(f"pipeline complete -> {config.out}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    spec = SyntheticSpec(
        n_samples=args.samples,
        dim=args.dim,
        n_informative=args.informative,
        class_separation=args.separation,
        label_noise=args.label_noise,
        annotators=args.annotators,
        annotator_noise=args.annotator_noise,
        seed=_seed(args),
    )
    corpus, annotations, matrix = generate(spec)
    out = _outdir(args)
    save_corpus(corpus, out / "corpus.jsonl")
    save_annotations(annotations, out / "annotations.csv")
    write_embeddings(matrix, out / "vectors.qemb")
    print(f"wrote {len(corpus.messages)} messages, {len(annotations)} annotations, "
          f"{matrix.vectors.shape[0]}x{matrix.vectors.shape[1]} embeddings -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="topicality", description=__doc__)
    parser.add_argument("--seed", type=int, default=None, help="master random seed")
    parser.add_argument("--out", default=None, help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_parser(name: str, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help)
        p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
        p.add_argument("--out", default=argparse.SUPPRESS)
        return p

    p = add_parser("stats", help="corpus summary statistics")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", default=None, choices=("jsonl", "csv"))
    p.set_defaults(func=cmd_stats)

    p = add_parser("agreement", help="Krippendorff alpha overall and per room")
    p.add_argument("--corpus", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--format", default=None, choices=("jsonl", "csv"))
    p.set_defaults(func=cmd_agreement)

    p = add_parser("fuse", help="fuse annotations into labels")
    p.add_argument("--annotations", required=True)
    p.add_argument("--mode", required=True, choices=("CAg", "MAg"))
    p.add_argument("--quorum", type=int, default=3)
    p.add_argument("--out-labels", required=True)
    p.set_defaults(func=cmd_fuse)

    p = add_parser("balance", help="downsample the majority class")
    p.add_argument("--labels", required=True)
    p.add_argument("--out-labels", required=True)
    p.set_defaults(func=cmd_balance)

    p = add_parser("select", help="Monte Carlo random-probe feature selection")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--runs", type=int, default=50)
    p.add_argument("--tau", type=float, default=0.5)
    _add_gbt_flags(p)
    p.set_defaults(func=cmd_select)

    p = add_parser("train", help="train one classifier")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--kind", required=True, choices=classifiers.KINDS)
    p.add_argument("--hyper", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--model-out", required=True)
    p.set_defaults(func=cmd_train)

    p = add_parser("predict", help="predict labels for an embedding file")
    p.add_argument("--model", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out-csv", required=True)
    p.add_argument("--scores", action="store_true", help="include a score column")
    p.set_defaults(func=cmd_predict)

    p = add_parser("compare", help="Monte Carlo model comparison")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--models", default=",".join(classifiers.KINDS))
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--train-frac", type=float, default=0.66)
    p.add_argument("--reduction", default="off", choices=("off", "per-run", "aggregate"))
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--select-runs", type=int, default=50)
    _add_gbt_flags(p)
    p.set_defaults(func=cmd_compare)

    p = add_parser("sweep", help="training-size sweep")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--model", default="SVM", choices=classifiers.KINDS)
    p.add_argument("--fractions", default="default")
    p.add_argument("--runs-per-fraction", type=int, default=10)
    p.add_argument("--reduced", action="store_true")
    _add_gbt_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = add_parser("cv", help="shuffle-split cross-validation")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--model", default="SVM", choices=classifiers.KINDS)
    p.add_argument("--iterations", type=int, default=10)
    p.add_argument("--train-frac", type=float, default=0.2)
    p.add_argument("--reduced", action="store_true")
    _add_gbt_flags(p)
    p.set_defaults(func=cmd_cv)

    p = add_parser("report", help="re-render reports from stored results")
    p.add_argument("--results", required=True)
    p.set_defaults(func=cmd_report)

    p = add_parser("run", help="full pipeline from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--reduction", default=None, choices=("both", "on", "off"))
    p.set_defaults(func=cmd_run)

    p = add_parser("synth", help="generate a synthetic corpus triple")
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--dim", type=int, default=768)
    p.add_argument("--informative", type=int, default=100)
    p.add_argument("--separation", type=float, default=1.0)
    p.add_argument("--label-noise", type=float, default=0.0)
    p.add_argument("--annotators", type=int, default=3)
    p.add_argument("--annotator-noise", type=float, default=0.0)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

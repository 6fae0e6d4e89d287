"""End-to-end acceptance checks on the pinned synthetic benchmark.

Each test prints one [PASS]/[FAIL] line with the measured numbers so a
full run reads as a checklist.  The heavy Monte Carlo fixtures are
session-scoped and lazy: running a single test computes only what that
test needs.
"""

import shutil

import numpy as np
import pytest

import oracles
from topicality import classifiers
from topicality.classifiers.mlp import init_params, loss_and_grads
from topicality.agreement import balance, fuse_labels, krippendorff_alpha
from topicality.boosted_trees import GBTConfig
from topicality.cli import main
from topicality.corpus import Annotation, save_annotations, save_corpus
from topicality.embeddings import write_embeddings
from topicality.evaluation import mc_compare, shuffle_split_cv, stratified_split, train_size_sweep
from topicality.feature_select import probe_select_mc
from topicality.seeding import derive_seed
from topicality.synthetic import SyntheticSpec, generate, generate_dataset

RUNS = 100
TRAIN_FRAC = 0.66
ALL_SPECS = [classifiers.ModelSpec(kind) for kind in classifiers.KINDS]
SVM = [classifiers.ModelSpec("SVM")]


def _verdict(capsys, name: str, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="session")
def raw_compare(benchmark):
    data, _ = benchmark
    return mc_compare(
        data,
        ALL_SPECS,
        runs=RUNS,
        train_frac=TRAIN_FRAC,
        seed=derive_seed(42, "acceptance", "raw"),
    )


@pytest.fixture(scope="session")
def svm_reduced_compare(benchmark):
    data, _ = benchmark
    return mc_compare(
        data,
        SVM,
        runs=RUNS,
        train_frac=TRAIN_FRAC,
        seed=derive_seed(42, "acceptance", "raw"),
        reduced=True,
        selection_config=GBTConfig(),
    )


def test_alpha_oracle(capsys):
    perfect = [
        Annotation(f"m{i}", f"a{j}", i % 2) for i in range(40) for j in range(3)
    ]
    perfect_alpha = krippendorff_alpha(perfect)

    hand = [
        Annotation("m1", "a0", 0), Annotation("m1", "a1", 0),
        Annotation("m2", "a0", 1), Annotation("m2", "a1", 1),
        Annotation("m3", "a0", 0), Annotation("m3", "a1", 1),
        Annotation("m4", "a0", 1), Annotation("m4", "a1", 0),
    ]
    hand_alpha = krippendorff_alpha(hand)
    hand_err = abs(hand_alpha - 0.125)

    mixed = [
        Annotation(f"m{i}", f"a{j}", int(v))
        for i, row in enumerate(np.random.default_rng(9).integers(0, 2, (30, 3)))
        for j, v in enumerate(row)
    ]
    swapped = [Annotation(a.message_id, a.annotator_id, 1 - a.label) for a in mixed]
    swap_exact = krippendorff_alpha(mixed) == krippendorff_alpha(swapped)

    renamed = [
        Annotation(a.message_id, {"a0": "a2", "a1": "a0", "a2": "a1"}[a.annotator_id], a.label)
        for a in mixed
    ]
    perm_exact = krippendorff_alpha(mixed) == krippendorff_alpha(renamed)

    ok = perfect_alpha == 1.0 and hand_err <= 1e-9 and swap_exact and perm_exact
    _verdict(
        capsys,
        "alpha oracle",
        ok,
        f"perfect={perfect_alpha}, hand fixture err={hand_err:.2e}, "
        f"label-swap exact={swap_exact}, annotator-permutation exact={perm_exact}",
    )


def test_fusion_and_balance_containment(capsys):
    spec = SyntheticSpec(
        n_samples=1000, dim=4, n_informative=1, annotators=3, annotator_noise=0.12, seed=8
    )
    _, annotations, _ = generate(spec)
    cag = fuse_labels(annotations, mode="CAg", quorum=3)
    mag = fuse_labels(annotations, mode="MAg", quorum=3)
    cag_ids = {i for i, _ in cag.entries}
    mag_labels = dict(mag.entries)
    subset = cag_ids <= set(mag_labels)
    labels_agree = all(lab == mag_labels[i] for i, lab in cag.entries)
    smaller = len(cag.entries) <= len(mag.entries)

    balanced = balance(mag, seed=1)
    counts = balanced.class_counts()
    equal = counts.get(0, 0) == counts.get(1, 0)
    input_labels = dict(mag.entries)
    is_subset = all(
        i in input_labels and lab == input_labels[i] for i, lab in balanced.entries
    )

    ok = subset and labels_agree and smaller and equal and is_subset
    _verdict(
        capsys,
        "fusion/balance",
        ok,
        f"|CAg|={len(cag.entries)} <= |MAg|={len(mag.entries)}, CAg subset of MAg={subset and labels_agree}, "
        f"balanced counts={dict(sorted(counts.items()))}, balanced subset of input={is_subset}",
    )


@pytest.mark.slow
def test_clean_labels_beat_noisy_labels(capsys, benchmark, benchmark_spec, raw_compare):
    noisy_spec = SyntheticSpec(
        n_samples=benchmark_spec.n_samples,
        dim=benchmark_spec.dim,
        n_informative=benchmark_spec.n_informative,
        class_separation=benchmark_spec.class_separation,
        label_noise=0.15,
        seed=benchmark_spec.seed,
    )
    noisy_data, _ = generate_dataset(noisy_spec)
    noisy = mc_compare(
        noisy_data,
        SVM,
        runs=RUNS,
        train_frac=TRAIN_FRAC,
        seed=derive_seed(42, "acceptance", "raw"),
    )
    clean_f1 = raw_compare.summaries["SVM"].f1.mean
    noisy_f1 = noisy.summaries["SVM"].f1.mean
    gap = clean_f1 - noisy_f1
    _verdict(
        capsys,
        "clean vs noisy labels",
        gap >= 0.03,
        f"SVM mean f1 clean={clean_f1:.4f}, +15% label noise={noisy_f1:.4f}, gap={gap:.4f} (need >= 0.03)",
    )


@pytest.mark.slow
def test_all_models_clear_f1_floor(capsys, raw_compare):
    means = {kind: raw_compare.summaries[kind].f1.mean for kind in classifiers.KINDS}
    floor_ok = all(v >= 0.90 for v in means.values())
    svm_ok = means["SVM"] >= 0.95
    detail = ", ".join(f"{k}={v:.4f}" for k, v in means.items())
    _verdict(
        capsys,
        "classifier suite",
        floor_ok and svm_ok,
        f"{detail} (all >= 0.90, SVM >= 0.95)",
    )


@pytest.mark.slow
def test_reduction_preserves_f1(capsys, raw_compare, svm_reduced_compare):
    without = raw_compare.summaries["SVM"].f1.mean
    with_red = svm_reduced_compare.summaries["SVM"].f1.mean
    delta = abs(with_red - without)
    _verdict(
        capsys,
        "reduction parity",
        delta <= 0.02,
        f"SVM mean f1 without={without:.4f}, with={with_red:.4f}, |delta|={delta:.4f} (need <= 0.02)",
    )


@pytest.mark.slow
def test_reduction_magnitude_and_selectivity(capsys, benchmark):
    data, dims = benchmark
    report = probe_select_mc(
        data, runs=RUNS, tau=0.5, seed=derive_seed(42, "acceptance", "select")
    )
    informative = np.zeros(data.d, dtype=bool)
    informative[dims] = True
    recall = report.final_mask[informative].mean()
    false_keep = report.final_mask[~informative].mean()
    ok = 0.60 <= report.mean_reduction <= 0.95 and recall >= 0.9 and false_keep <= 0.1
    _verdict(
        capsys,
        "reduction magnitude",
        ok,
        f"mean per-run reduction={report.mean_reduction:.4f} (need [0.60, 0.95]), "
        f"informative recall={recall:.4f} (need >= 0.9), noise false-keep={false_keep:.4f} (need <= 0.1)",
    )


@pytest.mark.slow
def test_small_training_fractions_hold_up(capsys, benchmark):
    data, _ = benchmark
    sweep = train_size_sweep(
        data,
        SVM[0],
        fractions=[0.15, 0.2, 0.25, 0.66],
        runs_per_fraction=10,
        seed=derive_seed(42, "acceptance", "sweep"),
    )
    means = dict(zip(sweep.fractions, (s.f1.mean for s in sweep.summaries)))
    anchor = means[0.66]
    gaps = {f: abs(means[f] - anchor) for f in (0.15, 0.2, 0.25)}
    ok = all(g <= 0.03 for g in gaps.values())
    detail = ", ".join(f"f1@{f:.2f}={means[f]:.4f}" for f in sweep.fractions)
    _verdict(
        capsys,
        "train-size sweep",
        ok,
        f"{detail}; max gap to f1@0.66 = {max(gaps.values()):.4f} (need <= 0.03)",
    )


@pytest.mark.slow
def test_cross_validation_with_reduction(capsys, benchmark):
    data, _ = benchmark
    summary = shuffle_split_cv(
        data,
        SVM[0],
        iterations=10,
        train_frac=0.2,
        seed=derive_seed(42, "acceptance", "cv"),
        reduced=True,
        selection_config=GBTConfig(),
    )
    ok = summary.f1.mean >= 0.94 and summary.f1.std <= 0.02
    _verdict(
        capsys,
        "cross-validation",
        ok,
        f"SVM 10x shuffle-split at 20% train with per-run reduction: "
        f"mean f1={summary.f1.mean:.4f} (need >= 0.94), std={summary.f1.std:.4f} (need <= 0.02)",
    )


def test_numerical_oracles(capsys, small_data, tiny_data):
    rng = np.random.default_rng(derive_seed(42, "acceptance", "oracles"))
    train, test = stratified_split(small_data.y, 0.6, rng)
    Xtr, ytr = small_data.X[train], small_data.y[train]
    Xte = small_data.X[test]

    gnb = classifiers.fit(classifiers.ModelSpec("GNB"), Xtr, ytr)
    gnb_err = np.abs(
        classifiers.predict_score(gnb, Xte) - oracles.gnb_reference(Xtr, ytr, Xte)
    ).max()

    bnb = classifiers.fit(
        classifiers.ModelSpec("BNB", {"binarize": 0.2}), Xtr, ytr
    )
    bnb_err = np.abs(
        classifiers.predict_score(bnb, Xte)
        - oracles.bnb_reference(Xtr, ytr, Xte, alpha=1.0, binarize=0.2)
    ).max()

    knn = classifiers.fit(classifiers.ModelSpec("KNN", {"k": 5}), Xtr, ytr)
    knn_match = np.array_equal(
        classifiers.predict(knn, Xte), oracles.knn_reference(Xtr, ytr, Xte, k=5)
    )

    y_float = tiny_data.y.astype(np.float64)
    params = init_params(tiny_data.d, 6, seed=0)
    _, grads = loss_and_grads(params, tiny_data.X, y_float)
    mlp_rel = 0.0
    for name, numeric in oracles.finite_difference_grads(
        lambda p: loss_and_grads(p, tiny_data.X, y_float)[0],
        params,
    ).items():
        scale = max(np.abs(numeric).max(), 1e-8)
        mlp_rel = max(mlp_rel, float(np.abs(grads[name] - numeric).max() / scale))

    gbt = classifiers.fit(
        classifiers.ModelSpec("GBT", {"rounds": 40, "depth": 3}), Xtr, ytr
    )
    losses = np.array(gbt.diagnostics["loss_curve"])
    gbt_monotone = bool(np.all(np.diff(losses) <= 1e-12))

    ok = gnb_err <= 1e-9 and bnb_err <= 1e-12 and knn_match and mlp_rel <= 1e-4 and gbt_monotone
    _verdict(
        capsys,
        "numerical oracles",
        ok,
        f"GNB max err={gnb_err:.2e} (<=1e-9), BNB max err={bnb_err:.2e} (<=1e-12), "
        f"KNN exhaustive match={knn_match}, MLP grad rel err={mlp_rel:.2e} (<=1e-4), "
        f"GBT loss monotone={gbt_monotone}",
    )


def test_repeated_runs_are_byte_identical(capsys, tmp_path):
    spec = SyntheticSpec(
        n_samples=200,
        dim=12,
        n_informative=4,
        class_separation=2.0,
        annotators=3,
        annotator_noise=0.05,
        seed=23,
    )
    corpus, annotations, matrix = generate(spec)
    data_dir = tmp_path / "data"
    data_dir.mkdir()
    save_corpus(corpus, data_dir / "corpus.jsonl")
    save_annotations(annotations, data_dir / "annotations.csv")
    write_embeddings(matrix, data_dir / "vectors.qemb")
    out = tmp_path / "out"
    config_path = tmp_path / "run.config"
    config_path.write_text(
        "\n".join(
            [
                f"corpus = {data_dir / 'corpus.jsonl'}",
                f"annotations = {data_dir / 'annotations.csv'}",
                f"embeddings = {data_dir / 'vectors.qemb'}",
                f"out = {out}",
                "seed = 1",
                "models = LR,SVM,GNB",
                "eval.runs = 4",
                "select.runs = 4",
                "gbt.rounds = 12",
                "gbt.depth = 3",
                "sweep.fractions = 0.3,0.6",
                "sweep.runs_per_fraction = 2",
                "eval.cv_iterations = 2",
                "eval.cv_train_frac = 0.3",
            ]
        )
        + "\n"
    )

    def run_and_collect() -> dict[str, bytes]:
        assert main(["run", "--config", str(config_path)]) == 0
        blobs = {}
        for path in sorted(out.rglob("*")):
            if path.is_dir() or "cache" in path.parts:
                continue
            blobs[str(path.relative_to(out))] = path.read_bytes()
        return blobs

    first = run_and_collect()
    shutil.rmtree(out)
    second = run_and_collect()
    same_names = first.keys() == second.keys()
    diffs = [name for name in first if second.get(name) != first[name]]
    ok = same_names and not diffs
    _verdict(
        capsys,
        "determinism",
        ok,
        f"{len(first)} report files, identical across runs={ok}"
        + (f", differing: {diffs}" if diffs else ""),
    )

"""Empirical calibration sweeps behind the frozen test constants.

Three sweeps, each printable on its own:

  alpha       inter-annotator agreement as a function of annotator noise,
              used to pin the noise level that lands near alpha = 0.77
  separation  per-model mean f1 as a function of class separation on the
              2000 x 768 benchmark, used to pin class_separation = 1.0
  probe       how often pure-noise features survive the probe filter,
              used to sanity check the false-keep bound

Run with no arguments for all three (several minutes), or name one.
"""

import argparse
import pathlib
import sys
import time

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from topicality.agreement import krippendorff_alpha
from topicality.classifiers import KINDS, ModelSpec
from topicality.evaluation import mc_compare
from topicality.feature_select import probe_select_mc
from topicality.synthetic import SyntheticSpec, generate, generate_dataset, informative_dims


def sweep_alpha() -> None:
    print("alpha vs annotator noise (2000 messages, 3 annotators, 5 seeds each)")
    for noise in (0.02, 0.04, 0.05, 0.06, 0.08, 0.10, 0.15):
        vals = []
        for seed in range(5):
            spec = SyntheticSpec(
                n_samples=2000, dim=8, n_informative=4,
                annotators=3, annotator_noise=noise, seed=seed,
            )
            _, annotations, _ = generate(spec)
            vals.append(krippendorff_alpha(annotations))
        arr = np.array(vals)
        print(f"  noise={noise:.2f}  alpha mean={arr.mean():.4f}  min={arr.min():.4f}  max={arr.max():.4f}")


def sweep_separation() -> None:
    print("mean f1 vs class separation (2000 x 768, 100 informative, 3 runs)")
    for sep in (0.6, 0.8, 1.0, 1.2):
        spec = SyntheticSpec(
            n_samples=2000, dim=768, n_informative=100,
            class_separation=sep, seed=42,
        )
        data, _ = generate_dataset(spec)
        t0 = time.time()
        result = mc_compare(data, [ModelSpec(kind=k) for k in KINDS], runs=3, seed=0)
        cells = "  ".join(
            f"{k}={result.summaries[k].f1.mean:.3f}" for k in KINDS
        )
        print(f"  sep={sep:.1f}  {cells}  ({time.time() - t0:.0f}s)")


def sweep_probe() -> None:
    print("noise feature survival under the probe filter (500 x 50, all noise)")
    rng = np.random.default_rng(0)
    kept_counts = []
    for seed in range(10):
        X = rng.standard_normal((500, 50))
        y = rng.integers(0, 2, 500)
        from topicality.embeddings import LabeledDataset

        data = LabeledDataset(X=X, y=y, ids=[str(i) for i in range(500)])
        report = probe_select_mc(data, runs=20, tau=0.5, seed=seed)
        kept_counts.append(int(report.final_mask.sum()))
    arr = np.array(kept_counts)
    print(f"  kept of 50 noise dims over 10 seeds: mean={arr.mean():.1f}  max={arr.max()}")

    print("informative recall at benchmark scale (1 seed, 20 inner runs)")
    spec = SyntheticSpec(n_samples=2000, dim=768, n_informative=100, class_separation=1.0, seed=42)
    data, dims = generate_dataset(spec)
    report = probe_select_mc(data, runs=20, tau=0.5, seed=0)
    kept = np.flatnonzero(report.final_mask)
    info = set(informative_dims(spec).tolist())
    recall = len(info & set(kept.tolist())) / len(info)
    false_keep = len(set(kept.tolist()) - info) / (spec.dim - len(info))
    print(f"  kept={kept.size}  informative recall={recall:.3f}  false keep rate={false_keep:.4f}")
    print(f"  mean per-run reduction={report.mean_reduction:.3f}")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("sweep", nargs="?", choices=("alpha", "separation", "probe"))
    args = ap.parse_args()
    todo = [args.sweep] if args.sweep else ["alpha", "separation", "probe"]
    for name in todo:
        {"alpha": sweep_alpha, "separation": sweep_separation, "probe": sweep_probe}[name]()
        print()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

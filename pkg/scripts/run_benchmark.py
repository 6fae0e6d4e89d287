"""Run the full synthetic benchmark and print the comparison table.

This is the heavyweight companion to configs/demo.config: 2000 messages,
768-dimensional embeddings, all seven model families, Monte Carlo
evaluation with and without probe based feature reduction.  Expect a few
minutes of wall time with the default run counts.
"""

import argparse
import pathlib
import sys
import time

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from topicality.boosted_trees import GBTConfig
from topicality.classifiers import KINDS, ModelSpec
from topicality.evaluation import mc_compare, train_size_sweep
from topicality.reporting import ExperimentResults, emit_figure_data, render_table2
from topicality.synthetic import SyntheticSpec, generate_dataset


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--runs", type=int, default=100, help="MC runs per comparison")
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--out", default=None, help="optional directory for figure CSVs")
    ap.add_argument("--quick", action="store_true", help="10 runs, LR/SVM/GNB only")
    args = ap.parse_args()

    runs = 10 if args.quick else args.runs
    kinds = ("LR", "SVM", "GNB") if args.quick else KINDS
    spec = SyntheticSpec(
        n_samples=2000,
        dim=768,
        n_informative=100,
        class_separation=1.0,
        seed=args.seed,
    )
    data, _dims = generate_dataset(spec)
    specs = [ModelSpec(kind=k) for k in kinds]

    t0 = time.time()
    raw = mc_compare(data, specs, runs=runs, seed=args.seed)
    print(f"raw comparison: {runs} runs in {time.time() - t0:.1f}s")
    t0 = time.time()
    reduced = mc_compare(
        data, specs, runs=runs, seed=args.seed + 1, reduced=True,
        selection_config=GBTConfig(),
    )
    print(f"reduced comparison: {runs} runs in {time.time() - t0:.1f}s")
    t0 = time.time()
    sweep = train_size_sweep(
        data,
        ModelSpec(kind="SVM"),
        fractions=(0.1, 0.2, 0.33, 0.5, 0.66, 0.8),
        runs_per_fraction=max(3, runs // 10),
        seed=args.seed,
    )
    print(f"train size sweep in {time.time() - t0:.1f}s")

    table = render_table2(
        {
            "without reduction": raw.summaries,
            "with reduction": reduced.summaries,
        }
    )
    print()
    print(table)

    if args.out is not None:
        out = pathlib.Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "table2.txt").write_text(table + "\n", encoding="utf-8")
        figures = emit_figure_data(
            ExperimentResults(compare_raw=raw, compare_reduced=reduced, sweep=sweep)
        )
        for name, text in sorted(figures.items()):
            (out / name).write_text(text, encoding="utf-8")
        print(f"wrote {out}/table2.txt and {len(figures)} figure CSVs")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

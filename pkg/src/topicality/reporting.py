"""Render evaluation results into a summary table and plot-ready CSVs.

Rendering is a pure function of stored per-run metrics: the table shows
3-decimal means, each figure CSV carries the underlying distributions,
and re-rendering from the same results never changes a byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from topicality.errors import ValidationError
from topicality.evaluation import CompareResult, MetricSummary, RunMetrics, SweepResult

_METRIC_ROWS = ("accuracy", "precision", "recall", "f1")
RUNS_CSV_HEADER = "model,run,seed,accuracy,precision,recall,f1,reduced"
SWEEP_CSV_HEADER = "fraction,run,seed,accuracy,precision,recall,f1,reduced"


@dataclass
class ExperimentResults:
    """The experiment outputs a report can draw on; any subset may be set."""

    compare_raw: CompareResult | None = None
    compare_reduced: CompareResult | None = None
    agreement: dict[str, CompareResult] = field(default_factory=dict)  # fusion mode -> result
    sweep: SweepResult | None = None


@dataclass
class ReportBundle:
    table2: str
    figure_csvs: dict[str, str]
    provenance: dict

    def write(self, outdir: str | Path) -> None:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "table2.txt").write_text(self.table2, encoding="utf-8")
        for name, blob in sorted(self.figure_csvs.items()):
            (outdir / name).write_text(blob, encoding="utf-8")
        (outdir / "provenance.json").write_text(
            json.dumps(self.provenance, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )


def _fmt(v: float) -> str:
    return f"{v:.3f}"


def _num(v: float) -> str:
    # repr round-trips doubles exactly, so stats recomputed from stored
    # CSVs match the originals bit for bit.
    return repr(float(v))


def render_table2(summaries: dict[str, dict[str, MetricSummary]]) -> str:
    """Blocks (one per reduced-flag label) of metric rows x model columns,
    3-decimal means, best cell per row marked with '*' (ties all marked)."""
    blocks = {label: block for label, block in summaries.items() if block}
    if not blocks:
        raise ValidationError("render_table2: no summaries")
    lines = []
    for label, block in blocks.items():
        models = list(block)
        width = max(12, *(len(m) + 7 for m in models))
        lines.append(label)
        lines.append("  " + "metric".ljust(11) + "".join(m.rjust(width) for m in models))
        for metric in _METRIC_ROWS:
            values = [getattr(block[m], metric).mean for m in models]
            best = max(values)
            cells = []
            for v in values:
                mark = "*" if _fmt(v) == _fmt(best) else ""
                cells.append((_fmt(v) + mark).rjust(width))
            lines.append("  " + metric.ljust(11) + "".join(cells))
        lines.append("")
    return "\n".join(lines)


def runs_csv(runs: list[RunMetrics]) -> str:
    lines = [RUNS_CSV_HEADER]
    for r in runs:
        lines.append(
            f"{r.model_kind},{r.run_index},{r.seed},{_num(r.accuracy)},"
            f"{_num(r.precision)},{_num(r.recall)},{_num(r.f1)},{int(r.reduced)}"
        )
    return "\n".join(lines) + "\n"


def sweep_csv(sweep: SweepResult) -> str:
    lines = [SWEEP_CSV_HEADER]
    for frac, runs in zip(sweep.fractions, sweep.per_fraction_runs):
        for r in runs:
            lines.append(
                f"{_num(frac)},{r.run_index},{r.seed},{_num(r.accuracy)},"
                f"{_num(r.precision)},{_num(r.recall)},{_num(r.f1)},{int(r.reduced)}"
            )
    return "\n".join(lines) + "\n"


def _wide_f1_csv(result: CompareResult) -> str:
    kinds = list(result.summaries)
    per_kind = {k: {r.run_index: r.f1 for r in result.runs_for(k)} for k in kinds}
    lines = ["run," + ",".join(kinds)]
    for run in range(result.n_runs):
        lines.append(f"{run}," + ",".join(_num(per_kind[k][run]) for k in kinds))
    return "\n".join(lines) + "\n"


def emit_figure_data(results: ExperimentResults) -> dict[str, str]:
    """One CSV per figure whose experiment ran; raises when nothing ran.

    fig4: per-model f1 by fusion mode; fig5/fig6: per-model f1 without/with
    reduction; fig7: paired per-run f1 without vs with; fig8: sweep curve.
    """
    csvs: dict[str, str] = {}
    if results.agreement:
        lines = ["fusion,model,run,f1"]
        for fusion in sorted(results.agreement):
            result = results.agreement[fusion]
            for kind in result.summaries:
                for r in result.runs_for(kind):
                    lines.append(f"{fusion},{kind},{r.run_index},{_num(r.f1)}")
        csvs["fig4.csv"] = "\n".join(lines) + "\n"
    if results.compare_raw is not None:
        csvs["fig5.csv"] = _wide_f1_csv(results.compare_raw)
    if results.compare_reduced is not None:
        csvs["fig6.csv"] = _wide_f1_csv(results.compare_reduced)
    if results.compare_raw is not None and results.compare_reduced is not None:
        common = [k for k in results.compare_raw.summaries if k in results.compare_reduced.summaries]
        if common:
            kind = "SVM" if "SVM" in common else common[0]
            raw = {r.run_index: r.f1 for r in results.compare_raw.runs_for(kind)}
            red = {r.run_index: r.f1 for r in results.compare_reduced.runs_for(kind)}
            lines = [f"run,{kind}_f1_without_reduction,{kind}_f1_with_reduction"]
            for run in sorted(set(raw) & set(red)):
                lines.append(f"{run},{_num(raw[run])},{_num(red[run])}")
            csvs["fig7.csv"] = "\n".join(lines) + "\n"
    if results.sweep is not None:
        lines = ["train_fraction,f1_mean,f1_median,f1_std,f1_min,f1_max"]
        for frac, s in zip(results.sweep.fractions, results.sweep.summaries):
            lines.append(
                f"{_num(frac)},{_num(s.f1.mean)},{_num(s.f1.median)},"
                f"{_num(s.f1.std)},{_num(s.f1.min)},{_num(s.f1.max)}"
            )
        csvs["fig8.csv"] = "\n".join(lines) + "\n"
    if not csvs:
        raise ValidationError("no experiment results: model comparison missing")
    return csvs


def parse_runs_csv(text: str) -> list[RunMetrics]:
    """Inverse of runs_csv, for re-rendering reports from stored results."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != RUNS_CSV_HEADER:
        raise ValidationError(f"runs CSV must start with header {RUNS_CSV_HEADER!r}")
    out = []
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 8:
            raise ValidationError(f"runs CSV line {i}: expected 8 fields, got {len(parts)}")
        out.append(
            RunMetrics(
                model_kind=parts[0],
                run_index=int(parts[1]),
                seed=int(parts[2]),
                accuracy=float(parts[3]),
                precision=float(parts[4]),
                recall=float(parts[5]),
                f1=float(parts[6]),
                reduced=bool(int(parts[7])),
            )
        )
    return out


def compare_result_from_runs(runs: list[RunMetrics], train_frac: float = 0.0, seed: int = 0) -> CompareResult:
    if not runs:
        raise ValidationError("no stored runs")
    kinds = list(dict.fromkeys(r.model_kind for r in runs))
    summaries = {
        k: MetricSummary.from_runs([r for r in runs if r.model_kind == k]) for k in kinds
    }
    n_runs = max(r.run_index for r in runs) + 1
    return CompareResult(
        summaries=summaries,
        runs=runs,
        n_runs=n_runs,
        train_frac=train_frac,
        seed=seed,
        reduced=all(r.reduced for r in runs),
    )

"""On-topic classification of short chat messages.

Pipeline pieces: corpus + annotation loading, inter-annotator agreement and
label fusion, sentence-embedding IO, random-probe feature selection over
boosted-tree importances, a suite of from-scratch classifiers, and a Monte
Carlo evaluation harness with report rendering.
"""

__version__ = "0.1.0"

from topicality.corpus import (
    Annotation,
    Corpus,
    CorpusStats,
    Message,
    corpus_stats,
    load_annotations,
    load_corpus,
)
from topicality.agreement import (
    CoincidenceMatrix,
    FusedLabels,
    balance,
    coincidence_matrix,
    fuse_labels,
    krippendorff_alpha,
)
from topicality.embeddings import (
    EmbeddingMatrix,
    LabeledDataset,
    join,
    read_embeddings,
    write_embeddings,
)
from topicality.boosted_trees import GBTConfig, GradientBoostedTrees
from topicality.feature_select import (
    ProbeRunResult,
    SelectionReport,
    apply_mask,
    probe_run,
    probe_select_mc,
)
from topicality.classifiers import ModelSpec, TrainedModel, fit, predict, predict_score
from topicality.evaluation import (
    CompareResult,
    MetricSummary,
    RunMetrics,
    SweepResult,
    mc_compare,
    metrics,
    shuffle_split_cv,
    train_size_sweep,
)
from topicality.synthetic import SyntheticSpec, generate

__all__ = [
    "Annotation",
    "CoincidenceMatrix",
    "CompareResult",
    "Corpus",
    "CorpusStats",
    "EmbeddingMatrix",
    "FusedLabels",
    "GBTConfig",
    "GradientBoostedTrees",
    "LabeledDataset",
    "Message",
    "MetricSummary",
    "ModelSpec",
    "ProbeRunResult",
    "RunMetrics",
    "SelectionReport",
    "SweepResult",
    "SyntheticSpec",
    "TrainedModel",
    "apply_mask",
    "balance",
    "coincidence_matrix",
    "corpus_stats",
    "fit",
    "fuse_labels",
    "generate",
    "join",
    "krippendorff_alpha",
    "load_annotations",
    "load_corpus",
    "mc_compare",
    "metrics",
    "predict",
    "predict_score",
    "probe_run",
    "probe_select_mc",
    "read_embeddings",
    "shuffle_split_cv",
    "train_size_sweep",
    "write_embeddings",
]

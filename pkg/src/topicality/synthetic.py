"""Deterministic synthetic corpora, annotations, and embeddings.

Embeddings are two Gaussian clouds mean-shifted on a seeded choice of
informative dimensions; true labels are exactly balanced.  Annotators
flip the true label independently with annotator_noise.  label_noise
flips a fraction of the dataset labels themselves, which is how a
noisier-fusion condition is simulated for comparison experiments.

Every purpose draws from its own derived RNG stream, so changing one
knob (say annotator count) never shifts the draws of another (say the
embedding values).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from topicality.corpus import Annotation, Corpus, Message
from topicality.embeddings import EmbeddingMatrix, LabeledDataset
from topicality.errors import ValidationError
from topicality.seeding import rng_for

SYNTH_MODEL_NAME = "synthetic-gaussian-v1"

_ROOMS = 25
_USERS = 309


@dataclass(frozen=True)
class SyntheticSpec:
    n_samples: int = 2000
    dim: int = 768
    n_informative: int = 100
    class_separation: float = 1.0
    label_noise: float = 0.0
    annotators: int = 3
    annotator_noise: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        if self.n_samples < 4 or self.n_samples % 2 != 0:
            raise ValidationError("n_samples must be even and >= 4 for exact class balance")
        if self.dim < 1:
            raise ValidationError("dim must be >= 1")
        if not 1 <= self.n_informative <= self.dim:
            raise ValidationError("n_informative must be in [1, dim]")
        if self.class_separation <= 0:
            raise ValidationError("class_separation must be > 0")
        if not 0.0 <= self.label_noise < 0.5:
            raise ValidationError("label_noise must be in [0, 0.5)")
        if not 0.0 <= self.annotator_noise < 0.5:
            raise ValidationError("annotator_noise must be in [0, 0.5)")
        if self.annotators < 1:
            raise ValidationError("annotators must be >= 1")


def _message_id(i: int) -> str:
    return f"m{i:06d}"


def informative_dims(spec: SyntheticSpec) -> np.ndarray:
    rng = rng_for(spec.seed, "dims")
    return np.sort(rng.choice(spec.dim, size=spec.n_informative, replace=False))


def _true_labels(spec: SyntheticSpec) -> np.ndarray:
    half = spec.n_samples // 2
    base = np.concatenate([np.zeros(half, dtype=np.int64), np.ones(half, dtype=np.int64)])
    return base[rng_for(spec.seed, "labels").permutation(spec.n_samples)]


def _embedding_values(spec: SyntheticSpec, y: np.ndarray, dims: np.ndarray) -> np.ndarray:
    X = rng_for(spec.seed, "embeddings").standard_normal((spec.n_samples, spec.dim))
    shift = (2.0 * y - 1.0) * (spec.class_separation / 2.0)
    X[:, dims] += shift[:, None]
    # Round-trip through float32 so the direct dataset route and the
    # embedding-file route see bit-identical values.
    return X.astype(np.float32)


def _noisy_labels(spec: SyntheticSpec, y: np.ndarray) -> np.ndarray:
    if spec.label_noise == 0.0:
        return y.copy()
    flips = rng_for(spec.seed, "label_noise").random(spec.n_samples) < spec.label_noise
    return np.where(flips, 1 - y, y)


def generate(spec: SyntheticSpec) -> tuple[Corpus, list[Annotation], EmbeddingMatrix]:
    """Corpus with placeholder texts, per-annotator labels, embeddings."""
    spec.validate()
    dims = informative_dims(spec)
    y = _true_labels(spec)
    values = _embedding_values(spec, y, dims)

    messages = []
    for i in range(spec.n_samples):
        mid = _message_id(i)
        messages.append(
            Message(
                id=mid,
                room_id=f"room{i % _ROOMS:02d}",
                user_id=f"user{i % _USERS:03d}",
                timestamp=i,
                text=f"synthetic message {mid}",
            )
        )
    metadata = {
        "generator": SYNTH_MODEL_NAME,
        "seed": str(spec.seed),
        "informative_dims": json.dumps([int(d) for d in dims]),
        "true_labels": json.dumps([int(v) for v in y]),
    }
    corpus = Corpus(messages=messages, metadata=metadata)

    annotations = []
    ann_rng = rng_for(spec.seed, "annotators")
    for a in range(spec.annotators):
        flips = ann_rng.random(spec.n_samples) < spec.annotator_noise
        labels = np.where(flips, 1 - y, y)
        aid = f"annotator{a}"
        for i in range(spec.n_samples):
            annotations.append(Annotation(_message_id(i), aid, int(labels[i])))

    matrix = EmbeddingMatrix(
        ids=[m.id for m in messages], vectors=values, model_name=SYNTH_MODEL_NAME
    )
    matrix.validate()
    return corpus, annotations, matrix


def generate_dataset(spec: SyntheticSpec) -> tuple[LabeledDataset, np.ndarray]:
    """Direct benchmark route: the same embedding draws as generate(),
    labeled with the true labels after label_noise flips.  Returns the
    dataset and the informative dimension indices."""
    spec.validate()
    dims = informative_dims(spec)
    y = _true_labels(spec)
    values = _embedding_values(spec, y, dims).astype(np.float64)
    labels = _noisy_labels(spec, y)
    ids = [_message_id(i) for i in range(spec.n_samples)]
    return LabeledDataset(X=values, y=labels, ids=ids), dims

"""Encode a corpus into a QEMB embedding file, one vector per message.

The encoder is a plain callable (list of texts -> 2d array), loaded lazily
from sentence-transformers for the configured model id, or injected by the
caller. Messages are encoded verbatim, in corpus order, moderator messages
included; downstream consumers filter by flag if they want to.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from topicality.corpus import load_corpus
from topicality.embeddings import EmbeddingMatrix, write_embeddings

DEFAULT_MODEL = "paraphrase-multilingual-mpnet-base-v2"
_LOCK_PATH = Path(__file__).resolve().parent / "model.lock"

log = logging.getLogger(__name__)

Encoder = Callable[[list[str]], np.ndarray]


class EmbedError(RuntimeError):
    """Raised when a job cannot produce a usable embedding file."""


@dataclass
class EmbedJob:
    corpus_path: str
    output_path: str
    model_id: str = DEFAULT_MODEL
    batch_size: int = 32

    def validate(self) -> None:
        if self.batch_size < 1:
            raise EmbedError(f"batch size must be >= 1, got {self.batch_size}")
        if not self.model_id:
            raise EmbedError("model id must be non-empty")


@dataclass
class EmbedResult:
    embedded: int
    dim: int
    model_name: str
    skipped: list[str] = field(default_factory=list)


def read_model_lock(path: Path = _LOCK_PATH) -> dict[str, str]:
    pins: dict[str, str] = {}
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition("=")
        pins[key.strip()] = value.strip()
    return pins


def load_encoder(model_id: str = DEFAULT_MODEL) -> tuple[Encoder, str]:
    """Returns (encode callable, provenance label for the file header).

    The revision pin from model.lock applies when the requested model is the
    pinned one; anything else loads at the hub head.
    """
    try:
        from sentence_transformers import SentenceTransformer
    except ImportError as exc:
        raise EmbedError(
            "model load failure: sentence-transformers is not installed "
            "(pip install 'embedder[model]')"
        ) from exc

    pins = read_model_lock() if _LOCK_PATH.exists() else {}
    revision = pins.get("revision", "main") if model_id == pins.get("model") else "main"
    try:
        model = SentenceTransformer(
            model_id, revision=None if revision == "main" else revision
        )
    except Exception as exc:
        raise EmbedError(f"model load failure: {model_id!r}: {exc}") from exc

    def encode(texts: list[str]) -> np.ndarray:
        return np.asarray(
            model.encode(
                texts,
                batch_size=len(texts),
                convert_to_numpy=True,
                show_progress_bar=False,
            )
        )

    return encode, f"{model_id}@{revision}"


def embed_corpus(
    job: EmbedJob, encoder: Encoder | None = None, encoder_name: str | None = None
) -> EmbedResult:
    """Encode every message and write the QEMB file.

    A batch that fails to encode is retried message by message; messages that
    still fail are skipped (logged, reported in the result) rather than
    aborting the file. Raises EmbedError when nothing at all can be written.
    """
    job.validate()
    corpus = load_corpus(job.corpus_path)
    if not corpus.messages:
        raise EmbedError(f"empty corpus: {job.corpus_path} has no messages")
    if encoder is None:
        encoder, encoder_name = load_encoder(job.model_id)
    name = encoder_name if encoder_name is not None else job.model_id

    ids: list[str] = []
    chunks: list[np.ndarray] = []
    skipped: list[str] = []
    messages = corpus.messages
    for start in range(0, len(messages), job.batch_size):
        batch = messages[start : start + job.batch_size]
        texts = [m.text for m in batch]
        try:
            vectors = np.asarray(encoder(texts))
            if vectors.shape[0] != len(batch):
                raise EmbedError(
                    f"encoder returned {vectors.shape[0]} vectors for {len(batch)} texts"
                )
            ids.extend(m.id for m in batch)
            chunks.append(vectors)
        except Exception:
            for message in batch:
                try:
                    vec = np.asarray(encoder([message.text]))
                    ids.append(message.id)
                    chunks.append(vec.reshape(1, -1))
                except Exception as exc:
                    log.warning("skipping message %s: %s", message.id, exc)
                    skipped.append(message.id)

    if not ids:
        raise EmbedError("all messages failed to encode; nothing to write")
    vectors = np.vstack(chunks).astype(np.float32)
    matrix = EmbeddingMatrix(ids=ids, vectors=vectors, model_name=name)
    matrix.validate()
    write_embeddings(matrix, job.output_path)
    return EmbedResult(
        embedded=len(ids), dim=int(vectors.shape[1]), model_name=name, skipped=skipped
    )

"""Sentence-embedding storage and label joining.

Binary format QEMB1, little-endian throughout:
magic "QEMB" | version u32 | count u64 | dim u32 | model_name (u16 len + UTF-8)
then per record: id (u16 len + UTF-8) | dim x f32.
JSONL interop is accepted on read: {"id": ..., "vector": [...]} per line.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from topicality.agreement import FusedLabels
from topicality.errors import ValidationError

log = logging.getLogger(__name__)

MAGIC = b"QEMB"
FORMAT_VERSION = 1


@dataclass
class EmbeddingMatrix:
    ids: list[str]
    vectors: np.ndarray  # (n, dim) float32
    model_name: str = ""

    def __post_init__(self):
        self.vectors = np.ascontiguousarray(self.vectors, dtype=np.float32)
        if self.vectors.ndim != 2:
            raise ValidationError("vectors must be a 2-D matrix")
        if len(self.ids) != self.vectors.shape[0]:
            raise ValidationError(
                f"id count {len(self.ids)} != row count {self.vectors.shape[0]}"
            )

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return len(self.ids)

    def validate(self) -> None:
        if self.dim < 1:
            raise ValidationError("embedding dim must be >= 1")
        if len(set(self.ids)) != len(self.ids):
            raise ValidationError("duplicate embedding ids")
        if not np.all(np.isfinite(self.vectors)):
            raise ValidationError("embedding vectors contain NaN or Inf")

    def row_index(self) -> dict[str, int]:
        return {mid: i for i, mid in enumerate(self.ids)}


@dataclass
class LabeledDataset:
    """Feature matrix, binary targets, and the message ids behind each row."""

    X: np.ndarray  # (n, d) float64
    y: np.ndarray  # (n,) int values in {0, 1}
    ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=np.float64)
        self.y = np.ascontiguousarray(self.y, dtype=np.int64)
        if self.X.ndim != 2 or self.y.ndim != 1 or self.X.shape[0] != self.y.shape[0]:
            raise ValidationError("X rows must align with y")
        if not self.ids:
            self.ids = [str(i) for i in range(self.X.shape[0])]
        if len(self.ids) != self.X.shape[0]:
            raise ValidationError("ids must align with X rows")
        if self.y.size and not np.isin(self.y, (0, 1)).all():
            raise ValidationError("y must be binary")

    @property
    def n(self) -> int:
        return int(self.X.shape[0])

    @property
    def d(self) -> int:
        return int(self.X.shape[1])

    def subset(self, rows: np.ndarray) -> "LabeledDataset":
        rows = np.asarray(rows)
        return LabeledDataset(
            X=self.X[rows], y=self.y[rows], ids=[self.ids[i] for i in rows]
        )


def _read_exact(fh, size: int, what: str) -> bytes:
    data = fh.read(size)
    if len(data) != size:
        raise ValidationError(f"truncated embedding file while reading {what}")
    return data


def read_embeddings(path: str | Path) -> EmbeddingMatrix:
    """Read a QEMB1 file (or JSONL interop) and fully validate it."""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"embedding file not found: {path}")
    with open(path, "rb") as fh:
        head = fh.read(4)
        if head == MAGIC:
            return _read_qemb(fh, path)
    return _read_jsonl(path)


def _read_qemb(fh, path: Path) -> EmbeddingMatrix:
    version = struct.unpack("<I", _read_exact(fh, 4, "version"))[0]
    if version != FORMAT_VERSION:
        raise ValidationError(f"{path.name}: unsupported format version {version}")
    count = struct.unpack("<Q", _read_exact(fh, 8, "count"))[0]
    dim = struct.unpack("<I", _read_exact(fh, 4, "dim"))[0]
    if dim < 1:
        raise ValidationError(f"{path.name}: embedding dim must be >= 1, got {dim}")
    name_len = struct.unpack("<H", _read_exact(fh, 2, "model name length"))[0]
    model_name = _read_exact(fh, name_len, "model name").decode("utf-8")

    ids: list[str] = []
    vectors = np.empty((count, dim), dtype=np.float32)
    row_bytes = dim * 4
    for i in range(count):
        id_len = struct.unpack("<H", _read_exact(fh, 2, f"id length of record {i}"))[0]
        ids.append(_read_exact(fh, id_len, f"id of record {i}").decode("utf-8"))
        row = _read_exact(fh, row_bytes, f"vector of record {i}")
        vectors[i] = np.frombuffer(row, dtype="<f4")
    if fh.read(1):
        raise ValidationError(f"{path.name}: trailing data after last record")

    matrix = EmbeddingMatrix(ids=ids, vectors=vectors, model_name=model_name)
    matrix.validate()
    return matrix


def _read_jsonl(path: Path) -> EmbeddingMatrix:
    ids: list[str] = []
    rows: list[np.ndarray] = []
    model_name = ""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{path.name}:{lineno}"
            try:
                rec = json.loads(line)
            except (json.JSONDecodeError, UnicodeDecodeError) as exc:
                raise ValidationError(f"{where}: not QEMB and not valid JSONL") from exc
            if not isinstance(rec, dict) or "id" not in rec or "vector" not in rec:
                raise ValidationError(f"{where}: record needs 'id' and 'vector'")
            ids.append(str(rec["id"]))
            rows.append(np.asarray(rec["vector"], dtype=np.float32))
            if not model_name and rec.get("model"):
                model_name = str(rec["model"])
    if not rows:
        raise ValidationError(f"{path.name}: no embedding records")
    dims = {r.shape for r in rows}
    if len(dims) != 1 or rows[0].ndim != 1:
        raise ValidationError(f"{path.name}: inconsistent vector dimensions {dims}")
    matrix = EmbeddingMatrix(ids=ids, vectors=np.vstack(rows), model_name=model_name)
    matrix.validate()
    return matrix


def write_embeddings(matrix: EmbeddingMatrix, path: str | Path) -> None:
    """Write QEMB1; read_embeddings round-trips bit-exactly."""
    matrix.validate()
    name_bytes = matrix.model_name.encode("utf-8")
    if len(name_bytes) > 0xFFFF:
        raise ValidationError("model name longer than 65535 bytes")
    path = Path(path)
    try:
        fh = open(path, "wb")
    except OSError as exc:
        raise ValidationError(f"cannot write embeddings to {path}: {exc}") from exc
    with fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(struct.pack("<Q", len(matrix)))
        fh.write(struct.pack("<I", matrix.dim))
        fh.write(struct.pack("<H", len(name_bytes)))
        fh.write(name_bytes)
        for mid, row in zip(matrix.ids, matrix.vectors):
            id_bytes = mid.encode("utf-8")
            if len(id_bytes) > 0xFFFF:
                raise ValidationError(f"id longer than 65535 bytes: {mid[:32]}...")
            fh.write(struct.pack("<H", len(id_bytes)))
            fh.write(id_bytes)
            fh.write(row.astype("<f4", copy=False).tobytes())


def join(
    fused: FusedLabels,
    matrix: EmbeddingMatrix,
    policy: str = "skip",
    missing_out: list[str] | None = None,
) -> LabeledDataset:
    """Join fused labels with their embedding rows, in fused order.

    policy="skip" drops fused ids missing from the matrix with a warning;
    policy="strict" raises on the first missing id.
    """
    if policy not in ("skip", "strict"):
        raise ValidationError(f"unknown join policy {policy!r}")
    index = matrix.row_index()
    rows: list[int] = []
    labels: list[int] = []
    ids: list[str] = []
    missing: list[str] = []
    for message_id, label in fused.entries:
        pos = index.get(message_id)
        if pos is None:
            missing.append(message_id)
            continue
        rows.append(pos)
        labels.append(label)
        ids.append(message_id)
    if missing and policy == "strict":
        raise ValidationError(
            f"join: {len(missing)} fused id(s) missing from embeddings (e.g. {missing[:5]})"
        )
    if not rows:
        raise ValidationError("join: no overlapping ids between labels and embeddings")
    if missing:
        log.warning("join: skipped %d fused id(s) missing from embeddings", len(missing))
    if missing_out is not None:
        missing_out.extend(missing)
    X = matrix.vectors[np.asarray(rows, dtype=np.intp)].astype(np.float64)
    return LabeledDataset(X=X, y=np.asarray(labels, dtype=np.int64), ids=ids)

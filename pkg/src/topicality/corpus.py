"""Chat corpus and annotation loading, validation, and summary statistics."""

from __future__ import annotations

import csv
import json
import logging
import statistics
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from topicality.errors import ValidationError

log = logging.getLogger(__name__)

CORPUS_FIELDS = ("id", "room_id", "user_id", "timestamp", "text", "is_moderator")


@dataclass(frozen=True)
class Message:
    id: str
    room_id: str
    user_id: str
    timestamp: int  # UTC milliseconds
    text: str
    is_moderator: bool = False


@dataclass
class Corpus:
    """Messages ordered by (room_id, timestamp); ids unique."""

    messages: list[Message]
    metadata: dict[str, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.messages)

    def ids(self) -> list[str]:
        return [m.id for m in self.messages]


@dataclass(frozen=True)
class Annotation:
    message_id: str
    annotator_id: str
    label: int  # 0 or 1


@dataclass
class CorpusStats:
    room_count: int
    message_count_with_moderator: int
    message_count_without_moderator: int
    user_count: int
    mean_chars: float
    median_chars: float
    mean_tokens: float
    median_tokens: float


def _normalize_timestamp(raw, where: str) -> int:
    """Accept epoch milliseconds (int/float) or an ISO-8601 string."""
    if isinstance(raw, bool):
        raise ValidationError(f"{where}: unparseable timestamp {raw!r}")
    if isinstance(raw, (int, float)):
        if raw != raw or raw in (float("inf"), float("-inf")):
            raise ValidationError(f"{where}: unparseable timestamp {raw!r}")
        ts = int(raw)
    elif isinstance(raw, str):
        text = raw.strip()
        try:
            ts = int(text)
        except ValueError:
            try:
                dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
            except ValueError as exc:
                raise ValidationError(f"{where}: unparseable timestamp {raw!r}") from exc
            if dt.tzinfo is None:
                dt = dt.replace(tzinfo=timezone.utc)
            ts = int(dt.timestamp() * 1000)
    else:
        raise ValidationError(f"{where}: unparseable timestamp {raw!r}")
    if ts < 0:
        raise ValidationError(f"{where}: negative timestamp {raw!r}")
    return ts


def _parse_bool(raw, where: str) -> bool:
    if isinstance(raw, bool):
        return raw
    if isinstance(raw, (int, float)) and raw in (0, 1):
        return bool(raw)
    if isinstance(raw, str):
        low = raw.strip().lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no", ""):
            return False
    raise ValidationError(f"{where}: bad is_moderator value {raw!r}")


def _message_from_record(rec: dict, where: str) -> Message:
    for key in ("id", "room_id", "user_id", "timestamp", "text"):
        if key not in rec:
            raise ValidationError(f"{where}: missing field '{key}'")
    msg_id = str(rec["id"])
    if not msg_id:
        raise ValidationError(f"{where}: empty message id")
    return Message(
        id=msg_id,
        room_id=str(rec["room_id"]),
        user_id=str(rec["user_id"]),
        timestamp=_normalize_timestamp(rec["timestamp"], where),
        text=str(rec["text"]),
        is_moderator=_parse_bool(rec.get("is_moderator", False), where),
    )


def load_corpus(path: str | Path, format: str | None = None) -> Corpus:
    """Load a corpus from JSONL or CSV and normalize it.

    Messages are sorted by (room_id, timestamp); duplicate ids and
    malformed records are reported with their line number.  The moderator
    flag defaults to false when absent.
    """
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"corpus file not found: {path}")
    if format is None:
        format = "csv" if path.suffix.lower() == ".csv" else "jsonl"
    if format not in ("jsonl", "csv"):
        raise ValidationError(f"unknown corpus format {format!r}")

    messages: list[Message] = []
    if format == "jsonl":
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                where = f"{path.name}:{lineno}"
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ValidationError(f"{where}: malformed JSON ({exc.msg})") from exc
                if not isinstance(rec, dict):
                    raise ValidationError(f"{where}: record is not an object")
                messages.append(_message_from_record(rec, where))
    else:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise ValidationError(f"{path.name}: empty CSV")
            for lineno, rec in enumerate(reader, start=2):
                where = f"{path.name}:{lineno}"
                if None in rec or any(v is None for v in rec.values()):
                    raise ValidationError(f"{where}: malformed row")
                messages.append(_message_from_record(rec, where))

    seen: set[str] = set()
    for m in messages:
        if m.id in seen:
            raise ValidationError(f"duplicate message id '{m.id}' in {path.name}")
        seen.add(m.id)

    messages.sort(key=lambda m: (m.room_id, m.timestamp))
    empty = sum(1 for m in messages if not m.text)
    if empty:
        log.warning("%s: %d message(s) with empty text", path.name, empty)
    meta = {"source": str(path), "empty_text_count": str(empty)}
    return Corpus(messages=messages, metadata=meta)


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write canonical JSONL; load_corpus(save_corpus(c)) round-trips."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for m in corpus.messages:
            rec = {
                "id": m.id,
                "room_id": m.room_id,
                "user_id": m.user_id,
                "timestamp": m.timestamp,
                "text": m.text,
                "is_moderator": m.is_moderator,
            }
            fh.write(json.dumps(rec, ensure_ascii=False, separators=(",", ":")))
            fh.write("\n")


def load_annotations(path: str | Path, corpus: Corpus | None = None) -> list[Annotation]:
    """Load annotations from CSV (header message_id,annotator_id,label) or JSONL.

    Labels must be binary.  Duplicate (message_id, annotator_id) pairs are
    errors.  When a corpus is given, annotations for unknown message ids are
    kept but logged as warnings.
    """
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"annotations file not found: {path}")

    rows: list[tuple[str, dict]] = []
    if path.suffix.lower() in (".jsonl", ".json"):
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                where = f"{path.name}:{lineno}"
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ValidationError(f"{where}: malformed JSON ({exc.msg})") from exc
                rows.append((where, rec))
    else:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            for lineno, rec in enumerate(reader, start=2):
                rows.append((f"{path.name}:{lineno}", rec))

    annotations: list[Annotation] = []
    seen: set[tuple[str, str]] = set()
    for where, rec in rows:
        for key in ("message_id", "annotator_id", "label"):
            if key not in rec or rec[key] is None:
                raise ValidationError(f"{where}: missing field '{key}'")
        try:
            label = int(rec["label"])
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"{where}: non-binary label {rec['label']!r}") from exc
        if label not in (0, 1):
            raise ValidationError(f"{where}: non-binary label {rec['label']!r}")
        key = (str(rec["message_id"]), str(rec["annotator_id"]))
        if key in seen:
            raise ValidationError(f"{where}: duplicate annotation for {key}")
        seen.add(key)
        annotations.append(Annotation(message_id=key[0], annotator_id=key[1], label=label))

    if not annotations:
        log.warning("%s: no annotations found", path.name)
    if corpus is not None:
        known = set(corpus.ids())
        unknown = sorted({a.message_id for a in annotations} - known)
        if unknown:
            log.warning(
                "%s: %d annotation message id(s) not in corpus (e.g. %s)",
                path.name,
                len(unknown),
                ", ".join(unknown[:5]),
            )
    return annotations


def save_annotations(annotations: list[Annotation], path: str | Path) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["message_id", "annotator_id", "label"])
        for a in annotations:
            writer.writerow([a.message_id, a.annotator_id, a.label])


def tokenize(text: str) -> list[str]:
    """Whitespace tokenization: maximal nonwhitespace runs."""
    return text.split()


def corpus_stats(corpus: Corpus, include_moderator: bool = True) -> CorpusStats:
    """Summary statistics over message texts.

    Room/user/message counts always cover the whole corpus; the length
    statistics cover either all messages or only non-moderator ones,
    selected by `include_moderator`.
    """
    if not corpus.messages:
        raise ValidationError("corpus_stats: empty corpus")
    subset = [m for m in corpus.messages if include_moderator or not m.is_moderator]
    if not subset:
        raise ValidationError("corpus_stats: no messages left after moderator filter")
    char_lengths = [len(m.text) for m in subset]
    token_lengths = [len(tokenize(m.text)) for m in subset]
    return CorpusStats(
        room_count=len({m.room_id for m in corpus.messages}),
        message_count_with_moderator=len(corpus.messages),
        message_count_without_moderator=sum(1 for m in corpus.messages if not m.is_moderator),
        user_count=len({m.user_id for m in corpus.messages}),
        mean_chars=statistics.fmean(char_lengths),
        median_chars=float(statistics.median(char_lengths)),
        mean_tokens=statistics.fmean(token_lengths),
        median_tokens=float(statistics.median(token_lengths)),
    )

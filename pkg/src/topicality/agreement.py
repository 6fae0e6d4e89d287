"""Inter-annotator agreement and multi-annotator label fusion.

Alpha uses the coincidence-matrix formulation for nominal data.  Fusion
supports two readings of a multi-annotator label set: complete agreement
(all annotators agree, quorum met) and majority agreement (strict majority).
"""

from __future__ import annotations

import logging
from collections import Counter, OrderedDict
from dataclasses import dataclass

import numpy as np

from topicality.corpus import Annotation, Corpus
from topicality.errors import ValidationError

log = logging.getLogger(__name__)

REASON_BELOW_QUORUM = "below-quorum"
REASON_DISAGREEMENT = "disagreement"
REASON_TIE = "tie"
REASON_DOWNSAMPLED = "downsampled"


@dataclass
class CoincidenceMatrix:
    values: np.ndarray  # category x category, symmetric
    category_labels: list

    @property
    def total_mass(self) -> float:
        return float(self.values.sum())


@dataclass
class FusedLabels:
    mode: str  # "CAg" or "MAg"
    entries: list[tuple[str, int]]
    excluded: list[tuple[str, str]]

    def labels(self) -> dict[str, int]:
        return dict(self.entries)

    def class_counts(self) -> Counter:
        return Counter(label for _, label in self.entries)


def _units(annotations: list[Annotation]) -> OrderedDict[str, list[int]]:
    """Group labels by message, preserving first-appearance order."""
    units: OrderedDict[str, list[int]] = OrderedDict()
    for a in annotations:
        units.setdefault(a.message_id, []).append(a.label)
    return units


def coincidence_matrix(annotations: list[Annotation]) -> CoincidenceMatrix:
    """Coincidence counts over all pairable values.

    For a unit with m values, each ordered pair of its values contributes
    1/(m-1), so the unit's total mass is m.  Units with fewer than two
    values are not pairable and are dropped.
    """
    units = [vals for vals in _units(annotations).values() if len(vals) >= 2]
    if not units:
        raise ValidationError("no pairable values: need >=2 annotations on >=1 message")
    categories = sorted({v for vals in units for v in vals})
    index = {c: i for i, c in enumerate(categories)}
    k = len(categories)
    values = np.zeros((k, k), dtype=np.float64)
    for vals in units:
        m = len(vals)
        counts = Counter(vals)
        for c, n_c in counts.items():
            for d, n_d in counts.items():
                pairs = n_c * (n_d - 1) if c == d else n_c * n_d
                values[index[c], index[d]] += pairs / (m - 1)
    return CoincidenceMatrix(values=values, category_labels=list(categories))


def krippendorff_alpha(annotations: list[Annotation], metric: str = "nominal") -> float:
    """Chance-corrected agreement: 1 - observed/expected disagreement.

    Same quantity as the coincidence-matrix formulation, but accumulated
    per unit from integer pair counts (summed in sorted order), which makes
    the result bit-exact under relabeling and annotator permutation.
    Returns a value <= 1 (negative values mean worse-than-chance
    agreement).  When every pairable value is identical the expected
    disagreement is zero and 1.0 is returned by convention.
    """
    if metric != "nominal":
        raise ValidationError(f"unsupported alpha metric {metric!r}")
    units = [vals for vals in _units(annotations).values() if len(vals) >= 2]
    if not units:
        raise ValidationError("no pairable values: need >=2 annotations on >=1 message")
    n = 0
    observed_mass = 0.0  # sum over units of disagreeing-pair mass
    margin: Counter = Counter()
    for vals in units:
        m = len(vals)
        n += m
        counts = Counter(vals)
        margin.update(counts)
        same_pairs = sum(sorted(c * (c - 1) for c in counts.values()))
        observed_mass += (m * (m - 1) - same_pairs) / (m - 1)
    expected_pairs = n * n - sum(sorted(c * c for c in margin.values()))
    if expected_pairs == 0:
        log.warning("alpha: zero expected disagreement (all values identical); returning 1.0")
        return 1.0
    return float(1.0 - (n - 1) * observed_mass / expected_pairs)


def alpha_by_room(
    annotations: list[Annotation], corpus: Corpus
) -> tuple[dict[str, float], float]:
    """Per-room alpha plus the average over rooms with pairable values."""
    room_of = {m.id: m.room_id for m in corpus.messages}
    by_room: dict[str, list[Annotation]] = {}
    for a in annotations:
        room = room_of.get(a.message_id)
        if room is None:
            continue
        by_room.setdefault(room, []).append(a)
    alphas: dict[str, float] = {}
    for room in sorted(by_room):
        try:
            alphas[room] = krippendorff_alpha(by_room[room])
        except ValidationError:
            log.warning("room %s has no pairable values; skipped", room)
    if not alphas:
        raise ValidationError("no room has pairable values")
    return alphas, float(np.mean(list(alphas.values())))


def fuse_labels(annotations: list[Annotation], mode: str, quorum: int = 3) -> FusedLabels:
    """Fuse per-annotator labels into one label per message.

    CAg keeps a message when every annotator agrees; MAg when a strict
    majority agrees.  Both require at least `quorum` annotations; ties and
    below-quorum messages are excluded with a reason.
    """
    if mode not in ("CAg", "MAg"):
        raise ValidationError(f"unknown fusion mode {mode!r}")
    if not annotations:
        raise ValidationError("empty annotation set")
    if quorum < 1:
        raise ValidationError(f"quorum must be >= 1, got {quorum}")

    entries: list[tuple[str, int]] = []
    excluded: list[tuple[str, str]] = []
    for message_id, labels in _units(annotations).items():
        if len(labels) < quorum:
            excluded.append((message_id, REASON_BELOW_QUORUM))
            continue
        counts = Counter(labels)
        top_label, top_count = counts.most_common(1)[0]
        if mode == "CAg":
            if len(counts) == 1:
                entries.append((message_id, top_label))
            else:
                excluded.append((message_id, REASON_DISAGREEMENT))
        else:
            if top_count * 2 > len(labels):
                entries.append((message_id, top_label))
            else:
                excluded.append((message_id, REASON_TIE))
    return FusedLabels(mode=mode, entries=entries, excluded=excluded)


def balance(fused: FusedLabels, seed: int) -> FusedLabels:
    """Downsample the majority class to the minority count.

    Uniform without replacement under the given seed; retained entries keep
    their input order, so an already balanced input comes back unchanged.
    """
    counts = fused.class_counts()
    if len(counts) < 2:
        raise ValidationError("balance: both classes must be present")
    minority = min(counts.values())
    majority_label = max(counts, key=lambda c: (counts[c], c))
    if counts[majority_label] == minority:
        return FusedLabels(mode=fused.mode, entries=list(fused.entries), excluded=list(fused.excluded))

    majority_positions = [i for i, (_, lab) in enumerate(fused.entries) if lab == majority_label]
    rng = np.random.default_rng(seed)
    keep = set(rng.choice(len(majority_positions), size=minority, replace=False).tolist())
    kept_positions = {pos for k, pos in enumerate(majority_positions) if k in keep}

    entries: list[tuple[str, int]] = []
    excluded = list(fused.excluded)
    for i, (message_id, label) in enumerate(fused.entries):
        if label != majority_label or i in kept_positions:
            entries.append((message_id, label))
        else:
            excluded.append((message_id, REASON_DOWNSAMPLED))
    return FusedLabels(mode=fused.mode, entries=entries, excluded=excluded)


def save_fused_csv(fused: FusedLabels, path) -> None:
    """Two-column CSV, `message_id,label`, in entry order."""
    lines = ["message_id,label"]
    lines.extend(f"{message_id},{label}" for message_id, label in fused.entries)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_fused_csv(path, mode: str = "file") -> FusedLabels:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if not lines or lines[0] != "message_id,label":
        raise ValidationError(f"{path}: expected header 'message_id,label'")
    entries: list[tuple[str, int]] = []
    seen = set()
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 2:
            raise ValidationError(f"{path}:{lineno}: expected 2 fields")
        message_id, raw_label = parts[0].strip(), parts[1].strip()
        if raw_label not in ("0", "1"):
            raise ValidationError(f"{path}:{lineno}: label must be 0 or 1, got {raw_label!r}")
        if message_id in seen:
            raise ValidationError(f"{path}:{lineno}: duplicate message id {message_id!r}")
        seen.add(message_id)
        entries.append((message_id, int(raw_label)))
    return FusedLabels(mode=mode, entries=entries, excluded=[])

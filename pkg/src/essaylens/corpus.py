"""Essay-set metadata, TSV ingestion, score normalization, and fold planning.

Ships the eight standard essay-set rows (grade level, average length, score
range, count, source dependence) as built-in defaults; a JSON file with the
same fields can replace or extend them.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np


class CorpusError(ValueError):
    """Malformed corpus input; carries the offending line when row-level."""


@dataclass(frozen=True)
class EssaySetMeta:
    set_id: int
    grade_level: int
    avg_length_words: int
    score_min: int
    score_max: int
    essay_count: int
    source_dependent: bool
    description: str
    prompt: str | None = None
    passage: str | None = None

    def __post_init__(self):
        if self.score_min >= self.score_max:
            raise ValueError(
                f"set {self.set_id}: score_min {self.score_min} must be < "
                f"score_max {self.score_max}")

    @property
    def n_classes(self) -> int:
        return self.score_max - self.score_min + 1


# Built-in defaults for the eight standard prompts.
BUILTIN_SETS: tuple[EssaySetMeta, ...] = (
    EssaySetMeta(1, 8, 350, 2, 12, 1785, False,
                 "Persuasive Letter about Technology Use"),
    EssaySetMeta(2, 10, 350, 1, 6, 1800, False,
                 "Persuasive Essay about Library Censorship"),
    EssaySetMeta(3, 10, 150, 0, 3, 1726, True,
                 "Source-dependent Analysis of Setting"),
    EssaySetMeta(4, 10, 150, 0, 3, 1772, True,
                 "Source-dependent Analysis of Author's Purpose"),
    EssaySetMeta(5, 8, 150, 0, 4, 1805, True,
                 "Source-dependent Analysis of Mood"),
    EssaySetMeta(6, 10, 150, 0, 4, 1800, True,
                 "Source-dependent Demonstration of comprehension of Text"),
    EssaySetMeta(7, 7, 250, 0, 30, 1730, False, "Narrative about Patience"),
    EssaySetMeta(8, 10, 650, 0, 60, 918, False, "Narrative about Laughter"),
)


def default_sets() -> dict[int, EssaySetMeta]:
    return {m.set_id: m for m in BUILTIN_SETS}


def mean_class_count(sets: dict[int, EssaySetMeta] | None = None) -> float:
    """Average number of score classes across the collection (15.875 built-in)."""
    metas = list((sets or default_sets()).values())
    return sum(m.n_classes for m in metas) / len(metas)


def load_sets_json(source) -> dict[int, EssaySetMeta]:
    """Load essay-set metadata from a JSON array of objects.

    Unknown keys are rejected so typos surface instead of silently falling
    back to defaults.
    """
    if hasattr(source, "read"):
        data = json.load(source)
    else:
        with open(source, encoding="utf-8") as fh:
            data = json.load(fh)
    if not isinstance(data, list):
        raise CorpusError("essay-set JSON must be an array of objects")
    allowed = {"set_id", "grade_level", "avg_length_words", "score_min",
               "score_max", "essay_count", "source_dependent", "description",
               "prompt", "passage"}
    sets = {}
    for i, row in enumerate(data):
        extra = set(row) - allowed
        if extra:
            raise CorpusError(f"essay-set entry {i}: unknown keys {sorted(extra)}")
        try:
            meta = EssaySetMeta(**row)
        except (TypeError, ValueError) as exc:
            raise CorpusError(f"essay-set entry {i}: {exc}") from exc
        sets[meta.set_id] = meta
    return sets


@dataclass
class EssayRecord:
    essay_id: str
    set_id: int
    text: str
    score: int
    normalized: float
    sentences: list[str] | None = None
    embedding: np.ndarray | None = None


def normalize_score(score: int, meta: EssaySetMeta) -> float:
    return (score - meta.score_min) / (meta.score_max - meta.score_min)


def denormalize_score(value: float, meta: EssaySetMeta) -> int:
    """Inverse of normalization: round half-up, clamp into the set's range."""
    raw = meta.score_min + value * (meta.score_max - meta.score_min)
    return int(min(max(math.floor(raw + 0.5), meta.score_min), meta.score_max))


REQUIRED_COLUMNS = ("essay_id", "essay_set", "essay", "domain1_score")


def _decode_lines(source) -> list[str]:
    if hasattr(source, "read"):
        data = source.read()
    else:
        with open(source, "rb") as fh:
            data = fh.read()
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError:
            warnings.warn("input is not valid UTF-8; falling back to Windows-1252")
            text = data.decode("cp1252")
    else:
        text = data
    return text.splitlines()


def parse_asap_tsv(source, sets: dict[int, EssaySetMeta] | None = None) -> list[EssayRecord]:
    """Parse the tab-separated release format into essay records.

    The header row names the columns; unknown columns are ignored and essay
    text is kept verbatim (including @-anonymization tokens). Rows with a
    non-integer or out-of-range score raise with their line number.
    """
    sets = sets or default_sets()
    lines = _decode_lines(source)
    if not lines:
        raise CorpusError("empty input: missing header row")
    header = lines[0].split("\t")
    col = {name: i for i, name in enumerate(header)}
    missing = [c for c in REQUIRED_COLUMNS if c not in col]
    if missing:
        raise CorpusError(f"missing required columns: {missing}")

    records = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) < len(header):
            raise CorpusError(
                f"line {line_no}: {len(fields)} fields, header has {len(header)}")
        raw_set = fields[col["essay_set"]]
        try:
            set_id = int(raw_set)
        except ValueError:
            raise CorpusError(f"line {line_no}: essay_set {raw_set!r} is not an integer")
        meta = sets.get(set_id)
        if meta is None:
            raise CorpusError(f"line {line_no}: unknown essay set {set_id}")
        raw_score = fields[col["domain1_score"]]
        try:
            score = int(raw_score)
        except ValueError:
            raise CorpusError(
                f"line {line_no}: domain1_score {raw_score!r} is not an integer")
        if not meta.score_min <= score <= meta.score_max:
            raise CorpusError(
                f"line {line_no}: score {score} outside set {set_id} range "
                f"[{meta.score_min}, {meta.score_max}]")
        records.append(EssayRecord(
            essay_id=fields[col["essay_id"]],
            set_id=set_id,
            text=fields[col["essay"]],
            score=score,
            normalized=normalize_score(score, meta),
        ))
    return records


@dataclass(frozen=True)
class Fold:
    train: tuple[int, ...]
    dev: tuple[int, ...]
    test: tuple[int, ...]


@dataclass(frozen=True)
class FoldPlan:
    seed: int
    folds: tuple[Fold, ...] = field(default_factory=tuple)


def make_folds(n: int, seed: int, n_folds: int = 5) -> FoldPlan:
    """Seeded shuffle into ``n_folds`` rotations of test/dev/train splits.

    Partition i is fold i's test set, partition i+1 (mod folds) its dev set,
    and the rest its training set, which lands on the usual 60/20/20 split.
    """
    if n < n_folds:
        raise CorpusError(f"need at least {n_folds} records, got {n}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    parts = [p.tolist() for p in np.array_split(perm, n_folds)]
    folds = []
    for i in range(n_folds):
        dev_i = (i + 1) % n_folds
        train = [idx for j, p in enumerate(parts) if j not in (i, dev_i) for idx in p]
        folds.append(Fold(train=tuple(train), dev=tuple(parts[dev_i]),
                          test=tuple(parts[i])))
    return FoldPlan(seed=seed, folds=tuple(folds))


def reduce_training_set(indices, labels, fraction: float, seed: int = 0) -> list[int]:
    """Label-stratified subsample keeping round(fraction * n) indices.

    Per-label quotas follow largest remainders; whenever the target size
    allows, every label present in the input keeps at least one sample.
    """
    if not 0.0 < fraction <= 1.0:
        raise CorpusError(f"fraction must be in (0, 1], got {fraction}")
    indices = list(indices)
    labels = list(labels)
    if len(indices) != len(labels):
        raise CorpusError("indices and labels must align")
    if fraction == 1.0:
        return list(indices)
    target = int(round(fraction * len(indices)))

    by_label: dict = {}
    for idx, lab in zip(indices, labels):
        by_label.setdefault(lab, []).append(idx)

    quotas = {lab: fraction * len(members) for lab, members in by_label.items()}
    keep = {lab: int(math.floor(q)) for lab, q in quotas.items()}
    if target >= len(by_label):
        for lab in keep:
            keep[lab] = max(keep[lab], 1)
    # settle the remainder by largest fractional part
    leftover = target - sum(keep.values())
    order = sorted(by_label, key=lambda lab: quotas[lab] - math.floor(quotas[lab]),
                   reverse=True)
    pos = 0
    while leftover > 0:
        lab = order[pos % len(order)]
        if keep[lab] < len(by_label[lab]):
            keep[lab] += 1
            leftover -= 1
        pos += 1
    while leftover < 0:
        lab = order[pos % len(order)]
        if keep[lab] > (1 if target >= len(by_label) else 0):
            keep[lab] -= 1
            leftover += 1
        pos += 1

    rng = np.random.default_rng(seed)
    chosen = set()
    for lab, members in by_label.items():
        picked = rng.choice(len(members), size=keep[lab], replace=False)
        chosen.update(members[i] for i in picked)
    return [idx for idx in indices if idx in chosen]


def with_prompt_passage(meta: EssaySetMeta, prompt: str | None = None,
                        passage: str | None = None) -> EssaySetMeta:
    return replace(meta, prompt=prompt if prompt is not None else meta.prompt,
                   passage=passage if passage is not None else meta.passage)

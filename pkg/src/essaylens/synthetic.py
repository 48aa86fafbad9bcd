"""Seeded synthetic essay corpus with a recoverable class signal.

Essays for score class k draw most of their words from a class-specific
vocabulary, so the hashed bag-of-tokens provider maps each class to a
distinct mean embedding direction. Used by the test suite's end-to-end
checks and handy for demos without any real data.
"""

from __future__ import annotations

import numpy as np

from .corpus import EssayRecord, EssaySetMeta, normalize_score
from .embeddings import HashedEmbedder, segment_sentences

SYNTH_SET_ID = 100

_SHARED = ("the", "a", "it", "was", "and", "then", "very", "quite", "so",
           "there", "went", "came", "day", "time", "thing", "story")

_CLASS_WORDS = (
    ("mud", "fog", "grey", "dull", "cold", "empty", "flat", "plain",
     "murk", "drab", "worn", "faded"),
    ("path", "field", "walk", "gate", "slow", "quiet", "mild", "calm",
     "wood", "lane", "steady", "plainly"),
    ("river", "bright", "swift", "clear", "warm", "glad", "keen", "fresh",
     "spark", "lively", "open", "sunny"),
    ("summit", "blaze", "vivid", "soar", "radiant", "triumph", "golden",
     "splendid", "magnificent", "dazzling", "superb", "glorious"),
)


def synthetic_meta(n_essays: int = 200, n_classes: int = 4) -> EssaySetMeta:
    return EssaySetMeta(
        set_id=SYNTH_SET_ID, grade_level=8, avg_length_words=60,
        score_min=0, score_max=n_classes - 1, essay_count=n_essays,
        source_dependent=False, description="Synthetic separable corpus")


def make_synthetic_corpus(n_essays: int = 200, n_classes: int = 4,
                          seed: int = 0, embed_dim: int = 64,
                          sentences_per_essay: tuple[int, int] = (3, 7),
                          embed: bool = True) -> tuple[list[EssayRecord], EssaySetMeta]:
    """Balanced labeled corpus; optionally embedded with the hashed provider."""
    if n_classes > len(_CLASS_WORDS):
        raise ValueError(f"at most {len(_CLASS_WORDS)} classes supported")
    meta = synthetic_meta(n_essays, n_classes)
    rng = np.random.default_rng(seed)
    provider = HashedEmbedder(dim=embed_dim, seed=seed)
    records = []
    for i in range(n_essays):
        label = i % n_classes
        vocab = _CLASS_WORDS[label]
        n_sent = int(rng.integers(sentences_per_essay[0],
                                  sentences_per_essay[1] + 1))
        sentences = []
        for _ in range(n_sent):
            n_words = int(rng.integers(5, 10))
            words = []
            for _ in range(n_words):
                pool = vocab if rng.random() < 0.7 else _SHARED
                words.append(pool[int(rng.integers(len(pool)))])
            sentences.append(" ".join(words).capitalize() + ".")
        text = " ".join(sentences)
        record = EssayRecord(
            essay_id=f"synth-{i}", set_id=meta.set_id, text=text, score=label,
            normalized=normalize_score(label, meta))
        split = segment_sentences(text)
        record.sentences = list(split.sentences)
        if embed:
            record.embedding = provider.embed(record.sentences)
        records.append(record)
    return records, meta

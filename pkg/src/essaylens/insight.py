"""Link essay sentences to source-passage sentences by cosine similarity.

Feeds the teacher-facing highlighting view: for a selected essay sentence,
each passage sentence gets a highlight saturation rescaled from its cosine
similarity, so the strongest match is fully saturated and everything at or
below the threshold disappears.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embeddings import SentenceSplit

DEFAULT_TAU = 0.3


class InsightError(ValueError):
    pass


def similarity_matrix(essay: np.ndarray, passage: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarities, essay rows by passage columns.

    Zero vectors (sentences with no tokens) get similarity 0 everywhere.
    """
    essay = np.asarray(essay, dtype=float)
    passage = np.asarray(passage, dtype=float)
    if essay.ndim != 2 or passage.ndim != 2:
        raise InsightError("embedding matrices must be 2-D")
    if essay.shape[1] != passage.shape[1]:
        raise InsightError(
            f"dimension mismatch: essay {essay.shape[1]} vs passage "
            f"{passage.shape[1]}")

    def _unit(rows):
        norms = np.linalg.norm(rows, axis=1, keepdims=True)
        return np.divide(rows, norms, out=np.zeros_like(rows), where=norms > 0)

    return _unit(essay) @ _unit(passage).T


@dataclass(frozen=True)
class HighlightSpan:
    sentence_index: int
    start: int
    end: int
    saturation: float


def saturation_for_row(row: np.ndarray, tau: float) -> np.ndarray:
    """Rescale one similarity row into [0, 1] saturations above tau.

    The row maximum maps to 1; values at or below tau map to 0; rows whose
    maximum does not clear tau produce no highlight at all.
    """
    row = np.asarray(row, dtype=float)
    s_max = row.max() if row.size else 0.0
    if s_max <= tau:
        return np.zeros_like(row)
    return np.clip((row - tau) / (s_max - tau), 0.0, 1.0)


def highlight_spans(sim: np.ndarray, essay_sentence: int,
                    passage_split: SentenceSplit,
                    tau: float = DEFAULT_TAU) -> list[HighlightSpan]:
    """Saturation-bearing spans over the passage for one essay sentence."""
    sim = np.asarray(sim, dtype=float)
    if not 0.0 <= tau < 1.0:
        raise InsightError(f"tau must be in [0, 1), got {tau}")
    if not 0 <= essay_sentence < sim.shape[0]:
        raise InsightError(
            f"essay sentence {essay_sentence} out of range for "
            f"{sim.shape[0]} rows")
    if sim.shape[1] != len(passage_split):
        raise InsightError(
            f"similarity has {sim.shape[1]} columns for "
            f"{len(passage_split)} passage sentences")
    saturations = saturation_for_row(sim[essay_sentence], tau)
    return [HighlightSpan(sentence_index=j, start=start, end=end,
                          saturation=float(sat))
            for j, ((start, end), sat) in enumerate(zip(passage_split.offsets,
                                                        saturations))]

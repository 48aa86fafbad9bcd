"""Shared gateway plumbing: configuration resolution, the model registry,
and the analyze/score payload builders used by both the CLI and the HTTP
service.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import insight
from .corpus import default_sets
from .embeddings import (DimensionMismatch, HashedEmbedder, embed_sentences,
                         provider_from_id, segment_sentences)
from .scorers import ScoreModel, load_model, predict

ENV_PREFIX = "ESSAYLENS_"

DEFAULTS = {
    "provider": "hashed-d512-s0",
    "seed": 0,
    "models_dir": "./models",
    "port": 8000,
    "tau": insight.DEFAULT_TAU,
    "dim": 512,
}


class GatewayError(ValueError):
    pass


class ModelNotFound(GatewayError):
    pass


def load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise GatewayError("config file must hold a JSON object")
    unknown = set(data) - set(DEFAULTS)
    if unknown:
        raise GatewayError(f"unknown config keys: {sorted(unknown)}")
    return data


def setting(name: str, flag_value=None, config: dict | None = None):
    """Resolve one setting: flag > ESSAYLENS_* env > config file > default."""
    if flag_value is not None:
        return flag_value
    env = os.environ.get(f"{ENV_PREFIX}{name.upper()}")
    if env is not None:
        default = DEFAULTS[name]
        return type(default)(env) if not isinstance(default, str) else env
    if config and name in config:
        return config[name]
    return DEFAULTS[name]


@dataclass
class ModelEntry:
    model_id: str
    path: str
    model: ScoreModel

    def manifest(self) -> dict:
        spec = self.model.spec
        return {
            "id": self.model_id,
            "kind": spec.kind,
            "input_dim": spec.input_dim,
            "score_min": spec.score_min,
            "score_max": spec.score_max,
            "n_classes": spec.n_classes,
            "provenance": self.model.provenance,
        }


class ModelRegistry:
    """Read-only catalogue of trained models in one directory.

    Loaded once at startup; refreshing means restarting the process.
    """

    SUFFIX = ".elm"

    def __init__(self, models_dir: str):
        self.models_dir = models_dir
        self._entries: dict[str, ModelEntry] = {}
        root = Path(models_dir)
        if root.is_dir():
            for path in sorted(root.glob(f"*{self.SUFFIX}")):
                model = load_model(path.read_bytes())
                self._entries[path.stem] = ModelEntry(path.stem, str(path), model)

    def ids(self) -> list[str]:
        return sorted(self._entries)

    def manifests(self) -> list[dict]:
        return [self._entries[mid].manifest() for mid in self.ids()]

    def get(self, model_id: str) -> ScoreModel:
        entry = self._entries.get(model_id)
        if entry is None:
            raise ModelNotFound(f"no model named {model_id!r} in "
                                f"{self.models_dir}")
        return entry.model


def _provider_for(model: ScoreModel | None, provider_id: str | None,
                  default_provider_id: str) -> HashedEmbedder:
    if provider_id:
        return provider_from_id(provider_id)
    if model is not None and model.provenance.get("provider"):
        return provider_from_id(model.provenance["provider"])
    return provider_from_id(default_provider_id)


def score_payload(model: ScoreModel, essay_text: str,
                  provider_id: str | None = None,
                  default_provider_id: str = DEFAULTS["provider"]) -> dict:
    """Segment, embed, and score one essay against a loaded model."""
    provider = _provider_for(model, provider_id, default_provider_id)
    if provider.dim != model.spec.input_dim:
        raise DimensionMismatch(
            f"provider dimension {provider.dim} != model input dim "
            f"{model.spec.input_dim}")
    split = segment_sentences(essay_text)
    matrix = embed_sentences(provider, split.sentences)
    pred = predict(model, matrix, sentences=list(split.sentences))
    return {
        "class_probs": pred.class_probs.tolist(),
        "regression": pred.regression,
        "expected_score": pred.expected_score,
        "regression_score": pred.regression_score,
        "blended": pred.blended,
        "score_min": model.spec.score_min,
        "score_max": model.spec.score_max,
    }


def analyze_payload(passage_text: str, essay_text: str,
                    prompt_text: str | None = None,
                    model: ScoreModel | None = None,
                    provider_id: str | None = None,
                    tau: float = insight.DEFAULT_TAU,
                    default_provider_id: str = DEFAULTS["provider"]) -> dict:
    """Full analysis: splits, similarity matrix, highlights, optional score."""
    provider = _provider_for(model, provider_id, default_provider_id)
    essay_split = segment_sentences(essay_text)
    passage_split = segment_sentences(passage_text)
    essay_matrix = embed_sentences(provider, essay_split.sentences)
    passage_matrix = embed_sentences(provider, passage_split.sentences)
    sim = insight.similarity_matrix(essay_matrix, passage_matrix)
    highlights = [
        [vars(span) for span in insight.highlight_spans(sim, i, passage_split, tau)]
        for i in range(len(essay_split))
    ]
    score = None
    if model is not None:
        if provider.dim != model.spec.input_dim:
            raise DimensionMismatch(
                f"provider dimension {provider.dim} != model input dim "
                f"{model.spec.input_dim}")
        pred = predict(model, essay_matrix, sentences=list(essay_split.sentences),
                       passage=(passage_matrix
                                if model.spec.kind == "passage_conditioned"
                                else None))
        score = {
            "class_probs": pred.class_probs.tolist(),
            "regression": pred.regression,
            "expected_score": pred.expected_score,
            "regression_score": pred.regression_score,
            "blended": pred.blended,
            "score_min": model.spec.score_min,
            "score_max": model.spec.score_max,
        }
    return {
        "essay_sentences": [
            {"text": s, "start": a, "end": b}
            for s, (a, b) in zip(essay_split.sentences, essay_split.offsets)],
        "passage_sentences": [
            {"text": s, "start": a, "end": b}
            for s, (a, b) in zip(passage_split.sentences, passage_split.offsets)],
        "prompt": prompt_text,
        "similarity": np.asarray(sim).tolist(),
        "highlights": highlights,
        "tau": tau,
        "score": score,
    }


def essay_sets_payload() -> list[dict]:
    return [{
        "set_id": m.set_id,
        "grade_level": m.grade_level,
        "avg_length_words": m.avg_length_words,
        "score_min": m.score_min,
        "score_max": m.score_max,
        "essay_count": m.essay_count,
        "source_dependent": m.source_dependent,
        "description": m.description,
    } for m in default_sets().values()]

"""Quadratic weighted kappa, the cross-validation harness, and result tables.

QWK is the headline metric, computed per essay set. Cohen's kappa and rank
correlations are provided for reporting only; nothing here uses them for
early stopping or model selection.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as scipy_stats

from .corpus import EssaySetMeta, make_folds, reduce_training_set
from .hypergen import HyperParams, generate_hyperparams
from .scorers import ModelSpec, TrainReport, build_model, predict, train


class EvaluationError(ValueError):
    pass


class DegenerateKappaWarning(UserWarning):
    """Zero expected disagreement with nonzero observed disagreement."""


def confusion_matrix(truth, pred, n_classes: int) -> np.ndarray:
    out = np.zeros((n_classes, n_classes), dtype=int)
    for t, p in zip(truth, pred):
        out[t, p] += 1
    return out


def quadratic_weighted_kappa(truth, pred, score_min: int, score_max: int) -> float:
    """Chance-corrected agreement with squared-distance disagreement weights.

    kappa = 1 - sum(w * O) / sum(w * E) with w[i,j] = (i-j)^2 / (C-1)^2,
    O the observed count matrix and E the outer product of the marginals
    scaled to the same total. All-identical equal pairs score 1; zero
    expected disagreement with observed disagreement returns 0 with a
    warning rather than a division error.
    """
    truth = np.asarray(truth, dtype=int)
    pred = np.asarray(pred, dtype=int)
    if truth.shape != pred.shape or truth.ndim != 1:
        raise EvaluationError(
            f"label vectors must align, got {truth.shape} vs {pred.shape}")
    if truth.size == 0:
        raise EvaluationError("need at least one pair")
    c = score_max - score_min + 1
    if c < 2:
        raise EvaluationError("score range must span at least 2 values")
    for name, arr in (("truth", truth), ("pred", pred)):
        if arr.min() < score_min or arr.max() > score_max:
            raise EvaluationError(
                f"{name} labels outside [{score_min}, {score_max}]")

    t = truth - score_min
    p = pred - score_min
    n = t.size
    idx = np.arange(c)
    w = (idx[:, None] - idx[None, :]) ** 2 / float((c - 1) ** 2)
    observed = confusion_matrix(t, p, c)
    hist_t = np.bincount(t, minlength=c)
    hist_p = np.bincount(p, minlength=c)
    expected = np.outer(hist_t, hist_p) / n

    num = float((w * observed).sum())
    den = float((w * expected).sum())
    if den == 0.0:
        if num == 0.0:
            return 1.0
        warnings.warn("zero expected disagreement with observed disagreement",
                      DegenerateKappaWarning)
        return 0.0
    return 1.0 - num / den


def cohen_kappa(truth, pred, score_min: int, score_max: int) -> float:
    """Unweighted chance-corrected agreement (reporting only)."""
    truth = np.asarray(truth, dtype=int) - score_min
    pred = np.asarray(pred, dtype=int) - score_min
    c = score_max - score_min + 1
    n = truth.size
    observed = confusion_matrix(truth, pred, c)
    po = np.trace(observed) / n
    pe = float(np.bincount(truth, minlength=c) @ np.bincount(pred, minlength=c)) / n ** 2
    if pe == 1.0:
        return 1.0 if po == 1.0 else 0.0
    return (po - pe) / (1.0 - pe)


def correlation_metrics(truth, pred) -> dict[str, float]:
    """Pearson, Spearman, Kendall's tau; NaN when one side is constant."""
    truth = np.asarray(truth, dtype=float)
    pred = np.asarray(pred, dtype=float)
    if truth.std() == 0.0 or pred.std() == 0.0:
        return {"pearson": float("nan"), "spearman": float("nan"),
                "kendall": float("nan")}
    return {
        "pearson": float(scipy_stats.pearsonr(truth, pred).statistic),
        "spearman": float(scipy_stats.spearmanr(truth, pred).statistic),
        "kendall": float(scipy_stats.kendalltau(truth, pred).statistic),
    }


# ---------------------------------------------------------------------------
# Cross-validation harness
# ---------------------------------------------------------------------------

@dataclass
class FoldResult:
    fold: int
    test_qwk: float
    best_epoch: int
    epochs_run: int
    best_dev_qwk: float


@dataclass
class CrossValidation:
    model_kind: str
    set_id: int
    seed: int
    fold_results: list[FoldResult]
    reports: list[TrainReport]

    @property
    def mean_qwk(self) -> float:
        return float(np.mean([f.test_qwk for f in self.fold_results]))


def _model_spec(kind: str, meta: EssaySetMeta, input_dim: int,
                hp: HyperParams) -> ModelSpec:
    return ModelSpec(kind=kind, hyper=hp, input_dim=input_dim,
                     n_classes=meta.n_classes, score_min=meta.score_min,
                     score_max=meta.score_max)


def cross_validate(model_kind: str, records, meta: EssaySetMeta, seed: int,
                   hp: HyperParams | None = None,
                   mean_classes: float | None = None,
                   train_fraction: float = 1.0) -> CrossValidation:
    """Five rotations of train/dev/test; per-fold seed is seed + fold index.

    Each fold trains from scratch, early-stops on dev QWK, and reports the
    held-out test QWK; the set's value is the mean over folds.
    """
    records = list(records)
    if len(records) < 5:
        raise EvaluationError(f"need >= 5 records, got {len(records)}")
    for r in records:
        if r.embedding is None:
            raise EvaluationError(f"record {r.essay_id} has no embedding")
    base_hp = hp or generate_hyperparams(meta, mean_classes)
    input_dim = records[0].embedding.shape[1]
    plan = make_folds(len(records), seed)

    fold_results = []
    reports = []
    for i, fold in enumerate(plan.folds):
        fold_seed = seed + i
        fold_hp = HyperParams(**{**_hp_dict(base_hp), "seed": fold_seed})
        if train_fraction < 1.0:
            labels = [records[j].score for j in fold.train]
            kept = reduce_training_set(fold.train, labels, train_fraction,
                                       seed=fold_seed)
            fold = type(fold)(train=tuple(kept), dev=fold.dev, test=fold.test)
        model = build_model(_model_spec(model_kind, meta, input_dim, fold_hp),
                            fold_seed)
        best, report = train(model, records, fold, fold_hp)
        truth = [records[j].score for j in fold.test]
        preds = [predict(best, records[j].embedding,
                         sentences=records[j].sentences).blended
                 for j in fold.test]
        qwk = quadratic_weighted_kappa(truth, preds, meta.score_min,
                                       meta.score_max)
        fold_results.append(FoldResult(
            fold=i, test_qwk=qwk, best_epoch=report.best_epoch,
            epochs_run=report.epochs_run,
            best_dev_qwk=max(report.dev_qwk) if report.dev_qwk else float("nan")))
        reports.append(report)
    return CrossValidation(model_kind=model_kind, set_id=meta.set_id, seed=seed,
                           fold_results=fold_results, reports=reports)


def reduced_data_sweep(model_kind: str, records, meta: EssaySetMeta,
                       fractions, seed: int,
                       hp: HyperParams | None = None) -> list[tuple[float, CrossValidation]]:
    """Cross-validation at each training fraction, reported in given order."""
    fractions = list(fractions)
    for f in fractions:
        if not 0.0 < f <= 1.0:
            raise EvaluationError(f"fraction {f} outside (0, 1]")
    return [(f, cross_validate(model_kind, records, meta, seed, hp=hp,
                               train_fraction=f))
            for f in fractions]


def _hp_dict(hp: HyperParams) -> dict:
    from dataclasses import asdict
    return asdict(hp)


# ---------------------------------------------------------------------------
# Result tables (one row per model, one column per essay set, plus Avg)
# ---------------------------------------------------------------------------

@dataclass
class QwkTable:
    rows: list[dict] = field(default_factory=list)  # {"model", "scores": {set: qwk}}

    def add_row(self, model_name: str, scores: dict[int, float]) -> None:
        self.rows.append({"model": model_name,
                          "scores": {int(k): float(v) for k, v in scores.items()}})

    @staticmethod
    def average(scores: dict[int, float]) -> float:
        return float(np.mean(list(scores.values()))) if scores else float("nan")

    def to_json(self) -> str:
        return json.dumps({"rows": [
            {"model": r["model"],
             "scores": {str(k): v for k, v in r["scores"].items()},
             "average": self.average(r["scores"])}
            for r in self.rows]}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "QwkTable":
        data = json.loads(text)
        table = cls()
        for row in data["rows"]:
            table.add_row(row["model"], {int(k): v for k, v in row["scores"].items()})
        return table

    def to_text(self, set_ids=(1, 2, 3, 4, 5, 6, 7, 8)) -> str:
        """Aligned plain-text table with per-set columns and the average."""
        header = ["Model", *[str(s) for s in set_ids], "Avg"]
        body = []
        for row in self.rows:
            cells = [row["model"]]
            for s in set_ids:
                v = row["scores"].get(s)
                cells.append("-" if v is None else f"{v:.2f}")
            cells.append(f"{self.average(row['scores']):.2f}")
            body.append(cells)
        widths = [max(len(line[i]) for line in [header, *body])
                  for i in range(len(header))]
        def fmt(cells):
            left = cells[0].ljust(widths[0])
            rest = "  ".join(c.rjust(w) for c, w in zip(cells[1:], widths[1:]))
            return f"{left}  {rest}".rstrip()
        rule = "-" * (sum(widths) + 2 * len(widths) - 2)
        return "\n".join([fmt(header), rule, *[fmt(b) for b in body]])

    @classmethod
    def from_text(cls, text: str) -> "QwkTable":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if len(lines) < 2:
            raise EvaluationError("not a QWK table")
        header = lines[0].split()
        set_ids = [int(tok) for tok in header[1:-1]]
        table = cls()
        for line in lines[2:]:
            tokens = line.split()
            values = tokens[-(len(set_ids) + 1):]
            model = " ".join(tokens[:len(tokens) - len(values)])
            scores = {s: float(v) for s, v in zip(set_ids, values[:-1]) if v != "-"}
            table.add_row(model, scores)
        return table

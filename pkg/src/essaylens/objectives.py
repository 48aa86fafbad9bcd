"""Training losses: cross-entropy, MSE, the ordinal weighted-kappa loss,
and the logistic blend between classification and regression objectives.

Every loss accepts predictions as autodiff Vars (so training can backprop
through them) or as plain arrays, and returns a scalar Var.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Var

# Logistic-blend constants: L and c bound the classification weight, k is
# the slope of the logistic in the class count.
BLEND_UPPER = 0.9
BLEND_FLOOR = 0.001
BLEND_SLOPE = 0.5

KAPPA_EPS = 1e-6


class ClassCountMismatch(ValueError):
    """Prediction and target distributions disagree on the class count."""


class SingleClassBatch(ValueError):
    """The kappa loss needs a batch with at least two distinct labels."""


@dataclass(frozen=True)
class LossWeights:
    """Classification weight P and the constants that produced it."""
    P: float
    upper: float
    floor: float
    slope: float
    n_classes: int
    mean_classes: float


def smooth_labels(labels, n_classes: int, smoothing: float = 0.0) -> np.ndarray:
    """Target distributions: (1 - eps) * onehot + eps / C, one row per label."""
    labels = np.asarray(labels, dtype=int)
    if not 0.0 <= smoothing < 1.0:
        raise ValueError(f"smoothing must be in [0, 1), got {smoothing}")
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValueError(f"labels out of range [0, {n_classes})")
    out = np.full((labels.size, n_classes), smoothing / n_classes)
    out[np.arange(labels.size), labels] += 1.0 - smoothing
    return out


def categorical_cross_entropy(pred, target) -> Var:
    """Mean over the batch of -sum(target * log(pred)), pred clipped below 1e-12."""
    pred = ad.as_var(pred)
    target = np.asarray(target, dtype=float)
    if pred.value.shape != target.shape:
        raise ClassCountMismatch(
            f"pred {pred.value.shape} vs target {target.shape}")
    clipped = ad.maximum(pred, 1e-12)
    per_item = -ad.reduce_sum(ad.log(clipped) * target, axis=-1)
    return ad.reduce_mean(per_item)


def mean_squared_error(pred, target) -> Var:
    """Mean of squared differences on [0, 1]-normalized scores."""
    pred = ad.as_var(pred)
    target = np.asarray(target, dtype=float)
    if pred.value.shape != target.shape:
        raise ad.ShapeMismatch(f"mse: {pred.value.shape} vs {target.shape}")
    if target.size and (target.min() < 0.0 or target.max() > 1.0):
        raise ValueError("mse targets must be normalized to [0, 1]")
    diff = pred - target
    return ad.reduce_mean(diff * diff)


def quadratic_weight_matrix(n_classes: int) -> np.ndarray:
    """w[i, j] = (i - j)^2 / (C - 1)^2."""
    idx = np.arange(n_classes)
    return (idx[:, None] - idx[None, :]) ** 2 / float((n_classes - 1) ** 2)


def weighted_kappa_loss(pred, labels, n_classes: int | None = None,
                        smoothing: float = 0.0, eps: float = KAPPA_EPS) -> Var:
    """Ordinal batch loss: log of the weighted-disagreement ratio.

    With quadratic weights w and (optionally smoothed) targets T over a batch
    of N prediction rows p:

        numerator   = sum_n sum_{i,j} T_n(i) * w_ij * p_n(j)
        denominator = sum_j (sum_i hist_i * w_ij) * mean_n p_n(j)
        loss        = log(numerator / denominator + eps)

    Perfect predictions drive the ratio to 0 (loss -> log eps), chance-level
    predictions give ratio 1 (loss -> ~0), and mass placed on classes near
    the true label costs less than mass placed far away.
    """
    pred = ad.as_var(pred)
    labels = np.asarray(labels, dtype=int)
    if pred.value.ndim != 2:
        raise ad.ShapeMismatch(f"kappa loss expects (N, C), got {pred.value.shape}")
    n, c = pred.value.shape
    if n_classes is not None and n_classes != c:
        raise ClassCountMismatch(f"pred has {c} classes, expected {n_classes}")
    if labels.shape != (n,):
        raise ad.ShapeMismatch(f"labels shape {labels.shape} != ({n},)")
    if n < 2 or np.unique(labels).size < 2:
        raise SingleClassBatch(
            f"kappa loss needs >= 2 samples with >= 2 distinct labels, "
            f"got labels {labels.tolist()}")
    w = quadratic_weight_matrix(c)
    targets = smooth_labels(labels, c, smoothing)
    numerator = ad.reduce_sum(ad.Var(targets @ w) * pred)
    col_weights = targets.sum(axis=0) @ w
    denominator = ad.reduce_sum(ad.Var(col_weights) * reduce_cols(pred)) / float(n)
    return ad.log(numerator / denominator + eps)


def reduce_cols(pred: Var) -> Var:
    return ad.reduce_sum(pred, axis=0)


def classification_weight(n_classes: int, mean_classes: float,
                          upper: float = BLEND_UPPER, floor: float = BLEND_FLOOR,
                          slope: float = BLEND_SLOPE) -> LossWeights:
    """Logistic weighting of the classification loss by class count.

    P = upper / (1 + e^{slope * (n_c - mean)}) + floor, so narrow score
    ranges lean on classification and wide ranges on regression.
    """
    if n_classes < 2:
        raise ValueError(f"need >= 2 classes, got {n_classes}")
    p = upper / (1.0 + np.exp(slope * (n_classes - mean_classes))) + floor
    return LossWeights(P=float(p), upper=upper, floor=floor, slope=slope,
                       n_classes=n_classes, mean_classes=mean_classes)


def combined_loss(class_loss, mse, weights: LossWeights) -> Var:
    """P * classification + (1 - P) * regression."""
    class_loss = ad.as_var(class_loss)
    mse = ad.as_var(mse)
    if not (np.isfinite(class_loss.value).all() and np.isfinite(mse.value).all()):
        raise ad.NonFiniteValue("combined_loss received a non-finite input")
    return class_loss * weights.P + mse * (1.0 - weights.P)

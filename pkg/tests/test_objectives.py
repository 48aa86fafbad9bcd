import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from essaylens import autodiff as ad
from essaylens import objectives as obj
from essaylens.autodiff import Var


# ---------------------------------------------------------------------------
# Cross-entropy
# ---------------------------------------------------------------------------

def test_cce_perfect_prediction_is_zero():
    pred = np.array([[0.0, 1.0, 0.0]])
    target = obj.smooth_labels([1], 3, smoothing=0.0)
    # clip floor keeps log finite; the target's zero entries null those terms
    assert obj.categorical_cross_entropy(pred, target).item() == pytest.approx(0.0, abs=1e-9)


def test_cce_single_row_value():
    pred = np.array([[0.7, 0.2, 0.1]])
    target = obj.smooth_labels([0], 3)
    assert obj.categorical_cross_entropy(pred, target).item() == pytest.approx(
        -math.log(0.7), abs=1e-5)


def test_cce_uniform_prediction():
    pred = np.full((3, 4), 0.25)
    target = obj.smooth_labels([0, 2, 3], 4)
    assert obj.categorical_cross_entropy(pred, target).item() == pytest.approx(
        math.log(4), abs=1e-9)


def test_cce_class_count_mismatch():
    with pytest.raises(obj.ClassCountMismatch):
        obj.categorical_cross_entropy(np.ones((2, 3)) / 3, np.ones((2, 4)) / 4)


# ---------------------------------------------------------------------------
# MSE
# ---------------------------------------------------------------------------

def test_mse_zero_when_equal():
    x = np.array([0.2, 0.9])
    assert obj.mean_squared_error(x, x).item() == 0.0


def test_mse_single_pair():
    assert obj.mean_squared_error(np.array([0.7]), np.array([0.5])).item() == \
        pytest.approx(0.04, abs=1e-12)


def test_mse_batch():
    assert obj.mean_squared_error(np.array([0.0, 1.0]), np.array([1.0, 0.0])).item() == \
        pytest.approx(1.0)


def test_mse_rejects_out_of_range_target():
    with pytest.raises(ValueError):
        obj.mean_squared_error(np.array([0.5]), np.array([1.5]))


# ---------------------------------------------------------------------------
# Weighted kappa loss: the C=3 fixtures, hand-evaluated per the definition
# ---------------------------------------------------------------------------

def test_kappa_loss_perfect_predictions():
    pred = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    loss = obj.weighted_kappa_loss(pred, [0, 2]).item()
    assert loss == pytest.approx(math.log(1e-6), abs=1e-6)


def test_kappa_loss_uniform_predictions_chance_level():
    pred = np.full((2, 3), 1.0 / 3.0)
    loss = obj.weighted_kappa_loss(pred, [0, 2]).item()
    assert loss == pytest.approx(0.0, abs=1e-5)


def test_kappa_loss_near_miss_beats_far_miss():
    near = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    far = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0]])
    near_loss = obj.weighted_kappa_loss(near, [0, 2]).item()
    far_loss = obj.weighted_kappa_loss(far, [0, 2]).item()
    assert near_loss == pytest.approx(math.log(0.25 / 0.75 + 1e-6), abs=1e-9)
    assert near_loss == pytest.approx(-1.0986, abs=1e-3)
    assert far_loss == pytest.approx(0.0, abs=1e-5)
    assert near_loss < far_loss


def test_kappa_loss_cce_blind_to_ordinal_structure():
    # same point-mass wrongness, different distances: CCE cannot tell apart
    near = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    far = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0]])
    targets = obj.smooth_labels([0, 2], 3)
    cce_near = obj.categorical_cross_entropy(near, targets).item()
    cce_far = obj.categorical_cross_entropy(far, targets).item()
    assert cce_near == pytest.approx(cce_far, abs=1e-9)


def test_kappa_loss_single_class_batch_rejected():
    pred = np.full((3, 4), 0.25)
    with pytest.raises(obj.SingleClassBatch, match=r"\[1, 1, 1\]"):
        obj.weighted_kappa_loss(pred, [1, 1, 1])


def test_kappa_loss_single_sample_rejected():
    with pytest.raises(obj.SingleClassBatch):
        obj.weighted_kappa_loss(np.full((1, 3), 1 / 3), [0])


def test_kappa_loss_reflection_invariance():
    rng = np.random.default_rng(5)
    pred = rng.dirichlet(np.ones(4), size=6)
    labels = np.array([0, 3, 1, 2, 0, 3])
    direct = obj.weighted_kappa_loss(pred, labels, smoothing=0.1).item()
    reflected = obj.weighted_kappa_loss(pred[:, ::-1].copy(), 3 - labels,
                                        smoothing=0.1).item()
    assert direct == pytest.approx(reflected, abs=1e-12)


def test_kappa_loss_moving_mass_closer_never_hurts():
    # point-mass predictions; shift one prediction from a far class to a
    # nearer class w.r.t. its true label and check the loss never increases
    labels = np.array([0, 4, 2, 1])
    base = np.zeros((4, 5))
    base[0, 4] = 1.0  # far miss for true label 0
    base[1, 0] = 1.0
    base[2, 2] = 1.0
    base[3, 1] = 1.0
    last = obj.weighted_kappa_loss(base, labels).item()
    for cls in (3, 2, 1, 0):  # walk prediction 0 toward its true label
        moved = base.copy()
        moved[0] = 0.0
        moved[0, cls] = 1.0
        cur = obj.weighted_kappa_loss(moved, labels).item()
        assert cur <= last + 1e-12
        last = cur


def test_kappa_loss_gradient_check():
    rng = np.random.default_rng(9)
    logits = Var(rng.normal(size=(5, 4)))
    labels = np.array([0, 2, 3, 1, 2])

    def loss():
        return obj.weighted_kappa_loss(ad.softmax(logits), labels, smoothing=0.1)

    report = ad.gradient_report(loss, {"logits": logits})
    assert report.max_rel_err < 1e-4


def test_cce_gradient_check():
    rng = np.random.default_rng(10)
    logits = Var(rng.normal(size=(4, 3)))
    targets = obj.smooth_labels([0, 1, 2, 1], 3, smoothing=0.1)

    def loss():
        return obj.categorical_cross_entropy(ad.softmax(logits), targets)

    report = ad.gradient_report(loss, {"logits": logits})
    assert report.max_rel_err < 1e-4


def test_mse_gradient_check():
    rng = np.random.default_rng(11)
    raw = Var(rng.normal(size=6))
    target = rng.random(6)

    def loss():
        return obj.mean_squared_error(ad.sigmoid(raw), target)

    report = ad.gradient_report(loss, {"raw": raw})
    assert report.max_rel_err < 1e-4


# ---------------------------------------------------------------------------
# Classification weight
# ---------------------------------------------------------------------------

MEAN_CLASSES = 15.875


def test_classification_weight_midpoint():
    w = obj.classification_weight(16, 16.0)
    assert w.P == pytest.approx(0.451, abs=1e-6)


def test_classification_weight_narrow_range():
    w = obj.classification_weight(4, MEAN_CLASSES)
    assert w.P == pytest.approx(0.8986, abs=1e-3)


def test_classification_weight_wide_range():
    w = obj.classification_weight(61, MEAN_CLASSES)
    assert w.P == pytest.approx(0.0010, abs=1e-4)


# range capped at the dataset's widest label set (61 classes); past ~n_c=100
# the logistic term drops below one float64 ulp of the floor, so strict
# decrease stops being representable
@given(st.integers(min_value=2, max_value=61))
@settings(max_examples=60, deadline=None)
def test_classification_weight_bounds_and_monotonicity(n_classes):
    w = obj.classification_weight(n_classes, MEAN_CLASSES)
    assert obj.BLEND_FLOOR < w.P < obj.BLEND_UPPER + obj.BLEND_FLOOR
    nxt = obj.classification_weight(n_classes + 1, MEAN_CLASSES)
    assert nxt.P < w.P


# ---------------------------------------------------------------------------
# Combined loss
# ---------------------------------------------------------------------------

def _weights(p):
    return obj.LossWeights(P=p, upper=0.9, floor=0.001, slope=0.5,
                           n_classes=4, mean_classes=MEAN_CLASSES)


def test_combined_loss_blend():
    assert obj.combined_loss(2.0, 0.0, _weights(0.5)).item() == pytest.approx(1.0)


def test_combined_loss_upper_bound_dominated_by_classification():
    w = obj.classification_weight(2, MEAN_CLASSES)
    out = obj.combined_loss(1.0, 100.0, w).item()
    # P is within a hair of L + c, so the regression term is nearly muted
    assert w.P > 0.900
    assert out == pytest.approx(w.P * 1.0 + (1 - w.P) * 100.0)


def test_combined_loss_equal_losses_fixed_point():
    for p in (0.1, 0.451, 0.9):
        assert obj.combined_loss(3.3, 3.3, _weights(p)).item() == pytest.approx(3.3)


def test_combined_loss_rejects_nonfinite():
    with pytest.raises(ad.NonFiniteValue):
        obj.combined_loss(float("nan"), 0.0, _weights(0.5))

import numpy as np
import pytest

from essaylens import autodiff as ad


def test_evaluate_identity():
    g = ad.Graph(inputs=("x",), build=lambda x: x)
    out = ad.evaluate(g, {"x": [2.0, 3.0]})
    np.testing.assert_array_equal(out["out"], [2.0, 3.0])


def test_evaluate_sum_of_squares():
    g = ad.Graph(inputs=("x",), build=lambda x: ad.reduce_sum(x * x))
    out = ad.evaluate(g, {"x": [1.0, 2.0, 3.0]})
    assert out["out"] == pytest.approx(14.0)


def test_evaluate_softmax_symmetry():
    g = ad.Graph(inputs=("x",), build=lambda x: ad.softmax(x))
    out = ad.evaluate(g, {"x": [0.0, 0.0]})
    np.testing.assert_allclose(out["out"], [0.5, 0.5])


def test_evaluate_unbound_input():
    g = ad.Graph(inputs=("x", "y"), build=lambda x, y: x + y)
    with pytest.raises(ad.UnboundInput, match="y"):
        ad.evaluate(g, {"x": [1.0]})


def test_evaluate_does_not_mutate_bindings():
    x = np.array([1.0, 2.0])
    g = ad.Graph(inputs=("x",), build=lambda x: x * 2.0)
    ad.evaluate(g, {"x": x})
    np.testing.assert_array_equal(x, [1.0, 2.0])


def test_evaluate_is_pure():
    g = ad.Graph(inputs=("x",), build=lambda x: ad.softmax(ad.tanh(x * 3.0)))
    b = {"x": np.array([0.3, -1.2, 0.7])}
    first = ad.evaluate(g, b)["out"]
    second = ad.evaluate(g, b)["out"]
    assert first.tobytes() == second.tobytes()


def test_backprop_sum_gives_ones():
    g = ad.Graph(inputs=("x",), build=lambda x: ad.reduce_sum(x))
    grads = ad.backprop(g, {"x": np.zeros((2, 3))})
    np.testing.assert_array_equal(grads["x"], np.ones((2, 3)))


def test_backprop_sum_of_squares():
    g = ad.Graph(inputs=("x",), build=lambda x: ad.reduce_sum(x * x))
    grads = ad.backprop(g, {"x": [1.0, 2.0, 3.0]})
    np.testing.assert_allclose(grads["x"], [2.0, 4.0, 6.0])


def test_backprop_constant_loss_zero_grads():
    g = ad.Graph(inputs=("x",),
                 build=lambda x: ad.Var(0.0) * ad.reduce_sum(x) + ad.Var(5.0))
    grads = ad.backprop(g, {"x": [1.0, 2.0]})
    np.testing.assert_array_equal(grads["x"], [0.0, 0.0])


def test_backprop_unreachable_param_zero():
    g = ad.Graph(inputs=("x",), params={"w": np.array([3.0, 4.0])},
                 build=lambda x, w: ad.reduce_sum(x))
    grads = ad.backprop(g, {"x": [1.0]})
    np.testing.assert_array_equal(grads["w"], [0.0, 0.0])


def test_backprop_nonscalar_loss_rejected():
    g = ad.Graph(inputs=("x",), build=lambda x: x * 2.0)
    with pytest.raises(ad.NonScalarLoss):
        ad.backprop(g, {"x": [1.0, 2.0]})


def test_matmul_shape_error_names_op():
    with pytest.raises(ad.ShapeMismatch, match="matmul"):
        ad.matmul(ad.Var(np.ones((2, 3))), ad.Var(np.ones((2, 3))))


def test_finite_difference_square():
    grad = ad.finite_difference_grad(lambda x: float(x ** 2), np.array(3.0), h=1e-5)
    assert grad == pytest.approx(6.0, abs=1e-8)


def test_finite_difference_linear_exact():
    grad = ad.finite_difference_grad(lambda x: float(5.0 * x), np.array(1.7))
    assert grad == pytest.approx(5.0, abs=1e-9)


def test_finite_difference_constant():
    grad = ad.finite_difference_grad(lambda x: 2.5, np.array([1.0, -2.0]))
    np.testing.assert_array_equal(grad, [0.0, 0.0])


def test_finite_difference_rejects_bad_step():
    with pytest.raises(ValueError):
        ad.finite_difference_grad(lambda x: float(x), np.array(1.0), h=0.0)


def test_masked_softmax_exact_zeros_and_unit_sum():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(4, 6)) * 50.0
    mask = np.array([True, True, False, True, False, True])
    out = ad.masked_softmax(ad.Var(x), mask).value
    assert (out[:, ~mask] == 0.0).all()
    np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-12)


def test_masked_softmax_rejects_all_masked_row():
    with pytest.raises(ad.ShapeMismatch):
        ad.masked_softmax(ad.Var(np.zeros((2, 3))), np.zeros(3, dtype=bool))


def test_dropout_identity_in_inference():
    x = ad.Var([1.0, 2.0, 3.0])
    out = ad.dropout(x, 0.5, None, training=False)
    np.testing.assert_array_equal(out.value, x.value)


def test_dropout_counter_rng_reproducible():
    a = ad.DropoutRng(7)
    b = ad.DropoutRng(7)
    for _ in range(3):
        np.testing.assert_array_equal(a.mask((4, 4), 0.3), b.mask((4, 4), 0.3))
    assert not np.array_equal(ad.DropoutRng(7).mask((64,), 0.3),
                              ad.DropoutRng(8).mask((64,), 0.3))


# ---------------------------------------------------------------------------
# Gradient checks for every primitive op at random points
# ---------------------------------------------------------------------------

def _check_unary(op, point, h=1e-5, tol=1e-4):
    x = ad.Var(point.copy())

    def loss():
        return ad.reduce_sum(op(x) * ad.Var(_weights(point.shape)))

    report = ad.gradient_report(loss, {"x": x}, h=h)
    assert report.max_rel_err < tol, f"{op.__name__}: rel err {report.max_rel_err}"


def _weights(shape):
    # fixed non-uniform weights so reductions do not hide per-element errors
    rng = np.random.default_rng(12345)
    return rng.normal(size=shape)


CASES_PER_OP = 100


@pytest.mark.parametrize("opname", [
    "add", "sub", "mul", "div", "matmul", "tanh", "sigmoid", "exp", "log",
    "maximum", "concat", "slice", "reduce_sum", "reduce_mean", "softmax",
    "masked_softmax", "relu", "sqrt", "transpose", "reshape",
])
def test_primitive_gradients_match_finite_differences(opname):
    rng = np.random.default_rng(hash(opname) % (2 ** 32))
    worst = 0.0
    for _ in range(CASES_PER_OP):
        a = rng.normal(size=(3, 4))
        b = rng.normal(size=(3, 4))
        if opname in ("log", "sqrt"):
            a = np.abs(a) + 0.5
        if opname == "div":
            b = np.where(np.abs(b) < 0.5, np.sign(b) + b, b)
        if opname in ("relu", "maximum"):
            # keep away from the kink so central differences are valid
            a = np.where(np.abs(a) < 0.05, a + 0.1, a)
            b = np.where(np.abs(a - b) < 0.05, b + 0.1, b)
        va, vb = ad.Var(a.copy()), ad.Var(b.copy())
        w = ad.Var(rng.normal(size=(3, 4)))

        if opname == "add":
            build = lambda: ad.reduce_sum(ad.add(va, vb) * w)
        elif opname == "sub":
            build = lambda: ad.reduce_sum(ad.sub(va, vb) * w)
        elif opname == "mul":
            build = lambda: ad.reduce_sum(ad.mul(va, vb) * w)
        elif opname == "div":
            build = lambda: ad.reduce_sum(ad.div(va, vb) * w)
        elif opname == "matmul":
            w2 = ad.Var(rng.normal(size=(3, 3)))
            build = lambda: ad.reduce_sum(ad.matmul(va, ad.transpose(vb)) * w2)
        elif opname == "tanh":
            build = lambda: ad.reduce_sum(ad.tanh(va) * w)
        elif opname == "sigmoid":
            build = lambda: ad.reduce_sum(ad.sigmoid(va) * w)
        elif opname == "exp":
            build = lambda: ad.reduce_sum(ad.exp(va) * w)
        elif opname == "log":
            build = lambda: ad.reduce_sum(ad.log(va) * w)
        elif opname == "sqrt":
            build = lambda: ad.reduce_sum(ad.sqrt(va) * w)
        elif opname == "maximum":
            build = lambda: ad.reduce_sum(ad.maximum(va, vb) * w)
        elif opname == "relu":
            build = lambda: ad.reduce_sum(ad.relu(va) * w)
        elif opname == "concat":
            build = lambda: ad.reduce_sum(ad.concat([va, vb], axis=0) *
                                          ad.Var(_weights((6, 4))))
        elif opname == "slice":
            build = lambda: ad.reduce_sum(va[1:, :2] * ad.Var(_weights((2, 2))))
        elif opname == "reduce_sum":
            build = lambda: ad.reduce_sum(ad.reduce_sum(va, axis=0) *
                                          ad.Var(_weights((4,))))
        elif opname == "reduce_mean":
            build = lambda: ad.reduce_sum(ad.reduce_mean(va, axis=1) *
                                          ad.Var(_weights((3,))))
        elif opname == "softmax":
            build = lambda: ad.reduce_sum(ad.softmax(va) * w)
        elif opname == "masked_softmax":
            mask = np.array([True, False, True, True])
            build = lambda: ad.reduce_sum(ad.masked_softmax(va, mask) * w)
        elif opname == "transpose":
            build = lambda: ad.reduce_sum(ad.transpose(va) * ad.Var(_weights((4, 3))))
        elif opname == "reshape":
            build = lambda: ad.reduce_sum(ad.reshape(va, (12,)) * ad.Var(_weights((12,))))
        else:  # pragma: no cover
            raise AssertionError(opname)

        params = {"a": va} if opname in ("slice", "reduce_sum", "reduce_mean",
                                         "softmax", "masked_softmax", "transpose",
                                         "reshape", "tanh", "sigmoid", "exp",
                                         "log", "sqrt", "relu") \
            else {"a": va, "b": vb}
        report = ad.gradient_report(build, params)
        worst = max(worst, report.max_rel_err)
    assert worst < 1e-4, f"{opname}: worst rel err {worst}"

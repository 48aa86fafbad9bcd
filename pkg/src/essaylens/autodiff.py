"""Dense tensors and reverse-mode automatic differentiation.

Values are numpy arrays (float64 by default, float32 selectable via the
``dtype`` argument of :class:`Var`). Every operation builds a dynamic tape:
a :class:`Var` remembers its parent nodes and a vector-Jacobian product
closure, so ``backward`` on a scalar walks the tape in reverse topological
order and accumulates gradients into ``Var.grad``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

DEFAULT_DTYPE = np.float64
_M64 = (1 << 64) - 1


class ShapeMismatch(ValueError):
    """Raised when an op receives inputs with incompatible shapes."""


class UnboundInput(ValueError):
    """Raised when evaluating a graph with a free input left unbound."""


class NonScalarLoss(ValueError):
    """Raised when backprop starts from a node that is not scalar-valued."""


class NonFiniteValue(ValueError):
    """Raised when a finite-output contract is violated (NaN/Inf observed)."""


def _coerce(value, dtype=None) -> np.ndarray:
    arr = np.asarray(value)
    if dtype is not None:
        return arr.astype(dtype)
    if arr.dtype == np.float32:
        return arr
    return arr.astype(DEFAULT_DTYPE)


class Var:
    """A node in the computation graph holding a dense array value."""

    __slots__ = ("value", "grad", "name", "_parents", "_vjp")

    def __init__(self, value, parents: tuple = (), vjp=None, name: str | None = None,
                 dtype=None):
        self.value = _coerce(value, dtype)
        self.grad: np.ndarray | None = None
        self.name = name
        self._parents = parents
        self._vjp = vjp

    @property
    def shape(self) -> tuple:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    def item(self) -> float:
        return float(self.value)

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Var(shape={self.value.shape}{tag})"

    # -- operator sugar ----------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return take(self, key)

    # -- backprop ----------------------------------------------------------
    def backward(self) -> None:
        """Reverse-accumulate gradients from this scalar into the whole tape.

        Overwrites ``grad`` on every node reached; nodes not on a path to
        this output keep ``grad = None``.
        """
        if self.value.size != 1:
            raise NonScalarLoss(
                f"backward requires a scalar loss, got shape {self.value.shape}")
        order = _topo_order(self)
        grads: dict[int, np.ndarray] = {id(self): np.ones_like(self.value)}
        for node in reversed(order):
            g = grads.get(id(node))
            if g is None:
                continue
            node.grad = g
            if node._vjp is None:
                continue
            for parent, pg in zip(node._parents, node._vjp(g)):
                if pg is None:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg


def _topo_order(root: Var) -> list[Var]:
    order: list[Var] = []
    seen: set[int] = set()
    stack: list[tuple[Var, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def as_var(x) -> Var:
    return x if isinstance(x, Var) else Var(x)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a gradient over axes that numpy broadcasting introduced."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


# ---------------------------------------------------------------------------
# Primitive ops
# ---------------------------------------------------------------------------

def add(a, b) -> Var:
    a, b = as_var(a), as_var(b)
    out = a.value + b.value
    return Var(out, (a, b), lambda g: (_unbroadcast(g, a.value.shape),
                                       _unbroadcast(g, b.value.shape)))


def sub(a, b) -> Var:
    a, b = as_var(a), as_var(b)
    out = a.value - b.value
    return Var(out, (a, b), lambda g: (_unbroadcast(g, a.value.shape),
                                       _unbroadcast(-g, b.value.shape)))


def mul(a, b) -> Var:
    a, b = as_var(a), as_var(b)
    out = a.value * b.value
    return Var(out, (a, b), lambda g: (_unbroadcast(g * b.value, a.value.shape),
                                       _unbroadcast(g * a.value, b.value.shape)))


def div(a, b) -> Var:
    a, b = as_var(a), as_var(b)
    out = a.value / b.value
    def vjp(g):
        return (_unbroadcast(g / b.value, a.value.shape),
                _unbroadcast(-g * a.value / (b.value ** 2), b.value.shape))
    return Var(out, (a, b), vjp)


def neg(a) -> Var:
    a = as_var(a)
    return Var(-a.value, (a,), lambda g: (-g,))


def matmul(a, b) -> Var:
    """Matrix product for 1-D/2-D operands with numpy semantics."""
    a, b = as_var(a), as_var(b)
    av, bv = a.value, b.value
    if av.ndim not in (1, 2) or bv.ndim not in (1, 2):
        raise ShapeMismatch(f"matmul supports 1-D/2-D operands, got {av.ndim}-D @ {bv.ndim}-D")
    if av.shape[-1] != bv.shape[0]:
        raise ShapeMismatch(f"matmul: inner dims differ, {av.shape} @ {bv.shape}")
    out = av @ bv

    def vjp(g):
        if av.ndim == 2 and bv.ndim == 2:
            return g @ bv.T, av.T @ g
        if av.ndim == 2 and bv.ndim == 1:
            return np.outer(g, bv), av.T @ g
        if av.ndim == 1 and bv.ndim == 2:
            return g @ bv.T, np.outer(av, g)
        return g * bv, g * av
    return Var(out, (a, b), vjp)


def tanh(a) -> Var:
    a = as_var(a)
    out = np.tanh(a.value)
    return Var(out, (a,), lambda g: (g * (1.0 - out * out),))


def sigmoid(a) -> Var:
    a = as_var(a)
    out = 1.0 / (1.0 + np.exp(-a.value))
    return Var(out, (a,), lambda g: (g * out * (1.0 - out),))


def relu(a) -> Var:
    a = as_var(a)
    keep = a.value > 0
    return Var(a.value * keep, (a,), lambda g: (g * keep,))


def exp(a) -> Var:
    a = as_var(a)
    out = np.exp(a.value)
    return Var(out, (a,), lambda g: (g * out,))


def log(a) -> Var:
    a = as_var(a)
    return Var(np.log(a.value), (a,), lambda g: (g / a.value,))


def sqrt(a) -> Var:
    a = as_var(a)
    out = np.sqrt(a.value)
    return Var(out, (a,), lambda g: (g * 0.5 / out,))


def maximum(a, b) -> Var:
    """Elementwise max; ties route the gradient to the first operand."""
    a, b = as_var(a), as_var(b)
    take_a = a.value >= b.value
    out = np.where(take_a, a.value, b.value)
    def vjp(g):
        return (_unbroadcast(g * take_a, a.value.shape),
                _unbroadcast(g * ~take_a, b.value.shape))
    return Var(out, (a, b), vjp)


def reduce_sum(a, axis=None, keepdims: bool = False) -> Var:
    a = as_var(a)
    out = a.value.sum(axis=axis, keepdims=keepdims)
    def vjp(g):
        g = np.asarray(g)
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.value.shape).copy(),)
    return Var(out, (a,), vjp)


def reduce_mean(a, axis=None, keepdims: bool = False) -> Var:
    a = as_var(a)
    out = a.value.mean(axis=axis, keepdims=keepdims)
    count = a.value.size if axis is None else a.value.shape[axis]
    def vjp(g):
        g = np.asarray(g)
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.value.shape) / count,)
    return Var(out, (a,), vjp)


def reshape(a, shape) -> Var:
    a = as_var(a)
    old = a.value.shape
    return Var(a.value.reshape(shape), (a,), lambda g: (g.reshape(old),))


def transpose(a) -> Var:
    a = as_var(a)
    if a.value.ndim != 2:
        raise ShapeMismatch(f"transpose expects a matrix, got shape {a.value.shape}")
    return Var(a.value.T, (a,), lambda g: (g.T,))


def take(a, key) -> Var:
    """Basic slicing/indexing with scatter-add gradient."""
    a = as_var(a)
    out = a.value[key]
    def vjp(g):
        full = np.zeros_like(a.value)
        np.add.at(full, key, g)
        return (full,)
    return Var(out, (a,), vjp)


def concat(parts: Sequence, axis: int = 0) -> Var:
    parts = [as_var(p) for p in parts]
    out = np.concatenate([p.value for p in parts], axis=axis)
    sizes = [p.value.shape[axis] for p in parts]
    splits = np.cumsum(sizes)[:-1]
    def vjp(g):
        return tuple(np.split(g, splits, axis=axis))
    return Var(out, tuple(parts), vjp)


def stack_rows(rows: Sequence) -> Var:
    """Stack 1-D Vars of equal length into a matrix (row per entry)."""
    return concat([reshape(r, (1, -1)) for r in rows], axis=0)


def masked_softmax(a, mask=None, axis: int = -1) -> Var:
    """Softmax along ``axis`` assigning exactly zero to masked positions.

    ``mask`` is a boolean array broadcastable to the input; True marks valid
    positions. Computed with max-subtraction over the valid entries only, so
    large logits never overflow.
    """
    a = as_var(a)
    x = a.value
    if mask is None:
        m = np.ones(x.shape, dtype=bool)
    else:
        m = np.broadcast_to(np.asarray(mask, dtype=bool), x.shape)
    if not m.any(axis=axis).all():
        raise ShapeMismatch("masked_softmax: some slice has no valid position")
    shifted = np.where(m, x, -np.inf)
    high = shifted.max(axis=axis, keepdims=True)
    e = np.where(m, np.exp(shifted - high), 0.0)
    total = e.sum(axis=axis, keepdims=True)
    out = e / total

    def vjp(g):
        inner = (g * out).sum(axis=axis, keepdims=True)
        return (out * (g - inner),)
    return Var(out, (a,), vjp)


def softmax(a, axis: int = -1) -> Var:
    return masked_softmax(a, None, axis=axis)


class DropoutRng:
    """Counter-based Philox masks: (seed, call index) fully determine a mask."""

    def __init__(self, seed: int):
        self.seed = int(seed) & _M64
        self.counter = 0

    def mask(self, shape, rate: float) -> np.ndarray:
        gen = np.random.Generator(np.random.Philox(key=[self.seed, self.counter]))
        self.counter += 1
        return gen.random(shape) >= rate


def dropout(a, rate: float, rng: DropoutRng | None, training: bool) -> Var:
    """Inverted dropout; identity when not training or rate == 0."""
    a = as_var(a)
    if not training or rate <= 0.0:
        return a
    if rng is None:
        raise ValueError("dropout in training mode needs a DropoutRng")
    keep = rng.mask(a.value.shape, rate) / (1.0 - rate)
    return mul(a, Var(keep))


# ---------------------------------------------------------------------------
# Named-graph facade
# ---------------------------------------------------------------------------

@dataclass
class Graph:
    """A named computation: free inputs plus trainable parameters.

    ``build`` receives one Var per input and per parameter (keyword args by
    name) and returns either a single Var or a dict of named output Vars.
    """

    inputs: tuple[str, ...]
    build: Callable[..., Var | dict[str, Var]]
    params: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        clash = set(self.inputs) & set(self.params)
        if clash:
            raise ValueError(f"names used as both input and parameter: {sorted(clash)}")


def _run_graph(graph: Graph, bindings: dict) -> tuple[dict[str, Var], dict[str, Var]]:
    missing = [n for n in graph.inputs if n not in bindings]
    if missing:
        raise UnboundInput(f"unbound inputs: {missing}")
    leaves = {n: Var(bindings[n], name=n) for n in graph.inputs}
    leaves.update({n: Var(v, name=n) for n, v in graph.params.items()})
    result = graph.build(**leaves)
    if isinstance(result, Var):
        result = {"out": result}
    return result, leaves


def evaluate(graph: Graph, bindings: dict) -> dict[str, np.ndarray]:
    """Run the graph against bound inputs; never mutates the bindings."""
    outputs, _ = _run_graph(graph, bindings)
    return {name: var.value.copy() for name, var in outputs.items()}


def backprop(graph: Graph, bindings: dict, loss: str | None = None) -> dict[str, np.ndarray]:
    """Gradients of a scalar output w.r.t. every input and parameter leaf.

    Leaves not on a path to the loss get zero gradients of their own shape.
    """
    outputs, leaves = _run_graph(graph, bindings)
    if loss is None:
        if len(outputs) != 1:
            raise ValueError("loss name required when the graph has several outputs")
        loss = next(iter(outputs))
    if loss not in outputs:
        raise KeyError(f"no output named {loss!r}")
    outputs[loss].backward()
    return {name: (leaf.grad if leaf.grad is not None else np.zeros_like(leaf.value))
            for name, leaf in leaves.items()}


# ---------------------------------------------------------------------------
# Gradient checking
# ---------------------------------------------------------------------------

def finite_difference_grad(f: Callable[[np.ndarray], float], x, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function, one coordinate at a time."""
    if h <= 0:
        raise ValueError("step h must be positive")
    x = np.asarray(x, dtype=DEFAULT_DTYPE)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        hi = float(f(x))
        flat[i] = orig - h
        lo = float(f(x))
        flat[i] = orig
        if not (math.isfinite(hi) and math.isfinite(lo)):
            raise NonFiniteValue(f"non-finite evaluation at coordinate {i}")
        gflat[i] = (hi - lo) / (2.0 * h)
    return grad


@dataclass
class GradientEntry:
    name: str
    analytic: np.ndarray
    numeric: np.ndarray
    max_rel_err: float


@dataclass
class GradientReport:
    entries: list[GradientEntry]

    @property
    def max_rel_err(self) -> float:
        return max((e.max_rel_err for e in self.entries), default=0.0)

    def worst(self) -> GradientEntry | None:
        return max(self.entries, key=lambda e: e.max_rel_err, default=None)


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom))


def gradient_report(loss_fn: Callable[[], Var], params: dict[str, Var],
                    h: float = 1e-5) -> GradientReport:
    """Compare tape gradients of ``loss_fn()`` against central differences.

    ``loss_fn`` must close over ``params`` and rebuild the loss from their
    current values on every call (numeric probing mutates them in place and
    restores afterwards).
    """
    loss = loss_fn()
    loss.backward()
    analytic = {name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.value))
                for name, p in params.items()}
    entries = []
    for name, p in params.items():
        def probe(x, _p=p):
            saved = _p.value
            _p.value = x
            try:
                return float(loss_fn().value)
            finally:
                _p.value = saved
        numeric = finite_difference_grad(probe, p.value.copy(), h)
        entries.append(GradientEntry(name, analytic[name], numeric,
                                     relative_error(analytic[name], numeric)))
    return GradientReport(entries)

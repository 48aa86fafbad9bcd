"""Parameterized layers for the scorer family.

All layers hold their parameters as :class:`~essaylens.autodiff.Var` leaves
and expose ``parameters()`` so optimizers and serialization can enumerate
them by name. Forward passes take a boolean validity mask alongside the
sequence; masked positions never influence any valid position's output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Var

ACTIVATIONS = ("identity", "tanh", "sigmoid", "relu", "softmax")


@dataclass
class ForwardCtx:
    """Per-call forward state: training toggles dropout, rng supplies masks."""
    training: bool = False
    dropout_rng: ad.DropoutRng | None = None


_EVAL = ForwardCtx(training=False)


def _glorot(rng: np.random.Generator, shape: tuple[int, int]) -> np.ndarray:
    fan_out, fan_in = shape
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def _apply_activation(x: Var, activation: str) -> Var:
    if activation == "identity":
        return x
    if activation == "tanh":
        return ad.tanh(x)
    if activation == "sigmoid":
        return ad.sigmoid(x)
    if activation == "relu":
        return ad.relu(x)
    if activation == "softmax":
        return ad.softmax(x, axis=-1)
    raise ValueError(f"unknown activation {activation!r}")


class Dense:
    """Affine map with optional activation: activation(W x + b)."""

    def __init__(self, rng: np.random.Generator, d_in: int, d_out: int,
                 activation: str = "identity"):
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.d_in = d_in
        self.d_out = d_out
        self.activation = activation
        self.W = Var(_glorot(rng, (d_out, d_in)))
        self.b = Var(np.zeros(d_out))

    def __call__(self, x: Var) -> Var:
        x = ad.as_var(x)
        if x.value.shape[-1] != self.d_in:
            raise ad.ShapeMismatch(
                f"dense: input dim {x.value.shape[-1]} != {self.d_in}")
        if x.ndim == 1:
            pre = ad.matmul(self.W, x) + self.b
        else:
            pre = ad.matmul(x, ad.transpose(self.W)) + self.b
        return _apply_activation(pre, self.activation)

    def parameters(self) -> dict[str, Var]:
        return {"W": self.W, "b": self.b}


class LayerNorm:
    """Per-position layer normalization over the last axis (eps 1e-6)."""

    def __init__(self, d: int, eps: float = 1e-6):
        self.d = d
        self.eps = eps
        self.gamma = Var(np.ones(d))
        self.beta = Var(np.zeros(d))

    def __call__(self, x: Var) -> Var:
        mean = ad.reduce_mean(x, axis=-1, keepdims=True)
        centered = x - mean
        var = ad.reduce_mean(centered * centered, axis=-1, keepdims=True)
        normed = centered / ad.sqrt(var + self.eps)
        return normed * self.gamma + self.beta

    def parameters(self) -> dict[str, Var]:
        return {"gamma": self.gamma, "beta": self.beta}


class Lstm:
    """Single-direction LSTM with per-gate weights (Hochreiter & Schmidhuber).

    Masked timesteps copy the previous (h, c) through unchanged, so padding
    appended after the last valid step can never change the final state.
    """

    def __init__(self, rng: np.random.Generator, d_in: int, hidden: int):
        self.d_in = d_in
        self.hidden = hidden
        self._gates = {}
        for gate in ("i", "f", "o", "g"):
            self._gates[gate] = {
                "W": Var(_glorot(rng, (hidden, d_in))),
                "U": Var(_glorot(rng, (hidden, hidden))),
                "b": Var(np.zeros(hidden)),
            }

    def _gate(self, name: str, x: Var, h: Var) -> Var:
        p = self._gates[name]
        return ad.matmul(p["W"], x) + ad.matmul(p["U"], h) + p["b"]

    def __call__(self, seq: Var, mask: np.ndarray) -> tuple[list[Var], Var, Var]:
        """Run the recurrence; returns (per-step hidden states, h_T, c_T)."""
        seq = ad.as_var(seq)
        if seq.value.ndim != 2 or seq.value.shape[-1] != self.d_in:
            raise ad.ShapeMismatch(
                f"lstm: expected (T, {self.d_in}), got {seq.value.shape}")
        T = seq.value.shape[0]
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (T,):
            raise ad.ShapeMismatch(f"lstm: mask shape {mask.shape} != ({T},)")
        h = Var(np.zeros(self.hidden))
        c = Var(np.zeros(self.hidden))
        states: list[Var] = []
        for t in range(T):
            if mask[t]:
                x_t = seq[t]
                i = ad.sigmoid(self._gate("i", x_t, h))
                f = ad.sigmoid(self._gate("f", x_t, h))
                o = ad.sigmoid(self._gate("o", x_t, h))
                g = ad.tanh(self._gate("g", x_t, h))
                c = f * c + i * g
                h = o * ad.tanh(c)
            states.append(h)
        return states, h, c

    def parameters(self) -> dict[str, Var]:
        out = {}
        for gate, p in self._gates.items():
            for k, v in p.items():
                out[f"{k}{gate}"] = v
        return out


class BiLstm:
    """Forward and reversed LSTM passes concatenated per timestep (T x 2H)."""

    def __init__(self, rng: np.random.Generator, d_in: int, hidden: int):
        self.fwd = Lstm(rng, d_in, hidden)
        self.bwd = Lstm(rng, d_in, hidden)
        self.hidden = hidden

    def __call__(self, seq: Var, mask: np.ndarray) -> tuple[list[Var], Var, Var]:
        """Returns (per-step concat states, final forward h, final backward h)."""
        seq = ad.as_var(seq)
        T = seq.value.shape[0]
        mask = np.asarray(mask, dtype=bool)
        fwd_states, h_f, _ = self.fwd(seq, mask)
        if T > 0:
            rev = seq[np.arange(T - 1, -1, -1)]
            bwd_rev, h_b, _ = self.bwd(rev, mask[::-1])
            bwd_states = bwd_rev[::-1]
        else:
            bwd_states, h_b = [], Var(np.zeros(self.hidden))
        states = [ad.concat([f, b]) for f, b in zip(fwd_states, bwd_states)]
        return states, h_f, h_b

    def parameters(self) -> dict[str, Var]:
        out = {f"fwd.{k}": v for k, v in self.fwd.parameters().items()}
        out.update({f"bwd.{k}": v for k, v in self.bwd.parameters().items()})
        return out


def scaled_dot_attention(q: Var, k: Var, v: Var, mask: np.ndarray | None = None) -> Var:
    """Single-head attention oracle: softmax(q kᵀ / sqrt(d)) v.

    ``mask`` marks valid key positions; masked keys get exactly zero weight.
    """
    q, k, v = ad.as_var(q), ad.as_var(k), ad.as_var(v)
    d = q.value.shape[-1]
    scores = ad.matmul(q, ad.transpose(k)) * (1.0 / np.sqrt(d))
    row_mask = None if mask is None else np.asarray(mask, dtype=bool)[None, :]
    weights = ad.masked_softmax(scores, row_mask, axis=-1)
    return ad.matmul(weights, v)


class MhaBlock:
    """One transformer encoder block over a (T, d_model) sequence.

    Scaled dot-product attention per head, concat, output projection, then
    the usual residual + layer-norm wrap and a position-wise feed-forward
    sublayer (relu, width d_ff). ``use_layer_norm=False`` strips the
    residual/norm wrap (the sublayer output passes through bare), and
    ``use_ffn=False`` removes the feed-forward sublayer entirely; both exist
    so tests can probe the attention core in isolation.
    """

    def __init__(self, rng: np.random.Generator, d_model: int, n_heads: int,
                 d_ff: int, dropout: float = 0.0, use_ffn: bool = True,
                 use_layer_norm: bool = True):
        if d_model % n_heads != 0:
            raise ad.ShapeMismatch(
                f"d_model {d_model} not divisible by n_heads {n_heads}")
        self.d_model = d_model
        self.n_heads = n_heads
        self.d_head = d_model // n_heads
        self.dropout = dropout
        self.use_ffn = use_ffn
        self.use_layer_norm = use_layer_norm
        self.wq = Var(_glorot(rng, (d_model, d_model)))
        self.wk = Var(_glorot(rng, (d_model, d_model)))
        self.wv = Var(_glorot(rng, (d_model, d_model)))
        self.wo = Var(_glorot(rng, (d_model, d_model)))
        self.bo = Var(np.zeros(d_model))
        self.ln1 = LayerNorm(d_model)
        self.ln2 = LayerNorm(d_model)
        self.ff1 = Dense(rng, d_model, d_ff, activation="relu")
        self.ff2 = Dense(rng, d_ff, d_model)

    def _attention(self, x: Var, mask: np.ndarray) -> Var:
        q = ad.matmul(x, ad.transpose(self.wq))
        k = ad.matmul(x, ad.transpose(self.wk))
        v = ad.matmul(x, ad.transpose(self.wv))
        key_mask = mask[None, :]
        scale = 1.0 / np.sqrt(self.d_head)
        heads = []
        for h in range(self.n_heads):
            sl = slice(h * self.d_head, (h + 1) * self.d_head)
            scores = ad.matmul(q[:, sl], ad.transpose(k[:, sl])) * scale
            weights = ad.masked_softmax(scores, key_mask, axis=-1)
            heads.append(ad.matmul(weights, v[:, sl]))
        merged = heads[0] if len(heads) == 1 else ad.concat(heads, axis=1)
        return ad.matmul(merged, ad.transpose(self.wo)) + self.bo

    def _wrap(self, x: Var, sub: Var, ln: LayerNorm, ctx: ForwardCtx) -> Var:
        sub = ad.dropout(sub, self.dropout, ctx.dropout_rng, ctx.training)
        if not self.use_layer_norm:
            return sub
        return ln(x + sub)

    def __call__(self, x: Var, mask: np.ndarray, ctx: ForwardCtx = _EVAL) -> Var:
        x = ad.as_var(x)
        if x.value.shape[-1] != self.d_model:
            raise ad.ShapeMismatch(
                f"mha: input width {x.value.shape[-1]} != d_model {self.d_model}")
        mask = np.asarray(mask, dtype=bool)
        if not mask.any():
            raise ad.ShapeMismatch("mha: mask has no valid position")
        out = self._wrap(x, self._attention(x, mask), self.ln1, ctx)
        if self.use_ffn:
            out = self._wrap(out, self.ff2(self.ff1(out)), self.ln2, ctx)
        return out

    def attention_weights(self, x: Var, mask: np.ndarray) -> np.ndarray:
        """Per-head attention matrices (n_heads, T, T), for inspection only."""
        x = ad.as_var(x)
        mask = np.asarray(mask, dtype=bool)
        q = ad.matmul(x, ad.transpose(self.wq)).value
        k = ad.matmul(x, ad.transpose(self.wk)).value
        scale = 1.0 / np.sqrt(self.d_head)
        mats = []
        for h in range(self.n_heads):
            sl = slice(h * self.d_head, (h + 1) * self.d_head)
            scores = q[:, sl] @ k[:, sl].T * scale
            mats.append(ad.masked_softmax(Var(scores), mask[None, :]).value)
        return np.stack(mats)

    def parameters(self) -> dict[str, Var]:
        out = {"wq": self.wq, "wk": self.wk, "wv": self.wv,
               "wo": self.wo, "bo": self.bo}
        if self.use_layer_norm:
            out.update({f"ln1.{k}": v for k, v in self.ln1.parameters().items()})
        if self.use_ffn:
            out.update({f"ff1.{k}": v for k, v in self.ff1.parameters().items()})
            out.update({f"ff2.{k}": v for k, v in self.ff2.parameters().items()})
            if self.use_layer_norm:
                out.update({f"ln2.{k}": v for k, v in self.ln2.parameters().items()})
        return out


def luong_score(query: Var, keys: Var, W: Var,
                mask: np.ndarray | None = None) -> tuple[Var, Var]:
    """Multiplicative attention: scores qᵀ W kᵢ, softmax weights, context Σ wᵢ kᵢ."""
    query, keys, W = ad.as_var(query), ad.as_var(keys), ad.as_var(W)
    if query.value.shape[-1] != W.value.shape[0] or W.value.shape[1] != keys.value.shape[-1]:
        raise ad.ShapeMismatch(
            f"luong: query {query.value.shape} / W {W.value.shape} / keys {keys.value.shape}")
    scores = ad.matmul(ad.matmul(query, W), ad.transpose(keys))
    weights = ad.masked_softmax(scores, mask, axis=-1)
    context = ad.matmul(weights, keys)
    return context, weights


class LuongPooling:
    """Attention pooling readout: a learned query attends over the sequence."""

    def __init__(self, rng: np.random.Generator, d: int):
        self.query = Var(rng.normal(0.0, 0.02, size=d))
        self.W = Var(_glorot(rng, (d, d)))

    def __call__(self, states: Var, mask: np.ndarray) -> Var:
        context, _ = luong_score(self.query, states, self.W,
                                 np.asarray(mask, dtype=bool))
        return context

    def parameters(self) -> dict[str, Var]:
        return {"query": self.query, "W": self.W}


def sinusoidal_encoding(length: int, d_model: int) -> np.ndarray:
    """Vaswani-style fixed position signal, one row per position."""
    pos = np.arange(length)[:, None].astype(float)
    i = np.arange(d_model)[None, :]
    angles = pos / np.power(10000.0, (2 * (i // 2)) / d_model)
    enc = np.zeros((length, d_model))
    enc[:, 0::2] = np.sin(angles[:, 0::2])
    enc[:, 1::2] = np.cos(angles[:, 1::2])
    return enc

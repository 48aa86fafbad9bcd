"""Model assembly, training, prediction, and the model container format.

Five architectures score an essay's sentence-embedding matrix:

- ``lstm``                projection -> LSTM -> two dense layers -> heads
- ``mha``                 projection + positions + CLS -> 1 attention block
- ``mha2``                same with 2 stacked blocks
- ``mha_blstm``           2 blocks -> BiLSTM over positions -> dense -> heads
- ``passage_conditioned`` shared 2-block trunk over essay and passage plus
                          quick essay statistics, concatenated -> dense

Every model ends in two heads: a softmax over the set's score classes and a
sigmoid regression scalar on the normalized score. Training blends both
losses with the logistic weight P.

Model container layout (save_model/load_model):

    bytes 0-3   magic b"ELM1"
    byte  4     format version (currently 1)
    bytes 5-8   header length, uint32 little-endian
    header      UTF-8 JSON: {"spec": ..., "provenance": ..., "extras": ...,
                "params": [{"name", "shape", "offset"} ...]}
    payload     raw float64 little-endian arrays, concatenated in header order
"""

from __future__ import annotations

import copy
import json
import math
import re
import struct
from dataclasses import asdict, dataclass, field

import numpy as np

from . import autodiff as ad
from . import objectives as obj
from .autodiff import Var
from .corpus import EssayRecord, Fold
from .hypergen import HyperParams
from .layers import (BiLstm, Dense, ForwardCtx, LuongPooling, Lstm, MhaBlock,
                     sinusoidal_encoding)
from .optimizers import SchedulerConfig, lr_at, make_optimizer

MODEL_KINDS = ("lstm", "mha", "mha2", "mha_blstm", "passage_conditioned")

_MAGIC = b"ELM1"
_FORMAT_VERSION = 1


class InvalidSpec(ValueError):
    pass


class UnembeddedRecord(ValueError):
    pass


class DegenerateFold(ValueError):
    pass


class CorruptContainer(ValueError):
    pass


class VersionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    hyper: HyperParams
    input_dim: int
    n_classes: int
    score_min: int
    score_max: int
    positional_encoding: bool = True

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise InvalidSpec(f"unknown model kind {self.kind!r}")
        if self.n_classes != self.score_max - self.score_min + 1:
            raise InvalidSpec("n_classes must equal score_max - score_min + 1")
        if self.n_classes < 2:
            raise InvalidSpec("need at least 2 score classes")
        if self.kind != "lstm" and self.hyper.d_model % self.hyper.n_heads != 0:
            raise InvalidSpec(
                f"d_model {self.hyper.d_model} not divisible by "
                f"n_heads {self.hyper.n_heads}")


@dataclass
class ScorePrediction:
    class_probs: np.ndarray
    regression: float
    expected_score: float
    regression_score: float
    blended: int


@dataclass
class TrainReport:
    train_loss: list[float] = field(default_factory=list)
    dev_loss: list[float] = field(default_factory=list)
    dev_qwk: list[float] = field(default_factory=list)
    best_epoch: int = 0
    epochs_run: int = 0
    stop_reason: str = ""


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def essay_statistics(sentences: list[str]) -> np.ndarray:
    """Quick features: sentence count, token count, mean sentence length,
    type-token ratio."""
    tokens = [t for s in sentences for t in re.findall(r"[A-Za-z0-9']+", s.lower())]
    n_sent = len(sentences)
    n_tok = len(tokens)
    mean_len = n_tok / n_sent if n_sent else 0.0
    ttr = len(set(tokens)) / n_tok if n_tok else 0.0
    return np.array([n_sent, n_tok, mean_len, ttr], dtype=float)


class _Heads:
    def __init__(self, rng, d_in: int, n_classes: int):
        self.classify = Dense(rng, d_in, n_classes, activation="softmax")
        self.regress = Dense(rng, d_in, 1, activation="sigmoid")

    def __call__(self, features: Var) -> tuple[Var, Var]:
        return self.classify(features), ad.reshape(self.regress(features), ())

    def parameters(self):
        out = {f"cls_head.{k}": v for k, v in self.classify.parameters().items()}
        out.update({f"reg_head.{k}": v for k, v in self.regress.parameters().items()})
        return out


class _Projection:
    """Input projection d_e -> d_model; identity skip when dims already match."""

    def __init__(self, rng, d_in: int, d_model: int):
        self.dense = Dense(rng, d_in, d_model) if d_in != d_model else None

    def __call__(self, x: Var) -> Var:
        return self.dense(x) if self.dense is not None else x

    def parameters(self):
        if self.dense is None:
            return {}
        return {f"proj.{k}": v for k, v in self.dense.parameters().items()}


class _LstmScorer:
    def __init__(self, rng, spec: ModelSpec):
        hp = spec.hyper
        d = hp.d_model
        self.proj = _Projection(rng, spec.input_dim, d)
        self.lstm = Lstm(rng, d, d)
        self.dense1 = Dense(rng, d, d, activation="relu")
        self.dense2 = Dense(rng, d, d, activation="relu")
        self.heads = _Heads(rng, d, spec.n_classes)
        self.dropout = hp.dropout

    def forward(self, emb: Var, mask: np.ndarray, ctx: ForwardCtx):
        x = self.proj(emb)
        x = ad.dropout(x, self.dropout, ctx.dropout_rng, ctx.training)
        _, h, _ = self.lstm(x, mask)
        h = ad.dropout(h, self.dropout, ctx.dropout_rng, ctx.training)
        h = self.dense1(h)
        h = self.dense2(h)
        return self.heads(h)

    def parameters(self):
        out = dict(self.proj.parameters())
        out.update({f"lstm.{k}": v for k, v in self.lstm.parameters().items()})
        out.update({f"dense1.{k}": v for k, v in self.dense1.parameters().items()})
        out.update({f"dense2.{k}": v for k, v in self.dense2.parameters().items()})
        out.update(self.heads.parameters())
        return out


class _AttentionTrunk:
    """Shared front end of the attention models: projection, positional
    encoding, learned CLS vector, and a stack of attention blocks."""

    def __init__(self, rng, spec: ModelSpec, n_blocks: int):
        hp = spec.hyper
        d = hp.d_model
        self.proj = _Projection(rng, spec.input_dim, d)
        self.cls = Var(rng.normal(0.0, 0.02, size=d))
        self.blocks = [MhaBlock(rng, d, hp.n_heads, hp.d_ff, dropout=hp.dropout)
                       for _ in range(n_blocks)]
        self.positional = spec.positional_encoding
        self.dropout = hp.dropout
        self.d_model = d

    def __call__(self, emb: Var, mask: np.ndarray, ctx: ForwardCtx):
        """Returns (per-position states including CLS at row 0, padded mask)."""
        x = self.proj(emb)
        t = x.value.shape[0]
        if self.positional:
            x = x + sinusoidal_encoding(t, self.d_model)
        x = ad.concat([ad.reshape(self.cls, (1, -1)), x], axis=0)
        full_mask = np.concatenate([[True], np.asarray(mask, dtype=bool)])
        x = ad.dropout(x, self.dropout, ctx.dropout_rng, ctx.training)
        for block in self.blocks:
            x = block(x, full_mask, ctx)
        return x, full_mask

    def parameters(self):
        out = dict(self.proj.parameters())
        out["cls"] = self.cls
        for i, block in enumerate(self.blocks):
            out.update({f"block{i}.{k}": v for k, v in block.parameters().items()})
        return out


class _MhaScorer:
    def __init__(self, rng, spec: ModelSpec, n_blocks: int):
        hp = spec.hyper
        self.trunk = _AttentionTrunk(rng, spec, n_blocks)
        self.readout = hp.readout
        self.pool = (LuongPooling(rng, hp.d_model) if hp.readout == "luong"
                     else None)
        self.heads = _Heads(rng, hp.d_model, spec.n_classes)
        self.dropout = hp.dropout

    def forward(self, emb: Var, mask: np.ndarray, ctx: ForwardCtx):
        states, full_mask = self.trunk(emb, mask, ctx)
        if self.pool is not None:
            features = self.pool(states, full_mask)
        else:
            features = states[0]
        features = ad.dropout(features, self.dropout, ctx.dropout_rng, ctx.training)
        return self.heads(features)

    def parameters(self):
        out = {f"trunk.{k}": v for k, v in self.trunk.parameters().items()}
        if self.pool is not None:
            out.update({f"pool.{k}": v for k, v in self.pool.parameters().items()})
        out.update(self.heads.parameters())
        return out


class _MhaBlstmScorer:
    def __init__(self, rng, spec: ModelSpec):
        hp = spec.hyper
        d = hp.d_model
        if d % 2 != 0:
            raise InvalidSpec("mha_blstm needs an even d_model")
        self.trunk = _AttentionTrunk(rng, spec, n_blocks=2)
        self.bilstm = BiLstm(rng, d, d // 2)
        # concat of the two final states (2 * H) and mean-pooled states (2H)
        self.dense = Dense(rng, 2 * d, d, activation="relu")
        self.heads = _Heads(rng, d, spec.n_classes)
        self.dropout = hp.dropout

    def forward(self, emb: Var, mask: np.ndarray, ctx: ForwardCtx):
        states, full_mask = self.trunk(emb, mask, ctx)
        per_step, h_f, h_b = self.bilstm(states, full_mask)
        valid = [s for s, ok in zip(per_step, full_mask) if ok]
        mean_pooled = ad.reduce_mean(ad.stack_rows(valid), axis=0)
        features = ad.concat([h_f, h_b, mean_pooled])
        features = ad.dropout(features, self.dropout, ctx.dropout_rng, ctx.training)
        features = self.dense(features)
        return self.heads(features)

    def parameters(self):
        out = {f"trunk.{k}": v for k, v in self.trunk.parameters().items()}
        out.update({f"bilstm.{k}": v for k, v in self.bilstm.parameters().items()})
        out.update({f"dense.{k}": v for k, v in self.dense.parameters().items()})
        out.update(self.heads.parameters())
        return out


N_STATS = 4


class _PassageScorer:
    """Dual encoder: one attention trunk reads the essay and, with the same
    weights, the source passage; quick essay statistics join the readouts."""

    def __init__(self, rng, spec: ModelSpec):
        hp = spec.hyper
        d = hp.d_model
        self.trunk = _AttentionTrunk(rng, spec, n_blocks=2)
        self.dense = Dense(rng, 2 * d + N_STATS, d, activation="relu")
        self.heads = _Heads(rng, d, spec.n_classes)
        self.dropout = hp.dropout
        # z-scoring constants for the statistics, fit during training
        self.stats_mean = np.zeros(N_STATS)
        self.stats_std = np.ones(N_STATS)

    def forward(self, emb: Var, mask: np.ndarray, ctx: ForwardCtx,
                passage: Var, passage_mask: np.ndarray, stats: np.ndarray):
        essay_states, _ = self.trunk(emb, mask, ctx)
        passage_states, _ = self.trunk(passage, passage_mask, ctx)
        z = (np.asarray(stats, dtype=float) - self.stats_mean) / self.stats_std
        features = ad.concat([essay_states[0], passage_states[0], Var(z)])
        features = ad.dropout(features, self.dropout, ctx.dropout_rng, ctx.training)
        features = self.dense(features)
        return self.heads(features)

    def parameters(self):
        out = {f"trunk.{k}": v for k, v in self.trunk.parameters().items()}
        out.update({f"dense.{k}": v for k, v in self.dense.parameters().items()})
        out.update(self.heads.parameters())
        return out


class ScoreModel:
    """A scorer plus its spec and provenance; treat as immutable once trained."""

    def __init__(self, spec: ModelSpec, seed: int):
        self.spec = spec
        self.seed = seed
        rng = np.random.default_rng(seed)
        if spec.kind == "lstm":
            self.net = _LstmScorer(rng, spec)
        elif spec.kind == "mha":
            self.net = _MhaScorer(rng, spec, n_blocks=1)
        elif spec.kind == "mha2":
            self.net = _MhaScorer(rng, spec, n_blocks=2)
        elif spec.kind == "mha_blstm":
            self.net = _MhaBlstmScorer(rng, spec)
        else:
            self.net = _PassageScorer(rng, spec)
        self.provenance: dict = {"seed": seed}
        # default passage context for passage_conditioned prediction
        self.passage_embedding: np.ndarray | None = None
        self.passage_sentences: list[str] | None = None

    def parameters(self) -> dict[str, Var]:
        return self.net.parameters()

    def forward(self, emb: Var, mask: np.ndarray, ctx: ForwardCtx,
                sentences: list[str] | None = None,
                passage: Var | None = None,
                passage_mask: np.ndarray | None = None):
        if self.spec.kind != "passage_conditioned":
            return self.net.forward(emb, mask, ctx)
        if sentences is None:
            raise InvalidSpec(
                "passage_conditioned scoring needs the essay's sentence text "
                "for its statistics features")
        if passage is None:
            if self.passage_embedding is None:
                raise InvalidSpec("passage_conditioned scoring needs a passage")
            passage = Var(self.passage_embedding)
            passage_mask = np.ones(self.passage_embedding.shape[0], dtype=bool)
        if passage_mask is None:
            passage_mask = np.ones(passage.value.shape[0], dtype=bool)
        stats = essay_statistics(sentences)
        return self.net.forward(emb, mask, ctx, passage, passage_mask, stats)


def build_model(spec: ModelSpec, seed: int) -> ScoreModel:
    return ScoreModel(spec, seed)


def parameter_count(model: ScoreModel) -> int:
    return sum(p.value.size for p in model.parameters().values())


def predict(model: ScoreModel, embedding: np.ndarray,
            mask: np.ndarray | None = None,
            sentences: list[str] | None = None,
            passage: np.ndarray | None = None) -> ScorePrediction:
    """Score one embedded essay; pure, no state mutated.

    The classification head's expectation and the rescaled regression output
    are blended with the classification weight P and rounded to an integer
    inside the set's score range.
    """
    embedding = np.asarray(embedding, dtype=float)
    if embedding.ndim != 2 or embedding.shape[1] != model.spec.input_dim:
        raise ad.ShapeMismatch(
            f"essay embedding {embedding.shape} does not match model input "
            f"dim {model.spec.input_dim}")
    if mask is None:
        mask = np.ones(embedding.shape[0], dtype=bool)
    probs, reg = model.forward(
        Var(embedding), np.asarray(mask, dtype=bool), ForwardCtx(training=False),
        sentences=sentences,
        passage=None if passage is None else Var(np.asarray(passage, dtype=float)))
    spec = model.spec
    p = probs.value
    expected = float(np.sum(p * (spec.score_min + np.arange(spec.n_classes))))
    reg_value = float(reg.value)
    reg_score = spec.score_min + reg_value * (spec.score_max - spec.score_min)
    blend_p = spec.hyper.P
    blended = _round_half_up(blend_p * expected + (1.0 - blend_p) * reg_score)
    blended = int(min(max(blended, spec.score_min), spec.score_max))
    return ScorePrediction(class_probs=p.copy(), regression=reg_value,
                           expected_score=expected, regression_score=reg_score,
                           blended=blended)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

def _check_embedded(record: EssayRecord):
    if record.embedding is None:
        raise UnembeddedRecord(f"record {record.essay_id} has no embedding")


def _batch_loss(model: ScoreModel, batch: list[EssayRecord], hp: HyperParams,
                weights: obj.LossWeights, ctx: ForwardCtx) -> Var:
    prob_rows = []
    reg_items = []
    for record in batch:
        probs, reg = model.forward(Var(record.embedding),
                                   np.ones(record.embedding.shape[0], dtype=bool),
                                   ctx, sentences=record.sentences)
        prob_rows.append(probs)
        reg_items.append(ad.reshape(reg, (1,)))
    preds = ad.stack_rows(prob_rows)
    regs = ad.concat(reg_items)
    labels = np.array([r.score - model.spec.score_min for r in batch])
    targets = np.array([r.normalized for r in batch])
    if hp.class_loss_kind == "ordinal_kappa":
        class_loss = obj.weighted_kappa_loss(preds, labels,
                                             smoothing=hp.label_smoothing)
    else:
        smooth = obj.smooth_labels(labels, model.spec.n_classes,
                                   hp.label_smoothing)
        class_loss = obj.categorical_cross_entropy(preds, smooth)
    mse = obj.mean_squared_error(regs, targets)
    return obj.combined_loss(class_loss, mse, weights)


def _mix_batches(batches: list[list[int]], label_of) -> list[list[int]]:
    """Merge any batch with fewer than two distinct labels into a neighbor.

    The kappa loss is undefined on single-class batches; merging keeps the
    epoch deterministic given the shuffle. Terminates because every merge
    drops the batch count by one, and the whole split has >= 2 labels.
    """
    i = 0
    while i < len(batches):
        if len({label_of(j) for j in batches[i]}) >= 2:
            i += 1
        elif i + 1 < len(batches):
            batches[i + 1] = batches[i] + batches[i + 1]
            batches.pop(i)
        elif i > 0:
            batches[i - 1] = batches[i - 1] + batches.pop(i)
            i -= 1
        else:
            break
    return batches


def _dev_qwk(model: ScoreModel, records, dev_idx) -> float:
    from .evaluation import quadratic_weighted_kappa
    truth = []
    preds = []
    for i in dev_idx:
        record = records[i]
        pred = predict(model, record.embedding, sentences=record.sentences)
        truth.append(record.score)
        preds.append(pred.blended)
    return quadratic_weighted_kappa(truth, preds, model.spec.score_min,
                                    model.spec.score_max)


def _snapshot(model: ScoreModel) -> dict[str, np.ndarray]:
    return {k: v.value.copy() for k, v in model.parameters().items()}


def _restore(model: ScoreModel, snapshot: dict[str, np.ndarray]) -> None:
    for k, v in model.parameters().items():
        v.value = snapshot[k].copy()


def train(model: ScoreModel, records, fold: Fold,
          hp: HyperParams | None = None) -> tuple[ScoreModel, TrainReport]:
    """Mini-batch training with early stopping on dev QWK.

    Returns a model carrying the best-dev-QWK parameter snapshot plus the
    per-epoch report. Only the fold's train and dev indices are ever read.
    """
    hp = hp or model.spec.hyper
    for i in (*fold.train, *fold.dev):
        _check_embedded(records[i])
    train_labels = {records[i].score for i in fold.train}
    if len(train_labels) < 2:
        raise DegenerateFold("training split has a single score class")
    if hp.class_loss_kind == "ordinal_kappa" and \
            len({records[i].score for i in fold.dev}) < 2:
        raise DegenerateFold("dev split has a single score class")

    weights = obj.LossWeights(P=hp.P, upper=obj.BLEND_UPPER, floor=obj.BLEND_FLOOR,
                              slope=obj.BLEND_SLOPE,
                              n_classes=model.spec.n_classes, mean_classes=0.0)
    params = model.parameters()
    optimizer = make_optimizer(hp.optimizer, params, alpha=hp.alpha)
    sched = SchedulerConfig(hp.d_model, hp.warmup_steps) if hp.use_schedule else None
    shuffle_rng = np.random.default_rng(hp.seed)
    drop_rng = ad.DropoutRng(hp.seed)
    ctx = ForwardCtx(training=True, dropout_rng=drop_rng)

    report = TrainReport()
    best_qwk = -np.inf
    best_snapshot = _snapshot(model)
    stale = 0
    step = 0
    for epoch in range(1, hp.epochs + 1):
        order = [fold.train[i] for i in shuffle_rng.permutation(len(fold.train))]
        batches = [order[i:i + hp.batch_size]
                   for i in range(0, len(order), hp.batch_size)]
        if hp.class_loss_kind == "ordinal_kappa":
            batches = _mix_batches(batches, lambda j: records[j].score)
        elif len(batches) > 1 and len(batches[-1]) < 1:
            batches.pop()
        epoch_losses = []
        for batch_idx in batches:
            step += 1
            for name, p in params.items():
                p.grad = None
            loss = _batch_loss(model, [records[i] for i in batch_idx], hp,
                               weights, ctx)
            loss.backward()
            lr = lr_at(sched, step) if sched else None
            optimizer.step(lr=lr)
            epoch_losses.append(float(loss.value))

        report.train_loss.append(float(np.mean(epoch_losses)))
        eval_ctx = ForwardCtx(training=False)
        dev_loss = _batch_loss(model, [records[i] for i in fold.dev], hp,
                               weights, eval_ctx)
        report.dev_loss.append(float(dev_loss.value))
        qwk = _dev_qwk(model, records, fold.dev)
        report.dev_qwk.append(qwk)
        report.epochs_run = epoch

        if qwk > best_qwk:
            best_qwk = qwk
            best_snapshot = _snapshot(model)
            report.best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= hp.patience:
                report.stop_reason = (
                    f"dev QWK did not improve for {hp.patience} epochs")
                break
    else:
        report.stop_reason = "completed all epochs"

    best = build_model(model.spec, model.seed)
    _restore(best, best_snapshot)
    if model.spec.kind == "passage_conditioned":
        best.net.stats_mean = model.net.stats_mean.copy()
        best.net.stats_std = model.net.stats_std.copy()
        best.passage_embedding = model.passage_embedding
        best.passage_sentences = model.passage_sentences
    best.provenance = {
        "seed": hp.seed,
        "epochs_run": report.epochs_run,
        "best_epoch": report.best_epoch,
        "best_dev_qwk": best_qwk if np.isfinite(best_qwk) else None,
        "optimizer": hp.optimizer,
        "class_loss": hp.class_loss_kind,
    }
    return best, report


def fit_passage_context(model: ScoreModel, records, train_idx,
                        passage_embedding: np.ndarray,
                        passage_sentences: list[str]) -> None:
    """Attach the passage branch input and fit the statistics normalizer."""
    stats = np.stack([essay_statistics(records[i].sentences or [])
                      for i in train_idx])
    model.net.stats_mean = stats.mean(axis=0)
    std = stats.std(axis=0)
    model.net.stats_std = np.where(std > 1e-9, std, 1.0)
    model.passage_embedding = np.asarray(passage_embedding, dtype=float)
    model.passage_sentences = list(passage_sentences)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def save_model(model: ScoreModel) -> bytes:
    params = model.parameters()
    entries = []
    payload = bytearray()
    offset = 0
    for name, p in params.items():
        arr = np.ascontiguousarray(p.value, dtype="<f8")
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        payload.extend(arr.tobytes())
        offset += arr.nbytes

    extras: dict = {
        "provenance": model.provenance,
        "passage_sentences": model.passage_sentences,
    }
    if model.passage_embedding is not None:
        extras["passage_embedding"] = model.passage_embedding.tolist()
    if model.spec.kind == "passage_conditioned":
        extras["stats_mean"] = model.net.stats_mean.tolist()
        extras["stats_std"] = model.net.stats_std.tolist()

    spec_dict = asdict(model.spec)
    header = json.dumps({"spec": spec_dict, "seed": model.seed,
                         "extras": extras, "params": entries}).encode("utf-8")
    return b"".join([_MAGIC, bytes([_FORMAT_VERSION]),
                     struct.pack("<I", len(header)), header, bytes(payload)])


def load_model(data: bytes) -> ScoreModel:
    if len(data) < 9 or data[:4] != _MAGIC:
        raise CorruptContainer("not a model container (bad magic)")
    version = data[4]
    if version != _FORMAT_VERSION:
        raise VersionMismatch(
            f"container format {version} unsupported (expected {_FORMAT_VERSION})")
    header_len = struct.unpack("<I", data[5:9])[0]
    header_end = 9 + header_len
    if len(data) < header_end:
        raise CorruptContainer("truncated header")
    try:
        header = json.loads(data[9:header_end].decode("utf-8"))
        spec_dict = dict(header["spec"])
        spec_dict["hyper"] = HyperParams(**spec_dict["hyper"])
        spec = ModelSpec(**spec_dict)
        entries = header["params"]
        seed = header["seed"]
        extras = header.get("extras", {})
    except (KeyError, TypeError, ValueError, UnicodeDecodeError) as exc:
        raise CorruptContainer(f"unreadable header: {exc}") from exc

    model = build_model(spec, seed)
    params = model.parameters()
    if sorted(params) != sorted(e["name"] for e in entries):
        raise CorruptContainer("parameter inventory does not match the spec")
    payload = data[header_end:]
    for entry in entries:
        shape = tuple(entry["shape"])
        size = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        end = start + size * 8
        if end > len(payload):
            raise CorruptContainer("truncated parameter payload")
        arr = np.frombuffer(payload[start:end], dtype="<f8").reshape(shape)
        params[entry["name"]].value = arr.astype(np.float64).copy()

    model.provenance = extras.get("provenance", {"seed": seed})
    if extras.get("passage_embedding") is not None:
        model.passage_embedding = np.asarray(extras["passage_embedding"], dtype=float)
    if extras.get("passage_sentences") is not None:
        model.passage_sentences = list(extras["passage_sentences"])
    if spec.kind == "passage_conditioned":
        model.net.stats_mean = np.asarray(extras["stats_mean"], dtype=float)
        model.net.stats_std = np.asarray(extras["stats_std"], dtype=float)
    return model


def clone_model(model: ScoreModel) -> ScoreModel:
    """Deep copy with independent parameter arrays."""
    twin = build_model(model.spec, model.seed)
    _restore(twin, _snapshot(model))
    twin.provenance = copy.deepcopy(model.provenance)
    if model.passage_embedding is not None:
        twin.passage_embedding = model.passage_embedding.copy()
        twin.passage_sentences = list(model.passage_sentences or [])
    if model.spec.kind == "passage_conditioned":
        twin.net.stats_mean = model.net.stats_mean.copy()
        twin.net.stats_std = model.net.stats_std.copy()
    return twin

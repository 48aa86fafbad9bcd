"""Hyperparameter generation from essay-set metadata.

Every mapping below derives a training setting from the set's observation
count, class count, and prompt type. The exact formulas are this project's
own calibration (kept in one overridable table, :class:`HypergenConfig`);
what is fixed is which metadata each hyperparameter depends on and the
logistic form of the loss weight.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

from .corpus import EssaySetMeta, mean_class_count
from .objectives import classification_weight

CLASS_LOSS_KINDS = ("ordinal_kappa", "cce")
READOUTS = ("cls", "luong")
OPTIMIZERS = ("adamax", "adam")


@dataclass(frozen=True)
class HyperParams:
    P: float
    dropout: float
    d_ff: int
    n_heads: int
    batch_size: int
    epochs: int
    patience: int
    d_model: int = 512
    use_schedule: bool = True
    warmup_steps: int = 4000
    class_loss_kind: str = "ordinal_kappa"
    readout: str = "cls"
    seed: int = 0
    label_smoothing: float = 0.1
    optimizer: str = "adamax"
    alpha: float = 0.001

    def __post_init__(self):
        if not 0.0 < self.P < 1.0:
            raise ValueError(f"P must be in (0, 1), got {self.P}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.d_model % self.n_heads != 0:
            raise ValueError(
                f"d_model {self.d_model} not divisible by n_heads {self.n_heads}")
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2 (kappa loss needs a batch)")
        if self.patience > self.epochs:
            raise ValueError("patience cannot exceed epochs")
        if self.class_loss_kind not in CLASS_LOSS_KINDS:
            raise ValueError(f"unknown class_loss_kind {self.class_loss_kind!r}")
        if self.readout not in READOUTS:
            raise ValueError(f"unknown readout {self.readout!r}")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"unknown optimizer {self.optimizer!r}")

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(asdict(self), indent=indent)


@dataclass(frozen=True)
class HypergenConfig:
    """The metadata-to-hyperparameter table; override any entry via JSON."""
    dropout_base: float = 0.2
    dropout_per_inverse_obs: float = 0.1    # coefficient on 1000 / n_obs
    dropout_per_class_share: float = 0.2    # coefficient on n_classes / 100
    dropout_min: float = 0.1
    dropout_max: float = 0.6
    d_ff_min: int = 64
    d_ff_per_class: int = 8
    heads_source_dependent: int = 8
    heads_independent: int = 4
    batch_obs_divisor: int = 100
    batch_min: int = 8
    batch_max: int = 64
    epochs_base: float = 30.0
    epochs_per_class: float = 0.5
    epochs_obs_budget: float = 20000.0
    epochs_min: int = 20
    epochs_max: int = 120
    patience_min: int = 3
    patience_divisor: int = 6
    d_model: int = 512
    warmup_steps: int = 4000
    use_schedule: bool = True
    class_loss_kind: str = "ordinal_kappa"
    readout: str = "cls"
    optimizer: str = "adamax"
    label_smoothing: float = 0.1
    alpha: float = 0.001
    seed: int = 0

    @classmethod
    def from_json(cls, source) -> "HypergenConfig":
        data = json.load(source) if hasattr(source, "read") else json.loads(source)
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown hypergen config keys: {sorted(extra)}")
        return cls(**data)


DEFAULT_CONFIG = HypergenConfig()


def nearest_power_of_two(x: float) -> int:
    """Power of two closest to x on a log scale (ties round up)."""
    if x <= 1:
        return 1
    return 2 ** round(math.log2(x))


def _clamp(x, lo, hi):
    return min(max(x, lo), hi)


def generate_hyperparams(meta: EssaySetMeta,
                         collection_mean_classes: float | None = None,
                         config: HypergenConfig = DEFAULT_CONFIG) -> HyperParams:
    """Deterministic metadata-to-hyperparameter mapping for one essay set.

    Smaller corpora and wider label ranges get more dropout; feed-forward
    width tracks label granularity; source-dependent prompts get more
    attention heads; batch size follows corpus size in powers of two.
    """
    n_obs = meta.essay_count
    n_classes = meta.n_classes
    mean_classes = (collection_mean_classes if collection_mean_classes is not None
                    else mean_class_count())

    p = classification_weight(n_classes, mean_classes).P
    dropout = _clamp(config.dropout_base
                     + config.dropout_per_inverse_obs * (1000.0 / n_obs)
                     + config.dropout_per_class_share * (n_classes / 100.0),
                     config.dropout_min, config.dropout_max)
    d_ff = nearest_power_of_two(max(config.d_ff_min,
                                    config.d_ff_per_class * n_classes))
    n_heads = (config.heads_source_dependent if meta.source_dependent
               else config.heads_independent)
    batch = _clamp(nearest_power_of_two(round(n_obs / config.batch_obs_divisor)),
                   config.batch_min, config.batch_max)
    epochs = int(_clamp(round(config.epochs_base
                              + config.epochs_per_class * n_classes
                              + config.epochs_obs_budget / n_obs),
                        config.epochs_min, config.epochs_max))
    patience = max(config.patience_min, epochs // config.patience_divisor)
    return HyperParams(
        P=p, dropout=dropout, d_ff=d_ff, n_heads=n_heads, batch_size=batch,
        epochs=epochs, patience=patience, d_model=config.d_model,
        use_schedule=config.use_schedule, warmup_steps=config.warmup_steps,
        class_loss_kind=config.class_loss_kind, readout=config.readout,
        seed=config.seed, label_smoothing=config.label_smoothing,
        optimizer=config.optimizer, alpha=config.alpha,
    )

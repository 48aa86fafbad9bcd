"""Adam and AdaMax parameter updates plus the warmup learning-rate schedule.

Both optimizers mutate the parameter Vars they were given in place; one
optimizer instance belongs to exactly one model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import ShapeMismatch, Var


@dataclass(frozen=True)
class SchedulerConfig:
    d_model: int
    warmup_steps: int

    def __post_init__(self):
        if self.d_model < 1 or self.warmup_steps < 1:
            raise ValueError("d_model and warmup_steps must be >= 1")


def lr_at(cfg: SchedulerConfig, step_num: int) -> float:
    """d_model^-0.5 * min(step^-0.5, step * warmup^-1.5).

    Rises linearly to the peak at step == warmup, then decays as step^-0.5.
    """
    if step_num < 1:
        raise ValueError(f"step_num must be >= 1, got {step_num}")
    warm = step_num * cfg.warmup_steps ** -1.5
    return cfg.d_model ** -0.5 * min(step_num ** -0.5, warm)


class _MomentOptimizer:
    def __init__(self, params: dict[str, Var], alpha: float = 0.001,
                 beta1: float = 0.9, beta2: float = 0.999):
        self.params = params
        self.alpha = alpha
        self.beta1 = beta1
        self.beta2 = beta2
        self.t = 0
        self.m = {k: np.zeros_like(p.value) for k, p in params.items()}

    def _gather_grads(self, grads):
        if grads is None:
            grads = {k: p.grad for k, p in self.params.items()}
        out = {}
        for name, p in self.params.items():
            g = grads.get(name)
            if g is None:
                g = np.zeros_like(p.value)
            g = np.asarray(g)
            if g.shape != p.value.shape:
                raise ShapeMismatch(
                    f"gradient for {name!r}: {g.shape} != {p.value.shape}")
            out[name] = g
        return out


class Adam(_MomentOptimizer):
    """Bias-corrected Adam (element eps 1e-8)."""

    def __init__(self, params, alpha=0.001, beta1=0.9, beta2=0.999, eps=1e-8):
        super().__init__(params, alpha, beta1, beta2)
        self.eps = eps
        self.v = {k: np.zeros_like(p.value) for k, p in params.items()}

    def step(self, grads: dict[str, np.ndarray] | None = None,
             lr: float | None = None) -> None:
        grads = self._gather_grads(grads)
        self.t += 1
        alpha = self.alpha if lr is None else lr
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for name, p in self.params.items():
            g = grads[name]
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * g * g
            m_hat = self.m[name] / bc1
            v_hat = self.v[name] / bc2
            p.value = p.value - alpha * m_hat / (np.sqrt(v_hat) + self.eps)


class AdaMax(_MomentOptimizer):
    """Adam with an elementwise infinity-norm accumulator u.

        m_t = beta1 * m_{t-1} + (1 - beta1) * g_t
        u_t = max(beta2 * u_{t-1}, |g_t|)
        theta_t = theta_{t-1} - (alpha / (1 - beta1^t)) * m_t / u_t

    u is floored at 1e-12 in the division so the first steps before any
    nonzero gradient stay finite.
    """

    U_FLOOR = 1e-12

    def __init__(self, params, alpha=0.001, beta1=0.9, beta2=0.999):
        super().__init__(params, alpha, beta1, beta2)
        self.u = {k: np.zeros_like(p.value) for k, p in params.items()}

    def step(self, grads: dict[str, np.ndarray] | None = None,
             lr: float | None = None) -> None:
        grads = self._gather_grads(grads)
        self.t += 1
        alpha = self.alpha if lr is None else lr
        scale = alpha / (1.0 - self.beta1 ** self.t)
        for name, p in self.params.items():
            g = grads[name]
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            self.u[name] = np.maximum(self.beta2 * self.u[name], np.abs(g))
            p.value = p.value - scale * self.m[name] / np.maximum(self.u[name],
                                                                  self.U_FLOOR)


def make_optimizer(kind: str, params: dict[str, Var], alpha: float = 0.001,
                   beta1: float = 0.9, beta2: float = 0.999):
    if kind == "adam":
        return Adam(params, alpha, beta1, beta2)
    if kind == "adamax":
        return AdaMax(params, alpha, beta1, beta2)
    raise ValueError(f"unknown optimizer {kind!r}")

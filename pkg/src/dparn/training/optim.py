"""Warm-up learning-rate schedule and Adam."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DivergenceError, DomainError

REGIME_WARMUP = {"exp1": 40000, "exp2": 5000}


@dataclass(frozen=True)
class LrSchedule:
    """``scale / sqrt(c) * min(1/sqrt(step), step / warmup**1.5)``."""

    warmup: int = 40000
    model_dim: int = 80
    scale: float = 1.0

    def __call__(self, step: int) -> float:
        return lr_at_step(step, self)


def lr_at_step(step: int, schedule: LrSchedule = LrSchedule()) -> float:
    if step < 1:
        raise DomainError(f"learning-rate step must be >= 1, got {step}")
    decay = 1.0 / math.sqrt(step)
    ramp = step / math.sqrt(schedule.warmup**3)
    return schedule.scale / math.sqrt(schedule.model_dim) * min(decay, ramp)


@dataclass
class AdamConfig:
    beta1: float = 0.9
    beta2: float = 0.98
    eps: float = 1e-9


@dataclass
class AdamState:
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def clip_global_norm(params, max_norm: float) -> float:
    """Rescale gradients in place so their joint L2 norm is at most ``max_norm``."""
    total = math.sqrt(sum(float(np.sum(p.grad.astype(np.float64) ** 2)) for p in params if p.grad is not None))
    if total > max_norm and total > 0:
        k = max_norm / total
        for p in params:
            if p.grad is not None:
                p.grad = p.grad * k
    return total


def adam_step(params, state: AdamState, lr: float, cfg: AdamConfig = AdamConfig()) -> None:
    """Bias-corrected Adam update of every trainable parameter in ``params``.

    Parameters are looked up in the state by name. A non-finite gradient
    aborts before any parameter is touched.
    """
    live = [p for p in params if p.trainable and p.grad is not None]
    for p in live:
        if not np.all(np.isfinite(p.grad)):
            raise DivergenceError(f"non-finite gradient in parameter {p.name or '<unnamed>'}")
    state.step += 1
    t = state.step
    c1 = 1.0 - cfg.beta1**t
    c2 = 1.0 - cfg.beta2**t
    for p in live:
        key = p.name or id(p)
        g = p.grad.astype(np.float64)
        m = state.m.get(key)
        if m is None:
            m = np.zeros_like(g)
            v = np.zeros_like(g)
        else:
            v = state.v[key]
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g
        state.m[key], state.v[key] = m, v
        update = lr * (m / c1) / (np.sqrt(v / c2) + cfg.eps)
        p.data = (p.data - update).astype(p.data.dtype)

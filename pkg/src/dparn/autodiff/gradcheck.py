"""Central finite-difference gradient checking."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor


@dataclass
class GradCheckResult:
    max_rel_error: float
    worst_name: str
    worst_index: tuple
    n_checked: int

    @property
    def ok(self) -> bool:
        return bool(np.isfinite(self.max_rel_error))


def relative_error(analytic: float, numeric: float, floor: float = 1e-8) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def numeric_grad(fn: Callable[[], float], arr: np.ndarray, index, eps: float = 1e-5) -> float:
    orig = arr[index]
    arr[index] = orig + eps
    fp = fn()
    arr[index] = orig - eps
    fm = fn()
    arr[index] = orig
    return (fp - fm) / (2 * eps)


def check_gradients(
    loss_fn: Callable[[], Tensor],
    tensors: Sequence[tuple[str, Tensor]],
    n_samples: int | None = None,
    eps: float = 1e-5,
    seed: int = 0,
    floor: float = 1e-8,
) -> GradCheckResult:
    """Compare backprop gradients of ``loss_fn()`` with central differences.

    ``tensors`` are (name, leaf) pairs. When ``n_samples`` is given, that many
    scalar entries are drawn uniformly across all leaves; otherwise every entry
    is checked.
    """
    for _, t in tensors:
        t.grad = np.zeros_like(t.data)
    loss_fn().backward()
    analytic = {name: t.grad.copy() for name, t in tensors}

    def value() -> float:
        return float(loss_fn().data)

    entries = [(name, t, idx) for name, t in tensors for idx in np.ndindex(t.shape)]
    if n_samples is not None and n_samples < len(entries):
        rng = np.random.default_rng(seed)
        pick = rng.choice(len(entries), size=n_samples, replace=False)
        entries = [entries[i] for i in sorted(pick)]

    worst = (0.0, "", ())
    for name, t, idx in entries:
        num = numeric_grad(value, t.data, idx, eps)
        err = relative_error(float(analytic[name][idx]), num, floor)
        if not err <= worst[0]:
            worst = (err, name, idx)
    return GradCheckResult(worst[0], worst[1], worst[2], len(entries))

"""Named parameters and a minimal container for building layered models."""

from __future__ import annotations

from collections import OrderedDict
from typing import Iterator

import numpy as np

from ..errors import DimensionError
from .tensor import Tensor


class Parameter(Tensor):
    """A leaf tensor owned by a model.

    Frozen parameters (``trainable=False``) never require gradients; they are
    stored and serialized like any other parameter but the optimizer skips them.
    The qualified name is assigned when the owning model is finalized.
    """

    def __init__(self, data, trainable: bool = True, dtype=None):
        super().__init__(data, requires_grad=trainable, dtype=dtype)
        self.trainable = trainable
        self.name = ""

    def assign(self, value: np.ndarray) -> None:
        value = np.asarray(value)
        if value.shape != self.data.shape:
            raise DimensionError(f"cannot assign shape {value.shape} to {self.name or 'parameter'} {self.shape}")
        self.data = value.astype(self.data.dtype, copy=True)


class Module:
    """Container whose ``Parameter`` and ``Module`` attributes form a tree."""

    training = True

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        for key, value in vars(self).items():
            name = f"{prefix}{key}"
            if isinstance(value, Parameter):
                yield name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(name + ".")
            elif isinstance(value, (list, tuple)) and value and isinstance(value[0], Module):
                for i, sub in enumerate(value):
                    yield from sub.named_parameters(f"{name}.{i}.")

    def modules(self) -> Iterator[Module]:
        yield self
        for value in vars(self).values():
            if isinstance(value, Module):
                yield from value.modules()
            elif isinstance(value, (list, tuple)) and value and isinstance(value[0], Module):
                for sub in value:
                    yield from sub.modules()

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def state(self) -> OrderedDict:
        return OrderedDict(self.named_parameters())

    def finalize(self) -> None:
        """Stamp every parameter with its qualified name; names must be unique."""
        seen = set()
        for name, p in self.named_parameters():
            if name in seen:
                raise ValueError(f"duplicate parameter name {name}")
            seen.add(name)
            p.name = name

    def train(self, mode: bool = True):
        for m in self.modules():
            m.training = mode
        return self

    def eval(self):
        return self.train(False)

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = np.zeros_like(p.data)

    def num_parameters(self, trainable_only: bool = True) -> int:
        return sum(p.size for p in self.parameters() if p.trainable or not trainable_only)

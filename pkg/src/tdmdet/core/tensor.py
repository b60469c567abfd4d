"""Dense tensors with reverse-mode differentiation.

Activations are laid out H x W x C (single image per step); convolution
kernels are Kh x Kw x Cin x Cout. The engine is a plain tape: every op
returns a new Tensor holding a closure that routes gradients to its
parents, and ``Tensor.backward`` replays the tape in reverse topological
order.

Precision is a process-wide mode: "test" computes in float64 (used by the
gradient checks and most of the test suite), "train" in float32. Finite
checks on op outputs are on in test mode; training checks its loss values
explicitly instead of paying for per-op scans.
"""

from __future__ import annotations

from contextlib import contextmanager
from typing import Callable, Iterable, Sequence

import numpy as np

_DTYPES = {"test": np.float64, "train": np.float32}
_mode = "test"


def set_mode(mode: str) -> None:
    global _mode
    if mode not in _DTYPES:
        raise ValueError(f"unknown precision mode {mode!r}; expected 'test' or 'train'")
    _mode = mode


def get_mode() -> str:
    return _mode


def active_dtype() -> type:
    return _DTYPES[_mode]


def finite_checks_enabled() -> bool:
    return _mode == "test"


@contextmanager
def precision(mode: str):
    """Temporarily switch the precision mode (used by grad checks)."""
    prev = _mode
    set_mode(mode)
    try:
        yield
    finally:
        set_mode(prev)


class Tensor:
    """A dense array plus an optional gradient buffer and tape entry."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False,
                 parents: Sequence["Tensor"] = (),
                 backward: Callable[[np.ndarray], None] | None = None):
        arr = np.asarray(data, dtype=active_dtype())
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad) or any(p.requires_grad for p in parents)
        self._parents = tuple(p for p in parents if p.requires_grad)
        self._backward = backward
        if finite_checks_enabled() and arr.size and not np.isfinite(arr).all():
            raise FloatingPointError("non-finite values in tensor")

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def accumulate_grad(self, g: np.ndarray) -> None:
        if g.shape != self.data.shape:
            raise ValueError(f"gradient shape {g.shape} != tensor shape {self.data.shape}")
        if self.grad is None:
            self.grad = g.astype(self.data.dtype, copy=True)
        else:
            self.grad += g

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self, seed: np.ndarray | None = None) -> None:
        """Reverse-mode pass from this tensor; a scalar seeds with 1."""
        if seed is None:
            if self.data.size != 1:
                raise ValueError("backward() without a seed requires a scalar tensor")
            seed = np.ones_like(self.data)
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        self.accumulate_grad(np.asarray(seed, dtype=self.data.dtype))
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, grad={'set' if self.grad is not None else 'none'})"


class Parameter:
    """A named, trainable tensor with its SGD momentum buffer."""

    __slots__ = ("name", "value", "momentum")

    def __init__(self, name: str, data: np.ndarray):
        self.name = name
        self.value = Tensor(data, requires_grad=True)
        self.momentum = np.zeros_like(self.value.data)

    @property
    def grad(self) -> np.ndarray | None:
        return self.value.grad

    @property
    def data(self) -> np.ndarray:
        return self.value.data

    def set_data(self, arr: np.ndarray) -> None:
        if arr.shape != self.value.data.shape:
            raise ValueError(f"{self.name}: shape {arr.shape} != {self.value.data.shape}")
        self.value.data = arr.astype(self.value.data.dtype, copy=True)

    def __repr__(self) -> str:
        return f"Parameter({self.name}, shape={self.value.data.shape})"


class ParamSet:
    """Ordered collection of parameters with unique names."""

    def __init__(self):
        self._params: dict[str, Parameter] = {}

    def add(self, name: str, data: np.ndarray) -> Parameter:
        if name in self._params:
            raise ValueError(f"duplicate parameter name {name!r}")
        p = Parameter(name, data)
        self._params[name] = p
        return p

    def adopt(self, param: Parameter) -> Parameter:
        if param.name in self._params:
            raise ValueError(f"duplicate parameter name {param.name!r}")
        self._params[param.name] = param
        return param

    def __getitem__(self, name: str) -> Parameter:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self) -> Iterable[Parameter]:
        return iter(self._params.values())

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params.keys())

    def count(self) -> int:
        return sum(p.value.size for p in self._params.values())

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.value.data.copy() for name, p in self._params.items()}

    def momentum_dict(self) -> dict[str, np.ndarray]:
        return {name: p.momentum.copy() for name, p in self._params.items()}

    def load_state(self, state: dict[str, np.ndarray], momentum: dict[str, np.ndarray] | None = None) -> None:
        for name, arr in state.items():
            if name not in self._params:
                raise KeyError(f"unknown parameter {name!r} in state")
            self._params[name].set_data(arr)
        if momentum is not None:
            for name, arr in momentum.items():
                p = self._params[name]
                if arr.shape != p.momentum.shape:
                    raise ValueError(f"{name}: momentum shape mismatch")
                p.momentum = arr.astype(p.momentum.dtype, copy=True)

    def zero_grads(self) -> None:
        for p in self._params.values():
            p.value.zero_grad()


def uniform_init(rng: np.random.Generator, shape: tuple, fan_in: int) -> np.ndarray:
    """Centered uniform with fan-in scaling (rectifier gain)."""
    bound = np.sqrt(6.0 / max(1, fan_in))
    return rng.uniform(-bound, bound, size=shape).astype(active_dtype())

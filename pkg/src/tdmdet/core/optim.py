"""SGD with classical momentum."""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .tensor import Parameter, ParamSet


def sgd_step(params: Iterable[Parameter] | ParamSet, lr: float, momentum: float = 0.0,
             strict: bool = True) -> None:
    """One update: v <- mu*v + g; p <- p - lr*v; grads are zeroed after.

    With ``strict`` a parameter without a populated gradient is an error;
    the training loop passes strict=False so heads whose loss term was
    absent this step (e.g. no foreground ROIs) decay their momentum with a
    zero gradient instead.
    """
    for p in params:
        g = p.value.grad
        if g is None:
            if strict:
                raise ValueError(f"parameter {p.name!r} has no gradient")
            g = np.zeros_like(p.value.data)
        if momentum != 0.0:
            p.momentum *= momentum
            p.momentum += g
            v = p.momentum
        else:
            p.momentum[...] = g
            v = g
        if lr != 0.0:
            p.value.data -= lr * v
        p.value.zero_grad()

"""Central finite-difference verification of analytic gradients."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor, get_mode


@dataclass
class GradCheckReport:
    max_rel_err: float
    passed: bool
    tol: float
    per_input: list[float] = field(default_factory=list)

    def __str__(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"grad_check {status}: max rel err {self.max_rel_err:.3e} (tol {self.tol:.1e})"


def _rel_err(a: np.ndarray, n: np.ndarray, floor: float = 1e-3) -> np.ndarray:
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return np.abs(a - n) / denom


def grad_check(fn: Callable[..., Tensor], inputs: Sequence[Tensor], eps: float = 1e-5,
               tol: float = 1e-4,
               masks: Sequence[np.ndarray | None] | None = None) -> GradCheckReport:
    """Compare analytic gradients of a scalar-valued fn against central differences.

    Numeric derivative per element is (f(x+eps) - f(x-eps)) / (2 eps). A mask
    per input limits which elements are compared (kink exclusion for relu,
    pooling ties, smooth-L1 corners). Must run in 64-bit ("test") mode.
    """
    if get_mode() != "test":
        raise RuntimeError("grad_check requires the 64-bit test precision mode")
    for t in inputs:
        t.zero_grad()
    out = fn(*inputs)
    if out.data.size != 1:
        raise ValueError("grad_check target must produce a scalar")
    out.backward()
    analytic = [t.grad.copy() if t.grad is not None else np.zeros_like(t.data)
                for t in inputs]

    per_input: list[float] = []
    worst = 0.0
    for k, t in enumerate(inputs):
        if not t.requires_grad:
            per_input.append(0.0)
            continue
        numeric = np.zeros_like(t.data)
        flat = t.data.reshape(-1)
        nflat = numeric.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            f_plus = float(fn(*inputs).data)
            flat[i] = orig - eps
            f_minus = float(fn(*inputs).data)
            flat[i] = orig
            nflat[i] = (f_plus - f_minus) / (2.0 * eps)
        errs = _rel_err(analytic[k], numeric)
        if masks is not None and masks[k] is not None:
            errs = np.where(masks[k], errs, 0.0)
        e = float(errs.max()) if errs.size else 0.0
        per_input.append(e)
        worst = max(worst, e)
    return GradCheckReport(max_rel_err=worst, passed=worst <= tol, tol=tol,
                           per_input=per_input)

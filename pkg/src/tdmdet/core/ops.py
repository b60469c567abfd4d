"""Differentiable operations on H x W x C tensors.

Every function here takes Tensors, computes forward with numpy, and wires
a backward closure onto the result. Convolution goes through im2col so the
heavy lifting is a single GEMM; its input gradient is computed as a
transposed convolution (zero-stuffed upstream gradient convolved with the
spatially flipped kernel).
"""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


def _as_pair(v) -> tuple[int, int]:
    if isinstance(v, tuple):
        return v
    return (int(v), int(v))


def _pad2d(arr: np.ndarray, pad_h: int, pad_w: int) -> np.ndarray:
    """Zero-pad (negative pads crop) the two leading spatial axes."""
    if pad_h < 0:
        arr = arr[-pad_h: arr.shape[0] + pad_h]
        pad_h = 0
    if pad_w < 0:
        arr = arr[:, -pad_w: arr.shape[1] + pad_w]
        pad_w = 0
    if pad_h or pad_w:
        arr = np.pad(arr, ((pad_h, pad_h), (pad_w, pad_w), (0, 0)))
    return arr


def _im2col(x: np.ndarray, kh: int, kw: int, stride: tuple[int, int],
            pad: tuple[int, int], dil: tuple[int, int]) -> tuple[np.ndarray, int, int]:
    """Return patches of shape (H_out*W_out, kh*kw*C) and the output dims."""
    h, w, c = x.shape
    sh, sw = stride
    ph, pw = pad
    dh, dw = dil
    ekh = (kh - 1) * dh + 1
    ekw = (kw - 1) * dw + 1
    h_out = (h + 2 * ph - ekh) // sh + 1
    w_out = (w + 2 * pw - ekw) // sw + 1
    if h_out <= 0 or w_out <= 0:
        raise ValueError(f"non-positive conv output size ({h_out}, {w_out}) "
                         f"for input {h}x{w}, kernel {kh}x{kw}, stride {stride}, "
                         f"pad {pad}, dilation {dil}")
    padded = _pad2d(x, ph, pw)
    win = np.lib.stride_tricks.sliding_window_view(padded, (ekh, ekw), axis=(0, 1))
    # win: (Hp-ekh+1, Wp-ekw+1, C, ekh, ekw); pick strided positions and dilated taps
    win = win[::sh, ::sw, :, ::dh, ::dw][:h_out, :w_out]
    patches = win.transpose(0, 1, 3, 4, 2).reshape(h_out * w_out, kh * kw * c)
    return np.ascontiguousarray(patches), h_out, w_out


def _conv_raw(x: np.ndarray, w: np.ndarray, stride, pad, dil,
              want_patches: bool = False):
    kh, kw, cin, cout = w.shape
    patches, h_out, w_out = _im2col(x, kh, kw, _as_pair(stride), _as_pair(pad), _as_pair(dil))
    out = patches @ w.reshape(kh * kw * cin, cout)
    out = out.reshape(h_out, w_out, cout)
    if want_patches:
        return out, patches
    return out


def conv2d(x: Tensor, w: Tensor, b: Tensor | None = None, stride: int = 1,
           pad: int = 0, dilation: int = 1) -> Tensor:
    """2-D convolution (cross-correlation) of an H x W x Cin map.

    Output size per axis is floor((H + 2*pad - dilation*(K-1) - 1)/stride) + 1.
    """
    kh, kw, cin, cout = w.data.shape
    if x.data.ndim != 3:
        raise ValueError(f"conv2d expects H x W x C input, got shape {x.data.shape}")
    if x.data.shape[2] != cin:
        raise ValueError(f"channel mismatch: input has {x.data.shape[2]}, kernel expects {cin}")
    if stride < 1 or dilation < 1 or pad < 0:
        raise ValueError("stride/dilation must be >= 1 and pad >= 0")
    out_data, patches = _conv_raw(x.data, w.data, stride, pad, dilation, want_patches=True)
    if b is not None:
        out_data = out_data + b.data

    h, w_in = x.data.shape[:2]
    h_out, w_out = out_data.shape[:2]
    parents = (x, w) if b is None else (x, w, b)

    def backward(gout: np.ndarray) -> None:
        gy = gout.reshape(h_out * w_out, cout)
        if b is not None and b.requires_grad:
            b.accumulate_grad(gout.sum(axis=(0, 1)))
        if w.requires_grad:
            gw = patches.T @ gy
            w.accumulate_grad(gw.reshape(kh, kw, cin, cout))
        if x.requires_grad:
            sh, sw = _as_pair(stride)
            dh, dw = _as_pair(dilation)
            ph, pw = _as_pair(pad)
            stuffed = np.zeros(((h_out - 1) * sh + 1, (w_out - 1) * sw + 1, cout),
                               dtype=gout.dtype)
            stuffed[::sh, ::sw] = gout
            w_flip = w.data[::-1, ::-1].transpose(0, 1, 3, 2)
            gx_cov = _conv_raw(stuffed, np.ascontiguousarray(w_flip), 1,
                               ((kh - 1) * dh - ph, (kw - 1) * dw - pw), (dh, dw))
            hc, wc = gx_cov.shape[:2]
            if hc == h and wc == w_in:
                x.accumulate_grad(gx_cov)
            else:
                gx = np.zeros_like(x.data)
                gx[:hc, :wc] = gx_cov
                x.accumulate_grad(gx)

    return Tensor(out_data, parents=parents, backward=backward)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    out_data = np.where(mask, x.data, 0.0)

    def backward(gout: np.ndarray) -> None:
        if x.requires_grad:
            x.accumulate_grad(np.where(mask, gout, 0.0))

    return Tensor(out_data, parents=(x,), backward=backward)


def maxpool2x(x: Tensor) -> Tensor:
    """2x2/stride-2 max pool.

    Odd heights drop the final row; odd widths keep a truncated edge window
    (output W is rounded up). This mirrors the published layer tables this
    code is checked against: four pools take 600x1000 to 37x63.
    """
    h, w, c = x.data.shape
    if h < 1 or w < 1:
        raise ValueError("maxpool2x needs at least a 1x1 input")
    h_out = max(1, h // 2)
    w_out = (w + 1) // 2
    # crop rows beyond the last full window, pad cols with -inf to fill one
    h_used = min(h, 2 * h_out)
    win_h = h_used // h_out
    arr = x.data[:h_used]
    if 2 * w_out > w:
        fill = np.full((h_used, 2 * w_out - w, c), -np.inf, dtype=x.data.dtype)
        arr = np.concatenate([arr, fill], axis=1)
    win = arr.reshape(h_out, win_h, w_out, 2, c)
    flat = win.transpose(0, 2, 4, 1, 3).reshape(h_out, w_out, c, -1)
    idx = flat.argmax(axis=-1)
    out_data = np.take_along_axis(flat, idx[..., None], axis=-1)[..., 0]

    def backward(gout: np.ndarray) -> None:
        if not x.requires_grad:
            return
        gx = np.zeros_like(x.data)
        oh, ow, oc = np.meshgrid(np.arange(h_out), np.arange(w_out), np.arange(c),
                                 indexing="ij")
        rows = oh * win_h + idx // 2
        cols = ow * 2 + idx % 2
        keep = cols < w
        gx[rows[keep], cols[keep], oc[keep]] = gout[keep]
        x.accumulate_grad(gx)

    return Tensor(out_data, parents=(x,), backward=backward)


def upsample2x(x: Tensor, target_hw: tuple[int, int] | None = None) -> Tensor:
    """Nearest-neighbor upsampling; out(i,j,c) = x(floor(i*H/H'), floor(j*W/W'), c).

    Default target is (2H, 2W); callers pass exact dims when the aligned map
    is odd. Targets from H up to 2H+1 per axis are accepted (the shape-table
    configs need +2 pad-style alignment as well as 2x).
    """
    h, w, c = x.data.shape
    th, tw = target_hw if target_hw is not None else (2 * h, 2 * w)
    if not (h <= th <= 2 * h + 1) or not (w <= tw <= 2 * w + 1):
        raise ValueError(f"upsample target ({th}, {tw}) outside allowed range for ({h}, {w})")
    ih = (np.arange(th) * h) // th
    iw = (np.arange(tw) * w) // tw
    out_data = x.data[np.ix_(ih, iw)]

    def backward(gout: np.ndarray) -> None:
        if not x.requires_grad:
            return
        gx = np.zeros_like(x.data)
        rr, cc = np.meshgrid(ih, iw, indexing="ij")
        np.add.at(gx, (rr, cc), gout)
        x.accumulate_grad(gx)

    return Tensor(out_data, parents=(x,), backward=backward)


def concat_channels(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape[:2] != b.data.shape[:2]:
        raise ValueError(f"spatial mismatch in channel concat: "
                         f"{a.data.shape[:2]} vs {b.data.shape[:2]}")
    ca = a.data.shape[2]
    out_data = np.concatenate([a.data, b.data], axis=2)

    def backward(gout: np.ndarray) -> None:
        if a.requires_grad:
            a.accumulate_grad(gout[:, :, :ca])
        if b.requires_grad:
            b.accumulate_grad(gout[:, :, ca:])

    return Tensor(out_data, parents=(a, b), backward=backward)


def slice_channels(x: Tensor, c0: int, c1: int) -> Tensor:
    out_data = x.data[:, :, c0:c1].copy()

    def backward(gout: np.ndarray) -> None:
        if x.requires_grad:
            gx = np.zeros_like(x.data)
            gx[:, :, c0:c1] = gout
            x.accumulate_grad(gx)

    return Tensor(out_data, parents=(x,), backward=backward)


def linear(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """Affine map out = W x + b; accepts a (V,) vector or (N, V) rows."""
    if x.data.shape[-1] != w.data.shape[1]:
        raise ValueError(f"linear dim mismatch: input {x.data.shape[-1]}, "
                         f"weight expects {w.data.shape[1]}")
    out_data = x.data @ w.data.T
    if b is not None:
        out_data = out_data + b.data
    parents = (x, w) if b is None else (x, w, b)

    def backward(gout: np.ndarray) -> None:
        if b is not None and b.requires_grad:
            b.accumulate_grad(gout.sum(axis=0) if gout.ndim == 2 else gout)
        if w.requires_grad:
            if gout.ndim == 1:
                w.accumulate_grad(np.outer(gout, x.data))
            else:
                w.accumulate_grad(gout.T @ x.data)
        if x.requires_grad:
            x.accumulate_grad(gout @ w.data)

    return Tensor(out_data, parents=parents, backward=backward)


def softmax_ce(logits: Tensor, label: int) -> Tensor:
    """Cross-entropy of softmax(logits) against an integer label; scalar loss."""
    k = logits.data.shape[-1]
    if logits.data.ndim != 1:
        raise ValueError("softmax_ce takes a 1-D logit vector; see softmax_ce_rows")
    if not (0 <= label < k):
        raise ValueError(f"label {label} out of range [0, {k})")
    z = logits.data - logits.data.max()
    lse = np.log(np.exp(z).sum())
    loss = lse - z[label]
    probs = np.exp(z - lse)

    def backward(gout: np.ndarray) -> None:
        if logits.requires_grad:
            g = probs.copy()
            g[label] -= 1.0
            logits.accumulate_grad(g * gout)

    return Tensor(loss, parents=(logits,), backward=backward)


def softmax_ce_rows(logits: Tensor, labels: np.ndarray, reduction: str = "mean") -> Tensor:
    """Row-wise cross-entropy over (N, K) logits with integer labels (N,)."""
    labels = np.asarray(labels, dtype=np.int64)
    n, k = logits.data.shape
    if labels.shape != (n,):
        raise ValueError("labels must be one per logit row")
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= k:
        raise ValueError("label out of range")
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1))
    losses = lse - z[np.arange(n), labels]
    scale = 1.0 / n if reduction == "mean" else 1.0
    loss = losses.sum() * scale
    probs = np.exp(z - lse[:, None])

    def backward(gout: np.ndarray) -> None:
        if logits.requires_grad:
            g = probs.copy()
            g[np.arange(n), labels] -= 1.0
            logits.accumulate_grad(g * (float(gout) * scale))

    return Tensor(loss, parents=(logits,), backward=backward)


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Plain (non-differentiable) row softmax for inference scoring."""
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def smooth_l1(pred: Tensor, target: np.ndarray, scale: float = 1.0) -> Tensor:
    """Summed smooth-L1 (Huber) loss: 0.5 d^2 for |d|<1, |d|-0.5 otherwise."""
    target = np.asarray(target, dtype=pred.data.dtype)
    if target.shape != pred.data.shape:
        raise ValueError(f"smooth_l1 shape mismatch: {pred.data.shape} vs {target.shape}")
    d = pred.data - target
    ad = np.abs(d)
    per_elem = np.where(ad < 1.0, 0.5 * d * d, ad - 0.5)
    loss = per_elem.sum() * scale

    def backward(gout: np.ndarray) -> None:
        if pred.requires_grad:
            pred.accumulate_grad(np.clip(d, -1.0, 1.0) * (float(gout) * scale))

    return Tensor(loss, parents=(pred,), backward=backward)


def l2_normalize(x: Tensor, eps: float = 1e-12) -> tuple[Tensor, np.ndarray]:
    """Unit-normalize the channel vector at each position.

    Returns the normalized tensor and the per-position norms; zero vectors
    pass through unchanged with norm reported as 0.
    """
    norms = np.sqrt((x.data ** 2).sum(axis=-1))
    safe = np.maximum(norms, eps)[..., None]
    nonzero = (norms > 0)[..., None]
    y = np.where(nonzero, x.data / safe, 0.0)

    def backward(gout: np.ndarray) -> None:
        if x.requires_grad:
            dot = (gout * y).sum(axis=-1, keepdims=True)
            gx = np.where(nonzero, (gout - y * dot) / safe, 0.0)
            x.accumulate_grad(gx)

    return Tensor(y, parents=(x,), backward=backward), norms


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ValueError("add requires identical shapes")
    out_data = a.data + b.data

    def backward(gout: np.ndarray) -> None:
        if a.requires_grad:
            a.accumulate_grad(gout)
        if b.requires_grad:
            b.accumulate_grad(gout)

    return Tensor(out_data, parents=(a, b), backward=backward)


def add_n(tensors: list[Tensor]) -> Tensor:
    out = tensors[0]
    for t in tensors[1:]:
        out = add(out, t)
    return out


def scale(x: Tensor, s: float) -> Tensor:
    out_data = x.data * s

    def backward(gout: np.ndarray) -> None:
        if x.requires_grad:
            x.accumulate_grad(gout * s)

    return Tensor(out_data, parents=(x,), backward=backward)


def mul_scalar_tensor(x: Tensor, s: Tensor) -> Tensor:
    """Multiply a tensor by a scalar Tensor (size-1), e.g. a learnable gain."""
    if s.data.size != 1:
        raise ValueError("scale tensor must be a scalar")
    sval = float(s.data.reshape(()))
    out_data = x.data * sval

    def backward(gout: np.ndarray) -> None:
        if x.requires_grad:
            x.accumulate_grad(gout * sval)
        if s.requires_grad:
            s.accumulate_grad(np.asarray((gout * x.data).sum(), dtype=s.data.dtype).reshape(s.data.shape))

    return Tensor(out_data, parents=(x, s), backward=backward)


def tsum(x: Tensor) -> Tensor:
    out_data = x.data.sum()

    def backward(gout: np.ndarray) -> None:
        if x.requires_grad:
            x.accumulate_grad(np.full_like(x.data, float(gout)))

    return Tensor(out_data, parents=(x,), backward=backward)


def reshape(x: Tensor, shape: tuple) -> Tensor:
    out_data = x.data.reshape(shape)

    def backward(gout: np.ndarray) -> None:
        if x.requires_grad:
            x.accumulate_grad(gout.reshape(x.data.shape))

    return Tensor(out_data, parents=(x,), backward=backward)


def gather_rows(x: Tensor, idx: np.ndarray) -> Tensor:
    """Select rows of a 2-D tensor; duplicate indices allowed."""
    idx = np.asarray(idx, dtype=np.int64)
    out_data = x.data[idx]

    def backward(gout: np.ndarray) -> None:
        if x.requires_grad:
            gx = np.zeros_like(x.data)
            np.add.at(gx, idx, gout)
            x.accumulate_grad(gx)

    return Tensor(out_data, parents=(x,), backward=backward)


def gather_box_columns(x: Tensor, classes: np.ndarray) -> Tensor:
    """From per-row (N, 4K) box deltas pick the 4 columns of each row's class."""
    classes = np.asarray(classes, dtype=np.int64)
    n = x.data.shape[0]
    cols = classes[:, None] * 4 + np.arange(4)[None, :]
    out_data = np.take_along_axis(x.data, cols, axis=1)
    rows = np.arange(n)[:, None]

    def backward(gout: np.ndarray) -> None:
        if x.requires_grad:
            gx = np.zeros_like(x.data)
            np.add.at(gx, (rows, cols), gout)
            x.accumulate_grad(gx)

    return Tensor(out_data, parents=(x,), backward=backward)

"""Brute-force reference implementations used to pin the fast paths.

Everything here is deliberately naive (nested loops, exhaustive scans) and
shares no code with the library. Tests compare library output against these.
"""

from __future__ import annotations

import numpy as np


def conv2d_loops(x: np.ndarray, w: np.ndarray, b: np.ndarray | None = None,
                 stride: int = 1, pad: int = 0, dilation: int = 1) -> np.ndarray:
    """Six-nested-loop convolution; taps outside the padded input read zero."""
    h, wid, cin = x.shape
    kh, kw, cin2, cout = w.shape
    assert cin == cin2
    h_out = (h + 2 * pad - dilation * (kh - 1) - 1) // stride + 1
    w_out = (wid + 2 * pad - dilation * (kw - 1) - 1) // stride + 1
    out = np.zeros((h_out, w_out, cout), dtype=x.dtype)
    for oy in range(h_out):
        for ox in range(w_out):
            for co in range(cout):
                acc = 0.0
                for ky in range(kh):
                    for kx in range(kw):
                        iy = oy * stride - pad + ky * dilation
                        ix = ox * stride - pad + kx * dilation
                        if 0 <= iy < h and 0 <= ix < wid:
                            for ci in range(cin):
                                acc += x[iy, ix, ci] * w[ky, kx, ci, co]
                out[oy, ox, co] = acc + (b[co] if b is not None else 0.0)
    return out


def maxpool2x_loops(x: np.ndarray) -> np.ndarray:
    """2x2/stride-2 pooling; odd heights drop the last row, odd widths keep a
    truncated right-edge window."""
    h, w, c = x.shape
    h_out = max(1, h // 2)
    w_out = (w + 1) // 2
    out = np.zeros((h_out, w_out, c), dtype=x.dtype)
    for oy in range(h_out):
        for ox in range(w_out):
            ys = slice(2 * oy, min(2 * oy + 2, h))
            xs = slice(2 * ox, min(2 * ox + 2, w))
            out[oy, ox] = x[ys, xs].reshape(-1, c).max(axis=0)
    return out


def roi_pool_loops(feat: np.ndarray, roi_feat: tuple[float, float, float, float],
                   out_h: int, out_w: int) -> np.ndarray:
    """Max-in-bin ROI pooling on feature-grid coordinates; empty bins emit 0."""
    h, w, c = feat.shape
    x1, y1, x2, y2 = roi_feat
    x1 = int(np.floor(x1)); y1 = int(np.floor(y1))
    x2 = int(np.ceil(x2)); y2 = int(np.ceil(y2))
    x1 = max(0, min(x1, w)); x2 = max(0, min(x2, w))
    y1 = max(0, min(y1, h)); y2 = max(0, min(y2, h))
    rh = max(y2 - y1, 0)
    rw = max(x2 - x1, 0)
    out = np.zeros((out_h, out_w, c), dtype=feat.dtype)
    for by in range(out_h):
        for bx in range(out_w):
            ys = y1 + int(np.floor(by * rh / out_h))
            ye = y1 + int(np.ceil((by + 1) * rh / out_h))
            xs = x1 + int(np.floor(bx * rw / out_w))
            xe = x1 + int(np.ceil((bx + 1) * rw / out_w))
            if ye > ys and xe > xs:
                out[by, bx] = feat[ys:ye, xs:xe].reshape(-1, c).max(axis=0)
    return out


def iou_grid(a: tuple, b: tuple, cell: float = 1.0) -> float:
    """IoU by rasterizing integer-scaled boxes on a unit grid and counting."""
    boxes = [a, b]
    x_lo = int(np.floor(min(bb[0] for bb in boxes)))
    y_lo = int(np.floor(min(bb[1] for bb in boxes)))
    x_hi = int(np.ceil(max(bb[2] for bb in boxes)))
    y_hi = int(np.ceil(max(bb[3] for bb in boxes)))
    w = max(x_hi - x_lo, 1)
    h = max(y_hi - y_lo, 1)
    grids = []
    for bb in boxes:
        g = np.zeros((h, w), dtype=bool)
        gx1 = int(round(bb[0])) - x_lo
        gy1 = int(round(bb[1])) - y_lo
        gx2 = int(round(bb[2])) - x_lo
        gy2 = int(round(bb[3])) - y_lo
        g[gy1:gy2, gx1:gx2] = True
        grids.append(g)
    inter = np.logical_and(*grids).sum()
    union = np.logical_or(*grids).sum()
    return inter / union if union else 0.0


def nms_loops(boxes: np.ndarray, scores: np.ndarray, thresh: float) -> list[int]:
    """Greedy NMS, one pairwise IoU at a time; ties keep the lower index."""
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    kept: list[int] = []
    for i in order:
        ok = True
        for j in kept:
            if _iou_pair(boxes[i], boxes[j]) > thresh:
                ok = False
                break
        if ok:
            kept.append(i)
    return kept


def _iou_pair(a, b) -> float:
    ix1 = max(a[0], b[0]); iy1 = max(a[1], b[1])
    ix2 = min(a[2], b[2]); iy2 = min(a[3], b[3])
    iw = max(0.0, ix2 - ix1); ih = max(0.0, iy2 - iy1)
    inter = iw * ih
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    union = area_a + area_b - inter
    return inter / union if union > 0 else 0.0


def match_greedy_loops(det_boxes: np.ndarray, det_scores: np.ndarray,
                       gt_boxes: np.ndarray, iou_thresh: float) -> list[int]:
    """COCO-style greedy matching: detections in score order each take the
    highest-IoU unmatched ground truth at or above the threshold. Returns a
    gt index per detection (input order) or -1."""
    n = len(det_boxes)
    order = sorted(range(n), key=lambda i: (-det_scores[i], i))
    taken = [False] * len(gt_boxes)
    match = [-1] * n
    for i in order:
        best, best_iou = -1, iou_thresh - 1e-12
        for g in range(len(gt_boxes)):
            if taken[g]:
                continue
            v = _iou_pair(det_boxes[i], gt_boxes[g])
            if v >= iou_thresh and v > best_iou:
                best, best_iou = g, v
        if best >= 0:
            taken[best] = True
            match[i] = best
    return match

"""Adaptive max pooling with fused ReLU, plus a fixed 2x2 max-pool baseline.

The adaptive operator derives its window and stride from a requested output
size:

    P = ceil(in / target)        (window)
    S = max(1, floor(in / target))   (stride)
    out = floor((in - P) / S) + 1

Windows are placed only where they fully fit (no padding); trailing rows and
columns not covered by any window are dropped. The fused variant applies ReLU
to the pooled maxima. Backward passes route each output gradient to the
coordinate that supplied the window maximum (first occurrence in row-major
order on ties), gated by the ReLU mask for the fused variant.
"""

import math
from dataclasses import dataclass

import numpy as np

from .tensor import Shape4, elementwise_relu


@dataclass(frozen=True)
class PoolParams:
    window_h: int
    window_w: int
    stride_h: int
    stride_w: int
    out_h: int
    out_w: int


@dataclass
class PoolCache:
    """Backward-pass bookkeeping for one pooling application.

    argmax holds, per output element, the flat (row-major BHWC) input
    coordinate that supplied the maximum. relu_mask is 1 where the fused
    activation passed the pooled value (max > 0), or None for the unfused
    baseline.
    """

    argmax: np.ndarray
    relu_mask: np.ndarray | None
    params: PoolParams
    input_shape: Shape4


def output_shape(h_in: int, p: int, s: int) -> int:
    """Number of window placements: floor((h_in - p) / s) + 1."""
    if s < 1:
        raise ValueError(f"stride must be >= 1, got {s}")
    if p > h_in:
        raise ValueError(f"window {p} larger than input {h_in}")
    return (h_in - p) // s + 1


def compute_pool_params(h_in: int, w_in: int, h_out_target: int, w_out_target: int) -> PoolParams:
    """Derive window sizes, strides and output dims from a target output size.

    Targets larger than the input are allowed: the stride guard yields
    P = 1, S = 1 and the output equals the input dims.
    """
    for name, v in (("h_in", h_in), ("w_in", w_in),
                    ("h_out_target", h_out_target), ("w_out_target", w_out_target)):
        if v < 1:
            raise ValueError(f"{name} must be >= 1, got {v}")
    p_h = math.ceil(h_in / h_out_target)
    p_w = math.ceil(w_in / w_out_target)
    s_h = max(1, h_in // h_out_target)
    s_w = max(1, w_in // w_out_target)
    # ceil(h/t) <= h for t >= 1, so these never trigger; kept as a guard.
    if p_h > h_in or p_w > w_in:
        raise ValueError(f"window ({p_h},{p_w}) larger than input ({h_in},{w_in})")
    return PoolParams(p_h, p_w, s_h, s_w,
                      output_shape(h_in, p_h, s_h), output_shape(w_in, p_w, s_w))


def max_pool_forward(x: np.ndarray, params: PoolParams) -> tuple[np.ndarray, PoolCache]:
    """Max over each window; cache records the winning coordinate per output.

    Ties go to the first coordinate in row-major (dx, dy) order.
    """
    b, h, w, c = x.shape
    p = params
    if p.window_h > h or p.window_w > w:
        raise ValueError(f"window ({p.window_h},{p.window_w}) does not fit input ({h},{w})")
    if (p.out_h - 1) * p.stride_h + p.window_h > h or (p.out_w - 1) * p.stride_w + p.window_w > w:
        raise ValueError("pool params incompatible with input dims")

    out = np.empty((b, p.out_h, p.out_w, c), dtype=np.float64)
    argmax = np.empty((b, p.out_h, p.out_w, c), dtype=np.int64)
    b_idx = np.arange(b)[:, None]
    c_idx = np.arange(c)[None, :]
    for i in range(p.out_h):
        hs = i * p.stride_h
        for j in range(p.out_w):
            ws = j * p.stride_w
            patch = x[:, hs:hs + p.window_h, ws:ws + p.window_w, :]
            flat = patch.reshape(b, p.window_h * p.window_w, c)
            win = flat.argmax(axis=1)  # first occurrence, row-major over (dx, dy)
            out[:, i, j, :] = np.take_along_axis(flat, win[:, None, :], axis=1)[:, 0, :]
            h_abs = hs + win // p.window_w
            w_abs = ws + win % p.window_w
            argmax[:, i, j, :] = ((b_idx * h + h_abs) * w + w_abs) * c + c_idx
    cache = PoolCache(argmax=argmax, relu_mask=None, params=p, input_shape=Shape4(b, h, w, c))
    return out, cache


def nirmal_forward(x: np.ndarray, h_out_target: int, w_out_target: int) -> tuple[np.ndarray, PoolCache]:
    """Adaptive max pool followed by fused ReLU."""
    _, h, w, _ = x.shape
    params = compute_pool_params(h, w, h_out_target, w_out_target)
    pooled, cache = max_pool_forward(x, params)
    cache.relu_mask = (pooled > 0.0).astype(np.float64)
    return elementwise_relu(pooled), cache


def _route_gradient(grad_out: np.ndarray, cache: PoolCache, input_shape: Shape4,
                    masked: bool) -> np.ndarray:
    shape = Shape4(*input_shape)
    if grad_out.shape != cache.argmax.shape:
        raise ValueError(f"grad_out shape {grad_out.shape} does not match "
                         f"cache output shape {cache.argmax.shape}")
    if tuple(shape) != tuple(cache.input_shape):
        raise ValueError(f"input_shape {tuple(shape)} does not match "
                         f"cached shape {tuple(cache.input_shape)}")
    contrib = grad_out
    if masked:
        if cache.relu_mask is None:
            raise ValueError("cache carries no ReLU mask")
        contrib = grad_out * cache.relu_mask
    grad_in = np.zeros(shape.element_count(), dtype=np.float64)
    # Overlapping windows (P > S) accumulate additively.
    np.add.at(grad_in, cache.argmax.ravel(), contrib.ravel())
    return grad_in.reshape(tuple(shape))


def nirmal_backward(grad_out: np.ndarray, cache: PoolCache, input_shape: Shape4) -> np.ndarray:
    """Route grad_out to each window's argmax, gated by the ReLU mask."""
    return _route_gradient(grad_out, cache, input_shape, masked=True)


def max_pool2x2_forward(x: np.ndarray) -> tuple[np.ndarray, PoolCache]:
    """Standard max pooling with fixed 2x2 window and stride, no activation."""
    _, h, w, _ = x.shape
    params = PoolParams(2, 2, 2, 2, output_shape(h, 2, 2), output_shape(w, 2, 2))
    return max_pool_forward(x, params)


def max_pool2x2_backward(grad_out: np.ndarray, cache: PoolCache, input_shape: Shape4) -> np.ndarray:
    """Unmasked argmax routing for the fixed 2x2 baseline."""
    return _route_gradient(grad_out, cache, input_shape, masked=False)

"""Layers for the benchmark architecture: valid 3x3 convolutions, dense
layers, ReLU, flatten, and softmax cross-entropy, each with forward and
backward passes.

The reference network is conv(32) -> pool -> conv(64) -> pool -> flatten ->
dense(128) -> ReLU -> dense(10). The pooling stage is either the adaptive
fused-ReLU operator or the fixed 2x2 baseline. `activation_placement`
controls whether a ReLU follows each convolution (`after_conv`) or the
non-linearity is supplied solely by the pooling stage (`pool_only`); with a
ReLU before pooling, the fused activation is a no-op on the already
non-negative maxima, so the adaptive variant defaults to `pool_only`.
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import pooling
from .tensor import Shape4, elementwise_relu


def conv2d_forward(x: np.ndarray, kernels: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Valid (no-pad) stride-1 cross-correlation.

    x: (B, H, W, Cin), kernels: (kh, kw, Cin, Cout), bias: (Cout,).
    Output: (B, H-kh+1, W-kw+1, Cout).
    """
    kh, kw, c_in, c_out = kernels.shape
    if x.shape[3] != c_in:
        raise ValueError(f"input channels {x.shape[3]} != kernel in_ch {c_in}")
    if x.shape[1] < kh or x.shape[2] < kw:
        raise ValueError(f"spatial dims {x.shape[1:3]} smaller than kernel ({kh},{kw})")
    # (B, OH, OW, Cin, kh, kw) -> (B, OH, OW, kh*kw*Cin)
    cols = sliding_window_view(x, (kh, kw), axis=(1, 2))
    cols = cols.transpose(0, 1, 2, 4, 5, 3).reshape(*cols.shape[:3], kh * kw * c_in)
    return cols @ kernels.reshape(kh * kw * c_in, c_out) + bias


def conv2d_backward(x: np.ndarray, kernels: np.ndarray,
                    grad_out: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of conv2d_forward w.r.t. input, kernels and bias."""
    kh, kw, c_in, c_out = kernels.shape
    b, oh, ow, _ = grad_out.shape
    if grad_out.shape != (x.shape[0], x.shape[1] - kh + 1, x.shape[2] - kw + 1, c_out):
        raise ValueError(f"grad_out shape {grad_out.shape} incompatible with "
                         f"input {x.shape} and kernel {kernels.shape}")

    grad_bias = grad_out.sum(axis=(0, 1, 2))

    cols = sliding_window_view(x, (kh, kw), axis=(1, 2))
    cols = cols.transpose(0, 1, 2, 4, 5, 3).reshape(b, oh, ow, kh * kw * c_in)
    grad_kernels = np.einsum("bijk,bijo->ko", cols, grad_out).reshape(kh, kw, c_in, c_out)

    # grad_x is the full correlation of grad_out with spatially flipped kernels.
    gpad = np.pad(grad_out, ((0, 0), (kh - 1, kh - 1), (kw - 1, kw - 1), (0, 0)))
    gcols = sliding_window_view(gpad, (kh, kw), axis=(1, 2))
    gcols = gcols.transpose(0, 1, 2, 4, 5, 3).reshape(b, x.shape[1], x.shape[2], kh * kw * c_out)
    kflip = kernels[::-1, ::-1].transpose(0, 1, 3, 2).reshape(kh * kw * c_out, c_in)
    grad_x = gcols @ kflip
    return grad_x, grad_kernels, grad_bias


def dense_forward(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Affine map x @ W + b for x of shape (B, in_features)."""
    if x.shape[1] != weights.shape[0]:
        raise ValueError(f"input features {x.shape[1]} != weight rows {weights.shape[0]}")
    return x @ weights + bias


def dense_backward(x: np.ndarray, weights: np.ndarray,
                   grad_out: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if grad_out.shape != (x.shape[0], weights.shape[1]):
        raise ValueError(f"grad_out shape {grad_out.shape} incompatible with "
                         f"x {x.shape} and weights {weights.shape}")
    return grad_out @ weights.T, x.T @ grad_out, grad_out.sum(axis=0)


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean negative log-likelihood and its gradient w.r.t. the logits.

    Stabilized by max-subtraction. grad = (softmax - onehot) / batch.
    """
    n, k = logits.shape
    labels = np.asarray(labels)
    if labels.min() < 0 or labels.max() >= k:
        raise ValueError(f"labels must lie in [0, {k}), got range "
                         f"[{labels.min()}, {labels.max()}]")
    z = logits - logits.max(axis=1, keepdims=True)
    log_probs = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    loss = -log_probs[np.arange(n), labels].mean()
    grad = np.exp(log_probs)
    grad[np.arange(n), labels] -= 1.0
    return float(loss), grad / n


@dataclass(frozen=True)
class ModelSpec:
    """Declarative description of the benchmark network."""

    pooling_variant: str = "nirmal"          # "nirmal" | "max2x2"
    activation_placement: str = "pool_only"  # "after_conv" | "pool_only"
    conv_filters: tuple[int, int] = (32, 64)
    kernel_size: int = 3
    dense_units: tuple[int, int] = (128, 10)
    # Per-stage (target_h, target_w); None means exact halving of the
    # incoming feature map (ignored by the fixed 2x2 baseline).
    pool_targets: tuple[tuple[int, int] | None, ...] = (None, None)

    def __post_init__(self):
        if self.pooling_variant not in ("nirmal", "max2x2"):
            raise ValueError(f"unknown pooling_variant {self.pooling_variant!r}")
        if self.activation_placement not in ("after_conv", "pool_only"):
            raise ValueError(f"unknown activation_placement {self.activation_placement!r}")


def default_placement(pooling_variant: str) -> str:
    return "pool_only" if pooling_variant == "nirmal" else "after_conv"


def init_params(spec: ModelSpec, input_shape: Shape4, seed: int) -> dict[str, np.ndarray]:
    """Kaiming-style normal init (std = sqrt(2 / fan_in)), zero biases."""
    rng = np.random.default_rng(seed)
    _, h, w, c = Shape4(*input_shape)
    k = spec.kernel_size
    params: dict[str, np.ndarray] = {}
    for idx, filters in enumerate(spec.conv_filters, start=1):
        fan_in = k * k * c
        params[f"conv{idx}_w"] = rng.normal(0.0, np.sqrt(2.0 / fan_in), (k, k, c, filters))
        params[f"conv{idx}_b"] = np.zeros(filters)
        h, w, c = h - k + 1, w - k + 1, filters
        h, w = _pooled_dims(spec, idx - 1, h, w)
    features = h * w * c
    for idx, units in enumerate(spec.dense_units, start=1):
        params[f"dense{idx}_w"] = rng.normal(0.0, np.sqrt(2.0 / features), (features, units))
        params[f"dense{idx}_b"] = np.zeros(units)
        features = units
    return params


def _pool_target(spec: ModelSpec, stage: int, h: int, w: int) -> tuple[int, int]:
    target = spec.pool_targets[stage] if stage < len(spec.pool_targets) else None
    if target is None:
        target = (max(1, h // 2), max(1, w // 2))
    return target


def _pooled_dims(spec: ModelSpec, stage: int, h: int, w: int) -> tuple[int, int]:
    if spec.pooling_variant == "max2x2":
        return pooling.output_shape(h, 2, 2), pooling.output_shape(w, 2, 2)
    th, tw = _pool_target(spec, stage, h, w)
    p = pooling.compute_pool_params(h, w, th, tw)
    return p.out_h, p.out_w


def shape_trace(spec: ModelSpec, input_shape: Shape4) -> list[tuple[int, ...]]:
    """Spatial/feature shapes after each stage, input through logits."""
    _, h, w, c = Shape4(*input_shape)
    trace: list[tuple[int, ...]] = [(h, w, c)]
    k = spec.kernel_size
    for idx, filters in enumerate(spec.conv_filters):
        h, w, c = h - k + 1, w - k + 1, filters
        trace.append((h, w, c))
        h, w = _pooled_dims(spec, idx, h, w)
        trace.append((h, w, c))
    trace.append((h * w * c,))
    for units in spec.dense_units:
        trace.append((units,))
    return trace


@dataclass
class ForwardCache:
    conv_inputs: list[np.ndarray] = field(default_factory=list)
    relu_masks: list[np.ndarray | None] = field(default_factory=list)
    pool_caches: list[pooling.PoolCache] = field(default_factory=list)
    pool_input_shapes: list[Shape4] = field(default_factory=list)
    flat_input_shape: tuple[int, ...] | None = None
    dense_inputs: list[np.ndarray] = field(default_factory=list)
    dense_relu_mask: np.ndarray | None = None


def model_forward(spec: ModelSpec, params: dict[str, np.ndarray],
                  batch: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Compose the network; returns logits and the caches backward needs."""
    cache = ForwardCache()
    x = batch
    for idx in range(1, len(spec.conv_filters) + 1):
        cache.conv_inputs.append(x)
        x = conv2d_forward(x, params[f"conv{idx}_w"], params[f"conv{idx}_b"])
        if spec.activation_placement == "after_conv":
            mask = (x > 0.0).astype(np.float64)
            x = elementwise_relu(x)
            cache.relu_masks.append(mask)
        else:
            cache.relu_masks.append(None)
        cache.pool_input_shapes.append(Shape4(*x.shape))
        if spec.pooling_variant == "nirmal":
            th, tw = _pool_target(spec, idx - 1, x.shape[1], x.shape[2])
            x, pc = pooling.nirmal_forward(x, th, tw)
        else:
            x, pc = pooling.max_pool2x2_forward(x)
        cache.pool_caches.append(pc)
    cache.flat_input_shape = x.shape
    x = x.reshape(x.shape[0], -1)
    cache.dense_inputs.append(x)
    x = dense_forward(x, params["dense1_w"], params["dense1_b"])
    cache.dense_relu_mask = (x > 0.0).astype(np.float64)
    x = elementwise_relu(x)
    cache.dense_inputs.append(x)
    logits = dense_forward(x, params["dense2_w"], params["dense2_b"])
    return logits, cache


def model_backward(spec: ModelSpec, params: dict[str, np.ndarray], cache: ForwardCache,
                   grad_logits: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients for every parameter tensor, mirroring model_forward."""
    grads: dict[str, np.ndarray] = {}
    g, grads["dense2_w"], grads["dense2_b"] = dense_backward(
        cache.dense_inputs[1], params["dense2_w"], grad_logits)
    g = g * cache.dense_relu_mask
    g, grads["dense1_w"], grads["dense1_b"] = dense_backward(
        cache.dense_inputs[0], params["dense1_w"], g)
    g = g.reshape(cache.flat_input_shape)
    for idx in range(len(spec.conv_filters), 0, -1):
        pc = cache.pool_caches[idx - 1]
        in_shape = cache.pool_input_shapes[idx - 1]
        if spec.pooling_variant == "nirmal":
            g = pooling.nirmal_backward(g, pc, in_shape)
        else:
            g = pooling.max_pool2x2_backward(g, pc, in_shape)
        mask = cache.relu_masks[idx - 1]
        if mask is not None:
            g = g * mask
        g, grads[f"conv{idx}_w"], grads[f"conv{idx}_b"] = conv2d_backward(
            cache.conv_inputs[idx - 1], params[f"conv{idx}_w"], g)
    return grads

"""Adaptive max pooling with fused ReLU, a from-scratch CNN stack, and a
benchmark harness comparing it against standard 2x2 max pooling."""

from .pooling import (
    PoolCache,
    PoolParams,
    compute_pool_params,
    max_pool2x2_backward,
    max_pool2x2_forward,
    max_pool_forward,
    nirmal_backward,
    nirmal_forward,
    output_shape,
)
from .tensor import Shape4, elementwise_relu, zeros

__all__ = [
    "PoolCache",
    "PoolParams",
    "Shape4",
    "compute_pool_params",
    "elementwise_relu",
    "max_pool2x2_backward",
    "max_pool2x2_forward",
    "max_pool_forward",
    "nirmal_backward",
    "nirmal_forward",
    "output_shape",
    "zeros",
]

__version__ = "0.1.0"

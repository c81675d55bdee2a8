import numpy as np
import pytest

from nirmalpool import gradcheck, nn
from nirmalpool.tensor import Shape4

import oracles


def test_conv_identity_kernel():
    x = np.random.default_rng(0).normal(size=(2, 5, 5, 1))
    kernels = np.ones((1, 1, 1, 1))
    out = nn.conv2d_forward(x, kernels, np.zeros(1))
    assert (out == x).all()


def test_conv_ones_kernel_constant_plane():
    x = np.full((1, 6, 6, 1), 2.5)
    out = nn.conv2d_forward(x, np.ones((3, 3, 1, 1)), np.zeros(1))
    assert np.allclose(out, 9 * 2.5)
    assert out.shape == (1, 4, 4, 1)


def test_conv_matches_loop_oracle():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(1, 5, 5, 1))
    kernels = rng.normal(size=(3, 3, 1, 2))
    bias = rng.normal(size=2)
    out = nn.conv2d_forward(x, kernels, bias)
    expected = oracles.conv2d_oracle(x, kernels, bias)
    np.testing.assert_allclose(out, expected, rtol=1e-12, atol=1e-14)


def test_conv_shape_errors():
    x = np.zeros((1, 5, 5, 2))
    with pytest.raises(ValueError):
        nn.conv2d_forward(x, np.zeros((3, 3, 1, 4)), np.zeros(4))
    with pytest.raises(ValueError):
        nn.conv2d_forward(np.zeros((1, 2, 2, 1)), np.zeros((3, 3, 1, 4)), np.zeros(4))


def test_conv_backward_zero_grad():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(1, 4, 4, 2))
    kernels = rng.normal(size=(3, 3, 2, 3))
    gx, gk, gb = nn.conv2d_backward(x, kernels, np.zeros((1, 2, 2, 3)))
    assert (gx == 0).all() and (gk == 0).all() and (gb == 0).all()


def test_conv_backward_bias_law():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(2, 5, 5, 1))
    kernels = rng.normal(size=(3, 3, 1, 4))
    grad_out = rng.normal(size=(2, 3, 3, 4))
    _, _, gb = nn.conv2d_backward(x, kernels, grad_out)
    np.testing.assert_allclose(gb, grad_out.sum(axis=(0, 1, 2)), rtol=1e-12)


def test_conv_backward_finite_differences():
    result = gradcheck.check_conv2d_backward(np.random.default_rng(4))
    assert result.max_rel_error < 1e-6


def test_dense_identity_and_bias():
    x = np.random.default_rng(5).normal(size=(3, 4))
    out = nn.dense_forward(x, np.eye(4), np.zeros(4))
    assert (out == x).all()
    bias = np.arange(4.0)
    out = nn.dense_forward(np.zeros((2, 4)), np.eye(4), bias)
    assert (out == bias).all()


def test_dense_backward_finite_differences():
    result = gradcheck.check_dense_backward(np.random.default_rng(6))
    assert result.max_rel_error < 1e-6


def test_dense_shape_error():
    with pytest.raises(ValueError):
        nn.dense_forward(np.zeros((2, 3)), np.zeros((4, 5)), np.zeros(5))


def test_softmax_uniform_logits():
    logits = np.zeros((4, 10))
    for label in (0, 3, 9):
        loss, _ = nn.softmax_cross_entropy(logits, np.full(4, label))
        assert loss == pytest.approx(np.log(10), rel=1e-12)


def test_softmax_confident_correct():
    logits = np.zeros((1, 10))
    logits[0, 4] = 100.0
    loss, _ = nn.softmax_cross_entropy(logits, np.array([4]))
    assert loss < 1e-8


def test_softmax_loss_nonnegative():
    rng = np.random.default_rng(7)
    for _ in range(20):
        logits = rng.normal(scale=3, size=(5, 10))
        labels = rng.integers(0, 10, size=5)
        loss, _ = nn.softmax_cross_entropy(logits, labels)
        assert loss >= 0.0


def test_softmax_label_out_of_range():
    with pytest.raises(ValueError):
        nn.softmax_cross_entropy(np.zeros((1, 10)), np.array([10]))
    with pytest.raises(ValueError):
        nn.softmax_cross_entropy(np.zeros((1, 10)), np.array([-1]))


def test_softmax_finite_differences():
    result = gradcheck.check_softmax_cross_entropy(np.random.default_rng(8))
    assert result.max_rel_error < 1e-6


def test_zero_weight_model_gives_uniform_logits():
    spec = gradcheck.toy_model_spec("nirmal")
    params = nn.init_params(spec, Shape4(1, 8, 8, 1), seed=0)
    params = {k: np.zeros_like(v) for k, v in params.items()}
    batch = np.random.default_rng(9).uniform(size=(4, 8, 8, 1))
    logits, _ = nn.model_forward(spec, params, batch)
    assert (logits == 0.0).all()
    loss, _ = nn.softmax_cross_entropy(
        np.zeros((4, 10)), np.random.default_rng(10).integers(0, 10, size=4))
    assert loss == pytest.approx(np.log(10), rel=1e-12)


@pytest.mark.parametrize("variant", ["nirmal", "max2x2"])
def test_model_end_to_end_finite_differences(variant):
    result = gradcheck.check_model_end_to_end(np.random.default_rng(11), variant)
    assert result.max_rel_error < 1e-5


def test_sgd_step_decreases_loss():
    spec = gradcheck.toy_model_spec("nirmal")
    rng = np.random.default_rng(12)
    params = nn.init_params(spec, Shape4(1, 8, 8, 1), seed=12)
    batch = rng.uniform(size=(1, 8, 8, 1))
    labels = np.array([1])
    logits, cache = nn.model_forward(spec, params, batch)
    loss0, grad_logits = nn.softmax_cross_entropy(logits, labels)
    grads = nn.model_backward(spec, params, cache, grad_logits)
    stepped = {k: p - 1e-3 * grads[k] for k, p in params.items()}
    logits1, _ = nn.model_forward(spec, stepped, batch)
    loss1, _ = nn.softmax_cross_entropy(logits1, labels)
    assert loss1 < loss0


def test_model_forward_deterministic():
    spec = gradcheck.toy_model_spec("nirmal")
    params = nn.init_params(spec, Shape4(1, 8, 8, 1), seed=13)
    batch = np.random.default_rng(14).uniform(size=(3, 8, 8, 1))
    a, _ = nn.model_forward(spec, params, batch)
    b, _ = nn.model_forward(spec, params, batch)
    assert (a == b).all()


@pytest.mark.parametrize("variant", ["nirmal", "max2x2"])
def test_mnist_architecture_shape_trace(variant):
    spec = nn.ModelSpec(pooling_variant=variant,
                        activation_placement=nn.default_placement(variant))
    trace = nn.shape_trace(spec, Shape4(1, 28, 28, 1))
    assert trace == [(28, 28, 1), (26, 26, 32), (13, 13, 32),
                     (11, 11, 64), (5, 5, 64), (1600,), (128,), (10,)]


def test_model_spec_validation():
    with pytest.raises(ValueError):
        nn.ModelSpec(pooling_variant="avg")
    with pytest.raises(ValueError):
        nn.ModelSpec(activation_placement="everywhere")

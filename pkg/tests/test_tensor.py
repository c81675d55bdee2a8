import numpy as np
import pytest

from nirmalpool import tensor


def test_zeros_examples():
    t = tensor.zeros(tensor.Shape4(1, 2, 2, 1))
    assert t.shape == (1, 2, 2, 1)
    assert (t == 0.0).all()
    assert tensor.zeros(tensor.Shape4(1, 1, 1, 1)).sum() == 0.0
    assert tensor.zeros(tensor.Shape4(2, 3, 3, 4)).size == 72


def test_zeros_rejects_bad_shape():
    with pytest.raises(ValueError):
        tensor.zeros(tensor.Shape4(0, 1, 1, 1))


def test_relu_examples():
    x = np.array([-1.5, 0.0, 2.0, -0.0]).reshape(1, 2, 2, 1)
    out = tensor.elementwise_relu(x)
    assert out.ravel().tolist() == [0.0, 0.0, 2.0, 0.0]
    nonneg = np.abs(np.random.default_rng(0).normal(size=(2, 3, 3, 2)))
    assert (tensor.elementwise_relu(nonneg) == nonneg).all()
    neg = -np.abs(np.random.default_rng(1).normal(size=(2, 3, 3, 2))) - 0.1
    assert (tensor.elementwise_relu(neg) == 0.0).all()


def test_relu_normalizes_negative_zero():
    out = tensor.elementwise_relu(np.full((1, 1, 1, 1), -0.0))
    assert not np.signbit(out).any()


def test_relu_idempotent():
    rng = np.random.default_rng(2)
    for _ in range(20):
        x = rng.normal(scale=5.0, size=tuple(rng.integers(1, 9, size=4)))
        once = tensor.elementwise_relu(x)
        assert (tensor.elementwise_relu(once) == once).all()


def test_flat_index_examples():
    assert tensor.flat_index(tensor.Shape4(1, 2, 2, 1), 0, 1, 0, 0) == 2
    assert tensor.flat_index(tensor.Shape4(2, 3, 3, 2), 1, 0, 0, 0) == 18


def test_get_set_roundtrip():
    shape = tensor.Shape4(1, 2, 2, 1)
    t = tensor.zeros(shape)
    tensor.set_(t, 0, 1, 0, 0, 7.0)
    assert tensor.get(t, 0, 1, 0, 0) == 7.0


def test_get_set_roundtrip_random_shapes():
    rng = np.random.default_rng(3)
    for _ in range(20):
        shape = tensor.Shape4(*rng.integers(1, 9, size=4))
        t = tensor.zeros(shape)
        b, h, w, c = (int(rng.integers(0, e)) for e in shape)
        v = float(rng.normal())
        tensor.set_(t, b, h, w, c, v)
        assert tensor.get(t, b, h, w, c) == v


def test_out_of_bounds_raises():
    t = tensor.zeros(tensor.Shape4(1, 2, 2, 1))
    with pytest.raises(IndexError):
        tensor.get(t, 0, 2, 0, 0)
    with pytest.raises(IndexError):
        tensor.set_(t, 0, 0, 0, -1, 1.0)


def test_layout_law():
    # lexicographic (b,h,w,c) iteration visits storage in order
    shape = tensor.Shape4(2, 3, 2, 2)
    t = np.arange(shape.element_count(), dtype=float).reshape(tuple(shape))
    expected = 0
    for b in range(shape.batch):
        for h in range(shape.height):
            for w in range(shape.width):
                for c in range(shape.channels):
                    assert tensor.get(t, b, h, w, c) == expected
                    assert tensor.flat_index(shape, b, h, w, c) == expected
                    expected += 1

import numpy as np
import pytest

from app.neural.gradcheck import gradcheck_many
from app.neural.ops import (
    concat_channels,
    conv2d,
    conv_transpose2d,
    leaky_relu,
    maxpool2d,
    relu,
    sigmoid,
)
from app.neural.tensor import ShapeError, Tensor


def test_conv2d_identity_kernel_with_padding_returns_input():
    x = np.random.default_rng(0).random((2, 1, 7, 9))
    kernel = np.zeros((1, 1, 3, 3))
    kernel[0, 0, 1, 1] = 1.0

    out = conv2d(Tensor(x), Tensor(kernel), padding=1)

    np.testing.assert_array_equal(out.data, x)


def test_conv2d_ones_kernel_on_constant_input():
    x = np.full((1, 1, 5, 5), 0.25)

    out = conv2d(Tensor(x), Tensor(np.ones((1, 1, 3, 3))))

    assert out.shape == (1, 1, 3, 3)
    np.testing.assert_allclose(out.data, 9 * 0.25)


def test_conv2d_output_size_and_bias():
    x = Tensor(np.zeros((1, 2, 8, 8)))
    weight = Tensor(np.zeros((3, 2, 4, 4)))
    bias = Tensor(np.array([1.0, 2.0, 3.0]))

    out = conv2d(x, weight, bias, stride=2, padding=1)

    assert out.shape == (1, 3, 4, 4)
    np.testing.assert_array_equal(out.data[0, :, 0, 0], [1.0, 2.0, 3.0])


def test_conv2d_rejects_channel_mismatch():
    with pytest.raises(ShapeError):
        conv2d(Tensor(np.zeros((1, 2, 5, 5))), Tensor(np.zeros((1, 3, 3, 3))))


def test_conv2d_rejects_kernel_larger_than_input():
    with pytest.raises(ShapeError):
        conv2d(Tensor(np.zeros((1, 1, 2, 2))), Tensor(np.zeros((1, 1, 3, 3))))


def test_conv_transpose2d_scatters_without_overlap_at_stride_two():
    out = conv_transpose2d(Tensor(np.ones((1, 1, 2, 2))), Tensor(np.ones((1, 1, 2, 2))), stride=2)

    assert out.shape == (1, 1, 4, 4)
    np.testing.assert_array_equal(out.data, np.ones((1, 1, 4, 4)))


def test_conv_transpose2d_accumulates_overlaps():
    out = conv_transpose2d(Tensor(np.ones((1, 1, 2, 2))), Tensor(np.ones((1, 1, 2, 2))), stride=1)

    np.testing.assert_array_equal(out.data[0, 0], [[1, 2, 1], [2, 4, 2], [1, 2, 1]])


@pytest.mark.parametrize("stride", [1, 2])
def test_conv_transpose2d_is_the_adjoint_of_conv2d(stride):
    rng = np.random.default_rng(stride)
    x = rng.normal(size=(2, 3, 9, 9))
    weight = rng.normal(size=(4, 3, 3, 3))
    y_shape = conv2d(Tensor(x), Tensor(weight), stride=stride).shape
    y = rng.normal(size=y_shape)

    forward = np.sum(conv2d(Tensor(x), Tensor(weight), stride=stride).data * y)
    adjoint = np.sum(x * conv_transpose2d(Tensor(y), Tensor(weight), stride=stride).data)

    assert abs(forward - adjoint) <= 1e-10 * max(1.0, abs(forward))


@pytest.mark.parametrize(("stride", "padding"), [(1, 0), (1, 1), (2, 1)])
def test_conv2d_gradients(stride, padding):
    rng = np.random.default_rng(10 + stride + padding)
    point = {
        "x": rng.normal(size=(2, 2, 6, 6)),
        "weight": rng.normal(size=(3, 2, 3, 3)),
        "bias": rng.normal(size=(3,)),
    }

    errors = gradcheck_many(
        lambda t: conv2d(t["x"], t["weight"], t["bias"], stride=stride, padding=padding).sum(),
        point,
    )

    assert max(errors.values()) < 1e-5


@pytest.mark.parametrize("stride", [1, 2])
def test_conv_transpose2d_gradients(stride):
    rng = np.random.default_rng(20 + stride)
    point = {
        "x": rng.normal(size=(2, 3, 3, 3)),
        "weight": rng.normal(size=(3, 2, 2, 2)),
        "bias": rng.normal(size=(2,)),
    }

    errors = gradcheck_many(
        lambda t: conv_transpose2d(t["x"], t["weight"], t["bias"], stride=stride).sum(),
        point,
    )

    assert max(errors.values()) < 1e-5


def test_nonlinear_chain_gradients():
    rng = np.random.default_rng(5)
    point = {"x": rng.normal(size=(1, 2, 4, 4)), "weight": rng.normal(size=(2, 2, 3, 3))}

    def program(t):
        hidden = leaky_relu(conv2d(t["x"], t["weight"], padding=1), 0.2)
        return sigmoid(maxpool2d(hidden)).sum()

    errors = gradcheck_many(program, point, h=1e-6)

    assert max(errors.values()) < 1e-5


def test_relu_and_leaky_relu_values():
    x = Tensor(np.array([[-2.0, 0.0, 3.0]]))

    np.testing.assert_array_equal(relu(x).data, [[0.0, 0.0, 3.0]])
    np.testing.assert_allclose(leaky_relu(x, 0.2).data, [[-0.4, 0.0, 3.0]])


def test_sigmoid_is_stable_for_large_inputs():
    out = sigmoid(Tensor(np.array([-1000.0, 0.0, 1000.0])))

    assert np.all(np.isfinite(out.data))
    np.testing.assert_allclose(out.data, [0.0, 0.5, 1.0])


def test_maxpool2d_routes_gradient_to_the_maximum():
    x = Tensor(np.array([[[[1.0, 4.0], [2.0, 3.0]]]]), requires_grad=True)

    out = maxpool2d(x)
    out.sum().backward()

    assert out.data.item() == 4.0
    np.testing.assert_array_equal(x.grad, [[[[0.0, 1.0], [0.0, 0.0]]]])


def test_maxpool2d_rejects_odd_sizes():
    with pytest.raises(ShapeError):
        maxpool2d(Tensor(np.zeros((1, 1, 3, 4))))


def test_concat_channels_splits_the_gradient():
    a = Tensor(np.ones((1, 1, 2, 2)), requires_grad=True)
    b = Tensor(np.ones((1, 2, 2, 2)), requires_grad=True)

    out = concat_channels([a, b])
    (out * 3.0).sum().backward()

    assert out.shape == (1, 3, 2, 2)
    np.testing.assert_array_equal(a.grad, np.full((1, 1, 2, 2), 3.0))
    np.testing.assert_array_equal(b.grad, np.full((1, 2, 2, 2), 3.0))


def test_reused_tensor_accumulates_gradients():
    x = Tensor(np.array([1.0, 2.0]), requires_grad=True)

    (x + x * 2.0).sum().backward()

    np.testing.assert_array_equal(x.grad, [3.0, 3.0])


def test_backward_requires_scalar_output():
    x = Tensor(np.ones(3), requires_grad=True)

    with pytest.raises(ShapeError):
        (x * 2.0).backward()

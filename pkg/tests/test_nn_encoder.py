import numpy as np
import pytest

from dknbo import nn_encoder as nn
from dknbo.errors import DimensionMismatch, InvalidArchitecture, NonFiniteGradient
from dknbo.numerics import finite_diff_grad
from dknbo.selftest import _encoder_fd


def test_default_architecture_shapes():
    p = nn.init_params(nn.DEFAULT_LAYER_SIZES, seed=3)
    assert [w.shape for w in p.weights] == [(100, 1), (100, 100), (100, 100), (100, 100), (10, 100)]
    assert all(np.all(b == 0) for b in p.biases)
    for w in p.weights:
        limit = np.sqrt(6.0 / (w.shape[0] + w.shape[1]))
        assert np.max(np.abs(w)) <= limit


def test_init_deterministic():
    a, b = nn.init_params([2, 5, 3], 11), nn.init_params([2, 5, 3], 11)
    np.testing.assert_array_equal(nn.flatten(a), nn.flatten(b))
    assert not np.array_equal(nn.flatten(a), nn.flatten(nn.init_params([2, 5, 3], 12)))


@pytest.mark.parametrize("sizes", [[1], [], [1, 0, 2], [3, -1]])
def test_invalid_architecture(sizes):
    with pytest.raises(InvalidArchitecture):
        nn.init_params(sizes, 0)


def test_zero_parameters_give_zero_latent():
    p = nn.init_params([2, 4, 3], 0)
    p = nn.MlpParameters([np.zeros_like(w) for w in p.weights], [np.zeros_like(b) for b in p.biases])
    np.testing.assert_array_equal(nn.forward(p, np.ones((5, 2)))[0], np.zeros((5, 3)))


def test_single_affine_layer():
    p = nn.MlpParameters([np.array([[2.0]])], [np.array([1.0])])
    np.testing.assert_array_equal(nn.forward(p, np.array([[3.0]]))[0], [[7.0]])


def test_relu_blocks_negative_hidden_unit():
    # hidden unit 0 sees -3 (clipped), unit 1 sees +2
    p = nn.MlpParameters([np.array([[-1.0], [1.0]]), np.array([[5.0, 1.0]])],
                         [np.array([0.0, -1.0]), np.array([0.0])])
    latent, cache = nn.forward(p, np.array([[3.0]]))
    np.testing.assert_array_equal(cache.pre[0], [[-3.0, 2.0]])
    np.testing.assert_array_equal(latent, [[2.0]])


def test_forward_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        nn.forward(nn.init_params([2, 3, 1], 0), np.ones((4, 3)))


def test_backward_zero_upstream():
    p = nn.init_params([2, 6, 3], 0)
    _, cache = nn.forward(p, np.ones((4, 2)))
    grads, g_in = nn.backward(p, cache, np.zeros((4, 3)))
    assert not np.any(nn.flatten(grads)) and not np.any(g_in)


def test_backward_linear_case():
    p = nn.MlpParameters([np.array([[1.7]])], [np.array([-0.4])])
    _, cache = nn.forward(p, np.array([[2.5]]))
    grads, g_in = nn.backward(p, cache, np.array([[1.0]]))
    assert grads.weights[0][0, 0] == 2.5
    assert grads.biases[0][0] == 1.0
    assert g_in[0, 0] == 1.7


def test_backward_shape_mismatch():
    p = nn.init_params([1, 4, 2], 0)
    _, cache = nn.forward(p, np.ones((3, 1)))
    with pytest.raises(DimensionMismatch):
        nn.backward(p, cache, np.ones((3, 3)))


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("sizes", [[1, 6, 6, 2], [3, 5, 5, 5, 4], [2, 8, 8, 8, 8, 3]])
def test_backward_matches_finite_differences(seed, sizes):
    assert _encoder_fd(np.random.default_rng(seed), sizes) < 1e-5


def test_relu_subgradient_at_zero_is_zero():
    p = nn.MlpParameters([np.array([[1.0]]), np.array([[1.0]])], [np.array([0.0]), np.array([0.0])])
    _, cache = nn.forward(p, np.array([[0.0]]))
    grads, _ = nn.backward(p, cache, np.array([[1.0]]))
    assert grads.weights[1][0, 0] == 0.0 and grads.biases[0][0] == 0.0


def test_flatten_ordering():
    p = nn.MlpParameters([np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([[7.0, 8.0]])],
                         [np.array([5.0, 6.0]), np.array([9.0])])
    np.testing.assert_array_equal(nn.flatten(p), np.arange(1.0, 10.0))
    back = nn.unflatten(nn.flatten(p), p.layer_sizes)
    np.testing.assert_array_equal(nn.flatten(back), nn.flatten(p))
    with pytest.raises(DimensionMismatch):
        nn.unflatten(np.arange(8.0), [2, 2, 1])


def test_adam_zero_gradient_is_identity():
    x = np.array([1.0, -2.0])
    _, x1 = nn.adam_step(nn.AdamState.zeros(2), x, np.zeros(2), 1e-3)
    np.testing.assert_array_equal(x1, x)


def test_adam_first_step_by_hand():
    # m_hat = g, v_hat = g^2 so the step is -lr * g / (|g| + eps)
    state, x1 = nn.adam_step(nn.AdamState.zeros(1), np.array([0.5]), np.array([2.0]), 1e-3)
    assert x1[0] - 0.5 == pytest.approx(-1e-3 * 2.0 / (2.0 + 1e-8), rel=1e-12)
    assert state.t == 1 and np.all(state.v >= 0)


def test_adam_structured_params():
    p = nn.init_params([1, 3, 2], 0)
    g = nn.init_params([1, 3, 2], 1)
    s, q = nn.adam_step(nn.AdamState.zeros(p.size), p, g, 1e-2)
    assert isinstance(q, nn.MlpParameters) and q.layer_sizes == [1, 3, 2]
    assert np.all(np.abs(nn.flatten(q) - nn.flatten(p)) <= 1e-2 + 1e-12)


def test_adam_rejects_nan():
    with pytest.raises(NonFiniteGradient):
        nn.adam_step(nn.AdamState.zeros(2), np.zeros(2), np.array([np.nan, 0.0]), 1e-3)


def test_input_gradient_finite_differences():
    rng = np.random.default_rng(0)
    p = nn.init_params([2, 5, 3], 4)
    R = rng.normal(size=(3, 2))
    U = rng.normal(size=(3, 3))
    _, cache = nn.forward(p, R)
    _, g_in = nn.backward(p, cache, U)
    fd = finite_diff_grad(lambda x: float(np.sum(U * nn.forward(p, x)[0])), R)
    np.testing.assert_allclose(g_in, fd, rtol=1e-6, atol=1e-9)

import numpy as np
import pytest
from helpers import GraphCase, fd_grad, rel_err

from secsweep import autodiff as ad
from secsweep.errors import DegenerateLogitsError, NonFiniteError, ShapeError


def test_identity_linear_layer():
    x = ad.Tensor(np.array([[1.0, 2.0]], dtype=np.float32))
    w = ad.Tensor(np.eye(2, dtype=np.float32))
    b = ad.Tensor(np.zeros(2, dtype=np.float32))
    out = ad.add(ad.matmul(x, w), b)
    np.testing.assert_array_equal(out.data, [[1.0, 2.0]])


def test_relu_values():
    t = ad.relu(ad.Tensor(np.array([[-1.0, 0.0, 2.0]], dtype=np.float32)))
    np.testing.assert_array_equal(t.data, [[0.0, 0.0, 2.0]])


def test_relu_subgradient_zero_at_kink_and_negative():
    x = ad.Tensor(np.array([[-1.0, 0.0, 2.0]], dtype=np.float32))
    ad.backward(ad.sum_all(ad.relu(x)))
    np.testing.assert_array_equal(x.grad, [[0.0, 0.0, 1.0]])


def test_matmul_identity():
    a = np.array([[3.0, -1.0], [0.5, 2.0]], dtype=np.float32)
    out = ad.matmul(ad.Tensor(np.eye(2, dtype=np.float32)), ad.Tensor(a))
    np.testing.assert_array_equal(out.data, a)


def test_sum_of_squares_gradient():
    x = ad.Tensor(np.array([3.0], dtype=np.float32))
    ad.backward(ad.sum_all(ad.mul(x, x)))
    np.testing.assert_allclose(x.grad, [6.0])


def test_conv_output_sizes_stride2_valid():
    # 28 -> 13 -> 6 under 3x3 stride-2 valid convs: out = floor((in - 3) / 2) + 1
    assert (28 - 3) // 2 + 1 == 13
    assert (13 - 3) // 2 + 1 == 6
    x = ad.Tensor(np.zeros((1, 1, 28, 28), dtype=np.float32))
    k = ad.Tensor(np.zeros((4, 1, 3, 3), dtype=np.float32))
    b = ad.Tensor(np.zeros(4, dtype=np.float32))
    h = ad.conv2d(x, k, b, stride=2)
    assert h.shape == (1, 4, 13, 13)
    k2 = ad.Tensor(np.zeros((5, 4, 3, 3), dtype=np.float32))
    b2 = ad.Tensor(np.zeros(5, dtype=np.float32))
    assert ad.conv2d(h, k2, b2, stride=2).shape == (1, 5, 6, 6)


def test_lp_norm_values():
    assert ad.lp_norm([3.0, 4.0], 2) == pytest.approx(5.0)
    assert ad.lp_norm([3.0, -4.0], np.inf) == pytest.approx(4.0)
    with pytest.raises(ValueError):
        ad.lp_norm([1.0], 3)


def test_lp_norms_batched():
    arr = np.array([[3.0, 4.0], [0.0, -2.0]])
    np.testing.assert_allclose(ad.lp_norms(arr, 2), [5.0, 2.0])
    np.testing.assert_allclose(ad.lp_norms(arr, np.inf), [4.0, 2.0])


def test_softmax_cross_entropy_uniform_logits_is_ln_c():
    for c in (2, 10, 17):
        logits = ad.Tensor(np.zeros((3, c), dtype=np.float32))
        per = ad.softmax_cross_entropy(logits, np.zeros(3, dtype=np.int64))
        np.testing.assert_allclose(per.data, np.log(c), atol=1e-6)


def test_forward_is_pure():
    case = GraphCase(seed=7)
    a = case.loss_value()
    b = case.loss_value()
    assert a == b  # bitwise


def test_two_layer_net_gradcheck_fd_oracle():
    # analytic vs central differences (h=1e-3) on a random 2-layer net
    worst = GraphCase(seed=0).check(h=1e-3, tol=1e-3)
    assert worst < 1e-3


@pytest.mark.parametrize("seed", range(12))
def test_gradcheck_sample_of_graph_kinds(seed):
    GraphCase(seed).check()


def test_cw_loss_direct_substitution():
    logits = ad.Tensor(np.array([[3.0, 1.0, 0.0]], dtype=np.float32))
    per = ad.cw_loss(logits, np.array([0]))
    np.testing.assert_allclose(per.data, [-2.0])


def test_dlr_targeted_direct_substitution():
    logits = ad.Tensor(np.array([[3.0, 1.0, 0.0]], dtype=np.float32))
    per = ad.dlr_loss_targeted(logits, np.array([0]), np.array([1]))
    np.testing.assert_allclose(per.data, [-(3.0 - 1.0) / (3.0 - 0.0)])


def test_cw_invariant_to_non_max_permutation():
    base = np.array([[5.0, 3.0, 1.0, 0.5]], dtype=np.float32)
    permuted = np.array([[5.0, 3.0, 0.5, 1.0]], dtype=np.float32)  # swaps two non-max, non-y logits
    y = np.array([0])
    a = ad.cw_loss(ad.Tensor(base), y).data
    b = ad.cw_loss(ad.Tensor(permuted), y).data
    np.testing.assert_array_equal(a, b)


def test_dlr_degenerate_denominator_raises():
    logits = ad.Tensor(np.ones((2, 4), dtype=np.float32))
    with pytest.raises(DegenerateLogitsError) as exc:
        ad.dlr_loss_targeted(logits, np.array([0, 1]), np.array([1, 2]))
    assert exc.value.sample_indices == [0, 1]


def test_dlr_requires_three_classes():
    logits = ad.Tensor(np.array([[1.0, 0.0]], dtype=np.float32))
    with pytest.raises(ShapeError):
        ad.dlr_loss_targeted(logits, np.array([0]), np.array([1]))


def test_backward_requires_scalar():
    x = ad.Tensor(np.ones((2, 2), dtype=np.float32))
    with pytest.raises(ShapeError):
        ad.backward(ad.relu(x))


def test_add_shape_mismatch():
    with pytest.raises(ShapeError):
        ad.add(ad.Tensor(np.ones((2, 3), dtype=np.float32)), ad.Tensor(np.ones((3, 2), dtype=np.float32)))


def test_non_finite_surfaces_as_error():
    big = ad.Tensor(np.full((1, 2), 3e38, dtype=np.float32))
    with np.errstate(over="ignore"), pytest.raises(NonFiniteError):
        ad.add(big, big)


def test_mean_all_matches_numpy():
    arr = np.arange(6, dtype=np.float32).reshape(2, 3)
    out = ad.mean_all(ad.Tensor(arr))
    assert float(out.data) == pytest.approx(arr.mean())


def test_gradients_keyed_per_leaf_same_shape():
    case = GraphCase(seed=5)
    loss, ts = case.build()
    ad.backward(loss)
    for name, arr in case.leaves.items():
        assert ts[name].grad.shape == arr.shape

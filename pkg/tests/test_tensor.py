import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tensorcast.tensor import (
    as_mask,
    fold,
    khatri_rao,
    masked_error,
    matricize,
    normalized_error,
    rank_bound,
    reconstruct,
)


@pytest.fixture
def cube():
    # frontal slices x[:, :, 0] = [[1,3],[2,4]] and x[:, :, 1] = [[5,7],[6,8]]
    x = np.empty((2, 2, 2))
    x[:, :, 0] = [[1, 3], [2, 4]]
    x[:, :, 1] = [[5, 7], [6, 8]]
    return x


def test_mode1_unfolding_by_hand(cube):
    np.testing.assert_array_equal(matricize(cube, 1), [[1, 3, 5, 7], [2, 4, 6, 8]])


def test_mode2_and_mode3_unfolding_by_hand(cube):
    # mode 2: column f + F*n; mode 3: column f + F*t
    np.testing.assert_array_equal(matricize(cube, 2), [[1, 2, 5, 6], [3, 4, 7, 8]])
    np.testing.assert_array_equal(matricize(cube, 3), [[1, 2, 3, 4], [5, 6, 7, 8]])


def test_fold_inverts_hand_example(cube):
    np.testing.assert_array_equal(fold([[1, 3, 5, 7], [2, 4, 6, 8]], 1, (2, 2, 2)), cube)


def test_fold_shape_mismatch():
    with pytest.raises(ValueError, match="cannot fold"):
        fold(np.zeros((3, 5)), 1, (2, 2, 2))


def test_bad_mode():
    with pytest.raises(ValueError):
        matricize(np.zeros((2, 2, 2)), 4)


dims3 = st.tuples(*[st.integers(1, 5)] * 3)


@settings(max_examples=60, deadline=None)
@given(dims3.flatmap(lambda d: arrays(np.float64, d, elements=st.floats(-1e3, 1e3))), st.sampled_from([1, 2, 3]))
def test_fold_matricize_round_trip(x, mode):
    m = matricize(x, mode)
    assert m.shape == (x.shape[mode - 1], x.size // x.shape[mode - 1])
    np.testing.assert_array_equal(fold(m, mode, x.shape), x)


@settings(max_examples=40, deadline=None)
@given(dims3, st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_unfoldings_match_khatri_rao_identities(dims, rank, seed):
    rng = np.random.default_rng(seed)
    A, B, C = (rng.standard_normal((d, rank)) for d in dims)
    x = reconstruct((A, B, C))
    np.testing.assert_allclose(matricize(x, 1), A @ khatri_rao(C, B).T, atol=1e-12)
    np.testing.assert_allclose(matricize(x, 2), B @ khatri_rao(C, A).T, atol=1e-12)
    np.testing.assert_allclose(matricize(x, 3), C @ khatri_rao(B, A).T, atol=1e-12)


def test_rank1_unfolding_single_column():
    a, b, c = np.array([1.0, 2]), np.array([3.0, -1, 2]), np.array([0.5, 4])
    x = np.einsum("i,j,k->ijk", a, b, c)
    np.testing.assert_allclose(matricize(x, 1), np.outer(a, np.kron(c, b)))


def test_khatri_rao_by_hand():
    out = khatri_rao(np.eye(2), np.ones((2, 2)))
    np.testing.assert_array_equal(out, [[1, 0], [1, 0], [0, 1], [0, 1]])


def test_khatri_rao_single_column_is_kron():
    u, v = np.array([[1.0], [2], [3]]), np.array([[4.0], [5]])
    np.testing.assert_array_equal(khatri_rao(u, v)[:, 0], np.kron(u[:, 0], v[:, 0]))


def test_khatri_rao_pipeline_shapes():
    rng = np.random.default_rng(0)
    A, B, C = rng.random((20, 10)), rng.random((240, 10)), rng.random((100, 10))
    kr = khatri_rao(B, A)
    assert kr.shape == (4800, 10)
    x = reconstruct((A, B, C))
    np.testing.assert_allclose(matricize(x, 3), C @ kr.T, rtol=1e-12)


def test_khatri_rao_column_mismatch():
    with pytest.raises(ValueError, match="column counts"):
        khatri_rao(np.ones((2, 2)), np.ones((2, 3)))


def test_reconstruct_rank1_by_hand():
    x = reconstruct(([[1.0], [2]], [[1.0], [0]], [[1.0], [1]]))
    for n in range(2):
        np.testing.assert_array_equal(x[:, :, n], [[1, 0], [2, 0]])


def test_reconstruct_zero_temporal_factor():
    rng = np.random.default_rng(3)
    x = reconstruct((rng.random((3, 2)), rng.random((4, 2)), np.zeros((5, 2))))
    np.testing.assert_array_equal(x, np.zeros((3, 4, 5)))


def test_reconstruct_rank_mismatch():
    with pytest.raises(ValueError, match="ranks differ"):
        reconstruct((np.ones((2, 2)), np.ones((2, 3)), np.ones((2, 2))))


def test_normalized_error_identities():
    x = np.random.default_rng(0).standard_normal((4, 5, 6))
    assert normalized_error(x, x) == 0.0
    assert normalized_error(x, np.zeros_like(x)) == 1.0
    assert normalized_error(x, 0.5 * x) == 0.5


def test_normalized_error_zero_reference():
    with pytest.raises(ValueError, match="zero norm"):
        normalized_error(np.zeros((2, 2, 2)), np.ones((2, 2, 2)))


def test_masked_error_ignores_unselected_entries():
    x = np.ones((2, 2, 2))
    xhat = x.copy()
    xhat[0, 0, 0] = 100.0
    mask = np.ones_like(x, dtype=bool)
    mask[0, 0, 0] = False
    assert masked_error(x, xhat, mask) == 0.0


def test_as_mask_rejects_non_binary():
    with pytest.raises(ValueError):
        as_mask(np.full((2, 2, 2), 0.5))


def test_rank_bound():
    assert rank_bound((20, 240, 100)) == 2000

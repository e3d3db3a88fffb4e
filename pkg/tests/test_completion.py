import numpy as np
import pytest

from tensorcast.completion import CompletionOptions, complete, impute
from tensorcast.cp import AlsOptions, FactorSet, cp_als
from tensorcast.synth import generate_mask
from tensorcast.tensor import masked_error

from conftest import low_rank_tensor, uniform_factors


@pytest.fixture
def small_factors():
    return FactorSet(*uniform_factors((3, 4, 5), 2, seed=8))


def test_impute_full_mask_returns_input(small_factors):
    x = np.random.default_rng(0).random((3, 4, 5))
    np.testing.assert_array_equal(impute(x, np.ones(x.shape, bool), small_factors), x)


def test_impute_empty_mask_returns_model(small_factors):
    x = np.random.default_rng(0).random((3, 4, 5))
    A, B, C = small_factors
    expected = np.einsum("fr,tr,nr->ftn", A, B, C)
    np.testing.assert_allclose(impute(x, np.zeros(x.shape, bool), small_factors), expected, rtol=1e-14)


def test_impute_single_entry(small_factors):
    x = np.random.default_rng(0).random((3, 4, 5))
    mask = np.ones(x.shape, bool)
    mask[2, 1, 3] = False
    out = impute(x, mask, small_factors)
    A, B, C = small_factors
    by_hand = sum(A[2, r] * B[1, r] * C[3, r] for r in range(2))
    assert out[2, 1, 3] == pytest.approx(by_hand, rel=1e-14)
    np.testing.assert_array_equal(out[mask], x[mask])


def test_impute_shape_mismatch(small_factors):
    with pytest.raises(ValueError):
        impute(np.ones((2, 2, 2)), np.ones((2, 2, 2), bool), small_factors)


def test_no_missing_entries_is_plain_fit():
    x = low_rank_tensor((6, 7, 8), 2, seed=4)
    opts = CompletionOptions(rank=2)
    result = complete(x, np.ones(x.shape, bool), opts)
    np.testing.assert_array_equal(result.tensor, x)
    direct, _ = cp_als(x, 2, opts.als)
    np.testing.assert_array_equal(result.factors.C, direct.C)
    assert result.converged


@pytest.mark.parametrize("variant", ["masked", "plain"])
def test_exact_rank_completion(variant):
    truth = low_rank_tensor((10, 24, 20), 5, seed=5)
    mask = generate_mask(truth.shape, 0.3, seed=1)
    opts = CompletionOptions(rank=5, cp_variant=variant, max_outer_iters=200)
    result = complete(np.where(mask, truth, 0.0), mask, opts, truth=truth)
    assert result.converged
    assert masked_error(truth, result.tensor, ~mask) <= 1e-3
    np.testing.assert_array_equal(result.tensor[mask], truth[mask])
    # the hidden-error column matches a direct evaluation of the final factors
    assert result.history[-1][2] <= 1e-3


def test_masked_variant_needs_fewer_outer_iterations():
    truth = low_rank_tensor((10, 24, 20), 5, seed=5)
    mask = generate_mask(truth.shape, 0.3, seed=1)
    x = np.where(mask, truth, 0.0)
    runs = {v: complete(x, mask, CompletionOptions(rank=5, cp_variant=v), truth=truth) for v in ("masked", "plain")}
    assert len(runs["masked"].history) < len(runs["plain"].history)


def test_truth_does_not_influence_fit():
    truth = low_rank_tensor((6, 8, 10), 2, seed=6)
    mask = generate_mask(truth.shape, 0.2, seed=2)
    x = np.where(mask, truth, 0.0)
    opts = CompletionOptions(rank=2, max_outer_iters=3)
    a = complete(x, mask, opts)
    b = complete(x, mask, opts, truth=truth)
    np.testing.assert_array_equal(a.tensor, b.tensor)
    assert all(row[2] is None for row in a.history)


def test_nonconvergence_is_reported(caplog):
    x = np.random.default_rng(0).random((5, 6, 7))
    mask = generate_mask(x.shape, 0.3, seed=0)
    opts = CompletionOptions(rank=3, cp_variant="plain", max_outer_iters=1, outer_rel_tol=1e-12,
                             als=AlsOptions(max_sweeps=3))
    result = complete(np.where(mask, x, 0.0), mask, opts)
    assert not result.converged
    assert len(result.history) == 2
    assert "without converging" in caplog.text


def test_options_validation():
    with pytest.raises(ValueError):
        CompletionOptions(cp_variant="other")
    with pytest.raises(ValueError):
        CompletionOptions(max_outer_iters=0)

import math

import numpy as np
import pytest

from uniontight.ensembles import (
    EnsembleSpec,
    MatrixSample,
    row_outer_products,
    sample_batch,
    sample_matrix,
)


def test_bernoulli_columns_have_exactly_unit_norm():
    spec = EnsembleSpec("bernoulli", 4, 7, base_seed=1)
    data = sample_matrix(spec, 0).data
    assert np.all(np.abs(data) == 0.5)  # entries are +-1/sqrt(4)
    np.testing.assert_allclose(np.linalg.norm(data, axis=0), 1.0, rtol=1e-12)


def test_same_spec_and_trial_reproduces_bit_exactly():
    spec = EnsembleSpec("gaussian", 6, 5, base_seed=7)
    first = sample_matrix(spec, 3)
    second = sample_matrix(spec, 3)
    assert np.array_equal(first.data, second.data)
    assert isinstance(first, MatrixSample)
    assert first.trial_index == 3


def test_distinct_trials_and_seeds_differ():
    spec = EnsembleSpec("gaussian", 6, 5, base_seed=7)
    a = sample_matrix(spec, 0).data
    b = sample_matrix(spec, 1).data
    c = sample_matrix(EnsembleSpec("gaussian", 6, 5, base_seed=8), 0).data
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_sample_batch_matches_per_trial_sampling():
    spec = EnsembleSpec("bernoulli", 3, 4, base_seed=11)
    batch = sample_batch(spec, 2, 6)
    for offset in range(4):
        assert np.array_equal(batch[offset], sample_matrix(spec, 2 + offset).data)


def test_gaussian_column_norm_second_moment():
    # ||col||^2 ~ chi2_m / m with mean 1; Monte-Carlo oracle at 3 standard errors
    trials = 10_000
    spec = EnsembleSpec("gaussian", 10, 1, base_seed=5)
    sq = np.sum(sample_batch(spec, 0, trials) ** 2, axis=(1, 2))
    se = sq.std(ddof=1) / math.sqrt(trials)
    assert abs(sq.mean() - 1.0) <= 3 * se


def test_stream_independence_correlation():
    trials = 1000
    spec = EnsembleSpec("gaussian", 2, 3, base_seed=9)
    entries = sample_batch(spec, 0, trials + 1)[:, 0, 0]
    corr = np.corrcoef(entries[:-1], entries[1:])[0, 1]
    assert abs(corr) <= 3.0 / math.sqrt(trials)


def test_row_outer_products_identity_example():
    outers = row_outer_products(np.eye(2), scale=1.0)
    np.testing.assert_allclose(outers[0], [[1.0, 0.0], [0.0, 0.0]])
    np.testing.assert_allclose(outers[1], [[0.0, 0.0], [0.0, 1.0]])


def test_row_outer_products_sum_to_scaled_gram():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((6, 3))
    scale = math.sqrt(6 / 3)
    outers = row_outer_products(a, scale)
    np.testing.assert_allclose(outers.sum(axis=0), scale**2 * a.T @ a, rtol=1e-12)


def test_row_outer_products_psd_and_bernoulli_diagonal():
    m, k = 8, 4
    spec = EnsembleSpec("bernoulli", m, k, base_seed=3)
    sub = sample_matrix(spec, 0).data
    scale = math.sqrt(m / k)
    outers = row_outer_products(sub, scale)
    assert np.abs(scale * sub).max() <= 1.0 / math.sqrt(k) + 1e-15
    for x in outers:
        np.testing.assert_allclose(np.diag(x), 1.0 / k, rtol=1e-12)
        eigs = np.linalg.eigvalsh(x)
        assert eigs.min() >= -1e-12 * np.trace(x)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"family": "uniform", "m": 3, "n": 3},
        {"family": "gaussian", "m": 0, "n": 3},
        {"family": "gaussian", "m": 3, "n": 0},
        {"family": "gaussian", "m": 3, "n": 3, "base_seed": -1},
        {"family": "gaussian", "m": 3, "n": 3, "base_seed": 2**64},
    ],
)
def test_invalid_spec_rejected(kwargs):
    with pytest.raises(ValueError):
        EnsembleSpec(**kwargs)


def test_row_outer_products_rejects_bad_args():
    with pytest.raises(ValueError):
        row_outer_products(np.eye(2), scale=0.0)
    with pytest.raises(ValueError):
        row_outer_products(np.ones(3), scale=1.0)

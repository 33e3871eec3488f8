import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from ksums import (ContractViolation, DataError, Dataset, InvalidConfigurationError, apply_move,
                   init_random_labels, refresh_composites)
from ksums.data import ClusterState, cluster_sums


def oracle_sums(X, labels, k):
    return np.stack([X[labels == r].sum(axis=0) for r in range(k)])


def test_dataset_sq_norms(rng):
    X = rng.standard_normal((50, 7))
    ds = Dataset(X)
    assert np.allclose(ds.sq_norms, (X ** 2).sum(1), rtol=1e-12)
    assert ds.n == 50 and ds.d == 7
    with pytest.raises(ValueError):
        ds.vectors[0, 0] = 1.0


def test_dataset_rejects_bad_input():
    with pytest.raises(DataError):
        Dataset(np.zeros((0, 3)))
    with pytest.raises(DataError):
        Dataset(np.array([[1.0, np.nan]]))
    with pytest.raises(DataError):
        Dataset(np.ones((3, 2)), labels_true=[0, 1])
    with pytest.raises(DataError):
        Dataset(np.array([[1.0, 0.0], [0.0, 0.0]])).check_cosine_compatible()


def test_sparse_dataset_matches_dense(rng):
    X = rng.standard_normal((20, 9)) * (rng.random((20, 9)) < 0.3)
    X[:, 0] += 1.0
    ds = Dataset(sp.csr_matrix(X))
    assert ds.is_sparse
    assert np.allclose(ds.sq_norms, (X ** 2).sum(1))
    assert np.allclose(ds.row(3), X[3])
    labels = np.arange(20) % 4
    comp, sizes, _ = cluster_sums(ds, labels, 4)
    assert np.allclose(comp, oracle_sums(X, labels, 4))


def test_normalized_rows_have_unit_norm(rng):
    ds = Dataset(rng.standard_normal((10, 4))).normalized()
    assert np.allclose(ds.sq_norms, 1.0)


def test_init_pigeonhole():
    ds = Dataset(np.arange(8.0).reshape(4, 2))
    for seed in range(20):
        s = init_random_labels(ds, 4, seed)
        assert sorted(s.labels.tolist()) == [0, 1, 2, 3]
        assert s.sizes.tolist() == [1, 1, 1, 1]


def test_init_deterministic(rng):
    ds = Dataset(rng.standard_normal((1000, 3)))
    a = init_random_labels(ds, 10, 7)
    b = init_random_labels(ds, 10, 7)
    assert np.array_equal(a.labels, b.labels)
    assert a.sizes.sum() == 1000 and a.sizes.min() >= 1


def test_init_identical_samples():
    ds = Dataset(np.ones((6, 2)))
    s = init_random_labels(ds, 2, 0)
    for r in range(2):
        assert np.array_equal(s.comp[r], [s.sizes[r], s.sizes[r]])


def test_init_k_out_of_range():
    ds = Dataset(np.ones((5, 2)))
    with pytest.raises(InvalidConfigurationError):
        init_random_labels(ds, 6, 0)
    with pytest.raises(InvalidConfigurationError):
        init_random_labels(ds, 0, 0)


def test_apply_move_example():
    X = np.array([[1.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 0.0]])
    s = ClusterState.from_labels(Dataset(X), [0, 0, 0, 1], 2)
    assert apply_move(s, 0, 0, 1, X[0])
    assert s.comp.tolist() == [[2.0, 0.0], [1.0, 0.0]]
    assert s.sizes.tolist() == [2, 2]
    assert s.comp_sq_norms.tolist() == [4.0, 1.0]
    assert s.labels.tolist() == [1, 0, 0, 1]


def test_apply_move_rejected_on_singleton():
    X = np.array([[1.0, 0.0], [0.0, 0.0], [5.0, 5.0]])
    s = ClusterState.from_labels(Dataset(X), [0, 1, 1], 2)
    before = s.copy()
    assert not apply_move(s, 0, 0, 1, X[0])
    assert np.array_equal(s.labels, before.labels)
    assert np.array_equal(s.comp, before.comp)
    assert np.array_equal(s.sizes, before.sizes)


def test_apply_move_contract():
    X = np.eye(3)
    s = ClusterState.from_labels(Dataset(X), [0, 0, 1], 2)
    with pytest.raises(ContractViolation):
        apply_move(s, 0, 1, 0, X[0])
    with pytest.raises(ContractViolation):
        apply_move(s, 0, 0, 0, X[0])


def test_refresh_idempotent(rng):
    ds = Dataset(rng.standard_normal((300, 5)))
    s = init_random_labels(ds, 6, 1)
    comp = s.comp.copy()
    refresh_composites(s, ds)
    assert np.array_equal(s.comp, comp)
    refresh_composites(s, ds)
    assert np.array_equal(s.comp, comp)


def test_drift_after_many_moves():
    rng = np.random.default_rng(99)
    X = rng.standard_normal((500, 8)) * 10
    ds = Dataset(X)
    k = 7
    s = init_random_labels(ds, k, 3)
    done = 0
    while done < 100_000:
        i = int(rng.integers(500))
        v = int(rng.integers(k))
        w = int(s.labels[i])
        if v == w:
            continue
        apply_move(s, i, w, v, X[i])
        done += 1
    drifted = s.comp.copy()
    drifted_sq = s.comp_sq_norms.copy()
    assert s.sizes.sum() == 500
    refresh_composites(s, ds)
    exact = oracle_sums(X, s.labels, k)
    assert np.allclose(s.comp, exact, rtol=0, atol=1e-9)
    rel = np.linalg.norm(drifted - s.comp, axis=1) / np.linalg.norm(s.comp, axis=1)
    assert rel.max() < 1e-6
    assert np.max(np.abs(drifted_sq - s.comp_sq_norms) / s.comp_sq_norms) < 1e-6
    assert s.sizes.min() >= 1


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 40), st.integers(1, 6), st.integers(0, 10_000))
def test_state_consistency_property(n, k, seed):
    k = min(k, n)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, 3))
    ds = Dataset(X)
    s = init_random_labels(ds, k, seed)
    for _ in range(30):
        i = int(rng.integers(n))
        v = int(rng.integers(k))
        if v != s.labels[i]:
            apply_move(s, i, int(s.labels[i]), v, X[i])
        assert s.sizes.sum() == n
        assert s.sizes.min() >= 1
    assert np.allclose(s.comp, oracle_sums(X, s.labels, k), atol=1e-9)
    assert np.allclose(s.member_sq_sums, [ds.sq_norms[s.labels == r].sum() for r in range(k)])

import numpy as np
import pytest
import scipy.sparse as sp

from ksums import (Algo, DataError, Dataset, InvalidConfigurationError, RunConfig, converged_no_move_check,
                   eval_Em, eval_Es, run)
from ksums.data import ClusterState, init_random_labels
from ksums.kernels import MODE_IM_L2, MODE_IS
from ksums.optimizer import count_improving_samples

from conftest import brute_pairwise, exhaustive_optima


def test_two_pairs_global_optimum(two_pairs):
    for seed in range(10):
        s, h = run(two_pairs, RunConfig(Algo.KSUMS_IM, k=2, seed=seed))
        assert s.labels[0] == s.labels[1] != s.labels[2] == s.labels[3]
        assert eval_Em(two_pairs, s) == pytest.approx(0.25)
        assert h.converged


def test_k_equals_n_is_fixed_point(rng):
    ds = Dataset(rng.standard_normal((9, 3)))
    for algo in (Algo.KSUMS_IM, Algo.KSUMS_IS):
        s, h = run(ds, RunConfig(algo, k=9, seed=1))
        assert h.iterations == 1 and h.per_iteration[0].moves == 0
        assert eval_Em(ds, s) == 0.0


def test_small_instance_is_fixed_point_and_bounded_by_optimum():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((12, 2))
    ds = Dataset(X)
    opt_m, opt_s, _, _ = exhaustive_optima(X, 3)
    for seed in range(5):
        cfg = RunConfig(Algo.KSUMS_IS, k=3, seed=seed, max_iters=500)
        s, h = run(ds, cfg)
        assert h.converged and converged_no_move_check(s, ds, cfg)
        assert eval_Es(ds, s) * 12 >= opt_s - 1e-9
        # no single-sample move lowers the pairwise objective
        base = brute_pairwise(X, s.labels)
        for i in range(12):
            for v in range(3):
                if v == s.labels[i] or s.sizes[s.labels[i]] == 1:
                    continue
                alt = s.labels.copy()
                alt[i] = v
                assert brute_pairwise(X, alt) >= base - 1e-9


def test_fixed_point_audit_detects_mislabel():
    X = np.array([[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [10.0, 10.0], [10.1, 10.0], [10.0, 10.1]])
    ds = Dataset(X)
    cfg = RunConfig(Algo.KSUMS_IM, k=2)
    good = ClusterState.from_labels(ds, [0, 0, 0, 1, 1, 1], 2)
    assert converged_no_move_check(good, ds, cfg)
    bad = ClusterState.from_labels(ds, [0, 0, 1, 1, 1, 1], 2)
    # x2=(0,0.1) sits with the far cluster: own centroid ~(7.5,7.5), joining {x0,x1} is ~0.07 away
    assert not converged_no_move_check(bad, ds, cfg)
    assert count_improving_samples(MODE_IM_L2, ds, bad) >= 1


def test_k1_always_converged(rng):
    ds = Dataset(rng.standard_normal((20, 2)))
    s, h = run(ds, RunConfig(Algo.KSUMS_IM, k=1))
    assert converged_no_move_check(s, ds, RunConfig(Algo.KSUMS_IM, k=1))
    assert h.per_iteration[0].moves == 0


def test_run_deterministic(rng):
    ds = Dataset(rng.standard_normal((400, 5)))
    for algo in (Algo.KSUMS_IM, Algo.KSUMS_IS):
        a, ha = run(ds, RunConfig(algo, k=8, seed=11))
        b, hb = run(ds, RunConfig(algo, k=8, seed=11))
        assert np.array_equal(a.labels, b.labels)
        assert ha.column("e_m").tolist() == hb.column("e_m").tolist()


def test_config_validation(rng):
    ds = Dataset(rng.standard_normal((5, 2)))
    with pytest.raises(InvalidConfigurationError):
        RunConfig(k=0)
    with pytest.raises(InvalidConfigurationError):
        RunConfig(max_iters=0)
    with pytest.raises(InvalidConfigurationError):
        RunConfig(algo="nope")
    with pytest.raises(InvalidConfigurationError):
        run(ds, RunConfig(k=6))
    with pytest.raises(InvalidConfigurationError):
        run(ds, RunConfig(Algo.LLOYD, k=2))


def test_cosine_requires_nonzero_rows():
    ds = Dataset(np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]]))
    with pytest.raises(DataError):
        run(ds, RunConfig(Algo.KSUMS_IM, k=2, metric="cosine"))
    with pytest.raises(DataError):
        run(Dataset(np.array([[2.0, 0.0], [0.0, 1.0]])), RunConfig(Algo.KSUMS_IS, k=2, metric="cosine"))


def test_max_iters_bounds_run(rng):
    ds = Dataset(rng.standard_normal((500, 4)))
    s, h = run(ds, RunConfig(Algo.KSUMS_IM, k=20, seed=0, max_iters=2))
    assert h.iterations == 2


def test_min_moves_threshold(rng):
    ds = Dataset(rng.standard_normal((500, 4)))
    s, h = run(ds, RunConfig(Algo.KSUMS_IM, k=10, seed=0, min_moves=1000))
    assert h.iterations == 1 and h.converged


def test_per_move_log_replays_exactly():
    rng = np.random.default_rng(8)
    X = rng.standard_normal((40, 3))
    ds = Dataset(X)
    cfg = RunConfig(Algo.KSUMS_IS, k=4, seed=2, record_per_move=True)
    labels = init_random_labels(ds, 4, 2).labels.copy()
    s, h = run(ds, cfg)
    log = h.per_move
    assert len(log) == sum(r.moves for r in h.per_iteration)
    prev = brute_pairwise(X, labels)
    for t in range(len(log)):
        i, w, v = log.sample[t], log.src[t], log.dst[t]
        assert labels[i] == w
        labels[i] = v
        cur = brute_pairwise(X, labels)
        assert cur < prev
        assert log.e_s[t] == pytest.approx(cur / 40, abs=1e-9)
        prev = cur
    assert np.array_equal(labels, s.labels)


def test_is_history_non_increasing(rng):
    ds = Dataset(rng.standard_normal((800, 6)))
    s, h = run(ds, RunConfig(Algo.KSUMS_IS, k=12, seed=4))
    es = [h.initial_e_s] + h.column("e_s").tolist()
    assert all(b <= a + 1e-12 for a, b in zip(es, es[1:]))


def test_sparse_and_dense_agree(rng):
    X = rng.random((120, 30)) * (rng.random((120, 30)) < 0.3)
    X[:60, :5] += 3.0
    X[60:, 5:10] += 3.0
    dense, sparse = Dataset(X), Dataset(sp.csr_matrix(X))
    for algo in (Algo.KSUMS_IM, Algo.KSUMS_IS):
        a, _ = run(dense, RunConfig(algo, k=2, seed=1))
        b, _ = run(sparse, RunConfig(algo, k=2, seed=1))
        assert np.array_equal(a.labels, b.labels)
    norm = Dataset(sp.csr_matrix(X)).normalized()
    c, _ = run(norm, RunConfig(Algo.KSUMS_IM, k=2, seed=1, metric="cosine"))
    assert len(set(c.labels[:60])) == 1 and len(set(c.labels[60:])) == 1

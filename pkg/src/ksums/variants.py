"""Bisecting and sequential k-sums, plus the classical baselines they are compared to.

Baselines (Lloyd, k-means++, Hartigan, sequential k-means) optimize squared
L2 distortion only; for cosine work feed them l2-normalized rows.
"""
import heapq
import time
from dataclasses import dataclass

import numpy as np

from . import _accel
from ._accel import njit
from .data import ClusterState, DistanceMetric
from .errors import ContractViolation, InvalidConfigurationError
from .kernels import MODE_HARTIGAN, _cos_joined, _l2_joined
from .metrics import eval_Em, eval_Es
from .optimizer import (
    Algo, IterationRecord, ObjectiveHistory, RunConfig, _all_dots, _validate_k, check_metric_compat,
    run, stochastic_loop,
)


def _check_k(dataset, k):
    if int(k) != k:
        raise InvalidConfigurationError(f"k must be an integer, got {k!r}")
    _validate_k(dataset, int(k))


def _record(history, it, dataset, state, moves, t_start):
    history.per_iteration.append(IterationRecord(
        it, eval_Em(dataset, state), eval_Es(dataset, state), int(moves),
        (time.perf_counter() - t_start) * 1e3))


# --------------------------------------------------------------------------
# seeding


def _sq_dist_to(dataset, c):
    if dataset.is_sparse:
        d2 = dataset.sq_norms - 2.0 * (dataset.vectors @ c) + c @ c
        return np.maximum(d2, 0.0)
    diff = dataset.vectors - c
    return np.einsum("ij,ij->i", diff, diff)


def kmeanspp_seed(dataset, k, seed):
    """D^2 seeding: indices of ``k`` distinct samples.

    When every remaining sample coincides with a chosen seed (all weights
    zero) the next seed is drawn uniformly from the unchosen samples.
    """
    _check_k(dataset, k)
    rng = np.random.default_rng(seed)
    n = dataset.n
    chosen = [int(rng.integers(n))]
    d2 = _sq_dist_to(dataset, dataset.row(chosen[0]))
    d2[chosen[0]] = 0.0
    for _ in range(1, k):
        total = d2.sum()
        if total > 0.0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            free = np.setdiff1d(np.arange(n), chosen)
            nxt = int(free[rng.integers(free.size)])
        chosen.append(nxt)
        d2 = np.minimum(d2, _sq_dist_to(dataset, dataset.row(nxt)))
        d2[chosen] = 0.0
    return np.array(chosen, dtype=np.int64)


# --------------------------------------------------------------------------
# Lloyd


@njit(cache=True)
def _assign_nb(X, indptr, indices, values, sparse, centroids, c_sq, labels):
    k = centroids.shape[0]
    dots = np.empty(k)
    changed = 0
    for i in range(labels.shape[0]):
        _all_dots(i, X, indptr, indices, values, sparse, centroids, dots)
        best = 0
        best_d = c_sq[0] - 2.0 * dots[0]
        for r in range(1, k):
            dr = c_sq[r] - 2.0 * dots[r]
            if dr < best_d:
                best_d = dr
                best = r
        if labels[i] != best:
            labels[i] = best
            changed += 1
    return changed


def _assign_np(dataset, centroids, labels, chunk=4096):
    c_sq = np.einsum("ij,ij->i", centroids, centroids)
    changed = 0
    for a in range(0, dataset.n, chunk):
        b = min(a + chunk, dataset.n)
        scores = c_sq[None, :] - 2.0 * np.asarray(dataset.vectors[a:b] @ centroids.T)
        new = np.argmin(scores, axis=1)
        changed += int(np.count_nonzero(new != labels[a:b]))
        labels[a:b] = new
    return changed


def assign_nearest(dataset, centroids, labels):
    """Point every sample at its nearest centroid (ties to the lowest index); returns #changes."""
    centroids = np.ascontiguousarray(centroids, dtype=np.float64)
    if _accel.use_numba():
        X, indptr, indices, values = dataset.csr_parts()
        c_sq = np.einsum("ij,ij->i", centroids, centroids)
        return int(_assign_nb(X, indptr, indices, values, dataset.is_sparse, centroids, c_sq, labels))
    return _assign_np(dataset, centroids, labels)


def _repair_lloyd(dataset, state):
    """Refill empty clusters with the farthest sample of the largest cluster."""
    repaired = False
    while np.any(state.sizes == 0):
        r = int(np.flatnonzero(state.sizes == 0)[0])
        big = int(np.argmax(state.sizes))
        members = np.flatnonzero(state.labels == big)
        sub = dataset.subset(members)
        far = members[int(np.argmax(_sq_dist_to(sub, state.comp[big] / state.sizes[big])))]
        state.labels[far] = r
        state = ClusterState.from_labels(dataset, state.labels, state.k)
        repaired = True
    return state, repaired


def lloyd_kmeans(dataset, k, seeding="random-samples", seed=0, max_iters=100):
    """Batch k-means: assign all samples, then recompute all centroids."""
    _check_k(dataset, k)
    if seeding not in ("random-samples", "kmeans++"):
        raise InvalidConfigurationError(f"unknown seeding {seeding!r}")
    if max_iters < 1:
        raise InvalidConfigurationError("max_iters must be >= 1")
    t_start = time.perf_counter()
    if seeding == "kmeans++":
        seeds = kmeanspp_seed(dataset, k, seed)
    else:
        seeds = np.random.default_rng(seed).choice(dataset.n, size=k, replace=False)
    centroids = np.stack([dataset.row(int(s)) for s in seeds])
    labels = np.full(dataset.n, -1, dtype=np.int64)
    history = ObjectiveHistory(extra={"seeds": seeds})
    state = None
    for it in range(1, max_iters + 1):
        changed = assign_nearest(dataset, centroids, labels)
        state = ClusterState.from_labels(dataset, labels, k)
        state, repaired = _repair_lloyd(dataset, state)
        labels = state.labels
        centroids = state.centroids()
        _record(history, it, dataset, state, changed, t_start)
        if changed == 0 and not repaired:
            history.converged = True
            break
    return state, history


# --------------------------------------------------------------------------
# Hartigan


def hartigan_run(dataset, k, seed=0, max_iters=100, record_per_move=False):
    """Single-sample moves accepted only when total distortion strictly drops.

    The gain of moving ``x`` from ``w`` to ``v`` is the exact change of the
    total squared error,
    ``n_w/(n_w-1) ||x - C_w||^2 - n_v/(n_v+1) ||x - C_v||^2``.
    Samples in singleton clusters never move.
    """
    _check_k(dataset, k)
    if max_iters < 1:
        raise InvalidConfigurationError("max_iters must be >= 1")
    return stochastic_loop(dataset, int(k), MODE_HARTIGAN, seed, int(max_iters), 0, record_per_move)


# --------------------------------------------------------------------------
# sequential (single pass)


@njit(cache=True)
def _seq_nb(kind, X, indptr, indices, values, sparse, sq_norms, k,
            labels, comp, sizes, centroids, cent_sq, record, trace):
    n = labels.shape[0]
    d = comp.shape[1]
    dots = np.empty(k)
    for i in range(n):
        if i < k:
            r = i
        else:
            if kind == 2:
                _all_dots(i, X, indptr, indices, values, sparse, centroids, dots)
            else:
                _all_dots(i, X, indptr, indices, values, sparse, comp, dots)
            sq = sq_norms[i]
            r = 0
            best = 0.0
            for c in range(k):
                if kind == 0:
                    val = _l2_joined(sq, dots[c], cent_sq[c], sizes[c])
                elif kind == 1:
                    val = -_cos_joined(sq, dots[c], cent_sq[c])
                else:
                    val = sq - 2.0 * dots[c] + cent_sq[c]
                if c == 0 or val < best:
                    best = val
                    r = c
        labels[i] = r
        nr = sizes[r]
        # composite sums and, for kind 2, the running-mean centroid update
        if sparse:
            for p in range(indptr[i], indptr[i + 1]):
                comp[r, indices[p]] += values[p]
        else:
            for j in range(d):
                comp[r, j] += X[i, j]
        sizes[r] = nr + 1
        if kind == 2:
            inv = 1.0 / (nr + 1.0)
            if sparse:
                for j in range(d):
                    centroids[r, j] -= centroids[r, j] * inv
                for p in range(indptr[i], indptr[i + 1]):
                    centroids[r, indices[p]] += values[p] * inv
            else:
                for j in range(d):
                    centroids[r, j] += (X[i, j] - centroids[r, j]) * inv
            s = 0.0
            for j in range(d):
                s += centroids[r, j] * centroids[r, j]
            cent_sq[r] = s
            if record:
                for j in range(d):
                    trace[i, j] = centroids[r, j]
        else:
            s = 0.0
            for j in range(d):
                s += comp[r, j] * comp[r, j]
            cent_sq[r] = s


def _seq_np(kind, dataset, k, labels, comp, sizes, centroids, cent_sq, record, trace):
    for i in range(dataset.n):
        x = dataset.row(i)
        if i < k:
            r = i
        else:
            sq = dataset.sq_norms[i]
            if kind == 2:
                dots = centroids @ x
                vals = sq - 2.0 * dots + cent_sq
            else:
                dots = comp @ x
                nn = sizes.astype(np.float64)
                if kind == 0:
                    vals = (nn * nn * sq - 2.0 * nn * dots + cent_sq) / (nn + 1.0) ** 2
                else:
                    vals = -np.array([_cos_joined(sq, dots[c], cent_sq[c]) for c in range(k)])
            r = int(np.argmin(vals))
        labels[i] = r
        comp[r] += x
        sizes[r] += 1
        if kind == 2:
            centroids[r] += (x - centroids[r]) / sizes[r]
            cent_sq[r] = centroids[r] @ centroids[r]
            if record:
                trace[i] = centroids[r]
        else:
            cent_sq[r] = comp[r] @ comp[r]


def _sequential(kind, dataset, k, record_trace):
    _check_k(dataset, k)
    t_start = time.perf_counter()
    n, d = dataset.n, dataset.d
    labels = np.empty(n, dtype=np.int64)
    comp = np.zeros((k, d))
    sizes = np.zeros(k, dtype=np.int64)
    centroids = np.zeros((k, d))
    cent_sq = np.zeros(k)
    trace = np.zeros((n, d)) if record_trace else np.zeros((0, d))
    if _accel.use_numba():
        X, indptr, indices, values = dataset.csr_parts()
        _seq_nb(kind, X, indptr, indices, values, dataset.is_sparse, dataset.sq_norms, k,
                labels, comp, sizes, centroids, cent_sq, record_trace, trace)
    else:
        _seq_np(kind, dataset, k, labels, comp, sizes, centroids, cent_sq, record_trace, trace)
    state = ClusterState.from_labels(dataset, labels, k)
    history = ObjectiveHistory(converged=True, extra={"passes": 1})
    _record(history, 1, dataset, state, n - k, t_start)
    if kind == 2:
        history.extra["centroids"] = centroids
    if record_trace:
        history.extra["trace"] = trace
    return state, history


def sequential_ksums(dataset, k, metric=DistanceMetric.SQUARED_L2, seed=None):
    """One pass; each sample joins the cluster whose would-be centroid is closest.

    The stream is the dataset in row order and the first ``k`` rows seed
    singleton clusters, so ``seed`` has no effect; it is accepted for a
    uniform call signature.
    """
    metric = DistanceMetric.parse(metric)
    check_metric_compat(dataset, metric, Algo.SEQ_KSUMS)
    return _sequential(1 if metric is DistanceMetric.COSINE else 0, dataset, k, False)


def sequential_kmeans(dataset, k, seed=None, record_trace=False):
    """One pass of online k-means with the running-mean centroid update.

    With ``record_trace`` the updated centroid after each step is kept in
    ``history.extra["trace"]`` (row ``i`` = centroid that sample ``i`` joined,
    right after it joined).
    """
    return _sequential(2, dataset, k, record_trace)


# --------------------------------------------------------------------------
# bisecting


@dataclass
class BisectQueueEntry:
    cluster_id: int
    member_indices: np.ndarray
    size: int


def _cluster_sse(dataset, idx):
    sub = dataset.subset(idx)
    return eval_Em(sub, np.zeros(len(idx), dtype=np.int64)) * len(idx)


def bisecting_run(dataset, k, inner_config=None, split="largest"):
    """Top-down: repeatedly split one cluster in two until there are ``k``.

    ``split="largest"`` pops the biggest cluster (ties: lowest id);
    ``"loosest"`` pops the one with the largest total squared error. The
    two halves keep the parent id and take the next free id respectively.
    """
    if inner_config is None:
        inner_config = RunConfig(Algo.KSUMS_IM, k=2)
    k = int(k)
    if k > dataset.n:
        raise InvalidConfigurationError(f"k must satisfy k <= n (k={k}, n={dataset.n})")
    if k < 2:
        raise InvalidConfigurationError(f"bisecting needs k >= 2, got {k}")
    if split not in ("largest", "loosest"):
        raise InvalidConfigurationError(f"unknown split rule {split!r}")
    if inner_config.algo in (Algo.BISECT_KSUMS_IM, Algo.BISECT_KSUMS_IS):
        raise InvalidConfigurationError("inner algorithm of a bisecting run cannot itself be bisecting")
    check_metric_compat(dataset, inner_config.metric, inner_config.algo)
    t_start = time.perf_counter()

    def priority(entry):
        if split == "largest":
            return -entry.size
        return -_cluster_sse(dataset, entry.member_indices)

    labels = np.zeros(dataset.n, dtype=np.int64)
    entries = {0: BisectQueueEntry(0, np.arange(dataset.n), dataset.n)}
    queue = [(priority(entries[0]), 0)]
    history = ObjectiveHistory()
    trace = []
    for step in range(1, k):
        skipped = []
        target = None
        while queue:
            item = heapq.heappop(queue)
            if entries[item[1]].size >= 2:
                target = entries[item[1]]
                break
            skipped.append(item)
        for item in skipped:
            heapq.heappush(queue, item)
        if target is None:
            raise InvalidConfigurationError(f"cannot reach k={k}: no cluster with 2 or more samples left to split")
        sub = dataset.subset(target.member_indices)
        cfg = RunConfig(inner_config.algo, 2, inner_config.metric, inner_config.seed + step - 1,
                        inner_config.max_iters, inner_config.min_moves)
        sub_state, sub_hist = run_algorithm(sub, cfg)
        keep = target.member_indices[sub_state.labels == 0]
        new = target.member_indices[sub_state.labels == 1]
        if keep.size == 0 or new.size == 0:
            raise ContractViolation("inner run returned an empty half")
        labels[new] = step
        entries[target.cluster_id] = BisectQueueEntry(target.cluster_id, keep, keep.size)
        entries[step] = BisectQueueEntry(step, new, new.size)
        heapq.heappush(queue, (priority(entries[target.cluster_id]), target.cluster_id))
        heapq.heappush(queue, (priority(entries[step]), step))
        trace.append((target.cluster_id, target.size, step, int(keep.size), int(new.size)))
        moves = int(sum(r.moves for r in sub_hist.per_iteration))
        partial = ClusterState.from_labels(dataset, labels, step + 1)
        _record(history, step, dataset, partial, moves, t_start)
    history.converged = True
    history.extra["split_trace"] = trace
    return ClusterState.from_labels(dataset, labels, k), history


# --------------------------------------------------------------------------
# dispatch


def run_algorithm(dataset, config, split="largest"):
    """Run whichever algorithm ``config.algo`` names; returns ``(state, history)``."""
    algo = config.algo
    if algo in (Algo.KSUMS_IM, Algo.KSUMS_IS):
        return run(dataset, config)
    if algo is Algo.LLOYD:
        return lloyd_kmeans(dataset, config.k, "random-samples", config.seed, config.max_iters)
    if algo is Algo.KMEANSPP:
        return lloyd_kmeans(dataset, config.k, "kmeans++", config.seed, config.max_iters)
    if algo is Algo.HARTIGAN:
        return hartigan_run(dataset, config.k, config.seed, config.max_iters, config.record_per_move)
    if algo is Algo.SEQ_KSUMS:
        return sequential_ksums(dataset, config.k, config.metric, config.seed)
    if algo is Algo.SEQ_KMEANS:
        return sequential_kmeans(dataset, config.k, config.seed)
    inner = Algo.KSUMS_IM if algo is Algo.BISECT_KSUMS_IM else Algo.KSUMS_IS
    inner_cfg = RunConfig(inner, 2, config.metric, config.seed, config.max_iters, config.min_moves)
    return bisecting_run(dataset, config.k, inner_cfg, split)

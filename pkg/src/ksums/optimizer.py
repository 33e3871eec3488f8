"""Stochastic single-sample move loop (k-sums).

Each iteration visits every sample once in a fresh random order, evaluates
the driven function against all other clusters and moves the sample to the
best one if the gain is strictly positive. Composite vectors are updated in
place by the move and recomputed from labels after every pass.
"""
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _accel
from ._accel import njit
from .data import DistanceMetric, init_random_labels, refresh_composites
from .errors import DataError, InvalidConfigurationError
from .kernels import _gain, _own_value, mode_for, sample_gains


class Algo(str, Enum):
    KSUMS_IM = "ksums-im"
    KSUMS_IS = "ksums-is"
    LLOYD = "lloyd"
    KMEANSPP = "kmeans++"
    HARTIGAN = "hartigan"
    SEQ_KSUMS = "seq-ksums"
    SEQ_KMEANS = "seq-kmeans"
    BISECT_KSUMS_IM = "bisect-ksums-im"
    BISECT_KSUMS_IS = "bisect-ksums-is"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            choices = ", ".join(a.value for a in cls)
            raise InvalidConfigurationError(f"unknown algorithm {value!r} (choose from {choices})") from None


@dataclass(frozen=True)
class RunConfig:
    algo: Algo = Algo.KSUMS_IM
    k: int = 2
    metric: DistanceMetric = DistanceMetric.SQUARED_L2
    seed: int = 0
    max_iters: int = 100
    min_moves: int = 0
    record_per_move: bool = False

    def __post_init__(self):
        object.__setattr__(self, "algo", Algo.parse(self.algo))
        object.__setattr__(self, "metric", DistanceMetric.parse(self.metric))
        if int(self.k) < 1:
            raise InvalidConfigurationError(f"k must be >= 1, got {self.k}")
        if int(self.max_iters) < 1:
            raise InvalidConfigurationError(f"max_iters must be >= 1, got {self.max_iters}")
        if int(self.min_moves) < 0:
            raise InvalidConfigurationError(f"min_moves must be >= 0, got {self.min_moves}")


@dataclass
class IterationRecord:
    iter: int
    e_m: float
    e_s: float
    moves: int
    elapsed_ms: float


@dataclass
class MoveLog:
    """One entry per applied move; objective values are taken right after it."""

    iteration: np.ndarray
    sample: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    e_m: np.ndarray
    e_s: np.ndarray

    def __len__(self):
        return len(self.sample)


@dataclass
class ObjectiveHistory:
    """Per-iteration objective trace. ``elapsed_ms`` is cumulative from the start of the run."""

    per_iteration: list = field(default_factory=list)
    per_move: MoveLog = None
    initial_e_m: float = float("nan")
    initial_e_s: float = float("nan")
    converged: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def iterations(self):
        return len(self.per_iteration)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.per_iteration])


# --------------------------------------------------------------------------
# compiled sweep


@njit(cache=True, fastmath=True)
def _dot_dense(x, row):
    s = 0.0
    for j in range(x.shape[0]):
        s += x[j] * row[j]
    return s


@njit(cache=True)
def _all_dots(i, X, indptr, indices, values, sparse, comp, out):
    k = comp.shape[0]
    if sparse:
        a, b = indptr[i], indptr[i + 1]
        for r in range(k):
            s = 0.0
            for p in range(a, b):
                s += values[p] * comp[r, indices[p]]
            out[r] = s
    else:
        x = X[i]
        for r in range(k):
            out[r] = _dot_dense(x, comp[r])


@njit(cache=True)
def _best_candidate(mode, w, sq, dots, comp_sq, sizes, sq_sums):
    """(v, gain) maximizing gain over v != w; (-1, 0.0) if none is strictly positive."""
    own = _own_value(mode, sq, dots[w], comp_sq[w], sizes[w], sq_sums[w])
    best_v = -1
    best_g = 0.0
    for r in range(comp_sq.shape[0]):
        if r == w:
            continue
        g = _gain(mode, own, sq, dots[r], comp_sq[r], sizes[r], sq_sums[r])
        if g > best_g:
            best_g = g
            best_v = r
    return best_v, best_g


@njit(cache=True)
def _objective_totals(total_sq, comp_sq, sizes, sq_sums):
    em = total_sq
    es = 0.0
    for r in range(sizes.shape[0]):
        em -= comp_sq[r] / sizes[r]
        es += sizes[r] * sq_sums[r] - comp_sq[r]
    return em, es


@njit(cache=True)
def _sweep_nb(mode, X, indptr, indices, values, sparse, sq_norms, order,
              labels, comp, sizes, comp_sq, sq_sums,
              record, log_i, log_w, log_v, log_em, log_es, total_sq):
    k = comp.shape[0]
    n = labels.shape[0]
    dots = np.empty(k)
    moves = 0
    for t in range(order.shape[0]):
        i = order[t]
        w = labels[i]
        if sizes[w] < 2:
            continue
        _all_dots(i, X, indptr, indices, values, sparse, comp, dots)
        sq = sq_norms[i]
        v, g = _best_candidate(mode, w, sq, dots, comp_sq, sizes, sq_sums)
        if v < 0:
            continue
        labels[i] = v
        if sparse:
            for p in range(indptr[i], indptr[i + 1]):
                comp[w, indices[p]] -= values[p]
                comp[v, indices[p]] += values[p]
        else:
            for j in range(X.shape[1]):
                comp[w, j] -= X[i, j]
                comp[v, j] += X[i, j]
        comp_sq[w] += sq - 2.0 * dots[w]
        comp_sq[v] += sq + 2.0 * dots[v]
        sizes[w] -= 1
        sizes[v] += 1
        sq_sums[w] -= sq
        sq_sums[v] += sq
        if record:
            em, es = _objective_totals(total_sq, comp_sq, sizes, sq_sums)
            log_i[moves] = i
            log_w[moves] = w
            log_v[moves] = v
            log_em[moves] = em / n
            log_es[moves] = es / n
        moves += 1
    return moves


@njit(cache=True)
def _audit_nb(mode, X, indptr, indices, values, sparse, sq_norms, labels, comp, sizes, comp_sq, sq_sums):
    k = comp.shape[0]
    dots = np.empty(k)
    count = 0
    for i in range(labels.shape[0]):
        w = labels[i]
        if sizes[w] < 2:
            continue
        _all_dots(i, X, indptr, indices, values, sparse, comp, dots)
        v, g = _best_candidate(mode, w, sq_norms[i], dots, comp_sq, sizes, sq_sums)
        if v >= 0:
            count += 1
    return count


# --------------------------------------------------------------------------
# numpy sweep


def _row_dots(dataset, i, comp):
    if dataset.is_sparse:
        X = dataset.vectors
        a, b = X.indptr[i], X.indptr[i + 1]
        return comp[:, X.indices[a:b]] @ X.data[a:b]
    return comp @ dataset.vectors[i]


def _sweep_np(mode, dataset, order, state, log):
    n = dataset.n
    sq_norms = dataset.sq_norms
    total_sq = float(sq_norms.sum())
    comp, sizes, comp_sq, sq_sums, labels = (
        state.comp, state.sizes, state.comp_sq_norms, state.member_sq_sums, state.labels)
    moves = 0
    for i in order:
        w = labels[i]
        if sizes[w] < 2:
            continue
        dots = _row_dots(dataset, i, comp)
        sq = sq_norms[i]
        g = sample_gains(mode, sq, dots, comp_sq, sizes, sq_sums, w)
        v = int(np.argmax(g))
        if not g[v] > 0.0:
            continue
        x = dataset.row(i)
        labels[i] = v
        comp[w] -= x
        comp[v] += x
        comp_sq[w] += sq - 2.0 * dots[w]
        comp_sq[v] += sq + 2.0 * dots[v]
        sizes[w] -= 1
        sizes[v] += 1
        sq_sums[w] -= sq
        sq_sums[v] += sq
        if log is not None:
            em = total_sq - np.sum(comp_sq / sizes)
            es = np.sum(sizes * sq_sums - comp_sq)
            log.append((i, w, v, em / n, es / n))
        moves += 1
    return moves


def sweep(mode, dataset, order, state, record=False):
    """One pass over ``order`` applying every profitable move. Returns ``(moves, log)``.

    ``log`` is a list of ``(sample, src, dst, e_m, e_s)`` tuples when
    ``record`` is set, else ``None``. The state's sums are mutated in place
    and are exact up to accumulated rounding; call ``refresh_composites``
    afterwards.
    """
    order = np.ascontiguousarray(order, dtype=np.int64)
    if _accel.use_numba():
        X, indptr, indices, values = dataset.csr_parts()
        m = len(order) if record else 0
        log_i = np.empty(m, dtype=np.int64)
        log_w = np.empty(m, dtype=np.int64)
        log_v = np.empty(m, dtype=np.int64)
        log_em = np.empty(m)
        log_es = np.empty(m)
        moves = _sweep_nb(
            mode, X, indptr, indices, values, dataset.is_sparse, dataset.sq_norms, order,
            state.labels, state.comp, state.sizes, state.comp_sq_norms, state.member_sq_sums,
            record, log_i, log_w, log_v, log_em, log_es, float(dataset.sq_norms.sum()),
        )
        if not record:
            return moves, None
        return moves, list(zip(log_i[:moves].tolist(), log_w[:moves].tolist(), log_v[:moves].tolist(),
                               log_em[:moves].tolist(), log_es[:moves].tolist()))
    log = [] if record else None
    return _sweep_np(mode, dataset, order, state, log), log


def count_improving_samples(mode, dataset, state):
    """Number of samples that have a strictly profitable legal move."""
    if _accel.use_numba():
        X, indptr, indices, values = dataset.csr_parts()
        return int(_audit_nb(mode, X, indptr, indices, values, dataset.is_sparse, dataset.sq_norms,
                             state.labels, state.comp, state.sizes, state.comp_sq_norms,
                             state.member_sq_sums))
    count = 0
    for i in range(dataset.n):
        w = state.labels[i]
        if state.sizes[w] < 2:
            continue
        g = sample_gains(mode, dataset.sq_norms[i], _row_dots(dataset, i, state.comp),
                         state.comp_sq_norms, state.sizes, state.member_sq_sums, w)
        if g.max() > 0.0:
            count += 1
    return count


# --------------------------------------------------------------------------
# driver


def check_metric_compat(dataset, metric, algo):
    if metric is DistanceMetric.COSINE:
        dataset.check_cosine_compatible()
        if algo is Algo.KSUMS_IS and not np.allclose(dataset.sq_norms, 1.0, rtol=0.0, atol=1e-9):
            raise DataError("pairwise objective under cosine metric needs l2-normalized rows (use --normalize)")


def _validate_k(dataset, k):
    if k < 1 or k > dataset.n:
        raise InvalidConfigurationError(f"k must satisfy 1 <= k <= n (k={k}, n={dataset.n})")


def stochastic_loop(dataset, k, mode, seed, max_iters, min_moves=0, record_per_move=False, init_state=None):
    """Shared driver for every single-sample-move method (k-sums and Hartigan)."""
    from .metrics import eval_Em, eval_Es

    _validate_k(dataset, k)
    t_start = time.perf_counter()
    if init_state is None:
        state = init_random_labels(dataset, k, seed)
    else:
        state = refresh_composites(init_state.copy(), dataset)
    order_rng = np.random.default_rng([int(seed), 1])
    history = ObjectiveHistory(initial_e_m=eval_Em(dataset, state), initial_e_s=eval_Es(dataset, state))
    moves_log = [] if record_per_move else None
    for it in range(1, max_iters + 1):
        order = order_rng.permutation(dataset.n)
        moves, log = sweep(mode, dataset, order, state, record=record_per_move)
        refresh_composites(state, dataset)
        elapsed = (time.perf_counter() - t_start) * 1e3
        if record_per_move:
            moves_log.extend((it,) + entry for entry in log)
        history.per_iteration.append(
            IterationRecord(it, eval_Em(dataset, state), eval_Es(dataset, state), int(moves), elapsed))
        if moves <= min_moves:
            history.converged = True
            break
    if record_per_move:
        cols = list(zip(*moves_log)) if moves_log else [()] * 6
        history.per_move = MoveLog(
            iteration=np.array(cols[0], dtype=np.int64),
            sample=np.array(cols[1], dtype=np.int64),
            src=np.array(cols[2], dtype=np.int64),
            dst=np.array(cols[3], dtype=np.int64),
            e_m=np.array(cols[4], dtype=np.float64),
            e_s=np.array(cols[5], dtype=np.float64),
        )
    return state, history


def run(dataset, config, init_state=None):
    """Cluster ``dataset`` with k-sums under ``config``; returns ``(state, history)``.

    The initial labelling is uniform random (seeded by ``config.seed``);
    pass ``init_state`` to start from a given partition instead.
    """
    if config.algo not in (Algo.KSUMS_IM, Algo.KSUMS_IS):
        raise InvalidConfigurationError(f"optimizer.run handles ksums-im/ksums-is, not {config.algo.value}")
    check_metric_compat(dataset, config.metric, config.algo)
    return stochastic_loop(
        dataset, int(config.k), mode_for(config.algo, config.metric), config.seed,
        int(config.max_iters), int(config.min_moves), config.record_per_move, init_state,
    )


def converged_no_move_check(state, dataset, config):
    """True iff no sample has a strictly positive gain to any other cluster."""
    if state.k == 1:
        return True
    s = refresh_composites(state.copy(), dataset)
    return count_improving_samples(mode_for(config.algo, config.metric), dataset, s) == 0

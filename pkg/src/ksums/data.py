"""Immutable dataset and mutable cluster state.

Clusters are tracked by their composite (sum) vectors ``comp[r]`` and sizes
``sizes[r]``; centroids ``comp[r] / sizes[r]`` are never stored.
"""
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp

from .errors import ContractViolation, DataError, InvalidConfigurationError


class DistanceMetric(str, Enum):
    SQUARED_L2 = "l2"
    COSINE = "cosine"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidConfigurationError(f"unknown metric {value!r} (expected 'l2' or 'cosine')") from None


def _readonly(a):
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """``n`` vectors in R^d, dense ``ndarray`` or ``scipy.sparse.csr_matrix``.

    Vectors are held in float64 whatever the on-disk precision. ``sq_norms``
    is computed once here and never recomputed by the algorithms.
    """

    vectors: object
    labels_true: np.ndarray = None
    sq_norms: np.ndarray = field(init=False)

    def __post_init__(self):
        X = self.vectors
        if sp.issparse(X):
            X = sp.csr_matrix(X, dtype=np.float64, copy=True)
            X.sum_duplicates()
            X.sort_indices()
            if X.shape[0] < 1 or X.shape[1] < 1:
                raise DataError(f"dataset must have n >= 1 and d >= 1, got shape {X.shape}")
            if not np.all(np.isfinite(X.data)):
                raise DataError("dataset contains non-finite values")
            sq = np.asarray(X.multiply(X).sum(axis=1)).ravel()
            for a in (X.data, X.indices, X.indptr):
                _readonly(a)
        else:
            X = np.array(X, dtype=np.float64, copy=True)
            if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
                raise DataError(f"dataset must be a 2-D array with n >= 1 and d >= 1, got shape {X.shape}")
            if not np.all(np.isfinite(X)):
                raise DataError("dataset contains non-finite values")
            X = np.ascontiguousarray(X)
            sq = np.einsum("ij,ij->i", X, X)
            _readonly(X)
        object.__setattr__(self, "vectors", X)
        object.__setattr__(self, "sq_norms", _readonly(sq))
        if self.labels_true is not None:
            lt = np.array(self.labels_true, dtype=np.int64, copy=True).ravel()
            if lt.shape[0] != X.shape[0]:
                raise DataError(f"labels_true has {lt.shape[0]} entries for {X.shape[0]} vectors")
            if lt.size and lt.min() < 0:
                raise DataError("ground-truth class ids must be non-negative")
            object.__setattr__(self, "labels_true", _readonly(lt))

    @property
    def n(self):
        return self.vectors.shape[0]

    @property
    def d(self):
        return self.vectors.shape[1]

    @property
    def is_sparse(self):
        return sp.issparse(self.vectors)

    def row(self, i):
        """Dense float64 copy of vector ``i``."""
        if self.is_sparse:
            return self.vectors.getrow(i).toarray().ravel()
        return self.vectors[i]

    def subset(self, indices):
        indices = np.asarray(indices, dtype=np.int64)
        lt = None if self.labels_true is None else self.labels_true[indices]
        return Dataset(self.vectors[indices], labels_true=lt)

    def normalized(self):
        """Copy with every row scaled to unit L2 norm. Zero rows are rejected."""
        self.check_cosine_compatible()
        inv = 1.0 / np.sqrt(self.sq_norms)
        if self.is_sparse:
            X = sp.diags(inv) @ self.vectors
        else:
            X = self.vectors * inv[:, None]
        return Dataset(X, labels_true=self.labels_true)

    def check_cosine_compatible(self):
        zero = np.flatnonzero(self.sq_norms <= 0.0)
        if zero.size:
            raise DataError(f"cosine metric requires nonzero vectors; row {zero[0]} has zero norm")

    def csr_parts(self):
        """``(dense, indptr, indices, values)`` with dummies for the unused layout."""
        if self.is_sparse:
            X = self.vectors
            return np.empty((0, 0)), X.indptr.astype(np.int64), X.indices.astype(np.int64), X.data
        empty_i = np.empty(0, dtype=np.int64)
        return self.vectors, empty_i, empty_i, np.empty(0)


@dataclass(eq=False)
class ClusterState:
    """Labels plus per-cluster sums.

    ``member_sq_sums[r]`` is the sum of ``x'x`` over members of ``r``; it is
    what the pairwise objective needs alongside ``comp`` and ``sizes``.
    """

    k: int
    labels: np.ndarray
    comp: np.ndarray
    sizes: np.ndarray
    comp_sq_norms: np.ndarray
    member_sq_sums: np.ndarray

    @classmethod
    def from_labels(cls, dataset, labels, k):
        labels = np.array(labels, dtype=np.int64, copy=True).ravel()
        if labels.shape[0] != dataset.n:
            raise ContractViolation(f"{labels.shape[0]} labels for {dataset.n} samples")
        if labels.size and (labels.min() < 0 or labels.max() >= k):
            raise ContractViolation(f"labels must lie in [0, {k})")
        state = cls(
            k=int(k),
            labels=labels,
            comp=np.zeros((k, dataset.d)),
            sizes=np.zeros(k, dtype=np.int64),
            comp_sq_norms=np.zeros(k),
            member_sq_sums=np.zeros(k),
        )
        return refresh_composites(state, dataset)

    def copy(self):
        return ClusterState(
            self.k,
            self.labels.copy(),
            self.comp.copy(),
            self.sizes.copy(),
            self.comp_sq_norms.copy(),
            self.member_sq_sums.copy(),
        )

    def centroids(self):
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.comp / self.sizes[:, None]


def cluster_sums(dataset, labels, k):
    """Per-cluster vector sums, sizes and member square-norm sums, from scratch."""
    n = dataset.n
    sizes = np.bincount(labels, minlength=k).astype(np.int64)
    indicator = sp.csr_matrix((np.ones(n), (labels, np.arange(n))), shape=(k, n))
    comp = indicator @ dataset.vectors
    if sp.issparse(comp):
        comp = comp.toarray()
    comp = np.ascontiguousarray(comp, dtype=np.float64)
    sq_sums = np.bincount(labels, weights=dataset.sq_norms, minlength=k)
    return comp, sizes, sq_sums


def refresh_composites(state, dataset):
    """Recompute every cached per-cluster quantity exactly from ``labels``."""
    comp, sizes, sq_sums = cluster_sums(dataset, state.labels, state.k)
    state.comp = comp
    state.sizes = sizes
    state.comp_sq_norms = np.einsum("ij,ij->i", comp, comp)
    state.member_sq_sums = sq_sums
    return state


def repair_empty_clusters(labels, k):
    """Give each empty cluster one sample taken from the current largest cluster.

    Within the donor the last sample (highest index) is moved, which keeps
    the rule deterministic for a fixed label array.
    """
    sizes = np.bincount(labels, minlength=k)
    for r in np.flatnonzero(sizes == 0):
        donor = int(np.argmax(sizes))
        i = int(np.flatnonzero(labels == donor)[-1])
        labels[i] = r
        sizes[donor] -= 1
        sizes[r] += 1
    return labels


def init_random_labels(dataset, k, rng_seed):
    """Uniform random labels in ``[0, k)`` with empty clusters repaired."""
    k = int(k)
    if k < 1 or k > dataset.n:
        raise InvalidConfigurationError(f"k must satisfy 1 <= k <= n (k={k}, n={dataset.n})")
    rng = np.random.default_rng(rng_seed)
    labels = rng.integers(0, k, size=dataset.n, dtype=np.int64)
    repair_empty_clusters(labels, k)
    return ClusterState.from_labels(dataset, labels, k)


def apply_move(state, i, w, v, x_i):
    """Move sample ``i`` from cluster ``w`` to ``v``, updating sums in place.

    Returns ``False`` and leaves the state untouched when the move would
    empty ``w``; any other precondition failure is a ``ContractViolation``.
    """
    if state.labels[i] != w:
        raise ContractViolation(f"sample {i} is in cluster {state.labels[i]}, not {w}")
    if w == v:
        raise ContractViolation("source and destination cluster are the same")
    if state.sizes[w] < 2:
        return False
    x = np.asarray(x_i, dtype=np.float64)
    sq = float(x @ x)
    xw = float(x @ state.comp[w])
    xv = float(x @ state.comp[v])
    state.labels[i] = v
    state.comp[w] -= x
    state.comp[v] += x
    state.sizes[w] -= 1
    state.sizes[v] += 1
    state.comp_sq_norms[w] += sq - 2.0 * xw
    state.comp_sq_norms[v] += sq + 2.0 * xv
    state.member_sq_sums[w] -= sq
    state.member_sq_sums[v] += sq
    return True

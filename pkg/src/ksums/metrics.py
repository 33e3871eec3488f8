"""Clustering quality: mean distortion, mean within-cluster pairwise distance, entropy."""
from dataclasses import dataclass

import numpy as np

from .data import cluster_sums
from .errors import InvalidConfigurationError


@dataclass
class QualityReport:
    e_m: float
    e_s: float
    entropy: float = None
    k_effective: int = 0


def _labels_of(state):
    return state.labels if hasattr(state, "labels") else np.asarray(state, dtype=np.int64)


def _k_of(state, labels):
    return state.k if hasattr(state, "k") else int(labels.max()) + 1


def eval_Em(dataset, state):
    """Mean squared distance from each sample to its cluster centroid.

    ``state`` may be a ``ClusterState`` or a bare label array. Centroids are
    recomputed from the labels, never taken from cached sums.
    """
    labels = _labels_of(state)
    k = _k_of(state, labels)
    comp, sizes, _ = cluster_sums(dataset, labels, k)
    safe = np.maximum(sizes, 1)[:, None]
    centroids = comp / safe
    if dataset.is_sparse:
        c_sq = np.einsum("ij,ij->i", centroids, centroids)
        cross = np.asarray(dataset.vectors.multiply(centroids[labels]).sum(axis=1)).ravel()
        per_sample = np.maximum(dataset.sq_norms - 2.0 * cross + c_sq[labels], 0.0)
        return float(per_sample.sum() / dataset.n)
    diff = dataset.vectors - centroids[labels]
    return float(np.einsum("ij,ij->", diff, diff) / dataset.n)


def eval_Es(dataset, state):
    """Within-cluster pairwise squared distances summed over ``i < j``, divided by ``n``.

    Uses ``sum_{i<j in S} ||x_i - x_j||^2 = n_S * sum_{i in S} x_i'x_i - D_S'D_S``.
    """
    labels = _labels_of(state)
    k = _k_of(state, labels)
    comp, sizes, sq_sums = cluster_sums(dataset, labels, k)
    per_cluster = sizes * sq_sums - np.einsum("ij,ij->i", comp, comp)
    return float(np.maximum(per_cluster, 0.0).sum() / dataset.n)


def eval_Es_bruteforce(dataset, labels):
    """O(n^2) reference for ``eval_Es``; for tests and small inputs only."""
    X = dataset.vectors.toarray() if dataset.is_sparse else dataset.vectors
    labels = np.asarray(labels)
    total = 0.0
    for r in np.unique(labels):
        M = X[labels == r]
        diff = M[:, None, :] - M[None, :, :]
        total += 0.5 * np.einsum("ijk,ijk->", diff, diff)
    return total / len(labels)


def contingency(labels, labels_true):
    """Cluster-by-class count table."""
    labels = np.asarray(labels, dtype=np.int64)
    labels_true = np.asarray(labels_true, dtype=np.int64)
    _, cl = np.unique(labels, return_inverse=True)
    k = cl.max() + 1
    c = labels_true.max() + 1
    table = np.zeros((k, c), dtype=np.int64)
    np.add.at(table, (cl, labels_true), 1)
    return table


def eval_entropy(state, labels_true, c=None):
    """Size-weighted class entropy of the clusters, normalized by ``log c``.

    0 means every cluster is class-pure; 1 means every cluster spreads
    uniformly over all ``c`` classes.
    """
    labels = _labels_of(state)
    labels_true = np.asarray(labels_true, dtype=np.int64)
    if c is None:
        c = int(labels_true.max()) + 1
    if c < 2:
        raise InvalidConfigurationError(f"entropy needs at least 2 classes, got c={c}")
    if labels_true.max() >= c:
        raise InvalidConfigurationError(f"class id {labels_true.max()} outside [0, {c})")
    table = contingency(labels, labels_true).astype(np.float64)
    n_r = table.sum(axis=1)
    p = table / n_r[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(p > 0, p * np.log(p), 0.0)
    h = -plogp.sum(axis=1) / np.log(c)
    return float(np.sum(n_r / n_r.sum() * h))


def quality_report(dataset, state, labels_true=None):
    labels = _labels_of(state)
    if labels_true is None:
        labels_true = dataset.labels_true
    entropy = None
    if labels_true is not None and int(np.max(labels_true)) >= 1:
        entropy = eval_entropy(labels, labels_true)
    return QualityReport(
        e_m=eval_Em(dataset, state),
        e_s=eval_Es(dataset, state),
        entropy=entropy,
        k_effective=int(np.unique(labels).size),
    )

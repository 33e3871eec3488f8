"""Distance kernels and driven (gain) functions.

Everything here is a pure function of composite vectors ``D``, sizes ``n``
and precomputed squared norms. The scalar ``_``-prefixed helpers take the
inner product ``x'D`` and ``D'D`` as numbers so that the optimizer loops can
reuse them after a single dot product per cluster.

Gains are signed so that a positive value always means the move pays off.
"""
from typing import NamedTuple

import numpy as np

from ._accel import njit
from .data import DistanceMetric
from .errors import ContractViolation, DegenerateClusterError

# driven-function selectors shared with the compiled loops
MODE_IM_L2 = 0
MODE_IM_COS = 1
MODE_IS = 2
MODE_HARTIGAN = 3


class DrivenGain(NamedTuple):
    gain: float
    v: int


@njit(cache=True)
def _l2_own(sq, dot, csq, n):
    nn = float(n)
    return (nn * nn * sq - 2.0 * nn * dot + csq) / (nn * nn)


@njit(cache=True)
def _l2_joined(sq, dot, csq, n):
    nn = float(n)
    return (nn * nn * sq - 2.0 * nn * dot + csq) / ((nn + 1.0) * (nn + 1.0))


@njit(cache=True)
def _cos_own(sq, dot, csq):
    den = np.sqrt(sq) * np.sqrt(csq)
    if not den > 0.0:
        raise DegenerateClusterError("zero-norm composite vector under cosine metric")
    return dot / den


@njit(cache=True)
def _cos_joined(sq, dot, csq):
    joined = csq + 2.0 * dot + sq
    if not joined > 0.0 or not sq > 0.0:
        raise DegenerateClusterError("zero-norm joined composite under cosine metric")
    return (dot + sq) / (np.sqrt(sq) * np.sqrt(joined))


@njit(cache=True)
def _pair_sum(sq, dot, sq_sum, n):
    return float(n) * sq - 2.0 * dot + sq_sum


@njit(cache=True)
def _hartigan_own(sq, dot, csq, n):
    # n_w/(n_w-1) * ||x - C_w||^2: distortion released by taking x out of w
    nn = float(n)
    return (nn * nn * sq - 2.0 * nn * dot + csq) / (nn * (nn - 1.0))


@njit(cache=True)
def _hartigan_joined(sq, dot, csq, n):
    # n_v/(n_v+1) * ||x - C_v||^2: distortion added by putting x into v
    nn = float(n)
    return (nn * nn * sq - 2.0 * nn * dot + csq) / (nn * (nn + 1.0))


@njit(cache=True)
def _own_value(mode, sq, dot, csq, n, sq_sum):
    if mode == MODE_IM_L2:
        return _l2_own(sq, dot, csq, n)
    elif mode == MODE_IM_COS:
        return _cos_own(sq, dot, csq)
    elif mode == MODE_IS:
        return _pair_sum(sq, dot, sq_sum, n)
    return _hartigan_own(sq, dot, csq, n)


@njit(cache=True)
def _gain(mode, own, sq, dot, csq, n, sq_sum):
    """Gain of moving a sample (with precomputed ``own`` term) into a cluster."""
    if mode == MODE_IM_L2:
        return own - _l2_joined(sq, dot, csq, n)
    elif mode == MODE_IM_COS:
        return _cos_joined(sq, dot, csq) - own
    elif mode == MODE_IS:
        return own - _pair_sum(sq, dot, sq_sum, n)
    return own - _hartigan_joined(sq, dot, csq, n)


def _as_vec(a):
    return np.asarray(a, dtype=np.float64).ravel()


def _check_size(n, name):
    if n < 1:
        raise ContractViolation(f"{name} must be >= 1, got {n}")


def dist_to_own_centroid(x, sq_x, D_w, n_w):
    """``||x - D_w/n_w||^2`` for a sample that belongs to the cluster."""
    _check_size(n_w, "n_w")
    D_w = _as_vec(D_w)
    return float(_l2_own(float(sq_x), float(_as_vec(x) @ D_w), float(D_w @ D_w), int(n_w)))


def dist_to_candidate_centroid(x, sq_x, D_v, n_v):
    """Distance from ``x`` to the centroid ``(D_v + x)/(n_v + 1)`` of the cluster it would join."""
    _check_size(n_v, "n_v")
    D_v = _as_vec(D_v)
    return float(_l2_joined(float(sq_x), float(_as_vec(x) @ D_v), float(D_v @ D_v), int(n_v)))


def cosine_to_own_centroid(x, sq_x, D_w, sq_Dw):
    return float(_cos_own(float(sq_x), float(_as_vec(x) @ _as_vec(D_w)), float(sq_Dw)))


def cosine_to_candidate_centroid(x, sq_x, D_v, sq_Dv):
    """Cosine similarity between ``x`` and ``D_v + x``."""
    return float(_cos_joined(float(sq_x), float(_as_vec(x) @ _as_vec(D_v)), float(sq_Dv)))


def dist_to_cluster_sum(x, sq_x, D, n, sum_sq_members, x_in_cluster=True):
    """Summed squared distance from ``x`` to every member of a cluster.

    The same expression covers both a cluster holding ``x`` (its own term
    cancels to zero) and one ``x`` would join; ``x_in_cluster`` only selects
    which precondition is checked.
    """
    if x_in_cluster:
        _check_size(n, "n")
    elif n < 0:
        raise ContractViolation("n must be non-negative")
    return float(_pair_sum(float(sq_x), float(_as_vec(x) @ _as_vec(D)), float(sum_sq_members), int(n)))


def gain_Im(x, sq_x, D_w, n_w, D_v, n_v, metric=DistanceMetric.SQUARED_L2, w=None, v=None):
    if w is not None and w == v:
        return 0.0
    metric = DistanceMetric.parse(metric)
    if metric is DistanceMetric.SQUARED_L2:
        return dist_to_own_centroid(x, sq_x, D_w, n_w) - dist_to_candidate_centroid(x, sq_x, D_v, n_v)
    _check_size(n_w, "n_w")
    _check_size(n_v, "n_v")
    D_w, D_v = _as_vec(D_w), _as_vec(D_v)
    return cosine_to_candidate_centroid(x, sq_x, D_v, D_v @ D_v) - cosine_to_own_centroid(x, sq_x, D_w, D_w @ D_w)


def gain_Is(x, sq_x, D_w, n_w, sumsq_w, D_v, n_v, sumsq_v, w=None, v=None):
    """Exact drop of the within-cluster pairwise objective if ``x`` moves w -> v."""
    if w is not None and w == v:
        return 0.0
    _check_size(n_w, "n_w")
    _check_size(n_v, "n_v")
    return dist_to_cluster_sum(x, sq_x, D_w, n_w, sumsq_w, True) - dist_to_cluster_sum(
        x, sq_x, D_v, n_v, sumsq_v, False
    )


def gain_hartigan(x, sq_x, D_w, n_w, D_v, n_v):
    """Exact drop of the total k-means distortion if ``x`` moves w -> v (needs ``n_w >= 2``)."""
    if n_w < 2:
        raise ContractViolation("Hartigan moves out of singleton clusters are undefined")
    _check_size(n_v, "n_v")
    x, D_w, D_v = _as_vec(x), _as_vec(D_w), _as_vec(D_v)
    own = _hartigan_own(float(sq_x), float(x @ D_w), float(D_w @ D_w), int(n_w))
    return float(own - _hartigan_joined(float(sq_x), float(x @ D_v), float(D_v @ D_v), int(n_v)))


def mode_for(algo, metric):
    from .optimizer import Algo

    metric = DistanceMetric.parse(metric)
    if algo is Algo.KSUMS_IM:
        return MODE_IM_COS if metric is DistanceMetric.COSINE else MODE_IM_L2
    if algo is Algo.KSUMS_IS:
        return MODE_IS
    if algo is Algo.HARTIGAN:
        return MODE_HARTIGAN
    raise ContractViolation(f"no driven function for {algo}")


def sample_gains(mode, sq, dots, comp_sq, sizes, sq_sums, w):
    """Gains of moving one sample out of ``w`` into every cluster, as an array.

    ``dots[r]`` is ``x'D_r``. Entry ``w`` is set to 0 (staying put). Used by
    the numpy backend and the fixed-point audit.
    """
    dots = np.asarray(dots, dtype=np.float64)
    n = sizes.astype(np.float64)
    if mode == MODE_IM_L2:
        own = _l2_own(sq, dots[w], comp_sq[w], sizes[w])
        cand = (n * n * sq - 2.0 * n * dots + comp_sq) / ((n + 1.0) ** 2)
        g = own - cand
    elif mode == MODE_IM_COS:
        own = _cos_own(sq, dots[w], comp_sq[w])
        joined = comp_sq + 2.0 * dots + sq
        bad = ~(joined > 0.0)
        bad[w] = False
        if bad.any() or not sq > 0.0:
            raise DegenerateClusterError("zero-norm joined composite under cosine metric")
        with np.errstate(invalid="ignore", divide="ignore"):
            g = (dots + sq) / (np.sqrt(sq) * np.sqrt(joined)) - own
    elif mode == MODE_IS:
        own = _pair_sum(sq, dots[w], sq_sums[w], sizes[w])
        g = own - (n * sq - 2.0 * dots + sq_sums)
    else:
        own = _hartigan_own(sq, dots[w], comp_sq[w], sizes[w])
        g = own - (n * n * sq - 2.0 * n * dots + comp_sq) / (n * (n + 1.0))
    g[w] = 0.0
    return g


def best_move(x, sq_x, w, comp, sizes, comp_sq=None, sq_sums=None, mode=MODE_IM_L2):
    """Scan every cluster for the most profitable destination of ``x``.

    Returns ``DrivenGain(0.0, w)`` when no move has strictly positive gain.
    Ties go to the lowest cluster index.
    """
    comp = np.asarray(comp, dtype=np.float64)
    sizes = np.asarray(sizes)
    if comp_sq is None:
        comp_sq = np.einsum("ij,ij->i", comp, comp)
    if sq_sums is None:
        if mode == MODE_IS:
            raise ContractViolation("pairwise mode needs per-cluster member square-norm sums")
        sq_sums = np.zeros(len(sizes))
    if sizes[w] < 2:
        return DrivenGain(0.0, int(w))
    g = sample_gains(mode, float(sq_x), comp @ _as_vec(x), comp_sq, sizes, sq_sums, w)
    v = int(np.argmax(g))
    if g[v] > 0.0:
        return DrivenGain(float(g[v]), v)
    return DrivenGain(0.0, int(w))

import itertools

import numpy as np
import pytest

from ksums import Dataset


def brute_pairwise(X, labels):
    """Sum over clusters of sum_{i<j} ||x_i - x_j||^2, by explicit double loop."""
    total = 0.0
    n = len(labels)
    for i in range(n):
        for j in range(i + 1, n):
            if labels[i] == labels[j]:
                diff = X[i] - X[j]
                total += float(diff @ diff)
    return total


def brute_distortion(X, labels):
    """Sum of squared distances to explicit cluster means."""
    total = 0.0
    for r in np.unique(labels):
        M = X[labels == r]
        total += float(((M - M.mean(axis=0)) ** 2).sum())
    return total


def all_partitions(n, k):
    """Every label array in [0,k)^n that uses all k labels, as an (m, n) int array."""
    grid = np.array(list(itertools.product(range(k), repeat=n)), dtype=np.int8)
    used = np.ones(len(grid), dtype=bool)
    for r in range(k):
        used &= (grid == r).any(axis=1)
    return grid[used]


def exhaustive_optima(X, k, partitions=None):
    """Global minima of total distortion and total pairwise distance over k-partitions."""
    n = X.shape[0]
    P = all_partitions(n, k) if partitions is None else partitions
    sq = np.einsum("ij,ij->i", X, X)
    sse = np.zeros(len(P))
    pair = np.zeros(len(P))
    for r in range(k):
        mask = (P == r).astype(np.float64)
        size = mask.sum(axis=1)
        D = mask @ X
        s = mask @ sq
        dd = np.einsum("ij,ij->i", D, D)
        sse += s - dd / size
        pair += size * s - dd
    return sse.min(), pair.min(), P[sse.argmin()], P[pair.argmin()]


@pytest.fixture
def two_pairs():
    return Dataset(np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]]))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_acceptance = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    if name.startswith("test_criterion_"):
        if hasattr(report, "wasxfail"):
            _acceptance[name] = "FAIL (known shortfall: " + report.wasxfail + ")"
        else:
            _acceptance[name] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance):
        num, label = name[len("test_criterion_"):].split("_", 1)
        terminalreporter.write_line(f"criterion {int(num):2d} {label.replace('_', ' ')}: {_acceptance[name]}")

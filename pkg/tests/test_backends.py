import os
import subprocess
import sys

import numpy as np
import pytest
import scipy.sparse as sp

from ksums import Algo, Dataset, RunConfig, _accel
from ksums.io import generate_synthetic
from ksums.variants import run_algorithm

pytestmark = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba unavailable")


def _both(ds, cfg):
    out = {}
    for name in ("numba", "numpy"):
        with _accel.force_backend(name):
            out[name] = run_algorithm(ds, cfg)
    return out["numba"], out["numpy"]


@pytest.mark.parametrize("algo", [a for a in Algo])
def test_backends_agree_dense(algo):
    ds = generate_synthetic(600, 6, 5, 8.0, 1)
    (a, ha), (b, hb) = _both(ds, RunConfig(algo, k=5, seed=3))
    assert np.array_equal(a.labels, b.labels)
    np.testing.assert_allclose(ha.column("e_m"), hb.column("e_m"), rtol=1e-9)
    assert ha.column("moves").tolist() == hb.column("moves").tolist()


@pytest.mark.parametrize("algo", [Algo.KSUMS_IM, Algo.KSUMS_IS, Algo.LLOYD, Algo.SEQ_KMEANS])
def test_backends_agree_sparse(algo):
    rng = np.random.default_rng(0)
    X = rng.random((200, 40)) * (rng.random((200, 40)) < 0.2)
    ds = Dataset(sp.csr_matrix(X))
    (a, _), (b, _) = _both(ds, RunConfig(algo, k=4, seed=0))
    assert np.array_equal(a.labels, b.labels)


def test_backends_agree_cosine():
    ds = generate_synthetic(400, 5, 4, 6.0, 2).normalized()
    for algo in (Algo.KSUMS_IM, Algo.KSUMS_IS, Algo.SEQ_KSUMS):
        (a, _), (b, _) = _both(ds, RunConfig(algo, k=4, seed=1, metric="cosine"))
        assert np.array_equal(a.labels, b.labels)


def test_env_flag_disables_numba():
    env = dict(os.environ, KSUMS_DISABLE_NUMBA="1")
    code = "from ksums import _accel; print(_accel.backend_name(), _accel.HAVE_NUMBA)"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["numpy", "False"]


def test_run_without_numba_matches(tmp_path):
    ds = generate_synthetic(300, 4, 3, 10.0, 0)
    ref, _ = run_algorithm(ds, RunConfig(Algo.KSUMS_IM, k=3, seed=0))
    env = dict(os.environ, KSUMS_DISABLE_NUMBA="1")
    code = ("from ksums import RunConfig, run; from ksums.io import generate_synthetic;"
            "s, _ = run(generate_synthetic(300, 4, 3, 10.0, 0), RunConfig('ksums-im', k=3, seed=0));"
            "print(' '.join(map(str, s.labels)))")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == [str(x) for x in ref.labels]

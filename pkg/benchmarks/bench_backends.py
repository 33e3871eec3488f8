"""Time the numba and pure-numpy backends on the same runs.

    python benchmarks/bench_backends.py --n 20000 --d 32 --k 64 --iters 3
"""
import argparse
import time

import numpy as np

from ksums import Algo, RunConfig, _accel
from ksums.io import generate_synthetic
from ksums.variants import run_algorithm

ALGOS = [Algo.KSUMS_IM, Algo.KSUMS_IS, Algo.HARTIGAN, Algo.LLOYD, Algo.SEQ_KMEANS]


def time_run(ds, cfg, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        state, hist = run_algorithm(ds, cfg)
        best = min(best, time.perf_counter() - t0)
    return best, state, hist


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=20000)
    p.add_argument("--d", type=int, default=32)
    p.add_argument("--k", type=int, default=64)
    p.add_argument("--iters", type=int, default=3)
    p.add_argument("--repeat", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is unavailable or disabled; nothing to compare")

    ds = generate_synthetic(args.n, args.d, args.k, 6.0, args.seed)
    warm = generate_synthetic(500, args.d, 4, 6.0, 0)
    with _accel.force_backend("numba"):
        for a in ALGOS:
            run_algorithm(warm, RunConfig(a, k=4, max_iters=1))

    print(f"n={args.n} d={args.d} k={args.k} max_iters={args.iters} (best of {args.repeat})")
    print(f"{'algo':<12}{'numba s':>10}{'numpy s':>10}{'speedup':>9}  labels")
    for a in ALGOS:
        cfg = RunConfig(a, k=args.k, seed=args.seed, max_iters=args.iters)
        out = {}
        for backend in ("numba", "numpy"):
            with _accel.force_backend(backend):
                out[backend] = time_run(ds, cfg, args.repeat)
        same = np.array_equal(out["numba"][1].labels, out["numpy"][1].labels)
        t_nb, t_np = out["numba"][0], out["numpy"][0]
        print(f"{a.value:<12}{t_nb:>10.3f}{t_np:>10.3f}{t_np / t_nb:>8.1f}x  {'same' if same else 'DIFFER'}")


if __name__ == "__main__":
    main()

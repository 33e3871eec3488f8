"""Command line entry point: ``ksums {cluster,bench,gen,eval}``.

Exit codes: 0 ok, 2 configuration error, 3 data error, 4 degenerate cluster.
"""
import argparse
import logging
import sys

from . import _accel
from .errors import DataError, KSumsError
from .experiment import ExperimentSpec, read_labels, run_bench, run_experiment
from .io import FileFormat, generate_synthetic, load, write_csv, write_fvecs
from .metrics import quality_report
from .optimizer import Algo

log = logging.getLogger("ksums")

ALGO_CHOICES = [a.value for a in Algo]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _add_input(p):
    p.add_argument("--in", dest="input", required=True, help="input dataset path")
    p.add_argument("--format", choices=[f.value for f in FileFormat], help="input format (default: from extension)")
    p.add_argument("--labels-last", action="store_true", help="csv: last column is the ground-truth class")
    p.add_argument("--true-labels", help="file with one ground-truth class id per line")
    p.add_argument("--normalize", action="store_true", help="l2-normalize rows before clustering")


def _add_run(p):
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--metric", choices=["l2", "cosine"], default="l2")
    p.add_argument("--seed", type=int, default=0, help="seed of the first run; run r uses seed+r")
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--min-moves", type=int, default=0)
    p.add_argument("--split", choices=["largest", "loosest"], default="largest",
                   help="bisecting: which cluster to split next")
    p.add_argument("--out-history")
    p.add_argument("--out-report")
    p.add_argument("--no-timing", action="store_true",
                   help="write elapsed_ms as 0 so that output files are byte-reproducible")


def build_parser():
    parser = _Parser(prog="ksums", description="k-sums clustering and baselines")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("cluster", help="run one algorithm on one dataset")
    _add_input(p)
    p.add_argument("--algo", choices=ALGO_CHOICES, default=Algo.KSUMS_IM.value)
    _add_run(p)
    p.add_argument("--out-labels")

    p = sub.add_parser("bench", help="run several algorithms with identical seeds")
    _add_input(p)
    p.add_argument("--algo", dest="algos", action="append", choices=ALGO_CHOICES,
                   help="repeat for each algorithm (default: ksums-im, ksums-is, lloyd, kmeans++, hartigan)")
    _add_run(p)

    p = sub.add_parser("gen", help="write a synthetic Gaussian-blob dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--k-true", type=int, required=True)
    p.add_argument("--separation", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["csv", "fvecs"], default="csv",
                   help="csv carries the class in the last column; fvecs needs --out-true-labels for it")
    p.add_argument("--out-true-labels", help="also write class ids, one per line")

    p = sub.add_parser("eval", help="recompute quality metrics for a labels file")
    _add_input(p)
    p.add_argument("--labels", required=True, help="labels csv with header index,cluster")
    p.add_argument("--out-report")
    return parser


def _load(args):
    return load(args.input, args.format, labels_last=args.labels_last, normalize=args.normalize,
                labels_path=args.true_labels)


def _spec(args, algo):
    return ExperimentSpec(
        algo=algo, k=args.k, metric=args.metric, seed=args.seed, runs=args.runs,
        max_iters=args.max_iters, min_moves=args.min_moves, split=args.split,
        out_labels=getattr(args, "out_labels", None), out_history=args.out_history,
        out_report=args.out_report, timing=not args.no_timing,
    )


def _print_best(res, stream):
    best = res.best_run
    rep = best.report
    ent = "" if rep.entropy is None else f" entropy={rep.entropy:.6f}"
    print(f"{res.spec.algo.value}: best run {best.run} (seed {best.seed}) "
          f"E_m={rep.e_m:.6g} E_s={rep.e_s:.6g}{ent} iterations={best.history.iterations}", file=stream)


def cmd_cluster(args):
    ds = _load(args)
    res = run_experiment(ds, _spec(args, args.algo))
    _print_best(res, sys.stdout)


def cmd_bench(args):
    ds = _load(args)
    algos = args.algos or ["ksums-im", "ksums-is", "lloyd", "kmeans++", "hartigan"]
    results = run_bench(ds, algos, _spec(args, algos[0]))
    for res in results.values():
        _print_best(res, sys.stdout)


def cmd_gen(args):
    ds = generate_synthetic(args.n, args.d, args.k_true, args.separation, args.seed)
    if args.format == "csv":
        write_csv(args.out, ds.vectors, ds.labels_true)
    else:
        write_fvecs(args.out, ds.vectors)
    if args.out_true_labels:
        with open(args.out_true_labels, "w") as f:
            f.writelines(f"{int(c)}\n" for c in ds.labels_true)


def cmd_eval(args):
    ds = _load(args)
    labels = read_labels(args.labels)
    if labels.shape[0] != ds.n:
        raise DataError(f"{args.labels}: {labels.shape[0]} labels for {ds.n} samples")
    rep = quality_report(ds, labels)
    ent = "" if rep.entropy is None else repr(rep.entropy)
    line = f"E_m={rep.e_m!r} E_s={rep.e_s!r} entropy={ent or 'n/a'} k_effective={rep.k_effective}"
    print(line)
    if args.out_report:
        with open(args.out_report, "w") as f:
            f.write("E_m,E_s,entropy,k_effective\n")
            f.write(f"{rep.e_m!r},{rep.e_s!r},{ent},{rep.k_effective}\n")


COMMANDS = {"cluster": cmd_cluster, "bench": cmd_bench, "gen": cmd_gen, "eval": cmd_eval}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    log.debug("backend: %s", _accel.backend_name())
    try:
        COMMANDS[args.command](args)
    except KSumsError as exc:
        print(f"ksums: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"ksums: error: {exc}", file=sys.stderr)
        return DataError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Multi-run experiments and their CSV outputs."""
import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import DistanceMetric
from .errors import DataError, InvalidConfigurationError, KSumsError
from .metrics import quality_report
from .optimizer import Algo, RunConfig
from .variants import run_algorithm

HISTORY_HEADER = ["run", "iter", "E_m", "E_s", "moves", "elapsed_ms"]
REPORT_HEADER = ["run", "seed", "iterations", "E_m", "E_s", "entropy", "k_effective", "best"]


@dataclass
class ExperimentSpec:
    algo: Algo
    k: int
    metric: DistanceMetric = DistanceMetric.SQUARED_L2
    seed: int = 0
    runs: int = 1
    max_iters: int = 100
    min_moves: int = 0
    split: str = "largest"
    out_labels: Path = None
    out_history: Path = None
    out_report: Path = None
    timing: bool = True

    def __post_init__(self):
        self.algo = Algo.parse(self.algo)
        self.metric = DistanceMetric.parse(self.metric)
        if int(self.runs) < 1:
            raise InvalidConfigurationError(f"runs must be >= 1, got {self.runs}")

    @property
    def seeds(self):
        return [int(self.seed) + r for r in range(int(self.runs))]

    def config(self, seed):
        return RunConfig(self.algo, self.k, self.metric, seed, self.max_iters, self.min_moves)


@dataclass
class RunResult:
    run: int
    seed: int
    state: object
    history: object
    report: object


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    runs: list = field(default_factory=list)
    best: int = 0

    @property
    def best_run(self):
        return self.runs[self.best]


def selection_key(algo):
    """Objective used to pick the best run: pairwise for the I_s family, distortion otherwise."""
    return "e_s" if algo in (Algo.KSUMS_IS, Algo.BISECT_KSUMS_IS) else "e_m"


def check_cosine_input(dataset, metric):
    if metric is DistanceMetric.COSINE:
        dataset.check_cosine_compatible()
        if not np.allclose(dataset.sq_norms, 1.0, rtol=0.0, atol=1e-9):
            raise DataError("cosine metric needs l2-normalized rows; pass --normalize")


def run_experiment(dataset, spec):
    """Execute ``spec.runs`` seeded runs and write whichever outputs are configured."""
    check_cosine_input(dataset, spec.metric)
    result = ExperimentResult(spec)
    for r, seed in enumerate(spec.seeds):
        try:
            state, history = run_algorithm(dataset, spec.config(seed), split=spec.split)
        except KSumsError as exc:
            exc.args = (f"run {r} (seed {seed}): {exc}",) + exc.args[1:]
            raise
        result.runs.append(RunResult(r, seed, state, history, quality_report(dataset, state)))
    key = selection_key(spec.algo)
    scores = [getattr(rr.report, key) for rr in result.runs]
    result.best = int(np.argmin(scores))
    if spec.out_labels:
        write_labels(spec.out_labels, result.best_run.state.labels)
    if spec.out_history:
        write_history(spec.out_history, [(rr.run, rr.history) for rr in result.runs], timing=spec.timing)
    if spec.out_report:
        write_report(spec.out_report, result)
    return result


def _fmt(x):
    return repr(float(x))


def write_labels(path, labels):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["index", "cluster"])
        for i, c in enumerate(labels):
            w.writerow([i, int(c)])


def read_labels(path):
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or rows[0] != ["index", "cluster"]:
        raise DataError(f"{path}: expected header 'index,cluster'")
    body = rows[1:]
    labels = np.empty(len(body), dtype=np.int64)
    seen = np.zeros(len(body), dtype=bool)
    for lineno, rec in enumerate(body, start=2):
        try:
            i, c = int(rec[0]), int(rec[1])
        except (ValueError, IndexError):
            raise DataError(f"{path}: line {lineno}: malformed row") from None
        if not 0 <= i < len(body) or seen[i]:
            raise DataError(f"{path}: line {lineno}: bad or duplicate index {i}")
        labels[i] = c
        seen[i] = True
    return labels


def history_rows(run, history, timing=True):
    for rec in history.per_iteration:
        yield [run, rec.iter, _fmt(rec.e_m), _fmt(rec.e_s), rec.moves,
               f"{rec.elapsed_ms:.3f}" if timing else "0"]


def write_history(path, histories, timing=True, prefix=None):
    """``histories`` is a list of ``(run, ObjectiveHistory)``; ``prefix`` adds leading columns."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(([] if prefix is None else list(prefix[0])) + HISTORY_HEADER)
        for idx, (run, h) in enumerate(histories):
            lead = [] if prefix is None else list(prefix[1][idx])
            for row in history_rows(run, h, timing):
                w.writerow(lead + row)


def report_rows(result):
    for rr in result.runs:
        rep = rr.report
        yield [rr.run, rr.seed, rr.history.iterations, _fmt(rep.e_m), _fmt(rep.e_s),
               "" if rep.entropy is None else _fmt(rep.entropy), rep.k_effective,
               int(rr.run == result.best)]


def write_report(path, result):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        w.writerows(report_rows(result))


def run_bench(dataset, algos, base_spec):
    """Same seeds and settings for every algorithm in ``algos``."""
    results = {}
    for algo in algos:
        spec = ExperimentSpec(algo, base_spec.k, base_spec.metric, base_spec.seed, base_spec.runs,
                              base_spec.max_iters, base_spec.min_moves, base_spec.split)
        results[spec.algo] = run_experiment(dataset, spec)
    if base_spec.out_history:
        hist, lead = [], []
        for algo, res in results.items():
            for rr in res.runs:
                hist.append((rr.run, rr.history))
                lead.append([algo.value])
        write_history(base_spec.out_history, hist, timing=base_spec.timing, prefix=(["algo"], lead))
    if base_spec.out_report:
        with open(base_spec.out_report, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["algo"] + REPORT_HEADER)
            for algo, res in results.items():
                for row in report_rows(res):
                    w.writerow([algo.value] + row)
    return results

"""k-sums clustering: stochastic single-sample moves on composite (sum) vectors."""
from ._accel import backend_name, force_backend
from .data import (ClusterState, Dataset, DistanceMetric, apply_move, init_random_labels,
                   refresh_composites)
from .errors import (ContractViolation, DataError, DegenerateClusterError, InvalidConfigurationError,
                     KSumsError, ParseError)
from .io import FileFormat, generate_synthetic, load
from .metrics import QualityReport, eval_Em, eval_entropy, eval_Es, quality_report
from .optimizer import Algo, ObjectiveHistory, RunConfig, converged_no_move_check, run
from .variants import (bisecting_run, hartigan_run, kmeanspp_seed, lloyd_kmeans, run_algorithm,
                       sequential_kmeans, sequential_ksums)

__version__ = "0.1.0"

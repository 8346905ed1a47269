"""Multi-threaded diagonal-covariance Gaussian mixture modelling.

Parallel k-means initialisation and EM fitting with log-domain numerical
stability, plus scoring, hard assignment, histograms, sampling, and a
persistent text model format.
"""

from .config import DIST_EUCL, DIST_MAHA, FitConfig, FitReport, SeedMode
from .em import Accumulators, accumulate_chunk, em_fit, learn, reduce_and_update, responsibilities
from .errors import DataError, FitError, GmmError, ModelFormatError
from .inference import AssignMode, assign, assign_batch, generate, norm_hist, raw_hist
from .kmeans import (
    DistMode,
    KmResult,
    KmState,
    dist,
    global_diag_cov,
    kmeans_iterate,
    resurrect_dead_means,
    run_kmeans,
    seed_means,
)
from .likelihood import (
    GaussConstants,
    avg_log_p,
    log_add,
    log_gauss,
    log_p,
    log_p_batch,
    log_p_comp,
    log_p_comp_batch,
)
from .model import GmmModel, as_dataset

__version__ = "0.1.0"

__all__ = [
    "Accumulators",
    "AssignMode",
    "DIST_EUCL",
    "DIST_MAHA",
    "DataError",
    "DistMode",
    "FitConfig",
    "FitError",
    "FitReport",
    "GaussConstants",
    "GmmError",
    "GmmModel",
    "KmResult",
    "KmState",
    "ModelFormatError",
    "SeedMode",
    "accumulate_chunk",
    "as_dataset",
    "assign",
    "assign_batch",
    "avg_log_p",
    "dist",
    "em_fit",
    "generate",
    "global_diag_cov",
    "kmeans_iterate",
    "learn",
    "log_add",
    "log_gauss",
    "log_p",
    "log_p_batch",
    "log_p_comp",
    "log_p_comp_batch",
    "norm_hist",
    "raw_hist",
    "reduce_and_update",
    "responsibilities",
    "resurrect_dead_means",
    "run_kmeans",
    "seed_means",
]

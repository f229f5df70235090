"""hyplab: a desk-scale laboratory for random-hyperplane normal vectors,
least singular values, and eigenvectors of iid random matrices."""

from .errors import (
    DegenerateEnsembleError,
    HyplabError,
    InvalidConfigError,
    MissingStreamError,
    NonConvergedError,
    RankDeficientError,
    SingularMatrixError,
)
from .experiments import ExperimentConfig, ExperimentReport, calibrate, run_experiment
from .hyperplane import (
    inner_product_statistic,
    min_coord_statistic,
    normal_vector,
    sup_norm_statistic,
)
from .linalg import (
    Eigenpair,
    SvdResult,
    neg_second_moment_check,
    null_vector,
    project_complement,
    qr_decompose,
    row_distances,
    smallest_modulus_eigenpair,
    solve,
    svd,
)
from .references import (
    edelman_cdf,
    gaussian_min_bound,
    gaussian_sup_bound,
    std_normal_cdf,
)
from .rng import (
    DistSpec,
    RngStream,
    make_stream,
    parse_dist_token,
    sample_matrix,
    sample_scalar,
    sample_sphere_uniform,
)
from .stats import (
    EmpiricalDistribution,
    Histogram,
    histogram,
    ks_one_sample,
    ks_two_sample,
    moments,
)
from .unit_vector import UnitVector

__version__ = "0.1.0"

__all__ = [
    "DegenerateEnsembleError",
    "DistSpec",
    "Eigenpair",
    "EmpiricalDistribution",
    "ExperimentConfig",
    "ExperimentReport",
    "Histogram",
    "HyplabError",
    "InvalidConfigError",
    "MissingStreamError",
    "NonConvergedError",
    "RankDeficientError",
    "RngStream",
    "SingularMatrixError",
    "SvdResult",
    "UnitVector",
    "calibrate",
    "edelman_cdf",
    "gaussian_min_bound",
    "gaussian_sup_bound",
    "histogram",
    "inner_product_statistic",
    "ks_one_sample",
    "ks_two_sample",
    "make_stream",
    "min_coord_statistic",
    "moments",
    "neg_second_moment_check",
    "normal_vector",
    "null_vector",
    "parse_dist_token",
    "project_complement",
    "qr_decompose",
    "row_distances",
    "run_experiment",
    "sample_matrix",
    "sample_scalar",
    "sample_sphere_uniform",
    "smallest_modulus_eigenpair",
    "solve",
    "std_normal_cdf",
    "sup_norm_statistic",
    "svd",
]

"""Kernel (HSIC) tests of independence and mean independence for dependent
functional data, calibrated with a Gaussian wild bootstrap."""

from .bootstrap import (
    MultiplierConfig,
    TestReport,
    block_length,
    draw_multipliers,
    hsic_q_star,
    hsic_star,
    ma_weights,
    wild_bootstrap_test,
)
from .dgp import (
    concurrent_regression,
    fgarch,
    gp_exp_cov,
    har1,
    min_kernel_operator,
    setar,
    wiener,
)
from .errors import (
    ConfigurationError,
    DataError,
    DegenerateSampleError,
    DimensionError,
    HsicTestError,
    InsufficientSampleError,
    InvalidGridError,
    NumericalError,
)
from .experiment import RejectionTable, Scenario, autodep_scan, named_scenario, run_scenario
from .grid import FunctionalSample, Grid, distance, inner_product, make_uniform_grid, norm, read_sample_csv
from .hsic import PRESETS, HsicValue, hsic_pair, hsic_q, hsic_v
from .kernels import EmbeddingSpec, KernelSpec, double_center, embed_to_l2, gram, kernel_eval, median_heuristic

__version__ = "0.1.0"

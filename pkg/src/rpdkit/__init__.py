"""Random operator-valued positive definite kernels and moment dilations at finite scale."""
from .dilation import (
    DilationTriple,
    MomentKernel,
    RandomOperator,
    build_dilation,
    build_shift,
    moment_kernel,
    shift_domination,
    verify_dilation,
    von_neumann_check,
)
from .gaussian import (
    GaussianRealization,
    SeededRng,
    empirical_kernel,
    rank_one_random_kernel,
    sample_paths,
    truncated_realization,
    truncation_energy,
)
from .kernels import (
    GenerativeKernel,
    OperatorKernel,
    RandomKernel,
    assemble_gram,
    check_pd,
    check_rpd,
    is_pathwise_pd,
    mean_kernel,
    scalarize,
    shift_kernel,
)
from .kolmogorov import KolmogorovFactor, factorize, reconstruction_error, trace_diagonal

__version__ = "0.1.0"

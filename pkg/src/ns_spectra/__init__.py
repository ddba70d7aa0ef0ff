"""Newton-Schulz orthogonalization and singular value scaling of random matrices."""

__version__ = "0.1.0"

from .errors import ConfigurationError, DegenerateInputError, DimensionError, NumericalError
from .gaussian import GaussianSpec, Shape, derive_trial_seed, generate
from .linalg import (
    SvdResult,
    frobenius_norm,
    matmul,
    normalize_frobenius,
    orthogonality_residual,
    singular_values,
    svd,
)
from .mp_law import EmpiricalDistribution, MpParams, ks_statistic, mp_cdf, mp_density, mp_quantile
from .newton_schulz import (
    DEFAULT_COEFFICIENTS,
    IterationTrace,
    NsCoefficients,
    NsSchedule,
    ns_run,
    ns_step,
    scalar_iterate,
    scalar_polynomial,
)
from .experiments import (
    FitResult,
    SweepConfig,
    SweepResult,
    fit_power_law,
    median_sval_per_size,
    min_iterations_for_band,
    run_sweep,
)

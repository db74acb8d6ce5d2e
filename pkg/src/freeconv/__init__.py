"""freeconv: free-probability transform calculus at moment level.

Exact rational engines for boolean/free cumulants, additive and
multiplicative free convolution, subordination, mixed moments of free
families over non-crossing partitions, a moment-level test of the
semicircle characterization by freeness of linear and quadratic forms,
and a random-matrix Monte Carlo lab.
"""

__version__ = "0.1.0"

from .errors import ConvergenceError, DomainError, FreeconvError, ParseError
from .measures import (
    Atomic,
    DensityGrid,
    Measure,
    MomentSequence,
    Semicircle,
    krein_k,
    measure_from_json,
    measure_to_json,
    moments,
    psi,
)
from .transforms import (
    BooleanCumulants,
    FreeCumulants,
    PowerSeries,
    boolean_from_moments,
    free_from_moments,
    krein_expansion_check,
    moments_from_boolean,
    moments_from_free,
)
from .word_engine import (
    NonCrossingPartition,
    Word,
    alternating_centered_check,
    catalan,
    enumerate_nc,
    mixed_moment,
)
from .convolution import (
    boxplus_moments,
    boxtimes_fractional_closure_check,
    boxtimes_moments,
    boxtimes_word_oracle,
    fractional_diagnostics,
    solve_subordination,
)
from .characterize import (
    QuadraticFormSpec,
    freeness_dichotomy,
    joint_moment,
    preset_sample_mean_variance,
    validate_spec,
)
from .matrix_lab import (
    MatrixEnsembleSpec,
    estimate_word_trace,
    ncLp_norm,
    sample_family,
    verify_inequalities,
)

__all__ = [
    "__version__",
    "FreeconvError",
    "ParseError",
    "DomainError",
    "ConvergenceError",
    "Atomic",
    "Semicircle",
    "DensityGrid",
    "Measure",
    "MomentSequence",
    "moments",
    "psi",
    "krein_k",
    "measure_from_json",
    "measure_to_json",
    "PowerSeries",
    "BooleanCumulants",
    "FreeCumulants",
    "boolean_from_moments",
    "moments_from_boolean",
    "free_from_moments",
    "moments_from_free",
    "krein_expansion_check",
    "catalan",
    "NonCrossingPartition",
    "enumerate_nc",
    "Word",
    "mixed_moment",
    "alternating_centered_check",
    "boxplus_moments",
    "boxtimes_moments",
    "boxtimes_word_oracle",
    "solve_subordination",
    "fractional_diagnostics",
    "boxtimes_fractional_closure_check",
    "QuadraticFormSpec",
    "preset_sample_mean_variance",
    "validate_spec",
    "joint_moment",
    "freeness_dichotomy",
    "MatrixEnsembleSpec",
    "sample_family",
    "estimate_word_trace",
    "ncLp_norm",
    "verify_inequalities",
]

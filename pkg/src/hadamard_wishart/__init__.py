"""Numerical laboratory for positivity of entrywise powers of random Wishart matrices."""

from .eigensolve import (
    CertifiedNotPsd,
    CertifiedPsd,
    Indeterminate,
    Spectrum,
    eigen_spectrum,
    extreme_eigenvalues,
    gershgorin_intervals,
    lambda_max,
    lambda_min,
    psd_certificate,
)
from .ensembles import EntryLaw, SeedSpec, derive_stream, rows_for, sample_matrix
from .errors import (
    BracketError,
    ConfigError,
    DimensionError,
    HadamardWishartError,
    InvariantViolation,
    RangeError,
    SolverError,
)
from .matrixops import (
    SymmetricMatrix,
    WishartContext,
    hadamard_abs_power,
    horn_fitzgerald_matrix,
    subcritical_split,
    supercritical_center,
    wishart,
)
from .spectral import (
    EsdSample,
    MomentReport,
    RowPair,
    bivariate_I,
    conditional_Y,
    ell_alpha,
    esd,
    esd_moment,
    ks_distance,
    moment_targets,
    pool,
    trace_moment,
    walk_trace_oracle,
)

__version__ = "0.1.0"

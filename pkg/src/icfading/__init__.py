"""Finite-blocklength performance of infinite constellations on fading channels.

Capacity, dispersion and finite-n achievable densities for unconstrained
scalar and MIMO channels with receiver CSI: closed forms where they exist,
seeded Monte Carlo bounds where they do not, and Gallager error exponents.
"""

from .errors import (
    AccuracyError,
    AccuracyWarning,
    BracketError,
    ConstraintError,
    DomainError,
    IcFadingError,
    MomentDivergenceError,
    NonConvergenceError,
)
from .fading import (
    Awgn,
    FadingModel,
    FadingProcess,
    GaussAr1,
    GaussArma,
    Iid,
    LogFadingMoments,
    Nakagami,
    RegularityReport,
    TabulatedPdf,
    TruncationRule,
    dispersion_sum,
    log_autocovariance,
    log_moments,
    rayleigh,
    regularity_exponent,
    sample_h,
)
from .mimo import (
    BdutResult,
    MimoConfig,
    bdut_optimize,
    mimo_achievable_nld,
    mimo_capacity_fdt,
    mimo_dispersion_fdt,
    mimo_vs_parallel_gaps,
    oyman_approx,
    parallel_capacity_dispersion,
    telatar_capacity,
)
from .montecarlo import (
    DetLogVerifyResult,
    DtNldResult,
    InfoDensityMoments,
    det_log_verify,
    dt_achievable_nld,
    dt_bound,
    info_density_moments,
    lattice_typicality_bound,
    log_chi2_tv_error,
    sphere_packing_bound,
    sphere_packing_converse_nld,
)
from .numerics import BracketedRoot, QuadratureSpec
from .sampling import McConfig, McEstimate
from .scalar import (
    DispersionResult,
    FiniteBlocklengthPoint,
    VnrResult,
    achievable_nld,
    awgn_gap,
    capacity_dispersion_complex,
    capacity_dispersion_real,
    memory_dispersion,
    power_constrained_dispersion,
    vnr_optimal,
)
from .exponents import (
    ExponentCurve,
    MimoE0Result,
    e0_gaussian_scalar,
    ic_exponent_scalar,
    mimo_e0_uniform_highsnr,
    mimo_gallager_exponent,
    near_capacity_parabola,
)

__version__ = "0.1.0"

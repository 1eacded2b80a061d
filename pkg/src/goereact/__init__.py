"""Two-reservoir GOE reaction model.

Sampling of Gaussian-orthogonal-ensemble reservoirs, complex channel
self-energies, the closed-form decay probability of the four-site
channel chain, and statistics of its ensemble fluctuations (chi-squared
distributions of variable effective degrees of freedom).
"""

__version__ = "0.1.0"

from .errors import (
    BranchingOverflowError,
    ConfigError,
    DegenerateDenominatorError,
    DegenerateEnsembleError,
    EigensolverError,
    GoeReactError,
    InsufficientDataError,
    NumericalError,
    SingularSystemError,
    ZeroVarianceError,
)
from .rng import RandomStream, gaussian_draws
from .rmt import ReservoirParams, Spectrum, eig_sym, sample_goe, semicircle_density
from .selfenergy import (
    MOMENTS_CSV_HEADER,
    MomentSummary,
    RunningMoments,
    SelfEnergySet,
    resolvent_sum,
    sample_coupling,
    sample_self_energy_moments,
    self_energy_direct,
    self_energy_set,
    self_energy_spectral,
)
from .reaction import (
    REACTION_CSV_HEADER,
    ChannelParams,
    ReactionAmplitudes,
    ReactionResult,
    branching_ratio,
    fluxes,
    full_chain_oracle,
    p_b,
    p_b_closed,
    reaction_csv_row,
    reaction_from_self_energies,
    reduced_matrix,
    reduced_solve,
)
from .ptstats import FitResult, PtParams, crossover_curve, fit_nu, nu_eff, pt_cdf, pt_pdf
from .ensemble import (
    HISTOGRAM_CSV_HEADER,
    SAMPLES_CSV_HEADER,
    CrossoverPoint,
    EnsembleConfig,
    EnsembleResult,
    HistogramSet,
    ScanPoint,
    build_histogram,
    nu_scan,
    run_ensemble,
    sample_run,
    scan_points,
    t2_for_gamma,
)
from .analytic import (
    INTEGRALS_CSV_HEADER,
    AnalyticMoments,
    IntegralValue,
    integral_csv_row,
    integral_i1,
    integral_i1_quad,
    integral_i2,
    integral_i3_small,
    integral_i4,
    integrals_i2_i3_i4,
    table1_moments,
    verification_table,
)
from .config import ExperimentConfig, config_echo, config_hash, load_config
from .cli import RunManifest, run_experiment

__all__ = [
    "AnalyticMoments",
    "BranchingOverflowError",
    "ChannelParams",
    "ConfigError",
    "CrossoverPoint",
    "DegenerateDenominatorError",
    "DegenerateEnsembleError",
    "EigensolverError",
    "EnsembleConfig",
    "EnsembleResult",
    "ExperimentConfig",
    "FitResult",
    "GoeReactError",
    "HISTOGRAM_CSV_HEADER",
    "HistogramSet",
    "INTEGRALS_CSV_HEADER",
    "InsufficientDataError",
    "IntegralValue",
    "MOMENTS_CSV_HEADER",
    "MomentSummary",
    "NumericalError",
    "PtParams",
    "REACTION_CSV_HEADER",
    "RandomStream",
    "ReactionAmplitudes",
    "ReactionResult",
    "ReservoirParams",
    "RunManifest",
    "RunningMoments",
    "SAMPLES_CSV_HEADER",
    "ScanPoint",
    "SelfEnergySet",
    "SingularSystemError",
    "Spectrum",
    "ZeroVarianceError",
    "__version__",
    "branching_ratio",
    "build_histogram",
    "config_echo",
    "config_hash",
    "crossover_curve",
    "eig_sym",
    "fit_nu",
    "fluxes",
    "full_chain_oracle",
    "gaussian_draws",
    "integral_csv_row",
    "integral_i1",
    "integral_i1_quad",
    "integral_i2",
    "integral_i3_small",
    "integral_i4",
    "integrals_i2_i3_i4",
    "load_config",
    "nu_eff",
    "nu_scan",
    "p_b",
    "p_b_closed",
    "pt_cdf",
    "pt_pdf",
    "reaction_csv_row",
    "reaction_from_self_energies",
    "reduced_matrix",
    "reduced_solve",
    "resolvent_sum",
    "run_ensemble",
    "run_experiment",
    "sample_coupling",
    "sample_goe",
    "sample_run",
    "sample_self_energy_moments",
    "scan_points",
    "self_energy_direct",
    "self_energy_set",
    "self_energy_spectral",
    "semicircle_density",
    "t2_for_gamma",
    "table1_moments",
    "verification_table",
]


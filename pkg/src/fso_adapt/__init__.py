"""Spectral-efficiency limits of adaptive square-QAM over turbulent optical links."""

from .specfun import SeriesConfig, SingularOrderError
from .channel import (
    ChannelModel,
    LinkGeometry,
    PointingParams,
    TurbulenceParams,
    Variant,
    beam_waist_at_rx,
    composite_cdf,
    composite_pdf,
    gg_params,
    gg_pdf,
    moment,
    pointing_params,
    rytov_variance,
    sample_irradiance,
)
from .adapt import (
    AdaptiveSolution,
    BerPolicy,
    ConstellationSet,
    SnrSpec,
    SolverBracketError,
    adaptive_required_snr,
    ase_limit,
    ber_bound,
    constellation_size_law,
    discrete_ase,
    discrete_power,
    discrete_regions,
    fixed_required_snr,
    high_snr_ase,
    optimal_power,
    pointing_penalty,
    solve_cutoff_continuous,
    solve_cutoff_discrete,
)
from .mc import (
    AuditReport,
    McConfig,
    QamSimConfig,
    audit_power_constraint,
    estimate_ase_mc,
    estimate_discrete_ase_mc,
    simulate_qam_ber,
)

__version__ = "0.1.0"

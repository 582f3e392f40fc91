"""pulseflow: periodic volumetric flow reconstruction from time-resolved
cross-sectional area data, via the inverse problem of a periodic Riccati
equation with a block-consistency calibration of the wall elasticity."""

from .area import AreaField, AreaSamples, ContourRing, fit_fourier, polygon_area
from .errors import (
    ConfigError,
    DegenerateQuadratic,
    EmptyFeasibleInterval,
    FewerThanThreePoints,
    Infeasible,
    InputFormatError,
    NoBracket,
    NonPositiveArea,
    NonPositiveReconstruction,
    NoneAdmissible,
    ParticularSolutionBlowup,
    PulseflowError,
    ResonantMultiplier,
    ReversedInterval,
    StepSizeUnderflow,
    TooFewPhases,
    XOutOfRange,
    ZeroArea,
)
from .hemodynamics import (
    FluidProperties,
    StationHemodynamics,
    flow_regime,
    reynolds,
    station_profile,
    velocity_profile_regime,
    womersley,
)
from .inverse import (
    BlockPair,
    BoundsResult,
    InverseConfig,
    OptimizationResult,
    consistency,
    evaluate_pair,
    minimize_consistency,
    mse_from_consistency,
    qbar,
    reconstruct_flow,
    segment_fractions_to_x,
    solve_alpha_bounds,
    solve_block,
)
from .riccati import (
    Block,
    Blowup,
    IntegratorSettings,
    KotinResult,
    PeriodicSolution,
    QuadratureResult,
    RiccatiCoefficients,
    ShootingResult,
    Trajectory,
    assemble_coefficients,
    integrate_riccati,
    kotin_check,
    nullcline,
    nullcline_curves,
    quadrature_periodic,
    select_admissible,
    shooting_periodic,
)
from .sensitivity import SensitivityCurve, sensitivity_curve
from .synth import OracleReport, SynthSpec, generate, oracle_run, resolved_wave_speed

__version__ = "1.0.0"

__all__ = [name for name in dir() if not name.startswith("_")]

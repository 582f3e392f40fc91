"""Reynolds and Womersley number diagnostics along the segment.

CGS units throughout: density g/cm³, dynamic viscosity g/(cm·s) (poise;
1 Pa·s = 10 g/(cm·s)), lengths cm, flows cm³/s. Regime thresholds for
rigid-pipe flow: Re < 2100 laminar, Re > 4000 turbulent; Wo < 1 quasi-steady
parabolic profile, Wo > 10 flat profile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .area import AreaField
from .errors import NonPositiveArea
from .inverse import reconstruct_flow
from .riccati import PeriodicSolution

RE_LAMINAR_MAX = 2100.0
RE_TURBULENT_MIN = 4000.0
WO_PARABOLIC_MAX = 1.0
WO_FLAT_MIN = 10.0


@dataclass(frozen=True)
class FluidProperties:
    """Blood properties entering the dimensionless numbers."""

    density: float = 1.06             # g/cm³
    viscosity: float = 0.035          # g/(cm·s), dynamic
    angular_frequency: float = 2.0 * math.pi   # rad/s (heart period 1 s)

    def __post_init__(self):
        if self.density <= 0 or self.viscosity <= 0 or self.angular_frequency <= 0:
            raise ValueError("fluid properties must be positive")

    @classmethod
    def for_period(cls, period: float, density: float = 1.06,
                   viscosity: float = 0.035,
                   viscosity_pa_s: float | None = None) -> "FluidProperties":
        """Build properties for a heart period; ``viscosity_pa_s`` (Pa·s)
        takes precedence and is converted to g/(cm·s)."""
        if viscosity_pa_s is not None:
            viscosity = 10.0 * viscosity_pa_s
        return cls(density=density, viscosity=viscosity,
                   angular_frequency=2.0 * math.pi / period)


def _radius(area: float) -> float:
    if area <= 0:
        raise NonPositiveArea("cross-sectional area must be positive")
    return math.sqrt(area / math.pi)


def reynolds(q: float, area: float, props: FluidProperties) -> float:
    """Re = 2 v r rho / eta with v = q / S and r = sqrt(S / pi).

    Linear in the flow rate (a reversed flow gives a negative value; use the
    magnitude for regime classification).
    """
    r = _radius(area)
    v = q / area
    return 2.0 * v * r * props.density / props.viscosity


def womersley(area: float, props: FluidProperties) -> float:
    """Wo = 2 r sqrt(omega rho / eta) with r = sqrt(S / pi)."""
    r = _radius(area)
    return 2.0 * r * math.sqrt(props.angular_frequency * props.density / props.viscosity)


def flow_regime(re: float) -> str:
    re = abs(re)
    if re < RE_LAMINAR_MAX:
        return "laminar"
    if re > RE_TURBULENT_MIN:
        return "turbulent"
    return "transition"


def velocity_profile_regime(wo: float) -> str:
    if wo < WO_PARABOLIC_MAX:
        return "parabolic"
    if wo > WO_FLAT_MIN:
        return "flat"
    return "intermediate"


@dataclass(frozen=True)
class StationHemodynamics:
    """Per-station dimensionless numbers and regime label."""

    x: float
    womersley: float
    re_mean: float
    re_peak: float
    regime: str           # from the peak Reynolds number


def station_profile(field: AreaField, anchor_x: float,
                    solution: PeriodicSolution, props: FluidProperties,
                    stations=None) -> list[StationHemodynamics]:
    """Re/Wo profile along the segment from a reconstructed flow.

    Per station: Wo from the time-mean area; Re_mean from time-mean |q| over
    time-mean area; Re_peak as the maximum instantaneous value over the
    period. Both Reynolds variants are emitted because the flow is strongly
    pulsatile; the regime label is assigned from the peak.
    """
    xs = np.asarray(field.stations if stations is None else stations, dtype=float)
    t = solution.t
    q = reconstruct_flow(field, anchor_x, solution, xs)
    period = float(t[-1])
    out = []
    for i, x in enumerate(xs):
        s_t = field.value(t, float(x))
        s_mean = float(np.trapezoid(s_t, t)) / period
        q_mean = float(np.trapezoid(np.abs(q[:, i]), t)) / period
        re_mean = reynolds(q_mean, s_mean, props)
        re_inst = [abs(reynolds(float(qv), float(sv), props))
                   for qv, sv in zip(q[:, i], s_t)]
        re_peak = float(max(re_inst))
        out.append(StationHemodynamics(
            x=float(x),
            womersley=womersley(s_mean, props),
            re_mean=re_mean,
            re_peak=re_peak,
            regime=flow_regime(re_peak),
        ))
    return out

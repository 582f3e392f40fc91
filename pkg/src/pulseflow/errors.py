"""Exception hierarchy for the pulseflow pipeline.

Names describe the failing condition, not the module that raised it.
Control-flow outcomes that are expected on valid data (a finite-time
escape of a trajectory, an empty fixed-point scan) are returned as
values, not raised; everything here signals either bad input or a
problem instance the solver cannot represent.
"""


class PulseflowError(Exception):
    """Base class for all pulseflow errors."""


class ConfigError(PulseflowError):
    """Invalid run configuration."""


class InputFormatError(PulseflowError):
    """Malformed input file (CSV/JSON)."""


# --- area field -------------------------------------------------------------

class FewerThanThreePoints(PulseflowError):
    """A wall contour needs at least three vertices."""


class ZeroArea(PulseflowError):
    """Degenerate (collinear) wall contour with vanishing signed area."""


class TooFewPhases(PulseflowError):
    """Not enough time samples for the requested harmonic count."""


class NonPositiveArea(PulseflowError):
    """Cross-sectional area samples must be strictly positive."""


class NonPositiveReconstruction(PulseflowError):
    """Fitted area series dips to zero or below on the check grid."""


class XOutOfRange(PulseflowError):
    """Axial position outside the sampled station range."""


class ReversedInterval(PulseflowError):
    """Integration interval given with end before start."""


# --- periodic Riccati solver ------------------------------------------------

class StepSizeUnderflow(PulseflowError):
    """Adaptive integrator failed before reaching the span end."""


class ParticularSolutionBlowup(PulseflowError):
    """The particular solution started at zero escapes within one period.

    Callers should fall back to the shooting constructor.
    """

    def __init__(self, escape_time: float):
        super().__init__(f"particular solution escaped at t = {escape_time:.6g} s")
        self.escape_time = escape_time


class DegenerateQuadratic(PulseflowError):
    """The periodicity condition degenerates: periodic solutions form a
    continuum (or the equation carries no axial information at all).

    ``nonunique`` is True when every solution of the equation is periodic,
    so no single flow curve can be reported.
    """

    def __init__(self, message: str, nonunique: bool = True):
        super().__init__(message)
        self.nonunique = nonunique


class NoneAdmissible(PulseflowError):
    """No periodic solution with positive mean exists."""


# --- inverse problem --------------------------------------------------------

class Infeasible(PulseflowError):
    """The elasticity parameter admits no admissible periodic solution
    on at least one block."""


class NoBracket(PulseflowError):
    """The physiological mean-flow window cannot be bracketed on this data."""


class EmptyFeasibleInterval(PulseflowError):
    """No feasible elasticity value inside the mean-flow bounds."""


# --- sensitivity ------------------------------------------------------------

class ResonantMultiplier(PulseflowError):
    """Homogeneous multiplier is 1; the periodic sensitivity problem is
    singular."""

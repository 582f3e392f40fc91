"""Cross-sectional area field: from raw periodic samples (or wall-contour
rings) to a smooth, differentiable area surface and its wall-motion flux
integrals.

The temporal model per axial station is a truncated Fourier series (default
3 harmonics of the cardiac frequency); between stations the field is
piecewise linear in the axial coordinate, which keeps every axial integral
used downstream exact and closed-form. All lengths are cm, areas cm²,
times s.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    FewerThanThreePoints,
    NonPositiveArea,
    NonPositiveReconstruction,
    ReversedInterval,
    TooFewPhases,
    XOutOfRange,
    ZeroArea,
)

#: points per period used to verify positivity of a fitted field
POSITIVITY_GRID = 256

_X_TOL = 1e-9  # relative slack when clamping x to the station range


def polygon_area(points) -> float:
    """Area (cm²) enclosed by an ordered wall contour, via the shoelace sum.

    Orientation-independent; the ring is closed implicitly (last vertex
    connects back to the first). Self-intersections from segmentation noise
    are tolerated, but a collinear ring is rejected.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise FewerThanThreePoints("contour must be an (n, 2) array of vertices")
    if pts.shape[0] < 3:
        raise FewerThanThreePoints(f"contour has {pts.shape[0]} points, need at least 3")
    x, y = pts[:, 0], pts[:, 1]
    signed = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    scale = float(np.max(np.abs(pts))) or 1.0
    if abs(signed) <= 1e-12 * scale * scale:
        raise ZeroArea("contour is degenerate (vanishing signed area)")
    return float(abs(signed))


@dataclass(frozen=True, eq=False)
class ContourRing:
    """One segmented lumen contour: ordered planar wall coordinates (cm)."""

    points: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points, dtype=float))

    def area(self) -> float:
        return polygon_area(self.points)


@dataclass(frozen=True, eq=False)
class AreaSamples:
    """Uniform-in-time area samples over one period.

    ``values[k, j]`` is the area at phase ``t_k = k period / M`` and station
    ``stations[j]``. The sample at ``t = period`` is not stored (it equals
    the one at ``t = 0``).
    """

    period: float
    stations: np.ndarray   # (N,) strictly increasing axial positions, cm
    values: np.ndarray     # (M, N) areas, cm²

    def __post_init__(self):
        stations = np.asarray(self.stations, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "stations", stations)
        object.__setattr__(self, "values", values)
        if not self.period > 0:
            raise ValueError("period must be positive")
        if stations.ndim != 1 or stations.size < 2:
            raise ValueError("need at least two stations")
        if np.any(np.diff(stations) <= 0):
            raise ValueError("stations must be strictly increasing")
        if values.ndim != 2 or values.shape[1] != stations.size:
            raise ValueError("values must be (phases, stations)")
        if values.shape[0] < 2:
            raise TooFewPhases("need at least two phases per period")
        if np.any(values <= 0):
            raise NonPositiveArea("all area samples must be positive")

    @property
    def n_phases(self) -> int:
        return self.values.shape[0]

    @property
    def phases(self) -> np.ndarray:
        return np.arange(self.n_phases) * (self.period / self.n_phases)


@dataclass(frozen=True, eq=False)
class AreaField:
    """Smooth periodic area surface S(t, x).

    Per station a truncated Fourier series in t (exact time derivatives);
    piecewise linear interpolation in x. Immutable after construction and
    safe for concurrent read-only evaluation.
    """

    period: float
    stations: np.ndarray      # (N,)
    mean_coef: np.ndarray     # (N,)
    cos_coef: np.ndarray      # (H, N)
    sin_coef: np.ndarray      # (H, N)
    fit_residuals: np.ndarray | None = None   # per-station rms of the fit
    _orders: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("stations", "mean_coef", "cos_coef", "sin_coef"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.cos_coef.shape != self.sin_coef.shape:
            raise ValueError("cos/sin coefficient shapes differ")
        if self.cos_coef.shape[1] != self.stations.size or self.mean_coef.size != self.stations.size:
            raise ValueError("coefficient arrays do not match station count")
        object.__setattr__(self, "_orders",
                           np.arange(1, self.harmonics + 1, dtype=float))
        t_check = np.arange(POSITIVITY_GRID) * (self.period / POSITIVITY_GRID)
        if np.any(self._station_eval(t_check, 0) <= 0):
            raise NonPositiveReconstruction(
                "fitted area dips to zero or below on the check grid")

    @property
    def harmonics(self) -> int:
        return self.cos_coef.shape[0]

    @property
    def x_range(self) -> tuple[float, float]:
        return float(self.stations[0]), float(self.stations[-1])

    # -- station-level evaluation ---------------------------------------------

    def _station_eval(self, t, order: int) -> np.ndarray:
        """All-station values of d^order S / dt^order; shape (nt, N)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        omega = 2.0 * np.pi / self.period
        ang = np.outer(np.mod(t, self.period), self._orders) * omega
        c, s = np.cos(ang), np.sin(ang)
        mw = (self._orders * omega)[:, None]
        if order == 0:
            return self.mean_coef + c @ self.cos_coef + s @ self.sin_coef
        if order == 1:
            return c @ (mw * self.sin_coef) - s @ (mw * self.cos_coef)
        if order == 2:
            return -(c @ (mw ** 2 * self.cos_coef) + s @ (mw ** 2 * self.sin_coef))
        raise ValueError("order must be 0, 1 or 2")

    def _clamp_x(self, x: float) -> float:
        lo, hi = self.x_range
        slack = _X_TOL * max(hi - lo, 1.0)
        if x < lo - slack or x > hi + slack:
            raise XOutOfRange(f"x = {x:.6g} cm outside station range [{lo:.6g}, {hi:.6g}]")
        return min(max(x, lo), hi)

    def _interp_x(self, station_vals: np.ndarray, x: float) -> np.ndarray:
        x = self._clamp_x(x)
        xs = self.stations
        j = int(np.searchsorted(xs, x, side="right")) - 1
        j = min(max(j, 0), xs.size - 2)
        w = (x - xs[j]) / (xs[j + 1] - xs[j])
        return (1.0 - w) * station_vals[:, j] + w * station_vals[:, j + 1]

    def _eval(self, t, x: float, order: int):
        scalar = np.ndim(t) == 0
        out = self._interp_x(self._station_eval(t, order), x)
        return float(out[0]) if scalar else out

    def value(self, t, x: float):
        """S(t, x) in cm²; ``t`` may be a scalar or an array (wrapped mod T)."""
        return self._eval(t, x, 0)

    def dt(self, t, x: float):
        """∂S/∂t in cm²/s (exact trigonometric differentiation)."""
        return self._eval(t, x, 1)

    def dtt(self, t, x: float):
        """∂²S/∂t² in cm²/s²."""
        return self._eval(t, x, 2)

    # -- exact axial integrals -------------------------------------------------

    def _integral_linear(self, node_vals: np.ndarray, x0: float, x1: float) -> np.ndarray:
        """∫ of the piecewise-linear interpolant of ``node_vals`` over [x0, x1].

        Trapezoid per (clipped) station interval is exact here.
        """
        xs = self.stations
        total = np.zeros(node_vals.shape[0])
        for j in range(xs.size - 1):
            a, b = max(x0, xs[j]), min(x1, xs[j + 1])
            if b <= a:
                continue
            h = xs[j + 1] - xs[j]
            wa, wb = (a - xs[j]) / h, (b - xs[j]) / h
            va = (1 - wa) * node_vals[:, j] + wa * node_vals[:, j + 1]
            vb = (1 - wb) * node_vals[:, j] + wb * node_vals[:, j + 1]
            total += 0.5 * (b - a) * (va + vb)
        return total

    def _integral_weighted(self, node_vals: np.ndarray, x0: float, x1: float) -> np.ndarray:
        """∫ (x1 - y) V(y) dy over [x0, x1] for piecewise-linear V.

        The integrand is quadratic per interval, so Simpson's rule is exact.
        """
        xs = self.stations
        total = np.zeros(node_vals.shape[0])
        for j in range(xs.size - 1):
            a, b = max(x0, xs[j]), min(x1, xs[j + 1])
            if b <= a:
                continue
            h = xs[j + 1] - xs[j]
            mid = 0.5 * (a + b)
            vals = []
            for p in (a, mid, b):
                w = (p - xs[j]) / h
                vals.append(((1 - w) * node_vals[:, j] + w * node_vals[:, j + 1]) * (x1 - p))
            total += (b - a) / 6.0 * (vals[0] + 4.0 * vals[1] + vals[2])
        return total

    def _ordered(self, x0: float, x1: float) -> tuple[float, float]:
        x0, x1 = self._clamp_x(x0), self._clamp_x(x1)
        if x1 < x0:
            raise ReversedInterval(f"interval end {x1:.6g} precedes start {x0:.6g}")
        return x0, x1

    def wall_flux(self, t, x0: float, x1: float):
        """Accumulated wall-motion flux  -∫_{x0}^{x1} ∂S/∂t dy  (cm³/s).

        Vanishes at ``x1 = x0``; relates the flow at ``x1`` to the flow at
        ``x0`` through mass conservation.
        """
        x0, x1 = self._ordered(x0, x1)
        scalar = np.ndim(t) == 0
        out = -self._integral_linear(self._station_eval(t, 1), x0, x1)
        return float(out[0]) if scalar else out

    def wall_flux_dt(self, t, x0: float, x1: float):
        """Time derivative of :meth:`wall_flux` (cm³/s²), exact in t."""
        x0, x1 = self._ordered(x0, x1)
        scalar = np.ndim(t) == 0
        out = -self._integral_linear(self._station_eval(t, 2), x0, x1)
        return float(out[0]) if scalar else out

    def wall_flux_dt_integral(self, t, x0: float, x1: float):
        """∫_{x0}^{x1} ∂/∂t wall_flux(t, x0, x) dx  (cm³/s²·cm).

        Equal to -∫ (x1 - y) ∂²S/∂t² dy by exchanging the order of
        integration; evaluated exactly for the piecewise-linear axial model.
        """
        x0, x1 = self._ordered(x0, x1)
        scalar = np.ndim(t) == 0
        out = -self._integral_weighted(self._station_eval(t, 2), x0, x1)
        return float(out[0]) if scalar else out

    def wall_flux_signed(self, t, x_ref: float, x: float):
        """:meth:`wall_flux` anchored at ``x_ref``, valid on either side of it."""
        if x >= x_ref:
            return self.wall_flux(t, x_ref, x)
        out = self.wall_flux(t, x, x_ref)
        return -out if np.ndim(out) == 0 else -np.asarray(out)


def fit_fourier(samples: AreaSamples, harmonics: int = 3) -> AreaField:
    """Least-squares fit of a truncated Fourier series per station.

    With uniform phases this is the discrete Fourier projection, so a signal
    that already lies in the model class is reproduced exactly. Requires at
    least ``2 * harmonics + 1`` phases; the fitted field must stay positive.
    """
    if harmonics < 1:
        raise ValueError("need at least one harmonic")
    m = samples.n_phases
    if m < 2 * harmonics + 1:
        raise TooFewPhases(
            f"{m} phases cannot resolve {harmonics} harmonics (need >= {2 * harmonics + 1})")
    values = samples.values
    spec = np.fft.rfft(values, axis=0)
    mean_coef = spec[0].real / m
    cos_coef = 2.0 * spec[1:harmonics + 1].real / m
    sin_coef = -2.0 * spec[1:harmonics + 1].imag / m

    omega = 2.0 * np.pi / samples.period
    ang = np.outer(samples.phases, np.arange(1, harmonics + 1)) * omega
    recon = mean_coef + np.cos(ang) @ cos_coef + np.sin(ang) @ sin_coef
    residuals = np.sqrt(np.mean((values - recon) ** 2, axis=0))

    return AreaField(
        period=samples.period,
        stations=samples.stations,
        mean_coef=mean_coef,
        cos_coef=cos_coef,
        sin_coef=sin_coef,
        fit_residuals=residuals,
    )

"""Periodic Riccati equation for the inlet flow of a vessel block.

For a block [x0, x0+L] of an area field the inlet flow Q(t) obeys

    dQ/dt = A(t) Q² + B(t) Q + C(t),      C(t) = C0(t) + alpha C1(t),

with T-periodic coefficients assembled from the area surface:

    A  = (1/S(t,x0) - 1/S(t,x1)) / L
    B  = -2 Phi_L(t) / (L S(t,x1))
    C0 = -(Phi_L(t)² / S(t,x1) + J(t)) / L
    C1 = 2 (sqrt(S(t,x0)) - sqrt(S(t,x1))) / L

where Phi_L is the wall-motion flux across the block and J the axial
integral of its time derivative. ``alpha`` (cm³/s²) lumps the wall
elasticity and is the unknown of the inverse problem.

Periodic solutions are constructed two independent ways: by quadrature
through the substitution Q = Q0 - 1/W (reducing periodicity to a quadratic
in the homogeneous mixing constant K), and by a Poincaré-map shooting scan.
The two routes cross-validate each other throughout the test suite.

Note on the periodicity quadratic: enforcing Q(0) = Q(T) with W(0) = K
gives

    Q0(T) Wh(T) K² + (Q0(T) Wih(T) + Wh(T) - 1) K + Wih(T) = 0 ,

which is the form implemented here; it reproduces the constant-coefficient
closed forms exactly. The discriminant reported downstream is taken after
normalising by Wh(T) > 0 (same sign, scale-free).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp

from .area import AreaField
from .errors import (
    DegenerateQuadratic,
    NoneAdmissible,
    ParticularSolutionBlowup,
    StepSizeUnderflow,
    XOutOfRange,
)
from .series import TrigSeries

#: dense grid (points per period) for sign checks and pole detection
CHECK_GRID = 512

#: grid used when sampling coefficient closures into a trig table
TABLE_GRID = 512


@dataclass(frozen=True)
class IntegratorSettings:
    """Adaptive Runge-Kutta control and output-grid resolution."""

    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = math.inf
    blowup_cap: float = 1e6        # cm³/s; |Q| beyond this counts as escape
    output_points: int = 256       # uniform output intervals per period

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.blowup_cap <= 0:
            raise ValueError("blow-up cap must be positive")
        if self.output_points < 256:
            raise ValueError("output grid must have at least 256 points per period")

    def periodicity_tol(self, q: np.ndarray) -> float:
        return max(10.0 * self.abs_tol, 10.0 * self.rel_tol * float(np.max(np.abs(q))))


@dataclass(frozen=True, eq=False)
class Block:
    """A non-branching vessel segment [x_start, x_start + length] of a field."""

    field: AreaField
    x_start: float
    length: float

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("block length must be positive")
        lo, hi = self.field.x_range
        if self.x_start < lo - 1e-12 or self.x_end > hi + 1e-12:
            raise XOutOfRange(
                f"block [{self.x_start:.6g}, {self.x_end:.6g}] outside station range")

    @property
    def x_end(self) -> float:
        return self.x_start + self.length


class RiccatiCoefficients:
    """Evaluable periodic coefficients A, B, C0, C1 of one block.

    Internally a single 4-channel trigonometric table so the ODE right-hand
    side costs a few vector operations per evaluation. Immutable and
    re-entrant; ``alpha`` is threaded through call sites, never stored.
    """

    def __init__(self, series: TrigSeries):
        if series.channels != 4:
            raise ValueError("expected 4 channels (A, B, C0, C1)")
        self._series = series

    @property
    def period(self) -> float:
        return self._series.period

    @classmethod
    def from_block(cls, block: Block, n_grid: int = TABLE_GRID) -> "RiccatiCoefficients":
        f = block.field
        x0, x1, length = block.x_start, block.x_end, block.length
        t = np.arange(n_grid) * (f.period / n_grid)
        s0 = f._station_eval(t, 0)
        inlet = f._interp_x(s0, x0)
        outlet = f._interp_x(s0, x1)
        phi_l = f.wall_flux(t, x0, x1)
        j_int = f.wall_flux_dt_integral(t, x0, x1)
        a = (1.0 / inlet - 1.0 / outlet) / length
        b = -2.0 * phi_l / (length * outlet)
        c0 = -(phi_l ** 2 / outlet + j_int) / length
        c1 = 2.0 * (np.sqrt(inlet) - np.sqrt(outlet)) / length
        table = TrigSeries.from_uniform_samples(
            np.column_stack([a, b, c0, c1]), f.period)
        return cls(table)

    @classmethod
    def from_constants(cls, period: float, a: float, b: float,
                       c0: float, c1: float = 0.0) -> "RiccatiCoefficients":
        return cls(TrigSeries.constant([a, b, c0, c1], period))

    @classmethod
    def from_samples(cls, period: float, t: np.ndarray, a, b, c0, c1,
                     harmonics: int = 3) -> "RiccatiCoefficients":
        values = np.column_stack([np.broadcast_to(np.asarray(v, float), np.shape(t))
                                  for v in (a, b, c0, c1)])
        return cls(TrigSeries.fit_points(np.asarray(t, float), values, harmonics, period))

    # -- evaluation ------------------------------------------------------------

    def eval4(self, t) -> np.ndarray:
        """(A, B, C0, C1) stacked; (4,) for scalar t, (nt, 4) for arrays."""
        return self._series.eval(t)

    def A(self, t):
        return self.eval4(t)[..., 0]

    def B(self, t):
        return self.eval4(t)[..., 1]

    def C0(self, t):
        return self.eval4(t)[..., 2]

    def C1(self, t):
        return self.eval4(t)[..., 3]

    def C(self, t, alpha: float):
        v = self.eval4(t)
        return v[..., 2] + alpha * v[..., 3]

    def rhs(self, alpha: float):
        """Right-hand side f(t, [Q]) of the flow equation for ``alpha``."""
        series = self._series

        def fun(t, y):
            a, b, c0, c1 = series.eval_scalar(t)
            q = y[0]
            return ((a * q + b) * q + c0 + alpha * c1,)

        return fun


def assemble_coefficients(block: Block) -> RiccatiCoefficients:
    """Build the periodic coefficient set of a block (see module docstring)."""
    return RiccatiCoefficients.from_block(block)


# -- integration ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A completed integration with dense output over the span."""

    t: np.ndarray
    q: np.ndarray
    dense: object   # scipy OdeSolution

    @property
    def q_end(self) -> float:
        return float(self.q[-1])


@dataclass(frozen=True)
class Blowup:
    """Finite-time escape: |Q| crossed the configured cap."""

    escape_time: float
    q_escape: float


def _escape_event(cap: float):
    def event(t, y):
        return cap - abs(y[0])
    event.terminal = True
    return event


def integrate_riccati(coeffs: RiccatiCoefficients, alpha: float, q_init: float,
                      t_span: tuple[float, float] | None = None,
                      settings: IntegratorSettings | None = None,
                      t_eval: np.ndarray | None = None):
    """Integrate dQ/dt = A Q² + B Q + C(alpha) with an embedded RK 5(4) pair.

    Returns a :class:`Trajectory`, or a :class:`Blowup` carrying the escape
    time if |Q| exceeds ``settings.blowup_cap`` before the span end. Raises
    :class:`StepSizeUnderflow` if the integrator fails without tripping the
    cap.
    """
    settings = settings or IntegratorSettings()
    if t_span is None:
        t_span = (0.0, coeffs.period)
    if not math.isfinite(q_init):
        raise ValueError("initial flow must be finite")
    if abs(q_init) >= settings.blowup_cap:
        return Blowup(escape_time=t_span[0], q_escape=q_init)
    sol = solve_ivp(
        coeffs.rhs(alpha), t_span, [q_init], method="RK45",
        rtol=settings.rel_tol, atol=settings.abs_tol, max_step=settings.max_step,
        dense_output=True, t_eval=t_eval, events=[_escape_event(settings.blowup_cap)],
    )
    if sol.status == 1:  # escape event
        t_esc = float(sol.t_events[0][0])
        return Blowup(escape_time=t_esc, q_escape=float(sol.y_events[0][0, 0]))
    if sol.status != 0:
        raise StepSizeUnderflow(sol.message)
    return Trajectory(t=sol.t, q=sol.y[0], dense=sol.sol)


# -- periodic solutions ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PeriodicSolution:
    """One period of a periodic flow solution with construction metadata."""

    t: np.ndarray              # uniform grid 0..T inclusive
    q: np.ndarray              # cm³/s
    method: str                # "quadrature" | "shooting" | "linear"
    mean: float                # (1/T) ∫ Q dt
    admissible: bool           # ∫ Q dt > 0
    multiplier: float          # Floquet multiplier exp(∫ 2AQ + B dt)
    residual: float            # |Q(T) - Q(0)|
    k_root: float | None = None
    delta: float | None = None
    notes: tuple[str, ...] = ()

    @property
    def q0(self) -> float:
        return float(self.q[0])

    @property
    def period(self) -> float:
        return float(self.t[-1])


@dataclass(frozen=True, eq=False)
class QuadratureResult:
    solutions: list[PeriodicSolution]
    delta: float               # discriminant of the normalised periodicity quadratic
    rejected_roots: tuple[float, ...] = ()
    notes: tuple[str, ...] = ()


@dataclass(frozen=True, eq=False)
class ShootingResult:
    solutions: list[PeriodicSolution]
    nonunique: bool = False
    notes: tuple[str, ...] = ()


def _output_grid(period: float, settings: IntegratorSettings) -> np.ndarray:
    n = settings.output_points
    return np.linspace(0.0, period, n + 1)


def _multiplier(coeffs: RiccatiCoefficients, alpha: float,
                t: np.ndarray, q: np.ndarray) -> float:
    v = coeffs.eval4(t)
    integrand = 2.0 * v[:, 0] * q + v[:, 1]
    return float(np.exp(np.trapezoid(integrand, t)))


def _make_solution(coeffs, alpha, t, q, method, settings,
                   k_root=None, delta=None, notes=()) -> PeriodicSolution:
    integral = float(np.trapezoid(q, t))
    return PeriodicSolution(
        t=t, q=q, method=method,
        mean=integral / float(t[-1]),
        admissible=integral > 0.0,
        multiplier=_multiplier(coeffs, alpha, t, q),
        residual=float(abs(q[-1] - q[0])),
        k_root=k_root, delta=delta, notes=tuple(notes),
    )


def _coupled_first_pass(coeffs, alpha, settings, t_fine):
    """Integrate (Q0, Wh, Wih) together over one period.

    Q0 is the particular solution from 0; Wh, Wih solve the linear
    substitution equation dW/dt = -(2 Q0 A + B) W + A with (1, 0) initial
    data. Sharing one adaptive integration keeps the three consistent.
    """
    series = coeffs._series
    cap = settings.blowup_cap

    def fun(t, y):
        a, b, c0, c1 = series.eval_scalar(t)
        q0, wh, wih = y
        m = -(2.0 * q0 * a + b)
        return ((a * q0 + b) * q0 + c0 + alpha * c1, m * wh, m * wih + a)

    def escape(t, y):
        return cap - max(abs(y[0]), 1e-24 * (abs(y[1]) + abs(y[2])))
    escape.terminal = True

    sol = solve_ivp(fun, (0.0, coeffs.period), [0.0, 1.0, 0.0], method="RK45",
                    rtol=settings.rel_tol, atol=settings.abs_tol,
                    max_step=settings.max_step, t_eval=t_fine, events=[escape])
    if sol.status == 1:
        raise ParticularSolutionBlowup(float(sol.t_events[0][0]))
    if sol.status != 0:
        raise StepSizeUnderflow(sol.message)
    return sol.y


def quadrature_periodic(coeffs: RiccatiCoefficients, alpha: float,
                        settings: IntegratorSettings | None = None) -> QuadratureResult:
    """All periodic solutions via the substitution Q = Q0 - 1/W.

    The mixing constant K of W = K Wh + Wih must solve the periodicity
    quadratic (module docstring); each real root yields a candidate whose
    W may not cross zero inside the period (a crossing means a pole in Q
    and the root is rejected, with a log entry).

    Raises :class:`ParticularSolutionBlowup` when Q0 escapes in finite time
    (callers fall back to :func:`shooting_periodic`) and
    :class:`DegenerateQuadratic` when every solution is periodic (zero
    field, or an axially uniform field whose linear problem has multiplier
    one and zero net forcing).
    """
    settings = settings or IntegratorSettings()
    t_out = _output_grid(coeffs.period, settings)
    n_fine = 4 * settings.output_points
    t_fine = np.linspace(0.0, coeffs.period, n_fine + 1)
    stride = 4

    q0f, whf, wihf = _coupled_first_pass(coeffs, alpha, settings, t_fine)
    q0_t, wh_t, wih_t = float(q0f[-1]), float(whf[-1]), float(wihf[-1])

    # degenerate / axially-uniform detection on the dense check grid
    vals = coeffs.eval4(np.arange(CHECK_GRID) * (coeffs.period / CHECK_GRID))
    sup_a = float(np.max(np.abs(vals[:, 0])))
    sup_rest = float(np.max(np.abs(vals[:, 1:3]))) + abs(alpha) * float(np.max(np.abs(vals[:, 3])))

    if sup_a <= 1e-13 * max(1.0, sup_rest):
        return _linear_route(coeffs, alpha, settings, t_out, t_fine, stride,
                             q0f, whf, q0_t, wh_t, sup_rest)

    qa = q0_t * wh_t
    qb = q0_t * wih_t + wh_t - 1.0
    qc = wih_t
    scale = max(1.0, abs(wh_t))
    if max(abs(qa), abs(qb), abs(qc)) <= 1e-10 * scale:
        raise DegenerateQuadratic(
            "periodicity condition vanished identically: every solution is periodic")
    delta = (qb * qb - 4.0 * qa * qc) / (wh_t * wh_t)

    notes: list[str] = []
    roots: list[float] = []
    if abs(qa) <= 1e-12 * max(abs(qb), abs(qc), scale):
        # particular solution itself closes up (root at infinity) plus one
        # finite root of the degenerate-leading-term quadratic
        if abs(qb) > 0:
            roots.append(-qc / qb)
        notes.append("leading coefficient ~ 0: particular solution is periodic")
        q_part = q0f[::stride].copy()
        sols = [_make_solution(coeffs, alpha, t_out, q_part, "quadrature", settings,
                               k_root=math.inf, delta=delta, notes=("Q0 periodic",))]
    else:
        disc = qb * qb - 4.0 * qa * qc
        sols = []
        if disc < 0.0:
            return QuadratureResult(solutions=[], delta=delta, notes=tuple(notes))
        sq = math.sqrt(disc)
        r1 = (-qb - math.copysign(sq, qb)) / (2.0 * qa) if qb != 0 else sq / (2.0 * qa)
        r2 = qc / (qa * r1) if r1 != 0 else (-qb) / qa - r1
        roots = [r1] if abs(r1 - r2) <= 1e-9 * max(abs(r1), abs(r2), 1.0) else [r1, r2]

    rejected = []
    for k in roots:
        w = k * whf + wihf
        wmax = float(np.max(np.abs(w)))
        if wmax == 0.0 or np.min(w) * np.max(w) <= 0.0 or np.min(np.abs(w)) < 1e-9 * wmax:
            rejected.append(k)
            notes.append(f"root K = {k:.6g} rejected: W crosses zero (pole in Q)")
            continue
        q = (q0f - 1.0 / w)[::stride].copy()
        sols.append(_make_solution(coeffs, alpha, t_out, q, "quadrature", settings,
                                   k_root=k, delta=delta))

    sols.sort(key=lambda s: s.mean)
    return QuadratureResult(solutions=sols, delta=delta,
                            rejected_roots=tuple(rejected), notes=tuple(notes))


def _linear_route(coeffs, alpha, settings, t_out, t_fine, stride,
                  q0f, whf, q0_t, wh_t, forcing_scale):
    """A ≡ 0: the equation is linear; multiplier is exp(∫B) = 1/Wh(T).

    Resonance (multiplier 1) and zero net forcing are detected against the
    integrator tolerance, not machine precision: both quantities carry the
    solver's global error.
    """
    rho = 1.0 / wh_t
    rho_tol = max(1e-10, 1e3 * settings.rel_tol)
    if abs(1.0 - rho) < rho_tol * max(1.0, abs(rho)):
        q0_scale = float(np.max(np.abs(q0f)))
        drift_tol = max(1e3 * settings.abs_tol, 1e3 * settings.rel_tol * max(q0_scale, 1.0))
        if abs(q0_t) <= drift_tol:
            raise DegenerateQuadratic(
                "axially uniform block with unit multiplier and zero net "
                "forcing: periodic solutions form a continuum")
        return QuadratureResult(
            solutions=[], delta=math.nan,
            notes=("linear equation with multiplier 1 and net drift: "
                   "no periodic solution",))
    q_init = q0_t / (1.0 - rho)
    q = (q0f + q_init / whf)[::stride].copy()
    sol = _make_solution(coeffs, alpha, t_out, q, "linear", settings,
                         notes=("axially uniform block: linear closed form",))
    return QuadratureResult(solutions=[sol], delta=math.nan,
                            notes=("A ~ 0: linear route",))


def shooting_periodic(coeffs: RiccatiCoefficients, alpha: float,
                      settings: IntegratorSettings | None = None,
                      scan_range: tuple[float, float] = (-500.0, 500.0),
                      n_scan: int = 64) -> ShootingResult:
    """Periodic solutions as fixed points of the time-T return map.

    Evaluates F(q) = Q(T; Q(0)=q) - q on the scan grid (escaped trajectories
    marked), brackets every sign change and refines it by bisection, then
    integrates each fixed point once more to produce the output-grid orbit
    and its Floquet multiplier. An empty result means no bracket was found
    in the scan range, not an error.
    """
    settings = settings or IntegratorSettings()
    if n_scan < 64:
        raise ValueError("scan grid needs at least 64 points")
    lo, hi = scan_range
    if not hi > lo:
        raise ValueError("empty scan range")
    t_out = _output_grid(coeffs.period, settings)
    t_end = np.array([coeffs.period])

    def poincare(q: float) -> float:
        out = integrate_riccati(coeffs, alpha, q, settings=settings, t_eval=t_end)
        if isinstance(out, Blowup):
            return math.nan
        return out.q_end - q

    qs = np.linspace(lo, hi, n_scan)
    fs = np.array([poincare(q) for q in qs])
    finite = np.isfinite(fs)

    f_eps = np.maximum(100.0 * settings.abs_tol, 1e-8 * np.maximum(1.0, np.abs(qs)))
    n_fixed = int(np.sum(finite & (np.abs(fs) <= f_eps)))
    if finite.sum() >= n_scan // 2 and n_fixed >= 0.9 * finite.sum():
        return ShootingResult(solutions=[], nonunique=True,
                              notes=("every scan point is a fixed point",))

    roots: list[float] = []
    target = 10.0 * settings.abs_tol
    for i in range(n_scan - 1):
        if not (finite[i] and finite[i + 1]):
            continue
        fa, fb = fs[i], fs[i + 1]
        if fa == 0.0:
            roots.append(float(qs[i]))
            continue
        if fa * fb >= 0.0:
            continue
        a, b = float(qs[i]), float(qs[i + 1])
        for _ in range(120):
            mid = 0.5 * (a + b)
            fm = poincare(mid)
            if math.isnan(fm):
                break
            if abs(fm) <= target or (b - a) <= 8.0 * np.finfo(float).eps * max(1.0, abs(mid)):
                a = b = mid
                break
            if fa * fm < 0.0:
                b = mid
            else:
                a, fa = mid, fm
        roots.append(0.5 * (a + b))
    if finite[-1] and fs[-1] == 0.0:
        roots.append(float(qs[-1]))

    deduped: list[float] = []
    for r in sorted(roots):
        if not deduped or abs(r - deduped[-1]) > 1e-7 * max(1.0, abs(r)):
            deduped.append(r)

    sols = []
    for q0 in deduped:
        out = integrate_riccati(coeffs, alpha, q0, settings=settings, t_eval=t_out)
        if isinstance(out, Blowup):
            continue
        sols.append(_make_solution(coeffs, alpha, t_out, out.q.copy(), "shooting", settings))
    sols.sort(key=lambda s: s.mean)
    return ShootingResult(solutions=sols)


# -- classification -------------------------------------------------------------


@dataclass(frozen=True)
class KotinResult:
    """Outcome of the sufficient-condition check -A(t) C(t) > 0."""

    holds: bool
    witness_t: float
    witness_value: float


def kotin_check(coeffs: RiccatiCoefficients, alpha: float,
                n_grid: int = CHECK_GRID) -> KotinResult:
    """Test -A(t) C(t; alpha) > 0 on a dense grid.

    When it holds, a unique positive and a unique negative periodic solution
    exist and every continuous solution lies between them; the positive one
    is then the physically admissible flow. The condition is sufficient
    only: failure does not preclude admissible solutions.
    """
    t = np.arange(n_grid) * (coeffs.period / n_grid)
    v = coeffs.eval4(t)
    vals = -v[:, 0] * (v[:, 2] + alpha * v[:, 3])
    i = int(np.argmin(vals))
    return KotinResult(holds=bool(vals[i] > 0.0),
                       witness_t=float(t[i]), witness_value=float(vals[i]))


def select_admissible(solutions: list[PeriodicSolution]) -> tuple[PeriodicSolution, bool]:
    """Pick the physically admissible solution (positive mean flow).

    Returns ``(solution, ambiguous)``; ``ambiguous`` is set when more than
    one candidate has positive mean (the larger mean wins). Raises
    :class:`NoneAdmissible` when no candidate qualifies. Admissibility does
    not imply stability: the Floquet multiplier is reported on the solution
    but never used for selection.
    """
    positive = [s for s in solutions if s.admissible]
    if not positive:
        raise NoneAdmissible(
            f"none of {len(solutions)} periodic solutions has positive mean")
    best = max(positive, key=lambda s: s.mean)
    return best, len(positive) > 1


def nullcline(coeffs: RiccatiCoefficients, alpha: float, t: float) -> tuple[float, ...]:
    """Real roots Q of A(t) Q² + B(t) Q + C(t; alpha) = 0 at one instant.

    Falls back to the linear root when |A| is negligible against the other
    coefficients; an empty tuple means the right-hand side does not vanish
    for any Q at this instant.
    """
    a, b, c0, c1 = (float(v) for v in coeffs.eval4(float(t)))
    c = c0 + alpha * c1
    if abs(a) <= 1e-14 * max(1.0, abs(b), abs(c)):
        if b == 0.0:
            return ()
        return (-c / b,)
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return ()
    sq = math.sqrt(disc)
    r1 = (-b - sq) / (2.0 * a)
    r2 = (-b + sq) / (2.0 * a)
    return tuple(sorted((r1, r2)))


def nullcline_curves(coeffs: RiccatiCoefficients, alpha: float,
                     t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Lower/upper nullcline branches on a grid (NaN where absent)."""
    lo = np.full(len(t), np.nan)
    hi = np.full(len(t), np.nan)
    for i, ti in enumerate(t):
        roots = nullcline(coeffs, alpha, float(ti))
        if len(roots) == 1:
            lo[i] = hi[i] = roots[0]
        elif len(roots) == 2:
            lo[i], hi[i] = roots
    return lo, hi

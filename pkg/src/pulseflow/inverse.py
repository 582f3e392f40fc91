"""Block-consistency inverse problem for the wall-elasticity parameter.

Two adjacent equal-length blocks at the downstream end of the segment each
determine their own admissible periodic inlet flow for a trial ``alpha``.
The internal-consistency functional

    I(alpha) = ∫₀ᵀ ( q2(t, 0) - q1(t, L) )² dt

integrates the squared mismatch between block 2's inlet flow and block 1's
outlet flow (outlet = inlet + wall-motion flux across the block). ``alpha``
is bounded by the physiological mean-flow window and the minimiser of I
inside those bounds is reported together with the goodness measure
MSE = sqrt(I/T).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .area import AreaField
from .errors import (
    DegenerateQuadratic,
    EmptyFeasibleInterval,
    Infeasible,
    NoBracket,
    NoneAdmissible,
    ParticularSolutionBlowup,
)
from .riccati import (
    Block,
    IntegratorSettings,
    KotinResult,
    PeriodicSolution,
    RiccatiCoefficients,
    kotin_check,
    quadrature_periodic,
    select_admissible,
    shooting_periodic,
)

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class InverseConfig:
    """Bounds, tolerances and grids of the scalar inverse problem."""

    qbar_min: float = 66.7          # cm³/s, lower physiological mean flow
    qbar_max: float = 100.0         # cm³/s, upper physiological mean flow
    alpha_init: float = 2.5e3       # cm³/s², bracket-expansion starting point
    alpha_rel_tol: float = 1e-6     # relative tolerance on alpha (roots and minimum)
    alpha_floor: float = 1e-6       # cm³/s², expansion lower limit
    alpha_ceil: float = 1e9         # cm³/s², expansion upper limit
    expand_factor: float = 2.0
    grid_points: int = 512          # output/quadrature grid per period for I(alpha)
    scan_points: int = 64           # Poincaré scan resolution for the fallback

    def __post_init__(self):
        if not 0 < self.qbar_min < self.qbar_max:
            raise ValueError("need 0 < qbar_min < qbar_max")
        if self.alpha_init <= 0 or self.alpha_rel_tol <= 0:
            raise ValueError("alpha_init and alpha_rel_tol must be positive")
        if self.expand_factor <= 1:
            raise ValueError("expansion factor must exceed 1")

    def integrator_settings(self, base: IntegratorSettings | None = None) -> IntegratorSettings:
        base = base or IntegratorSettings()
        if base.output_points == self.grid_points:
            return base
        return IntegratorSettings(
            rel_tol=base.rel_tol, abs_tol=base.abs_tol, max_step=base.max_step,
            blowup_cap=base.blowup_cap, output_points=self.grid_points)


class BlockPair:
    """Two adjacent equal-length blocks sharing one area field.

    By default the pair occupies the last ``2 * block_length`` of the
    station range (the downstream end of the segment). Coefficients are
    assembled once per block and cached; they are independent of ``alpha``.
    """

    def __init__(self, field: AreaField, block_length: float = 1.0,
                 x_start: float | None = None):
        lo, hi = field.x_range
        if x_start is None:
            x_start = hi - 2.0 * block_length
        self.field = field
        self.block1 = Block(field, x_start, block_length)
        self.block2 = Block(field, x_start + block_length, block_length)
        self._coeffs: tuple[RiccatiCoefficients, RiccatiCoefficients] | None = None

    @property
    def block_length(self) -> float:
        return self.block1.length

    @property
    def interface_x(self) -> float:
        return self.block1.x_end

    @property
    def period(self) -> float:
        return self.field.period

    def coefficients(self) -> tuple[RiccatiCoefficients, RiccatiCoefficients]:
        if self._coeffs is None:
            self._coeffs = (RiccatiCoefficients.from_block(self.block1),
                            RiccatiCoefficients.from_block(self.block2))
        return self._coeffs


@dataclass(frozen=True, eq=False)
class BlockSolve:
    """Admissible periodic solution of one block plus route diagnostics."""

    solution: PeriodicSolution | None
    delta: float
    method: str                  # "quadrature" | "shooting" | "linear" | "none"
    fallback: bool
    ambiguous: bool
    reason: str | None           # set when no admissible solution exists
    notes: tuple[str, ...] = ()


def _default_scan_range(coeffs: RiccatiCoefficients, alpha: float,
                        config: InverseConfig) -> tuple[float, float]:
    t = np.linspace(0.0, coeffs.period, 64, endpoint=False)
    v = coeffs.eval4(t)
    a_mean = float(np.mean(v[:, 0]))
    c_mean = float(np.mean(v[:, 2] + alpha * v[:, 3]))
    guess = math.sqrt(-c_mean / a_mean) if a_mean and -c_mean / a_mean > 0 else 0.0
    reach = 2.5 * max(guess, config.qbar_max, 10.0)
    return (-reach, reach)


def solve_block(coeffs: RiccatiCoefficients, alpha: float,
                settings: IntegratorSettings,
                config: InverseConfig | None = None) -> BlockSolve:
    """Admissible periodic solution of a single block at one ``alpha``.

    Quadrature first; a finite-time escape of the particular solution falls
    back to the shooting scan. A degenerate (axially uniform) block
    propagates :class:`DegenerateQuadratic` to the caller.
    """
    config = config or InverseConfig()
    notes: list[str] = []
    fallback = False
    delta = math.nan
    try:
        result = quadrature_periodic(coeffs, alpha, settings)
        solutions = result.solutions
        delta = result.delta
        notes.extend(result.notes)
        method = "quadrature"
        if not solutions:
            fallback = True
    except ParticularSolutionBlowup as exc:
        notes.append(f"quadrature route failed: {exc}")
        solutions = []
        fallback = True
        method = "shooting"

    if fallback:
        scan = shooting_periodic(coeffs, alpha, settings,
                                 scan_range=_default_scan_range(coeffs, alpha, config),
                                 n_scan=config.scan_points)
        if scan.nonunique:
            raise DegenerateQuadratic(
                "shooting scan found a continuum of periodic solutions")
        solutions = scan.solutions
        notes.extend(scan.notes)
        method = "shooting"

    if not solutions:
        return BlockSolve(solution=None, delta=delta, method="none",
                          fallback=fallback, ambiguous=False,
                          reason="no periodic solution (quadrature and shooting both empty)",
                          notes=tuple(notes))
    try:
        chosen, ambiguous = select_admissible(solutions)
    except NoneAdmissible as exc:
        return BlockSolve(solution=None, delta=delta, method=method,
                          fallback=fallback, ambiguous=False,
                          reason=str(exc), notes=tuple(notes))
    if chosen.method == "linear":
        method = "linear"
    return BlockSolve(solution=chosen, delta=delta, method=method,
                      fallback=fallback, ambiguous=ambiguous, reason=None,
                      notes=tuple(notes))


@dataclass(frozen=True, eq=False)
class PairEvaluation:
    """One evaluation of the pair at a trial ``alpha``."""

    alpha: float
    feasible: bool
    i_value: float               # ∫ (q2_in - q1_out)² dt, (cm³/s)²·s; NaN if infeasible
    qbar: float                  # mean interface flow, cm³/s; NaN if infeasible
    t: np.ndarray | None
    q1_exit: np.ndarray | None
    q2_entry: np.ndarray | None
    block1: BlockSolve
    block2: BlockSolve
    warnings: tuple[str, ...] = ()

    @property
    def reason(self) -> str | None:
        for b, tag in ((self.block1, "block1"), (self.block2, "block2")):
            if b.reason:
                return f"{tag}: {b.reason}"
        return None


def evaluate_pair(pair: BlockPair, alpha: float,
                  config: InverseConfig | None = None,
                  settings: IntegratorSettings | None = None) -> PairEvaluation:
    """Solve both blocks at ``alpha`` and integrate the interface mismatch.

    Both flows are sampled on the same uniform time grid, so the trapezoid
    quadrature of the mismatch carries no interpolation bias. Deterministic:
    identical inputs give bitwise-identical results.
    """
    config = config or InverseConfig()
    settings = config.integrator_settings(settings)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    c1, c2 = pair.coefficients()
    b1 = solve_block(c1, alpha, settings, config)
    b2 = solve_block(c2, alpha, settings, config)
    warnings = []
    for b, tag in ((b1, "block1"), (b2, "block2")):
        if b.fallback:
            warnings.append(f"shooting_fallback_{tag}")
        if b.ambiguous:
            warnings.append(f"ambiguous_admissible_{tag}")
    if b1.solution is None or b2.solution is None:
        return PairEvaluation(alpha=alpha, feasible=False, i_value=math.nan,
                              qbar=math.nan, t=None, q1_exit=None, q2_entry=None,
                              block1=b1, block2=b2, warnings=tuple(warnings))
    t = b1.solution.t
    flux1 = pair.field.wall_flux(t, pair.block1.x_start, pair.block1.x_end)
    q1_exit = b1.solution.q + flux1
    q2_entry = b2.solution.q
    i_value = float(np.trapezoid((q2_entry - q1_exit) ** 2, t))
    qbar_val = float(np.trapezoid(q1_exit + q2_entry, t) / (2.0 * pair.period))
    return PairEvaluation(alpha=alpha, feasible=True, i_value=i_value,
                          qbar=qbar_val, t=t, q1_exit=q1_exit, q2_entry=q2_entry,
                          block1=b1, block2=b2, warnings=tuple(warnings))


def consistency(pair: BlockPair, alpha: float,
                config: InverseConfig | None = None,
                settings: IntegratorSettings | None = None) -> float | None:
    """Internal-consistency functional I(alpha); ``None`` marks infeasibility
    (a missing admissible periodic solution on either block)."""
    ev = evaluate_pair(pair, alpha, config, settings)
    return ev.i_value if ev.feasible else None


def qbar(pair: BlockPair, alpha: float,
         config: InverseConfig | None = None,
         settings: IntegratorSettings | None = None) -> float:
    """Mean interface flow (1/2T) ∫ (q2(t,0) + q1(t,L)) dt at ``alpha``."""
    ev = evaluate_pair(pair, alpha, config, settings)
    if not ev.feasible:
        raise Infeasible(f"alpha = {alpha:.6g}: {ev.reason}")
    return ev.qbar


def mse_from_consistency(i_value: float, period: float) -> float:
    """Goodness measure MSE = sqrt(I / T), in cm³/s."""
    return math.sqrt(max(i_value, 0.0) / period)


class _Evaluator:
    """Memoising wrapper so every probed ``alpha`` is computed exactly once."""

    def __init__(self, pair: BlockPair, config: InverseConfig,
                 settings: IntegratorSettings):
        self.pair = pair
        self.config = config
        self.settings = settings
        self.cache: dict[float, PairEvaluation] = {}
        self.order: list[float] = []
        self.warnings: list[str] = []

    def __call__(self, alpha: float) -> PairEvaluation:
        if alpha not in self.cache:
            ev = evaluate_pair(self.pair, alpha, self.config, self.settings)
            self.cache[alpha] = ev
            self.order.append(alpha)
            for w in ev.warnings:
                if w not in self.warnings:
                    self.warnings.append(w)
            if not ev.feasible:
                self.warnings.append(f"infeasible_probe alpha={alpha:.9g}")
        return self.cache[alpha]

    def probes(self) -> list[tuple[float, float]]:
        return [(a, self.cache[a].i_value) for a in self.order]


@dataclass(frozen=True, eq=False)
class BoundsResult:
    alpha_min: float
    alpha_max: float
    warnings: tuple[str, ...]
    samples: tuple[tuple[float, float], ...]   # (alpha, qbar) expansion trace


def _bisect_qbar(evaluator: _Evaluator, target: float,
                 lo: float, hi: float, rel_tol: float) -> float:
    g_lo = evaluator(lo).qbar - target
    for _ in range(200):
        if (hi - lo) <= rel_tol * max(abs(lo), abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        ev = evaluator(mid)
        if not ev.feasible:
            # infeasibility is expected only at the weak-elasticity end;
            # push the bracket upward and record it
            evaluator.warnings.append(f"infeasible_inside_bracket alpha={mid:.9g}")
            lo = mid
            continue
        g_mid = ev.qbar - target
        if abs(g_mid) <= 1e-9 * max(1.0, abs(target)):
            return mid
        if g_lo * g_mid <= 0.0:
            hi = mid
        else:
            lo, g_lo = mid, g_mid
    return 0.5 * (lo + hi)


def solve_alpha_bounds(pair: BlockPair, config: InverseConfig | None = None,
                       settings: IntegratorSettings | None = None,
                       evaluator: _Evaluator | None = None) -> BoundsResult:
    """Elasticity values at which the mean flow hits the physiological window.

    Expands a geometric grid from ``alpha_init`` until the window
    [qbar_min, qbar_max] is straddled by feasible samples, then bisects each
    boundary to the configured relative tolerance. A non-monotone sampled
    mean-flow curve selects the outermost brackets and sets a warning.
    Raises :class:`NoBracket` when a window edge is unreachable.
    """
    config = config or InverseConfig()
    if evaluator is None:
        evaluator = _Evaluator(pair, config, config.integrator_settings(settings))

    samples: list[tuple[float, float]] = []

    def probe(alpha: float) -> float | None:
        ev = evaluator(alpha)
        if ev.feasible:
            samples.append((alpha, ev.qbar))
            return ev.qbar
        return None

    q0 = probe(config.alpha_init)
    # expand upward until above qbar_max (or limits), downward until below qbar_min
    alpha_hi, q_hi, hi_blocked = config.alpha_init, q0, False
    while (q_hi is None or q_hi < config.qbar_max) and not hi_blocked:
        nxt = alpha_hi * config.expand_factor
        if nxt > config.alpha_ceil:
            hi_blocked = True
            break
        q = probe(nxt)
        if q is None and q_hi is not None and q_hi >= config.qbar_max:
            hi_blocked = True
        alpha_hi, q_hi = nxt, q if q is not None else q_hi
        if q is None:
            evaluator.warnings.append(f"expansion_infeasible alpha={nxt:.9g}")
            if nxt > config.alpha_init * config.expand_factor ** 60:
                hi_blocked = True
    alpha_lo, q_lo, lo_blocked = config.alpha_init, q0, False
    while (q_lo is None or q_lo > config.qbar_min) and not lo_blocked:
        nxt = alpha_lo / config.expand_factor
        if nxt < config.alpha_floor:
            lo_blocked = True
            break
        q = probe(nxt)
        if q is None:
            evaluator.warnings.append(f"expansion_infeasible alpha={nxt:.9g}")
            lo_blocked = True     # feasibility is lost toward weak elasticity
            break
        alpha_lo, q_lo = nxt, q

    feasible = sorted(samples)
    diffs = np.diff([q for _, q in feasible])
    if diffs.size >= 2 and np.any(diffs > 0) and np.any(diffs < 0):
        evaluator.warnings.append("nonmonotone_qbar")

    def brackets(target: float) -> list[tuple[float, float]]:
        found = []
        for (a1, v1), (a2, v2) in zip(feasible, feasible[1:]):
            if (v1 - target) * (v2 - target) <= 0.0:
                found.append((a1, a2))
        return found

    lo_brs = brackets(config.qbar_min)
    hi_brs = brackets(config.qbar_max)
    if not lo_brs:
        raise NoBracket(
            f"mean flow never crosses qbar_min = {config.qbar_min:.6g} cm³/s "
            f"on the feasible range (sampled {len(feasible)} points)")
    if not hi_brs:
        raise NoBracket(
            f"mean flow never crosses qbar_max = {config.qbar_max:.6g} cm³/s "
            f"on the feasible range (sampled {len(feasible)} points)")
    alpha_min = _bisect_qbar(evaluator, config.qbar_min, *lo_brs[0], config.alpha_rel_tol)
    alpha_max = _bisect_qbar(evaluator, config.qbar_max, *hi_brs[-1], config.alpha_rel_tol)
    if not alpha_min < alpha_max:
        raise NoBracket("physiological window collapsed to an empty alpha interval")
    return BoundsResult(alpha_min=alpha_min, alpha_max=alpha_max,
                        warnings=tuple(evaluator.warnings),
                        samples=tuple(feasible))


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    """Outcome of the bounded inverse problem at the optimal ``alpha``."""

    alpha_min: float
    alpha_max: float
    alpha_opt: float
    i_opt: float
    mse: float
    qbar_opt: float
    t: np.ndarray
    q1: PeriodicSolution
    q2: PeriodicSolution
    q1_exit: np.ndarray
    q2_entry: np.ndarray
    kotin_block1: KotinResult
    kotin_block2: KotinResult
    delta_block1: float
    delta_block2: float
    warnings: tuple[str, ...]
    probes: tuple[tuple[float, float], ...]
    minimizer_probes: int = 0
    periodicity_quadratic: str = "rederived"   # form used for the K equation

    def to_report_dict(self) -> dict:
        return {
            "alpha_min": self.alpha_min,
            "alpha_max": self.alpha_max,
            "alpha_opt": self.alpha_opt,
            "i_opt": self.i_opt,
            "mse": self.mse,
            "qbar_opt": self.qbar_opt,
            "kotin_block1": self.kotin_block1.holds,
            "kotin_block2": self.kotin_block2.holds,
            "delta_block1": self.delta_block1,
            "delta_block2": self.delta_block2,
            "periodicity_quadratic": self.periodicity_quadratic,
            "probe_count": len(self.probes),
            "minimizer_probes": self.minimizer_probes,
            "warnings": list(self.warnings),
        }


def minimize_consistency(pair: BlockPair, config: InverseConfig | None = None,
                         settings: IntegratorSettings | None = None) -> OptimizationResult:
    """Golden-section minimisation of I(alpha) over the bounded window.

    Infeasible probes inside the window are treated as +inf (golden section
    then shrinks toward the feasible side) and recorded; if no probe is
    feasible :class:`EmptyFeasibleInterval` is raised. The reported optimum
    is the best feasible probe, refined to the configured relative
    tolerance on ``alpha``.
    """
    config = config or InverseConfig()
    settings = config.integrator_settings(settings)
    evaluator = _Evaluator(pair, config, settings)
    bounds = solve_alpha_bounds(pair, config, settings, evaluator)
    n_bounds_evals = len(evaluator.order)

    def objective(alpha: float) -> float:
        ev = evaluator(alpha)
        return ev.i_value if ev.feasible else math.inf

    a, b = bounds.alpha_min, bounds.alpha_max
    span = b - a
    n_iter = max(1, math.ceil(math.log(config.alpha_rel_tol * 0.5 * (a + b) / span)
                              / math.log(_GOLDEN))) if span > 0 else 0
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = objective(x1), objective(x2)
    for _ in range(n_iter):
        if (b - a) <= config.alpha_rel_tol * max(abs(a), abs(b)):
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = objective(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = objective(x2)

    candidates = [(al, ev) for al, ev in evaluator.cache.items()
                  if ev.feasible and bounds.alpha_min <= al <= bounds.alpha_max]
    if not candidates:
        raise EmptyFeasibleInterval(
            "no feasible elasticity value inside the mean-flow window")
    alpha_opt, best = min(candidates, key=lambda item: (item[1].i_value, item[0]))

    c1, c2 = pair.coefficients()
    return OptimizationResult(
        alpha_min=bounds.alpha_min,
        alpha_max=bounds.alpha_max,
        alpha_opt=alpha_opt,
        i_opt=best.i_value,
        mse=mse_from_consistency(best.i_value, pair.period),
        qbar_opt=best.qbar,
        t=best.t,
        q1=best.block1.solution,
        q2=best.block2.solution,
        q1_exit=best.q1_exit,
        q2_entry=best.q2_entry,
        kotin_block1=kotin_check(c1, alpha_opt),
        kotin_block2=kotin_check(c2, alpha_opt),
        delta_block1=best.block1.delta,
        delta_block2=best.block2.delta,
        warnings=tuple(evaluator.warnings),
        probes=tuple(evaluator.probes()),
        minimizer_probes=len(evaluator.order) - n_bounds_evals,
    )


def reconstruct_flow(field: AreaField, anchor_x: float,
                     solution: PeriodicSolution, x_targets) -> np.ndarray:
    """Flow curves q(t, x) = Q(t) + wall flux from the anchor station.

    ``solution`` is the periodic inlet flow of the block starting at
    ``anchor_x``; mass conservation extends it to any station of the field,
    upstream or downstream. Returns an (nt, nx) array on the solution's
    time grid.
    """
    xs = np.atleast_1d(np.asarray(x_targets, dtype=float))
    out = np.empty((solution.t.size, xs.size))
    for i, x in enumerate(xs):
        out[:, i] = solution.q + field.wall_flux_signed(solution.t, anchor_x, float(x))
    return out


def segment_fractions_to_x(field: AreaField, fractions) -> np.ndarray:
    """Fractional positions of the full segment mapped to station range."""
    lo, hi = field.x_range
    fr = np.atleast_1d(np.asarray(fractions, dtype=float))
    if np.any(fr < 0) or np.any(fr > 1):
        raise ValueError("fractions must lie in [0, 1]")
    return lo + fr * (hi - lo)

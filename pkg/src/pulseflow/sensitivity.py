"""First-order sensitivity of the reconstructed flow to the elasticity
parameter.

Around the optimum, Q_alpha(t) ≈ Q(t) + P(t) (alpha - alpha_opt) where the
sensitivity coefficient P (units: s) is the unique periodic solution of

    dP/dt = (2 A(t) Q(t) + B(t)) P + C1(t) .

Periodicity is enforced in closed form: with the homogeneous solution
P_h (P_h(0) = 1) and the particular solution P_p (P_p(0) = 0) over one
period, P(0) = P_p(T) / (1 - P_h(T)). P_h(T) is the Floquet multiplier of
the linearised flow and must differ from 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ResonantMultiplier, StepSizeUnderflow
from .riccati import IntegratorSettings, PeriodicSolution, RiccatiCoefficients


@dataclass(frozen=True, eq=False)
class SensitivityCurve:
    """Periodic sensitivity coefficient P(t) with its multiplier."""

    t: np.ndarray
    p: np.ndarray          # s
    multiplier: float      # P_h(T), Floquet multiplier of the homogeneous part
    p0: float
    residual: float        # |P(T) - P(0)|


def sensitivity_curve(coeffs: RiccatiCoefficients, alpha: float,
                      solution: PeriodicSolution,
                      settings: IntegratorSettings | None = None) -> SensitivityCurve:
    """Solve the periodic sensitivity problem along ``solution``.

    The flow is re-integrated together with the homogeneous and particular
    sensitivity solutions so all three share one adaptive time grid; the
    periodic P is then assembled by linear superposition (exact for a
    linear equation). Raises :class:`ResonantMultiplier` when
    |1 - P_h(T)| < 1e-10.
    """
    settings = settings or IntegratorSettings()
    series = coeffs._series
    t_out = np.linspace(0.0, coeffs.period, settings.output_points + 1)

    def fun(t, y):
        a, b, c0, c1 = series.eval_scalar(t)
        q, ph, pp = y
        lam = 2.0 * a * q + b
        return ((a * q + b) * q + c0 + alpha * c1, lam * ph, lam * pp + c1)

    sol = solve_ivp(fun, (0.0, coeffs.period), [solution.q0, 1.0, 0.0],
                    method="RK45", rtol=settings.rel_tol, atol=settings.abs_tol,
                    max_step=settings.max_step, t_eval=t_out)
    if sol.status != 0:
        raise StepSizeUnderflow(sol.message)
    ph, pp = sol.y[1], sol.y[2]
    mult = float(ph[-1])
    if abs(1.0 - mult) < 1e-10:
        raise ResonantMultiplier(
            f"homogeneous multiplier {mult!r} is 1 within tolerance; "
            "the periodic sensitivity problem is singular")
    p0 = float(pp[-1]) / (1.0 - mult)
    p = p0 * ph + pp
    return SensitivityCurve(t=t_out, p=p, multiplier=mult, p0=p0,
                            residual=float(abs(p[-1] - p[0])))

import math

import numpy as np
import pytest

from pulseflow import (
    AreaSamples,
    Block,
    Blowup,
    DegenerateQuadratic,
    IntegratorSettings,
    NoneAdmissible,
    PeriodicSolution,
    RiccatiCoefficients,
    Trajectory,
    assemble_coefficients,
    fit_fourier,
    integrate_riccati,
    kotin_check,
    nullcline,
    nullcline_curves,
    quadrature_periodic,
    select_admissible,
    shooting_periodic,
)

TIGHT = IntegratorSettings(rel_tol=1e-11, abs_tol=1e-13)


def uniform_field(value=4.0, stations=(0.0, 5.0, 10.0), period=1.0):
    xs = np.asarray(stations, float)
    vals = np.full((8, xs.size), value)
    return fit_fourier(AreaSamples(period, xs, vals), 3)


def taper_field(s_start=7.0, s_end=5.0, period=1.0, n_stations=11, length=10.0):
    xs = np.linspace(0.0, length, n_stations)
    prof = s_start + (s_end - s_start) * xs / length
    vals = np.tile(prof, (8, 1))
    return fit_fourier(AreaSamples(period, xs, vals), 3)


def make_solution(mean, t=None):
    t = np.linspace(0, 1, 257) if t is None else t
    q = np.full_like(t, mean)
    return PeriodicSolution(t=t, q=q, method="shooting", mean=mean,
                            admissible=mean > 0, multiplier=1.0, residual=0.0)


class TestAssembleCoefficients:
    def test_uniform_rigid_cylinder_all_zero(self):
        co = assemble_coefficients(Block(uniform_field(), 2.0, 6.0))
        t = np.linspace(0, 1, 17)
        v = co.eval4(t)
        assert np.max(np.abs(v)) < 1e-12

    def test_rigid_taper_hand_values(self):
        co = assemble_coefficients(Block(taper_field(), 0.0, 10.0))
        t = np.linspace(0, 1, 9)
        v = co.eval4(t)
        a_expected = -(1.0 / 10.0) * (1.0 / 5.0 - 1.0 / 7.0)
        c1_expected = (2.0 / 10.0) * (math.sqrt(7.0) - math.sqrt(5.0))
        assert np.allclose(v[:, 0], a_expected, rtol=1e-10)
        assert np.max(np.abs(v[:, 1])) < 1e-12
        assert np.max(np.abs(v[:, 2])) < 1e-12
        assert np.allclose(v[:, 3], c1_expected, rtol=1e-10)
        assert a_expected == pytest.approx(-5.7143e-3, rel=1e-4)
        assert c1_expected == pytest.approx(8.1937e-2, rel=1e-4)

    def test_uniform_pulsation_hand_formulas(self):
        period, length = 1.0, 6.0
        amp = 0.05
        xs = np.linspace(0.0, length, 7)
        tk = np.arange(16) / 16 * period
        sig = 2.0 * (1.0 + amp * np.cos(2 * np.pi * tk / period))
        field = fit_fourier(AreaSamples(period, xs, np.tile(sig[:, None], (1, 7))), 3)
        co = assemble_coefficients(Block(field, 0.0, length))
        om = 2 * np.pi / period
        for t in (0.0, 0.17, 0.42, 0.9):
            s = 2.0 * (1 + amp * math.cos(om * t))
            sp = -2.0 * amp * om * math.sin(om * t)
            spp = -2.0 * amp * om * om * math.cos(om * t)
            a, b, c0, c1 = co.eval4(t)
            assert a == pytest.approx(0.0, abs=1e-12)
            assert b == pytest.approx(2 * sp / s, rel=1e-10, abs=1e-12)
            assert c0 == pytest.approx(-sp ** 2 * length / s + spp * length / 2,
                                       rel=1e-10, abs=1e-10)
            assert c1 == pytest.approx(0.0, abs=1e-12)

    def test_injected_constants_roundtrip(self):
        co = RiccatiCoefficients.from_constants(2.0, -1.5, 0.3, 4.0, -0.2)
        v = co.eval4(np.array([0.0, 0.9, 1.7]))
        assert np.allclose(v, [-1.5, 0.3, 4.0, -0.2])
        assert co.C(0.5, 10.0) == pytest.approx(4.0 - 2.0)


class TestIntegrateRiccati:
    def test_zero_field_constant_trajectory(self):
        co = RiccatiCoefficients.from_constants(1.0, 0.0, 0.0, 0.0, 0.0)
        out = integrate_riccati(co, 1.0, 3.25, settings=TIGHT,
                                t_eval=np.linspace(0, 1, 5))
        assert isinstance(out, Trajectory)
        assert np.allclose(out.q, 3.25, rtol=0, atol=1e-12)

    def test_tanh_closed_form(self):
        co = RiccatiCoefficients.from_constants(1.0, -1.0, 0.0, 1.0, 0.0)
        t = np.linspace(0, 1, 21)
        out = integrate_riccati(co, 0.0, 0.0, settings=TIGHT, t_eval=t)
        assert np.max(np.abs(out.q - np.tanh(t))) < 1e-9

    def test_tan_escape(self):
        co = RiccatiCoefficients.from_constants(2.0, 1.0, 0.0, 1.0, 0.0)
        out = integrate_riccati(co, 0.0, 0.0)
        assert isinstance(out, Blowup)
        assert out.escape_time == pytest.approx(math.pi / 2, abs=1e-4)


class TestQuadraturePeriodic:
    def test_constant_case_solution_set(self):
        co = RiccatiCoefficients.from_constants(1.0, -1.0, 0.0, 1.0, 0.0)
        res = quadrature_periodic(co, 0.0, TIGHT)
        assert len(res.solutions) == 2
        lo, hi = res.solutions  # sorted by mean
        assert np.max(np.abs(lo.q + 1.0)) < 1e-8
        assert np.max(np.abs(hi.q - 1.0)) < 1e-8
        assert lo.k_root == pytest.approx(1.0, abs=1e-8)
        assert hi.k_root == pytest.approx(-1.0, abs=1e-8)
        assert res.delta == pytest.approx(4.0 * math.tanh(1.0) ** 2, abs=1e-8)
        assert hi.admissible and not lo.admissible

    def test_constant_case_multipliers(self):
        co = RiccatiCoefficients.from_constants(1.0, -1.0, 0.0, 1.0, 0.0)
        res = quadrature_periodic(co, 0.0, TIGHT)
        lo, hi = res.solutions
        assert hi.multiplier == pytest.approx(math.exp(-2.0), rel=1e-2)
        assert lo.multiplier == pytest.approx(math.exp(2.0), rel=1e-2)

    def test_zero_field_degenerate(self):
        co = RiccatiCoefficients.from_constants(1.0, 0.0, 0.0, 0.0, 0.0)
        with pytest.raises(DegenerateQuadratic) as err:
            quadrature_periodic(co, 1.0)
        assert err.value.nonunique

    def test_uniform_pulsating_block_reports_continuum(self):
        period = 1.0
        tk = np.arange(16) / 16
        sig = 2.0 * (1 + 0.05 * np.cos(2 * np.pi * tk))
        field = fit_fourier(
            AreaSamples(period, np.linspace(0, 10, 11),
                        np.tile(sig[:, None], (1, 11))), 3)
        co = assemble_coefficients(Block(field, 8.0, 1.0))
        with pytest.raises(DegenerateQuadratic) as err:
            quadrature_periodic(co, 2500.0)
        assert err.value.nonunique

    def test_linear_drift_has_no_periodic_solution(self):
        co = RiccatiCoefficients.from_constants(1.0, 0.0, 0.0, 1.0, 0.0)
        res = quadrature_periodic(co, 1.0)
        assert res.solutions == []

    def test_linear_unique_solution(self):
        co = RiccatiCoefficients.from_constants(1.0, 0.0, 2.0, -4.0, 0.0)
        res = quadrature_periodic(co, 1.0)
        assert len(res.solutions) == 1
        assert np.allclose(res.solutions[0].q, 2.0, atol=1e-6)

    def test_no_real_roots_when_sign_condition_reversed(self):
        # dQ/dt = -Q^2 - 1 < 0 always: no periodic solutions, delta < 0
        co = RiccatiCoefficients.from_constants(1.0, -1.0, 0.0, -1.0, 0.0)
        res = quadrature_periodic(co, 0.0, TIGHT)
        assert res.solutions == []
        assert res.delta < 0


class TestShootingPeriodic:
    def test_constant_case_fixed_points(self):
        co = RiccatiCoefficients.from_constants(1.0, -1.0, 0.0, 1.0, 0.0)
        res = shooting_periodic(co, 0.0, TIGHT, scan_range=(-3.0, 3.0))
        assert len(res.solutions) == 2
        lo, hi = res.solutions
        assert lo.q0 == pytest.approx(-1.0, abs=1e-7)
        assert hi.q0 == pytest.approx(1.0, abs=1e-7)
        assert hi.multiplier == pytest.approx(math.exp(-2.0), rel=1e-2)
        assert lo.multiplier == pytest.approx(math.exp(2.0), rel=1e-2)

    def test_zero_field_every_point_fixed(self):
        co = RiccatiCoefficients.from_constants(1.0, 0.0, 0.0, 0.0, 0.0)
        res = shooting_periodic(co, 1.0, scan_range=(-10.0, 10.0))
        assert res.nonunique
        assert res.solutions == []

    def test_empty_scan_is_not_an_error(self):
        co = RiccatiCoefficients.from_constants(1.0, -1.0, 0.0, -1.0, 0.0)
        res = shooting_periodic(co, 0.0, scan_range=(-5.0, 5.0))
        assert res.solutions == []
        assert not res.nonunique

    def test_matches_quadrature_on_synthetic_block(self, default_field):
        co = assemble_coefficients(Block(default_field, 8.0, 1.0))
        settings = IntegratorSettings(rel_tol=1e-10, abs_tol=1e-12)
        quad = quadrature_periodic(co, 2500.0, settings)
        shot = shooting_periodic(co, 2500.0, settings, scan_range=(-260.0, 260.0))
        assert len(quad.solutions) == len(shot.solutions) == 2
        for qs, ss in zip(quad.solutions, shot.solutions):
            scale = np.max(np.abs(qs.q))
            assert np.max(np.abs(qs.q - ss.q)) / scale < 1e-6


class TestKotin:
    def test_trivial_positive(self):
        co = RiccatiCoefficients.from_constants(1.0, -1.0, 0.0, 1.0, 0.0)
        assert kotin_check(co, 0.0).holds

    def test_trivial_negative_with_witness(self):
        co = RiccatiCoefficients.from_constants(1.0, -1.0, 0.0, -1.0, 0.0)
        res = kotin_check(co, 0.0)
        assert not res.holds
        assert res.witness_value == pytest.approx(-1.0, rel=1e-12)

    def test_rigid_taper_holds_and_matches_steady_balance(self):
        # narrowing rigid taper: -A C = alpha * |A| * C1 > 0 for alpha > 0,
        # and the admissible constant solution matches sqrt(-C/A)
        field = taper_field()
        co = assemble_coefficients(Block(field, 0.0, 10.0))
        alpha = 2500.0
        assert kotin_check(co, alpha).holds
        a = float(co.A(0.0))
        c = float(co.C(0.0, alpha))
        q_eq = math.sqrt(-c / a)
        res = quadrature_periodic(co, alpha, TIGHT)
        sol, ambiguous = select_admissible(res.solutions)
        assert not ambiguous
        assert np.allclose(sol.q, q_eq, rtol=1e-8)

    def test_kotin_on_corpus_matches_solution_structure(self, corpus):
        for case in corpus.cases:
            if case.kotin_holds:
                pos = [s for s in case.shooting.solutions if s.mean > 0]
                neg = [s for s in case.shooting.solutions if s.mean < 0]
                assert len(pos) == 1 and len(neg) == 1


class TestSelectAdmissible:
    def test_picks_positive_mean(self):
        sol, ambiguous = select_admissible([make_solution(1.0), make_solution(-1.0)])
        assert sol.mean == 1.0 and not ambiguous

    def test_empty_raises(self):
        with pytest.raises(NoneAdmissible):
            select_admissible([])

    def test_two_positive_sets_ambiguous(self):
        sol, ambiguous = select_admissible([make_solution(0.5), make_solution(2.0)])
        assert sol.mean == 2.0 and ambiguous

    def test_ambiguity_never_fires_on_corpus(self, corpus):
        for case in corpus.cases:
            positive = [s for s in case.quadrature.solutions if s.admissible]
            assert len(positive) <= 1


class TestNullcline:
    def test_two_roots(self):
        co = RiccatiCoefficients.from_constants(1.0, -1.0, 0.0, 1.0, 0.0)
        assert nullcline(co, 0.0, 0.2) == pytest.approx((-1.0, 1.0))

    def test_linear_fallback(self):
        co = RiccatiCoefficients.from_constants(1.0, 0.0, 2.0, -4.0, 0.0)
        assert nullcline(co, 0.0, 0.2) == pytest.approx((2.0,))

    def test_empty_when_definite(self):
        co = RiccatiCoefficients.from_constants(1.0, -1.0, 0.0, -1.0, 0.0)
        assert nullcline(co, 0.0, 0.2) == ()

    def test_curves_shape(self, default_pair):
        co1, _ = default_pair.coefficients()
        t = np.linspace(0, 1, 33)
        lo, hi = nullcline_curves(co1, 2500.0, t)
        assert lo.shape == hi.shape == t.shape
        finite = np.isfinite(lo) & np.isfinite(hi)
        assert np.all(lo[finite] <= hi[finite])


class TestSolutionInvariants:
    def test_periodicity_residual_bound(self, corpus):
        for case in corpus.cases:
            for sol in case.quadrature.solutions + case.shooting.solutions:
                assert sol.residual <= case.settings.periodicity_tol(sol.q)

    def test_reintegration_returns_to_start(self, corpus):
        for case in corpus.cases[:6]:
            for sol in case.quadrature.solutions:
                out = integrate_riccati(case.coeffs, case.alpha, sol.q0,
                                        settings=case.settings,
                                        t_eval=np.array([case.coeffs.period]))
                assert isinstance(out, Trajectory)
                assert abs(out.q_end - sol.q0) <= case.settings.periodicity_tol(sol.q)

    def test_delta_sign_matches_solution_count(self, corpus):
        for case in corpus.cases:
            n = len(case.quadrature.solutions) + len(case.quadrature.rejected_roots)
            if case.quadrature.delta >= 0 and not math.isnan(case.quadrature.delta):
                assert n >= 1
            elif math.isnan(case.quadrature.delta):
                continue
            else:
                assert n == 0

    def test_multiplier_matches_perturbation_growth(self, corpus):
        for case in corpus.cases[:4]:
            sol = next(s for s in case.quadrature.solutions if s.admissible)
            eps = 1e-6 * max(1.0, abs(sol.q0))
            out = integrate_riccati(case.coeffs, case.alpha, sol.q0 + eps,
                                    settings=case.settings,
                                    t_eval=np.array([case.coeffs.period]))
            base = integrate_riccati(case.coeffs, case.alpha, sol.q0,
                                     settings=case.settings,
                                     t_eval=np.array([case.coeffs.period]))
            growth = abs(out.q_end - base.q_end) / eps
            assert growth == pytest.approx(sol.multiplier, rel=0.05)


class TestInjectedSamples:
    def test_fit_from_nonuniform_times(self):
        period = 1.0
        t = np.array([0.0, 0.11, 0.23, 0.38, 0.52, 0.66, 0.81, 0.93])
        b_vals = 0.4 * np.sin(2 * np.pi * t)
        co = RiccatiCoefficients.from_samples(period, t, -1.0, b_vals, 1.0, 0.0,
                                              harmonics=2)
        probe = np.array([0.05, 0.45, 0.77])
        v = co.eval4(probe)
        assert np.allclose(v[:, 0], -1.0, atol=1e-9)
        assert np.allclose(v[:, 1], 0.4 * np.sin(2 * np.pi * probe), atol=1e-9)

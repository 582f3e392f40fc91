"""Shared fixtures: the default synthetic scenario and the randomized
cross-method corpus are built once per session (they back several suites)."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
import pytest

from pulseflow import (
    Block,
    BlockPair,
    IntegratorSettings,
    RiccatiCoefficients,
    fit_fourier,
    kotin_check,
    minimize_consistency,
    quadrature_periodic,
    shooting_periodic,
)
from pulseflow.synth import SynthSpec, generate


@pytest.fixture(scope="session")
def default_spec() -> SynthSpec:
    return SynthSpec()


@pytest.fixture(scope="session")
def default_samples(default_spec):
    return generate(default_spec)


@pytest.fixture(scope="session")
def default_field(default_samples):
    return fit_fourier(default_samples, 3)


@pytest.fixture(scope="session")
def default_pair(default_field) -> BlockPair:
    return BlockPair(default_field)


@dataclass(frozen=True, eq=False)
class InverseRun:
    result: object
    elapsed: float


@pytest.fixture(scope="session")
def inverse_run(default_pair) -> InverseRun:
    t0 = time.perf_counter()
    result = minimize_consistency(default_pair)
    return InverseRun(result=result, elapsed=time.perf_counter() - t0)


@dataclass(frozen=True, eq=False)
class CorpusCase:
    index: int
    coeffs: RiccatiCoefficients
    alpha: float
    quadrature: object
    shooting: object
    kotin_holds: bool
    settings: IntegratorSettings
    scan_range: tuple[float, float]


CORPUS_SETTINGS = IntegratorSettings(rel_tol=1e-10, abs_tol=1e-12)


def build_corpus(n_cases: int = 20, master_seed: int = 20260811) -> tuple[list[CorpusCase], float]:
    """Randomized tapering-tube blocks with a travelling pulse.

    The elasticity of each case is set so the block-mean flow lands in a
    physiological band, which keeps the sign condition satisfied and both
    construction routes well posed.
    """
    rng = np.random.default_rng(master_seed)
    t0 = time.perf_counter()
    cases = []
    for i in range(n_cases):
        slope = rng.uniform(0.015, 0.04)
        s_ref = rng.uniform(1.7, 2.4)
        eps = rng.uniform(0.005, 0.05)
        seed = int(rng.integers(0, 2 ** 31))
        x_block = rng.uniform(0.0, 9.0)
        qbar_target = rng.uniform(75.0, 105.0)
        spec = SynthSpec(area_start=s_ref + 9.0 * slope, area_end=s_ref - slope,
                         pulse_amplitude=eps, seed=seed,
                         wave_speed=2.8 * math.sqrt(2500.0 / math.sqrt(s_ref)))
        field = fit_fourier(generate(spec), 3)
        coeffs = RiccatiCoefficients.from_block(Block(field, x_block, 1.0))
        s_mid = float(np.interp(x_block + 0.5, field.stations, field.mean_coef))
        alpha = qbar_target ** 2 / s_mid ** 1.5
        scan = (-2.5 * qbar_target - 50.0, 2.5 * qbar_target + 50.0)
        quad = quadrature_periodic(coeffs, alpha, CORPUS_SETTINGS)
        shot = shooting_periodic(coeffs, alpha, CORPUS_SETTINGS, scan_range=scan)
        cases.append(CorpusCase(
            index=i, coeffs=coeffs, alpha=alpha, quadrature=quad, shooting=shot,
            kotin_holds=kotin_check(coeffs, alpha).holds,
            settings=CORPUS_SETTINGS, scan_range=scan))
    return cases, time.perf_counter() - t0


@dataclass(frozen=True, eq=False)
class Corpus:
    cases: list
    elapsed: float


@pytest.fixture(scope="session")
def corpus() -> Corpus:
    cases, elapsed = build_corpus()
    return Corpus(cases=cases, elapsed=elapsed)

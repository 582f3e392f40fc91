"""Batch front-end: synth, reconstruct, sensitivity and hemo subcommands.

Exit codes: 0 success; 1 configuration or I/O error; 2 the data admit no
reconstruction (no admissible periodic solution, unreachable mean-flow
window, degenerate field, resonant sensitivity multiplier). Failures of
kind 2 still write a report with the diagnostic so batch sweeps can triage
them afterwards.

All outputs are plain CSV/JSON (plot-ready data, no rendering); every run
writes a manifest with config and input hashes sufficient to reproduce the
outputs bit for bit. ``PULSEFLOW_THREADS`` caps the worker count of
parallel sweeps.
"""

from __future__ import annotations

import logging
import sys
from pathlib import Path

import click
import numpy as np

from .area import fit_fourier
from .config import RunConfig
from .errors import (
    ConfigError,
    DegenerateQuadratic,
    EmptyFeasibleInterval,
    Infeasible,
    InputFormatError,
    NoBracket,
    NoneAdmissible,
    PulseflowError,
    ResonantMultiplier,
)
from .inverse import (
    BlockPair,
    minimize_consistency,
    reconstruct_flow,
    segment_fractions_to_x,
    solve_block,
)
from .hemodynamics import station_profile
from .io import (
    flow_column_name,
    read_area_csv,
    read_contours_json,
    read_json,
    write_area_csv,
    write_curves_csv,
    write_json,
    write_manifest,
)
from .riccati import nullcline_curves
from .sensitivity import sensitivity_curve
from .synth import generate, resolved_wave_speed, spec_from_dict, spec_to_dict, with_seed

log = logging.getLogger("pulseflow")

_INFEASIBLE_ERRORS = (NoBracket, Infeasible, EmptyFeasibleInterval,
                      DegenerateQuadratic, NoneAdmissible, ResonantMultiplier)


def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(message)s",
                        level=logging.DEBUG if verbose else logging.WARNING)


def _out_dir(out: str) -> Path:
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_inputs(config_path: str):
    cfg_file = Path(config_path)
    cfg = RunConfig.from_dict(read_json(cfg_file), base_dir=cfg_file.parent)
    if cfg.area_csv:
        samples = read_area_csv(cfg.area_csv, cfg.period)
        input_files = {"area_csv": cfg.area_csv}
    else:
        samples = read_contours_json(cfg.contours_json, cfg.period)
        input_files = {"contours_json": cfg.contours_json}
    if cfg.segment_start is not None or cfg.segment_end is not None:
        lo = cfg.segment_start if cfg.segment_start is not None else samples.stations[0]
        hi = cfg.segment_end if cfg.segment_end is not None else samples.stations[-1]
        keep = (samples.stations >= lo - 1e-9) & (samples.stations <= hi + 1e-9)
        if keep.sum() < 2:
            raise ConfigError("segment bounds leave fewer than two stations")
        samples = type(samples)(period=samples.period,
                                stations=samples.stations[keep],
                                values=samples.values[:, keep])
    field = fit_fourier(samples, cfg.harmonics)
    return cfg, field, input_files


def _fail_validation(exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(1)


def _fail_infeasible(out_dir: Path, cfg: RunConfig, command: str,
                     input_files: dict, exc: Exception) -> None:
    payload = {
        "error": f"{type(exc).__name__}: {exc}",
        "warnings": [f"{type(exc).__name__}: {exc}"],
    }
    write_json(out_dir / "report.json", payload)
    write_manifest(out_dir / "manifest.json", command, cfg.to_payload(),
                   cfg.seed, input_files)
    click.echo(f"error: {exc}", err=True)
    sys.exit(2)


@click.group()
def main() -> None:
    """Reconstruct pulsatile flow from periodic cross-sectional area data."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True),
              help="Generator parameters (JSON).")
@click.option("--out", "out", required=True, type=click.Path(), help="Output directory.")
@click.option("--seed", type=int, default=None, help="Override the generator seed.")
@click.option("--verbose", is_flag=True, default=False)
def synth(config_path: str, out: str, seed: int | None, verbose: bool) -> None:
    """Generate a synthetic area grid with known ground truth."""
    _setup_logging(verbose)
    try:
        spec = spec_from_dict(read_json(config_path))
        if seed is not None:
            spec = with_seed(spec, seed)
        samples = generate(spec)
    except (InputFormatError, ValueError, PulseflowError) as exc:
        _fail_validation(exc)
        return
    out_dir = _out_dir(out)
    write_area_csv(out_dir / "area.csv", samples)
    write_json(out_dir / "synth_spec.json", spec_to_dict(spec))
    write_manifest(out_dir / "manifest.json", "synth", spec_to_dict(spec), spec.seed)
    log.info("synthetic grid: %d phases x %d stations, wave speed %.4g cm/s",
             samples.n_phases, samples.stations.size, resolved_wave_speed(spec))


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out", required=True, type=click.Path())
@click.option("--seed", type=int, default=None, help="Recorded in the manifest.")
@click.option("--verbose", is_flag=True, default=False)
def reconstruct(config_path: str, out: str, seed: int | None, verbose: bool) -> None:
    """Invert the area data: elasticity bounds, optimum, and flow curves."""
    _setup_logging(verbose)
    try:
        cfg, field, input_files = _load_inputs(config_path)
        if seed is not None:
            cfg = RunConfig(**{**cfg.__dict__, "seed": seed})
        pair = BlockPair(field, cfg.block_length)
    except (ConfigError, InputFormatError, PulseflowError, ValueError) as exc:
        _fail_validation(exc)
        return
    out_dir = _out_dir(out)
    try:
        result = minimize_consistency(pair, cfg.inverse, cfg.integrator)
    except _INFEASIBLE_ERRORS as exc:
        _fail_infeasible(out_dir, cfg, "reconstruct", input_files, exc)
        return

    t_frac = result.t / pair.period
    xs = segment_fractions_to_x(field, cfg.station_fractions)
    curves = reconstruct_flow(field, pair.block1.x_start, result.q1, xs)
    flow_cols = {"t_frac": t_frac}
    for i, frac in enumerate(cfg.station_fractions):
        flow_cols[flow_column_name(frac)] = curves[:, i]
    write_curves_csv(out_dir / "flow.csv", flow_cols)

    coeffs1, _ = pair.coefficients()
    null_lo, null_hi = nullcline_curves(coeffs1, result.alpha_opt, result.t)
    write_curves_csv(out_dir / "nullcline.csv",
                     {"t_frac": t_frac, "null_low": null_lo, "null_high": null_hi})
    write_curves_csv(out_dir / "phase.csv",
                     {"t_frac": t_frac, "q": result.q1.q,
                      "null_low": null_lo, "null_high": null_hi})

    report = result.to_report_dict()
    report.update({
        "period": cfg.period,
        "block_length": cfg.block_length,
        "block1_start": pair.block1.x_start,
        "interface_x": pair.interface_x,
        "station_fractions": list(cfg.station_fractions),
    })
    write_json(out_dir / "report.json", report)
    write_manifest(out_dir / "manifest.json", "reconstruct", cfg.to_payload(),
                   cfg.seed, input_files)
    log.info("alpha_opt = %.6g cm³/s² (MSE %.4g cm³/s)", result.alpha_opt, result.mse)


def _load_with_report(config_path: str, report_path: str):
    cfg, field, input_files = _load_inputs(config_path)
    report = read_json(report_path)
    if "alpha_opt" not in report:
        raise InputFormatError(f"report {report_path} carries no alpha_opt "
                               "(was the reconstruction infeasible?)")
    input_files["report"] = report_path
    return cfg, field, input_files, float(report["alpha_opt"])


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--report", "report_path", required=True, type=click.Path(exists=True),
              help="report.json from a prior reconstruct run.")
@click.option("--out", "out", required=True, type=click.Path())
@click.option("--seed", type=int, default=None, help="Recorded in the manifest.")
@click.option("--verbose", is_flag=True, default=False)
def sensitivity(config_path: str, report_path: str, out: str,
                seed: int | None, verbose: bool) -> None:
    """First-order response of the reconstructed flow to the elasticity."""
    _setup_logging(verbose)
    try:
        cfg, field, input_files, alpha_opt = _load_with_report(config_path, report_path)
        pair = BlockPair(field, cfg.block_length)
    except (ConfigError, InputFormatError, PulseflowError, ValueError) as exc:
        _fail_validation(exc)
        return
    out_dir = _out_dir(out)
    settings = cfg.inverse.integrator_settings(cfg.integrator)
    try:
        coeffs1, _ = pair.coefficients()
        solved = solve_block(coeffs1, alpha_opt, settings, cfg.inverse)
        if solved.solution is None:
            raise Infeasible(f"alpha_opt = {alpha_opt:.6g}: {solved.reason}")
        curve = sensitivity_curve(coeffs1, alpha_opt, solved.solution, settings)
    except _INFEASIBLE_ERRORS as exc:
        _fail_infeasible(out_dir, cfg, "sensitivity", input_files, exc)
        return
    write_curves_csv(out_dir / "sensitivity.csv",
                     {"t_frac": curve.t / pair.period, "P_seconds": curve.p})
    write_manifest(out_dir / "manifest.json", "sensitivity", cfg.to_payload(),
                   cfg.seed, input_files)
    log.info("sensitivity multiplier %.6g", curve.multiplier)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--report", "report_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out", required=True, type=click.Path())
@click.option("--seed", type=int, default=None, help="Recorded in the manifest.")
@click.option("--verbose", is_flag=True, default=False)
def hemo(config_path: str, report_path: str, out: str,
         seed: int | None, verbose: bool) -> None:
    """Reynolds/Womersley profile along the segment."""
    _setup_logging(verbose)
    try:
        cfg, field, input_files, alpha_opt = _load_with_report(config_path, report_path)
        pair = BlockPair(field, cfg.block_length)
    except (ConfigError, InputFormatError, PulseflowError, ValueError) as exc:
        _fail_validation(exc)
        return
    out_dir = _out_dir(out)
    settings = cfg.inverse.integrator_settings(cfg.integrator)
    try:
        coeffs1, _ = pair.coefficients()
        solved = solve_block(coeffs1, alpha_opt, settings, cfg.inverse)
        if solved.solution is None:
            raise Infeasible(f"alpha_opt = {alpha_opt:.6g}: {solved.reason}")
    except _INFEASIBLE_ERRORS as exc:
        _fail_infeasible(out_dir, cfg, "hemo", input_files, exc)
        return
    rows = station_profile(field, pair.block1.x_start, solved.solution,
                           cfg.fluid_properties())
    write_curves_csv(out_dir / "hemo.csv", {
        "x_cm": np.array([r.x for r in rows]),
        "Wo": np.array([r.womersley for r in rows]),
        "Re_mean": np.array([r.re_mean for r in rows]),
        "Re_peak": np.array([r.re_peak for r in rows]),
        "regime": np.array([r.regime for r in rows], dtype=object),
    })
    write_manifest(out_dir / "manifest.json", "hemo", cfg.to_payload(),
                   cfg.seed, input_files)


if __name__ == "__main__":
    main()

"""Run configuration for the batch front-end."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .hemodynamics import FluidProperties
from .inverse import InverseConfig
from .riccati import IntegratorSettings

_FLUID_KEYS = {"density", "viscosity", "viscosity_pa_s"}
_INTEGRATOR_KEYS = {"rel_tol", "abs_tol", "max_step", "blowup_cap", "output_points"}
_INVERSE_KEYS = {"qbar_min", "qbar_max", "alpha_init", "alpha_rel_tol",
                 "alpha_floor", "alpha_ceil", "expand_factor", "grid_points",
                 "scan_points"}
_TOP_KEYS = {"area_csv", "contours_json", "period", "heart_rate", "harmonics",
             "block_length", "segment_start", "segment_end",
             "station_fractions", "fluid", "integrator", "inverse", "seed"}


def max_workers() -> int:
    """Worker cap for embarrassingly parallel sweeps (PULSEFLOW_THREADS)."""
    raw = os.environ.get("PULSEFLOW_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration of one reconstruction run."""

    area_csv: str | None
    contours_json: str | None
    period: float
    harmonics: int = 3
    block_length: float = 1.0
    segment_start: float | None = None
    segment_end: float | None = None
    station_fractions: tuple[float, ...] = (0.1, 0.5, 0.9)
    fluid_density: float = 1.06
    fluid_viscosity: float = 0.035
    integrator: IntegratorSettings = field(default_factory=IntegratorSettings)
    inverse: InverseConfig = field(default_factory=InverseConfig)
    seed: int = 0

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | None = None) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        unknown = set(data) - _TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")

        area_csv = data.get("area_csv")
        contours_json = data.get("contours_json")
        if bool(area_csv) == bool(contours_json):
            raise ConfigError("exactly one of area_csv / contours_json is required")
        base = base_dir or Path(".")
        for label, p in (("area_csv", area_csv), ("contours_json", contours_json)):
            if p is not None:
                resolved = (base / p).resolve() if not Path(p).is_absolute() else Path(p)
                if not resolved.is_file():
                    raise ConfigError(f"{label} does not exist: {resolved}")
                if label == "area_csv":
                    area_csv = str(resolved)
                else:
                    contours_json = str(resolved)

        if ("period" in data) == ("heart_rate" in data):
            raise ConfigError("exactly one of period / heart_rate is required")
        if "period" in data:
            period = float(data["period"])
        else:
            hr = float(data["heart_rate"])
            if hr <= 0:
                raise ConfigError("heart_rate must be positive (bpm)")
            period = 60.0 / hr
        if period <= 0:
            raise ConfigError("period must be positive")

        harmonics = int(data.get("harmonics", 3))
        if harmonics < 1:
            raise ConfigError("harmonics must be at least 1")
        block_length = float(data.get("block_length", 1.0))
        if block_length <= 0:
            raise ConfigError("block_length must be positive")

        fractions = tuple(float(f) for f in data.get("station_fractions", (0.1, 0.5, 0.9)))
        if not fractions or any(not 0.0 <= f <= 1.0 for f in fractions):
            raise ConfigError("station_fractions must lie in [0, 1]")

        fluid = data.get("fluid", {})
        if set(fluid) - _FLUID_KEYS:
            raise ConfigError(f"unknown fluid keys: {sorted(set(fluid) - _FLUID_KEYS)}")
        density = float(fluid.get("density", 1.06))
        if "viscosity_pa_s" in fluid:
            viscosity = 10.0 * float(fluid["viscosity_pa_s"])
        else:
            viscosity = float(fluid.get("viscosity", 0.035))
        if density <= 0 or viscosity <= 0:
            raise ConfigError("fluid properties must be positive")

        integ = data.get("integrator", {})
        if set(integ) - _INTEGRATOR_KEYS:
            raise ConfigError(
                f"unknown integrator keys: {sorted(set(integ) - _INTEGRATOR_KEYS)}")
        inv = data.get("inverse", {})
        if set(inv) - _INVERSE_KEYS:
            raise ConfigError(f"unknown inverse keys: {sorted(set(inv) - _INVERSE_KEYS)}")
        try:
            integrator = IntegratorSettings(**integ)
            inverse = InverseConfig(**inv)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

        seg_start = data.get("segment_start")
        seg_end = data.get("segment_end")
        return cls(
            area_csv=area_csv,
            contours_json=contours_json,
            period=period,
            harmonics=harmonics,
            block_length=block_length,
            segment_start=None if seg_start is None else float(seg_start),
            segment_end=None if seg_end is None else float(seg_end),
            station_fractions=fractions,
            fluid_density=density,
            fluid_viscosity=viscosity,
            integrator=integrator,
            inverse=inverse,
            seed=int(data.get("seed", 0)),
        )

    def fluid_properties(self) -> FluidProperties:
        return FluidProperties.for_period(self.period, self.fluid_density,
                                          self.fluid_viscosity)

    def to_payload(self) -> dict:
        """JSON-serialisable echo used for hashing and manifests."""
        return {
            "area_csv": self.area_csv,
            "contours_json": self.contours_json,
            "period": self.period,
            "harmonics": self.harmonics,
            "block_length": self.block_length,
            "segment_start": self.segment_start,
            "segment_end": self.segment_end,
            "station_fractions": list(self.station_fractions),
            "fluid": {"density": self.fluid_density, "viscosity": self.fluid_viscosity},
            "integrator": {
                "rel_tol": self.integrator.rel_tol,
                "abs_tol": self.integrator.abs_tol,
                "max_step": (None if self.integrator.max_step == float("inf")
                             else self.integrator.max_step),
                "blowup_cap": self.integrator.blowup_cap,
                "output_points": self.integrator.output_points,
            },
            "inverse": {
                "qbar_min": self.inverse.qbar_min,
                "qbar_max": self.inverse.qbar_max,
                "alpha_init": self.inverse.alpha_init,
                "alpha_rel_tol": self.inverse.alpha_rel_tol,
                "alpha_floor": self.inverse.alpha_floor,
                "alpha_ceil": self.inverse.alpha_ceil,
                "expand_factor": self.inverse.expand_factor,
                "grid_points": self.inverse.grid_points,
                "scan_points": self.inverse.scan_points,
            },
            "seed": self.seed,
        }

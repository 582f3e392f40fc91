"""File formats of the batch pipeline.

All numeric output uses ``repr`` of the Python float (shortest string that
round-trips the IEEE-754 value), so re-reading a written file reproduces the
original numbers exactly and repeated runs are byte-identical.

Formats
-------
area grid CSV      header ``t_frac,<x_0>,...,<x_{N-1}>`` with station
                   positions (cm) as column labels; one row per phase with
                   the phase fraction and the areas (cm²).
contours JSON      array of ``{phase_index, z_cm, points: [[x, y], ...]}``.
coefficients JSON  ``{T, samples: [{t, A, B, C0, C1}, ...]}`` (oracle
                   injection; fitted with the same trigonometric machinery).
report JSON        inverse-problem summary (see ``OptimizationResult``).
curve CSVs         flow, sensitivity, hemodynamics, nullcline, phase data.
manifest JSON      config hash, input hash, versions and seed of a run.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .area import AreaSamples, polygon_area
from .errors import InputFormatError
from .riccati import RiccatiCoefficients


def fmt(x) -> str:
    """Shortest decimal string that round-trips the float exactly."""
    return repr(float(x))


def _write_text(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


# -- area grid CSV -------------------------------------------------------------

def write_area_csv(path, samples: AreaSamples) -> None:
    lines = ["t_frac," + ",".join(fmt(x) for x in samples.stations)]
    m = samples.n_phases
    for k in range(m):
        row = samples.values[k]
        lines.append(fmt(k / m) + "," + ",".join(fmt(v) for v in row))
    _write_text(path, "\n".join(lines) + "\n")


def read_area_csv(path, period: float) -> AreaSamples:
    try:
        raw = Path(path).read_text(encoding="utf-8").strip().splitlines()
    except OSError as exc:
        raise InputFormatError(f"cannot read area grid {path}: {exc}") from exc
    if len(raw) < 3:
        raise InputFormatError("area grid needs a header and at least two phases")
    header = raw[0].split(",")
    if header[0].strip() != "t_frac":
        raise InputFormatError("area grid header must start with 't_frac'")
    try:
        stations = np.array([float(tok) for tok in header[1:]])
        rows = [[float(tok) for tok in line.split(",")] for line in raw[1:]]
    except ValueError as exc:
        raise InputFormatError(f"non-numeric entry in area grid: {exc}") from exc
    data = np.asarray(rows)
    if data.shape[1] != stations.size + 1:
        raise InputFormatError("area grid row width does not match the header")
    m = data.shape[0]
    expect = np.arange(m) / m
    if not np.allclose(data[:, 0], expect, atol=1e-9):
        raise InputFormatError("phase fractions must be k/M in order")
    return AreaSamples(period=period, stations=stations, values=data[:, 1:])


# -- contour JSON ---------------------------------------------------------------

def read_contours_json(path, period: float) -> AreaSamples:
    """Polygon areas of segmented wall contours, organised into an area grid.

    Every (phase, slice) pair must be present; slices become stations (cm)
    and phase indices must form 0..M-1.
    """
    try:
        entries = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputFormatError(f"cannot read contours {path}: {exc}") from exc
    if not isinstance(entries, list) or not entries:
        raise InputFormatError("contours file must be a non-empty JSON array")
    table: dict[tuple[int, float], float] = {}
    for entry in entries:
        try:
            phase = int(entry["phase_index"])
            z = float(entry["z_cm"])
            pts = entry["points"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputFormatError(f"malformed contour entry: {exc}") from exc
        table[(phase, z)] = polygon_area(pts)
    phases = sorted({k[0] for k in table})
    stations = sorted({k[1] for k in table})
    if phases != list(range(len(phases))):
        raise InputFormatError("phase indices must form 0..M-1")
    values = np.empty((len(phases), len(stations)))
    for i, ph in enumerate(phases):
        for j, z in enumerate(stations):
            if (ph, z) not in table:
                raise InputFormatError(f"missing contour for phase {ph}, z = {z} cm")
            values[i, j] = table[(ph, z)]
    return AreaSamples(period=period, stations=np.array(stations), values=values)


# -- coefficient injection ------------------------------------------------------

def read_coefficients_json(path, harmonics: int = 3) -> RiccatiCoefficients:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        period = float(data["T"])
        samples = data["samples"]
        t = np.array([float(s["t"]) for s in samples])
        cols = {key: np.array([float(s[key]) for s in samples])
                for key in ("A", "B", "C0", "C1")}
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputFormatError(f"cannot read coefficient samples {path}: {exc}") from exc
    return RiccatiCoefficients.from_samples(
        period, t, cols["A"], cols["B"], cols["C0"], cols["C1"], harmonics=harmonics)


# -- generic CSV curves -----------------------------------------------------------

def write_curves_csv(path, columns: dict[str, np.ndarray]) -> None:
    """Write named columns; NaN cells are emitted as empty fields."""
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    n = len(arrays[0])
    if any(len(a) != n for a in arrays):
        raise ValueError("column length mismatch")
    lines = [",".join(names)]
    for i in range(n):
        cells = []
        for a in arrays:
            v = a[i]
            if isinstance(v, (str, np.str_)):
                cells.append(str(v))
            else:
                cells.append("" if not np.isfinite(v) else fmt(v))
        lines.append(",".join(cells))
    _write_text(path, "\n".join(lines) + "\n")


def flow_column_name(fraction: float) -> str:
    pct = 100.0 * fraction
    return f"q_{pct:g}".replace(".", "p")


# -- JSON reports and manifests ----------------------------------------------------

def _jsonify(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return None
    if isinstance(value, np.ndarray):
        return [_jsonify(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {k: _jsonify(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonify(v) for v in value]
    return value


def write_json(path, payload: dict) -> None:
    _write_text(path, json.dumps(_jsonify(payload), indent=2, sort_keys=True) + "\n")


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputFormatError(f"cannot read JSON {path}: {exc}") from exc


def sha256_of_file(path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


def sha256_of_payload(payload: dict) -> str:
    canon = json.dumps(_jsonify(payload), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def write_manifest(path, command: str, config_payload: dict, seed,
                   input_files: dict[str, str] | None = None) -> None:
    """Reproducibility record: everything needed to rerun bit-identically.

    Deliberately contains no timestamps so repeated runs write identical
    bytes.
    """
    from importlib.metadata import version as dist_version

    import scipy

    from . import __version__

    payload = {
        "command": command,
        "config_sha256": sha256_of_payload(config_payload),
        "config": config_payload,
        "seed": seed,
        "input_sha256": {k: sha256_of_file(v) for k, v in (input_files or {}).items()},
        "versions": {
            "pulseflow": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "click": dist_version("click"),
        },
    }
    write_json(path, payload)

"""Key-value configuration files and delimited dataset input/output.

Configuration is line-oriented ``key = value`` text: blank lines and
``#`` comments ignored, dotted keys namespace the two electronic levels
(``ground.g_j = 1.16``), vector values are comma separated.  Datasets
and result tables are comma-delimited text with a mandatory header row
whose column names carry the units (angle_deg, frequency_MHz).
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field

import numpy as np

from . import constants
from .fitting import Resonance
from .geometry import RotationScan
from .hamiltonian import (
    EffectiveGTensor,
    HyperfineTensor,
    LevelConstants,
    LevelModel,
    default_models,
    effective_g,
    lambda_from_g,
    tensor_from_products,
)
from .search import GridSpec

DEFAULT_CONFIG_NAME = "tm_ygg.cfg"


class ConfigError(ValueError):
    """Malformed configuration or dataset input."""


@dataclass(frozen=True)
class RunConfig:
    """Resolved run parameters: level models, convention, grids, seed."""

    ground: LevelModel
    excited: LevelModel
    convention: str = "si-table"
    grid: GridSpec = field(default_factory=GridSpec)
    scan: RotationScan | None = None
    seed: int = 0


def _parse_lines(text: str) -> dict[str, tuple[int, str]]:
    entries: dict[str, tuple[int, str]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value")
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = (lineno, value)
    return entries


def _pop_float(entries, key, default=None):
    if key not in entries:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    lineno, value = entries.pop(key)
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"line {lineno}: {key} must be a number, got {value!r}")


def _pop_vector(entries, key):
    if key not in entries:
        return None
    lineno, value = entries.pop(key)
    parts = [p.strip() for p in value.split(",")]
    if len(parts) != 3:
        raise ConfigError(f"line {lineno}: {key} needs 3 comma-separated values")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"line {lineno}: {key} components must be numbers")


def _level_model(entries, label: str, default: LevelModel) -> LevelModel:
    prefix = f"{label}."
    has_any = any(k.startswith(prefix) for k in entries)
    if not has_any:
        return default
    c = LevelConstants(
        label,
        _pop_float(entries, prefix + "g_j"),
        _pop_float(entries, prefix + "a_j"),
        _pop_float(entries, prefix + "g_n_beta_n", constants.TM_G_N_BETA_N),
        _pop_float(entries, prefix + "mu_b", constants.MU_B_MHZ_PER_T),
    )
    g_vals = _pop_vector(entries, prefix + "g")
    products = _pop_vector(entries, prefix + "aj_lambda")
    if g_vals is None and products is None:
        raise ConfigError(f"{label}: provide '{label}.g' or '{label}.aj_lambda' (or both)")
    if g_vals is not None and products is not None:
        # split parameterization: fitted g drives the linear term, the
        # tensor products drive the quadratic term
        return LevelModel(c, tensor_from_products(c, products), EffectiveGTensor(*g_vals))
    if g_vals is not None:
        return LevelModel.from_g(c, EffectiveGTensor(*g_vals))
    return LevelModel.from_tensor(c, tensor_from_products(c, products))


def parse_config(text: str) -> RunConfig:
    entries = _parse_lines(text)
    default_ground, default_excited = default_models()
    ground = _level_model(entries, "ground", default_ground)
    excited = _level_model(entries, "excited", default_excited)

    convention = "si-table"
    if "convention" in entries:
        lineno, value = entries.pop("convention")
        if value not in ("si-table", "equal-projection"):
            raise ConfigError(f"line {lineno}: unknown convention {value!r}")
        convention = value

    grid = GridSpec(
        b_max=_pop_float(entries, "grid.b_max", 0.1),
        b_step=_pop_float(entries, "grid.b_step", 1e-3),
        theta_step=_pop_float(entries, "grid.theta_step", 1.0),
        phi_step=_pop_float(entries, "grid.phi_step", 1.0),
    )

    scan = None
    if any(k.startswith("scan.") for k in entries):
        axis = _pop_vector(entries, "scan.optical_axis")
        if axis is None:
            raise ConfigError("scan.* keys present but scan.optical_axis missing")
        scan = RotationScan(
            optical_axis=axis,
            field_magnitude=_pop_float(entries, "scan.field_magnitude"),
            angle_start=_pop_float(entries, "scan.angle_start", 0.0),
            angle_stop=_pop_float(entries, "scan.angle_stop", 180.0),
            angle_step=_pop_float(entries, "scan.angle_step", 10.0),
            angular_offset=_pop_float(entries, "scan.angular_offset", 0.0),
            reference_axis=_pop_vector(entries, "scan.reference_axis"),
        )

    seed = int(_pop_float(entries, "seed", 0.0))
    if entries:
        key = next(iter(entries))
        lineno, _ = entries[key]
        raise ConfigError(f"line {lineno}: unknown key {key!r}")
    return RunConfig(ground, excited, convention, grid, scan, seed)


def load_config(path: str | None = None) -> RunConfig:
    """Load a configuration file; ``None`` loads the bundled defaults."""
    if path is None:
        text = (
            importlib.resources.files("garnetspin.data")
            .joinpath(DEFAULT_CONFIG_NAME)
            .read_text()
        )
    else:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path!r}: {exc}")
    return parse_config(text)


RESONANCE_COLUMNS = ("angle_deg", "frequency_MHz", "kind", "site", "weight")


def read_resonance_file(path: str) -> list[Resonance]:
    """Parse a delimited resonance dataset; site 0 means unassigned."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read {path!r}: {exc}")
    rows = [l for l in lines if l.strip() and not l.lstrip().startswith("#")]
    if not rows:
        raise ConfigError(f"{path}: empty dataset")
    header = tuple(h.strip() for h in rows[0].split(","))
    if header[:3] != RESONANCE_COLUMNS[:3]:
        raise ConfigError(
            f"{path}: header must start with {','.join(RESONANCE_COLUMNS[:3])}"
        )
    resonances = []
    kinds = set()
    for i, row in enumerate(rows[1:], start=2):
        parts = [p.strip() for p in row.split(",")]
        if len(parts) < 3:
            raise ConfigError(f"{path}: row {i}: expected at least 3 columns")
        try:
            angle = float(parts[0])
            freq = float(parts[1])
            kind = parts[2]
            site = int(parts[3]) if len(parts) > 3 and parts[3] else 0
            weight = float(parts[4]) if len(parts) > 4 and parts[4] else 1.0
            resonances.append(
                Resonance(angle, freq, kind, site if site > 0 else None, weight)
            )
        except (ValueError, Exception) as exc:
            raise ConfigError(f"{path}: row {i}: {exc}")
        kinds.add(kind)
    if len(kinds) > 1:
        raise ConfigError(f"{path}: mixed resonance kinds {sorted(kinds)}")
    return resonances


def write_table(path: str, header: list[str], rows, comments: list[str] = ()):
    """Comma-delimited table with '#' comment lines above the header."""
    try:
        with open(path, "w", encoding="utf-8") as fh:
            for c in comments:
                fh.write(f"# {c}\n")
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_format_cell(v) for v in row) + "\n")
    except OSError as exc:
        raise ConfigError(f"cannot write {path!r}: {exc}")


def _format_cell(v):
    if isinstance(v, float) or isinstance(v, np.floating):
        return f"{v:.9g}"
    return str(v)


def write_trace(path: str, trace, comments: list[str] = ()):
    write_table(
        path,
        ["offset_MHz", "amplitude"],
        zip(trace.offsets, trace.amplitude),
        comments=list(comments) + [f"kind: {trace.kind}"],
    )

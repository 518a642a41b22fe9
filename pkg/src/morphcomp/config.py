"""Run configuration: flat key=value files with dotted section prefixes.

Example::

    problem = short_beam_a
    optimizer.max_iterations = 120   # trailing comments allowed
    output.directory = results/run1

Unknown keys are rejected so typos fail loudly instead of silently running
with defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

PROBLEM_NAMES = ("short_beam_a", "short_beam_b", "mbb", "custom")


@dataclass(frozen=True)
class RunConfig:
    """Everything one optimization run needs, file-format independent."""

    problem: str = "short_beam_a"
    # custom-problem geometry, used only when problem = "custom"
    custom_width: float = 2.0
    custom_height: float = 1.0
    custom_nx: int = 100
    custom_ny: int = 50
    custom_volume_fraction_max: float = 0.5
    custom_supports: str = "edge:left:both"
    custom_loads: str = "2.0,0.5:0.0,-1.0"
    # smoothing / regularization
    n_exponent: int = 6
    epsilon_factor: float = 6.0
    density_floor: float = 1e-3
    # material
    youngs_modulus: float = 1.0
    poisson_ratio: float = 0.3
    void_scale: float = 0.0
    # optimizer loop
    max_iterations: int = 150
    move_limit_fraction: float = 0.02
    convergence_tol: float = 1e-3
    # initial layout; None picks a problem-appropriate grid
    cells_x: int | None = None
    cells_y: int | None = None
    angle_p: float = float(np.sin(np.pi / 4.0))
    # outputs
    output_directory: str = "output"
    emit_history: bool = True
    emit_components: bool = True
    emit_contour: bool = True
    emit_cad: bool = True
    snapshot_every: int = 0
    # reserved for future stochastic features; no default behavior uses it
    seed: int = 0


# file key -> (attribute, converter name)
_KEY_TABLE = {
    "problem": ("problem", "str"),
    "custom.width": ("custom_width", "float"),
    "custom.height": ("custom_height", "float"),
    "custom.nx": ("custom_nx", "int"),
    "custom.ny": ("custom_ny", "int"),
    "custom.volume_fraction_max": ("custom_volume_fraction_max", "float"),
    "custom.supports": ("custom_supports", "str"),
    "custom.loads": ("custom_loads", "str"),
    "regularization.n_exp": ("n_exponent", "int"),
    "regularization.epsilon_factor": ("epsilon_factor", "float"),
    "regularization.alpha": ("density_floor", "float"),
    "material.E": ("youngs_modulus", "float"),
    "material.nu": ("poisson_ratio", "float"),
    "material.void_scale": ("void_scale", "float"),
    "optimizer.max_iterations": ("max_iterations", "int"),
    "optimizer.move_limit_fraction": ("move_limit_fraction", "float"),
    "optimizer.convergence_tol": ("convergence_tol", "float"),
    "initial.cells_x": ("cells_x", "int"),
    "initial.cells_y": ("cells_y", "int"),
    "initial.angle_p": ("angle_p", "float"),
    "output.directory": ("output_directory", "str"),
    "output.history": ("emit_history", "bool"),
    "output.components": ("emit_components", "bool"),
    "output.contour": ("emit_contour", "bool"),
    "output.cad": ("emit_cad", "bool"),
    "output.snapshot_every": ("snapshot_every", "int"),
    "seed": ("seed", "int"),
}
_ATTR_TO_KEY = {attr: key for key, (attr, _) in _KEY_TABLE.items()}


class ConfigError(ValueError):
    """Malformed, unknown or out-of-range configuration input."""


def _convert(raw: str, kind: str, key: str, line_no: int):
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            low = raw.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        return raw
    except ValueError:
        raise ConfigError(f"line {line_no}: key '{key}' expects a {kind} "
                          f"value, got {raw!r}") from None


def _range_error(key: str, line_no: int, message: str) -> ConfigError:
    where = f"line {line_no}: " if line_no else ""
    return ConfigError(f"{where}key '{key}' {message}")


def _validate(attr: str, value, key: str, line_no: int = 0):
    if attr == "problem" and value not in PROBLEM_NAMES:
        raise _range_error(key, line_no,
                           f"must be one of {', '.join(PROBLEM_NAMES)}; "
                           f"got {value!r}")
    if attr in ("custom_width", "custom_height", "epsilon_factor",
                "youngs_modulus", "convergence_tol") and not value > 0:
        raise _range_error(key, line_no, f"must be positive, got {value}")
    if attr in ("custom_nx", "custom_ny", "max_iterations") and value < 1:
        raise _range_error(key, line_no, f"must be >= 1, got {value}")
    if attr in ("cells_x", "cells_y") and value is not None and value < 1:
        raise _range_error(key, line_no, f"must be >= 1, got {value}")
    if attr == "custom_volume_fraction_max" and not 0 < value < 1:
        raise _range_error(key, line_no,
                           f"must lie strictly in (0, 1), got {value}")
    if attr == "n_exponent" and (value < 2 or value % 2):
        raise _range_error(key, line_no,
                           f"must be an even integer >= 2, got {value}")
    if attr == "density_floor" and not 0 < value <= 0.01:
        raise _range_error(key, line_no,
                           f"must lie in (0, 0.01], got {value}")
    if attr == "poisson_ratio" and not -1 < value < 0.5:
        raise _range_error(key, line_no,
                           f"must lie strictly in (-1, 0.5), got {value}")
    if attr == "void_scale" and not 0 <= value <= 0.01:
        raise _range_error(key, line_no,
                           f"must lie in [0, 0.01], got {value}")
    if attr == "move_limit_fraction" and not 0 < value <= 0.5:
        raise _range_error(key, line_no,
                           f"must lie in (0, 0.5], got {value}")
    if attr == "angle_p" and not abs(value) <= 0.995:
        raise _range_error(key, line_no,
                           f"must satisfy |p| <= 0.995, got {value}")
    if attr == "snapshot_every" and value < 0:
        raise _range_error(key, line_no, f"must be >= 0, got {value}")


def _strip_comment(line: str) -> str:
    """Drop a # comment when it starts the line or follows whitespace."""
    if line.lstrip().startswith("#"):
        return ""
    for pos, ch in enumerate(line):
        if ch == "#" and pos > 0 and line[pos - 1] in " \t":
            return line[:pos]
    return line


def parse_config(text: bytes | str) -> RunConfig:
    """Parse the flat key=value format into a validated RunConfig."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ConfigError(f"config is not valid UTF-8: {exc}") from None

    values: dict[str, object] = {}
    seen: dict[str, int] = {}
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw_line).strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected 'key = value', "
                              f"got {raw_line.strip()!r}")
        key, _, raw_value = line.partition("=")
        key = key.strip()
        raw_value = raw_value.strip()
        if key not in _KEY_TABLE:
            raise ConfigError(f"line {line_no}: unknown key '{key}'")
        if key in seen:
            raise ConfigError(f"line {line_no}: key '{key}' already set on "
                              f"line {seen[key]}")
        seen[key] = line_no
        attr, kind = _KEY_TABLE[key]
        value = _convert(raw_value, kind, key, line_no)
        _validate(attr, value, key, line_no)
        values[attr] = value
    return RunConfig(**values)


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(config: RunConfig) -> str:
    """Emit every non-default-None field; parse_config round-trips it."""
    lines = []
    for f in fields(RunConfig):
        value = getattr(config, f.name)
        if value is None:
            continue
        lines.append(f"{_ATTR_TO_KEY[f.name]} = {_format_value(value)}")
    return "\n".join(lines) + "\n"


def validate_config(config: RunConfig) -> RunConfig:
    """Re-run the range checks on a programmatically built RunConfig."""
    for f in fields(RunConfig):
        _validate(f.name, getattr(config, f.name), _ATTR_TO_KEY[f.name])
    return config

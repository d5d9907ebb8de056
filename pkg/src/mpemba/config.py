"""Run configuration: a flat key-value text format with dotted sections.

One ``key = value`` pair per line; ``#`` starts a comment.  Numbers are
decimal, booleans are ``true``/``false``, lists are comma separated.
Unknown keys are errors, not warnings, and validation reports every
violation at once.  ``emit_config`` writes the canonical form, which
reparses to an equal config.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields, replace
from math import comb

from .errors import ValidationError
from .thermal import TemperatureSpec

MODELS = ("xxz", "j1j2")
METHODS = ("auto", "spectral", "integrate")
BOUNDARIES = ("open", "periodic")
FORMATS = ("csv", "json", "png", "modes")
COMMANDS = ("spectrum", "evolve", "classify", "sweep-delta", "sweep-j1j2", "overlaps")

DEFAULT_HOT = (0.5, 1.0, 2.0, 5.0, 10.0, 100.0)


@dataclass(frozen=True)
class RunConfig:
    model: str = "xxz"
    j1: float = -1.0
    j2: float = 0.0
    delta1: float | None = None
    delta2: float = 0.0
    num_sites: int | None = None
    boundary: str = "periodic"
    num_up: int | str | None = None  # None -> L // 2; "all" -> unrestricted space
    gammas: tuple[float, ...] | float = 1.0
    cold: TemperatureSpec = field(default_factory=TemperatureSpec.zero_plus)
    hot: tuple[TemperatureSpec, ...] = tuple(TemperatureSpec.finite(t) for t in DEFAULT_HOT)
    grid_points: int = 400
    t_max: float | None = None  # None -> derived from the spectral gap
    rtol: float = 1e-9
    method: str = "auto"
    formats: tuple[str, ...] = ("csv", "json", "png")
    out_dir: str = "out"
    seed: int = 0  # reserved; the pipeline is deterministic
    sweep_delta_start: float = 0.0
    sweep_delta_stop: float = 3.0
    sweep_delta_step: float = 0.01
    sweep_sizes: tuple[int, ...] = (6, 8)
    sweep_temperatures: tuple[float, ...] = (1.0, 5.0)
    sweep_ratios: tuple[float, ...] = (-0.2499, -0.25, -0.3)
    sweep_t_max: float = 100.0
    sweep_method: str = "integrate"

    def resolved_num_up(self) -> int | str:
        if self.num_up is None:
            return self.num_sites // 2
        return self.num_up

    def gamma_list(self) -> tuple[float, ...]:
        if isinstance(self.gammas, tuple):
            return self.gammas
        return (float(self.gammas),) * self.num_sites


def _parse_float(text: str) -> float:
    return float(text)


def _parse_int(text: str) -> int:
    value = int(text)
    return value


def _parse_bool(text: str) -> bool:
    if text not in ("true", "false"):
        raise ValueError(f"expected true/false, got {text!r}")
    return text == "true"


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(tok.strip()) for tok in text.split(",") if tok.strip())


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(tok.strip()) for tok in text.split(",") if tok.strip())


def _parse_str_list(text: str) -> tuple[str, ...]:
    return tuple(tok.strip() for tok in text.split(",") if tok.strip())


def _parse_temps(text: str) -> tuple[TemperatureSpec, ...]:
    return tuple(TemperatureSpec.parse(tok) for tok in text.split(",") if tok.strip())


# key -> (config attribute, parser)
_SCHEMA = {
    "model": ("model", str.strip),
    "model.j1": ("j1", _parse_float),
    "model.j2": ("j2", _parse_float),
    "model.delta1": ("delta1", _parse_float),
    "model.delta2": ("delta2", _parse_float),
    "lattice.L": ("num_sites", _parse_int),
    "lattice.boundary": ("boundary", str.strip),
    "lattice.num_up": ("num_up", lambda s: s.strip() if s.strip() == "all" else _parse_int(s)),
    "dissipation.gamma": ("gammas", lambda s: _parse_float_list(s) if "," in s else _parse_float(s)),
    "initial.cold": ("cold", TemperatureSpec.parse),
    "initial.hot": ("hot", _parse_temps),
    "time.points": ("grid_points", _parse_int),
    "time.t_max": ("t_max", lambda s: None if s.strip() == "auto" else _parse_float(s)),
    "time.rtol": ("rtol", _parse_float),
    "method": ("method", str.strip),
    "output.formats": ("formats", _parse_str_list),
    "output.dir": ("out_dir", str.strip),
    "seed": ("seed", _parse_int),
    "sweep.delta_start": ("sweep_delta_start", _parse_float),
    "sweep.delta_stop": ("sweep_delta_stop", _parse_float),
    "sweep.delta_step": ("sweep_delta_step", _parse_float),
    "sweep.sizes": ("sweep_sizes", _parse_int_list),
    "sweep.temperatures": ("sweep_temperatures", _parse_float_list),
    "sweep.ratios": ("sweep_ratios", _parse_float_list),
    "sweep.t_max": ("sweep_t_max", _parse_float),
    "sweep.method": ("sweep_method", str.strip),
}

_ATTR_TO_KEY = {attr: key for key, (attr, _) in _SCHEMA.items()}


def parse_config(text: str) -> RunConfig:
    """Parse and validate a config document; raises with every violation listed."""
    values: dict[str, object] = {}
    problems: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _SCHEMA:
            problems.append(f"line {lineno}: unknown key {key!r}")
            continue
        attr, parser = _SCHEMA[key]
        if attr in values:
            problems.append(f"line {lineno}: duplicate key {key!r}")
            continue
        try:
            values[attr] = parser(value)
        except (ValueError, ValidationError) as exc:
            problems.append(f"line {lineno}: bad value for {key!r}: {exc}")
    if problems:
        raise ValidationError("config parse failed:\n  " + "\n  ".join(problems))

    config = replace(RunConfig(), **values)
    problems = validate_config(config)
    if problems:
        raise ValidationError("config validation failed:\n  " + "\n  ".join(problems))
    return config


def validate_config(config: RunConfig) -> list[str]:
    """All validation violations of a parsed config (empty when valid)."""
    problems: list[str] = []
    if config.model not in MODELS:
        problems.append(f"model must be one of {MODELS}, got {config.model!r}")
    if config.num_sites is None:
        problems.append("lattice.L is required")
    elif config.num_sites < 1:
        problems.append(f"lattice.L must be positive, got {config.num_sites}")
    if config.delta1 is None:
        problems.append("model.delta1 is required")
    if config.boundary not in BOUNDARIES:
        problems.append(f"lattice.boundary must be one of {BOUNDARIES}, got {config.boundary!r}")
    if config.model == "xxz" and (config.j2 != 0.0 or config.delta2 != 0.0):
        problems.append("the xxz model requires model.j2 = 0 and model.delta2 = 0")
    if config.method not in METHODS:
        problems.append(f"method must be one of {METHODS}, got {config.method!r}")
    if config.sweep_method not in METHODS:
        problems.append(f"sweep.method must be one of {METHODS}, got {config.sweep_method!r}")
    for fmt in config.formats:
        if fmt not in FORMATS:
            problems.append(f"unknown output format {fmt!r}; known: {FORMATS}")
    if config.grid_points < 2:
        problems.append("time.points must be at least 2")
    if config.rtol <= 0:
        problems.append("time.rtol must be positive")
    if config.t_max is not None and config.t_max <= 0:
        problems.append("time.t_max must be positive (or 'auto')")
    if isinstance(config.gammas, tuple):
        if config.num_sites is not None and len(config.gammas) != config.num_sites:
            problems.append(
                f"dissipation.gamma lists one rate per site: got {len(config.gammas)} for L={config.num_sites}"
            )
        if any(g < 0 for g in config.gammas):
            problems.append("dissipation rates must be nonnegative")
    elif config.gammas < 0:
        problems.append("dissipation.gamma must be nonnegative")

    if config.num_sites is not None:
        if isinstance(config.num_up, int) and not 0 <= config.num_up <= config.num_sites:
            problems.append(f"lattice.num_up = {config.num_up} outside [0, {config.num_sites}]")
        else:
            num_up = config.num_up if isinstance(config.num_up, int) else config.num_sites // 2
            dim = 2**config.num_sites if config.num_up == "all" else comb(config.num_sites, num_up)
            if config.method == "spectral" and dim > 128:
                problems.append(
                    f"method=spectral needs sector dimension <= 128, got {dim}; use integrate or auto"
                )
            if config.method == "integrate" and config.t_max is None:
                problems.append("method=integrate needs an explicit time.t_max (no spectrum to derive it)")
    if config.sweep_delta_step <= 0:
        problems.append("sweep.delta_step must be positive")
    return problems


def _format_value(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, TemperatureSpec):
        return value.label()
    if isinstance(value, tuple):
        if len(value) == 1:
            # Trailing comma keeps a one-element list distinguishable
            # from a scalar on reparse.
            return f"{_format_value(value[0])},"
        return ", ".join(_format_value(v) for v in value)
    return str(value)


def emit_config(config: RunConfig) -> str:
    """Canonical text form; parse(emit(c)) == c."""
    lines = []
    for f in fields(RunConfig):
        value = getattr(config, f.name)
        key = _ATTR_TO_KEY[f.name]
        if value is None:
            if f.name == "t_max":
                lines.append(f"{key} = auto")
            continue
        lines.append(f"{key} = {_format_value(value)}")
    return "\n".join(lines) + "\n"


def config_hash(config: RunConfig) -> str:
    """Stable digest of the canonical config text."""
    return hashlib.sha256(emit_config(config).encode()).hexdigest()

"""Flat, typed, dotted-key run configuration with a strict schema.

The format is deliberately plain text, one ``key = value`` per line, because
parameter sweeps rewrite configs programmatically and diffs should be
readable.  Unknown keys are rejected with the offending line number; so are
type errors.  parse -> serialize -> parse is the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class ConfigError(ValueError):
    """Malformed configuration; message carries the line number when known."""


# key -> (type, default); required keys have default REQUIRED
_REQUIRED = object()

SCHEMA: dict[str, tuple[type, object]] = {
    "grid.n_per_axis": (int, 32),
    "grid.box_length": (float, 2.0 * np.pi),
    "grid.dealias_cutoff": (float, None),  # None means n_per_axis / 3
    "model.s": (float, 0.0),
    "model.kappa": (float, 2.0),
    "model.mu": (float, 1.0),
    "model.eps_visc": (float, 0.0),
    "stepper.dt": (float, 1e-3),
    "stepper.t_end": (float, 1.0),
    "stepper.scheme": (str, "etd2rk"),
    "stepper.snapshot_every": (int, 10),
    "initial_data.kind": (str, "beltrami"),
    "initial_data.amplitude": (float, 1.0),
    "initial_data.seed": (int, None),
    "initial_data.band_lo": (float, 1.0),
    "initial_data.band_hi": (float, 4.0),
    "initial_data.spectral_slope": (float, 3.0),
    "initial_data.checkpoint_path": (str, None),
    "diagnostics.alpha": (float, 1.0),
    "diagnostics.delta": (float, 0.01),
    "diagnostics.eps_rate": (float, 0.1),
    "diagnostics.decay_window_lo": (float, 0.02),
    "diagnostics.decay_window_hi": (float, 0.2),
    "diagnostics.gevrey_window_lo": (float, 0.0),
    "diagnostics.gevrey_window_hi": (float, 0.0),  # 0/0 means the whole run
    "output_dir": (str, "runs/latest"),
}

_RANDOM_KINDS = ("random_band", "power_law_spectrum")
_KINDS = ("beltrami",) + _RANDOM_KINDS + ("checkpoint",)


@dataclass
class SimConfig:
    """Typed view over the flat key table."""

    values: dict = field(default_factory=dict)

    def __getitem__(self, key: str):
        return self.values[key]

    def get(self, key: str, default=None):
        return self.values.get(key, default)

    def with_overrides(self, overrides: dict) -> "SimConfig":
        merged = dict(self.values)
        for key, raw in overrides.items():
            if key not in SCHEMA:
                raise ConfigError(f"unknown key {key!r}")
            merged[key] = _coerce(key, raw)
        cfg = SimConfig(merged)
        cfg.validate()
        return cfg

    def validate(self):
        kind = self.values["initial_data.kind"]
        if kind not in _KINDS:
            raise ConfigError(f"initial_data.kind must be one of {_KINDS}, got {kind!r}")
        if kind in _RANDOM_KINDS and self.values.get("initial_data.seed") is None:
            raise ConfigError(f"initial_data.seed is mandatory for kind {kind!r}")
        if kind == "checkpoint" and not self.values.get("initial_data.checkpoint_path"):
            raise ConfigError("initial_data.checkpoint_path is mandatory for kind 'checkpoint'")
        if self.values["stepper.scheme"] not in ("etd1", "etd2rk"):
            raise ConfigError(f"stepper.scheme must be etd1 or etd2rk, got {self.values['stepper.scheme']!r}")
        n = self.values["grid.n_per_axis"]
        if n <= 0 or n % 2:
            raise ConfigError(f"grid.n_per_axis must be positive and even, got {n}")
        if self.values["stepper.dt"] <= 0 or self.values["stepper.t_end"] <= self.values["stepper.dt"]:
            raise ConfigError("need 0 < stepper.dt < stepper.t_end")


def _coerce(key: str, raw, line_no: int | None = None):
    typ, _default = SCHEMA[key]
    if raw is None:
        return None
    if isinstance(raw, typ) and not (typ is int and isinstance(raw, bool)):
        return raw
    text = str(raw).strip()
    if text.lower() in ("none", ""):
        return None
    where = f"line {line_no}: " if line_no is not None else ""
    try:
        if typ is int:
            as_float = float(text)
            if as_float != int(as_float):
                raise ValueError
            return int(as_float)
        if typ is float:
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"{where}key {key!r} expects {typ.__name__}, got {text!r}") from None


def default_config() -> SimConfig:
    return SimConfig({k: d for k, (_t, d) in SCHEMA.items() if d is not _REQUIRED})


def parse_config(text: str) -> SimConfig:
    """Parse ``key = value`` lines; '#' starts a comment; unknown keys are fatal."""
    values = {k: d for k, (_t, d) in SCHEMA.items()}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {line_no}: expected 'key = value', got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in SCHEMA:
            raise ConfigError(f"line {line_no}: unknown key {key!r}")
        values[key] = _coerce(key, raw.strip(), line_no)
    cfg = SimConfig(values)
    cfg.validate()
    return cfg


def load_config(path) -> SimConfig:
    return parse_config(Path(path).read_text())


def serialize_config(cfg: SimConfig) -> str:
    """Canonical text: schema order, repr-formatted floats, 'none' for unset."""
    lines = []
    for key in SCHEMA:
        val = cfg.values.get(key, SCHEMA[key][1])
        if val is None:
            rendered = "none"
        elif isinstance(val, float):
            rendered = repr(val)
        else:
            rendered = str(val)
        lines.append(f"{key} = {rendered}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# constructors from a config
# ---------------------------------------------------------------------------

def build_grid(cfg: SimConfig):
    from .spectral import Grid3
    return Grid3(cfg["grid.n_per_axis"], cfg["grid.box_length"],
                 cfg.get("grid.dealias_cutoff"))


def build_model(cfg: SimConfig):
    from .dynamics import ModelParams
    return ModelParams(s=cfg["model.s"], kappa=cfg["model.kappa"], mu=cfg["model.mu"],
                       eps_visc=cfg["model.eps_visc"])


def build_stepper(cfg: SimConfig):
    from .solvers import StepperConfig
    return StepperConfig(dt=cfg["stepper.dt"], t_end=cfg["stepper.t_end"],
                         scheme=cfg["stepper.scheme"],
                         snapshot_every=cfg["stepper.snapshot_every"])


def build_initial_data(cfg: SimConfig, grid, model):
    from . import initial_data as idata
    from .records import load_checkpoint
    kind = cfg["initial_data.kind"]
    amp = cfg["initial_data.amplitude"]
    if kind == "beltrami":
        return idata.beltrami(grid, amp)
    if kind == "random_band":
        return idata.random_band(grid, cfg["initial_data.seed"], cfg["initial_data.band_lo"],
                                 cfg["initial_data.band_hi"], amp, norm_sigma=model.sigma_c)
    if kind == "power_law_spectrum":
        return idata.power_law_spectrum(grid, cfg["initial_data.seed"],
                                        cfg["initial_data.spectral_slope"], amp,
                                        norm_sigma=model.sigma_c)
    if kind == "checkpoint":
        field_, _meta = load_checkpoint(cfg["initial_data.checkpoint_path"])
        return field_
    raise ConfigError(f"unhandled initial data kind {kind!r}")

"""Experiment configuration: strict `key = value` files.

Unknown keys are fatal (provenance beats convenience), lists are comma
separated, `#` starts a comment. The `markers`/`levels` pair is the escape
hatch for user-defined phases: semicolon-separated closed-form expressions
in x and y, evaluated on the grid with a numpy namespace.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .gating import MarkerSet, PhaseConfig
from .presets import build_preset, preset_names
from .spectral import Grid

KINDS = ("init-approx", "evolve", "closure", "hausdorff-sweep",
         "pointwise-sweep", "nondegeneracy")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    kind: str
    preset: str | None = None
    markers: list[str] = field(default_factory=list)
    levels: list[float] = field(default_factory=list)
    n: int = 128
    betas: list[float] = field(default_factory=lambda: [10.0, 20.0, 40.0])
    delta: float = math.pi / 4  # exclusion radius for gap / sup-error diagnostics
    strip_delta: float = 0.5    # strip half-width for nondegeneracy scans
    cfl: float = 0.5
    dt_max: float = 0.05
    t_end: float = 1.0
    save_every: int = 10
    save_interval: float | None = None  # time-based save cadence (overrides save_every)
    seed: int = 0
    perturb: float = 0.0        # amplitude of seeded random marker perturbation
    reference: str = "sharp"    # "sharp" or "4beta" (soft run at 4*max beta)
    out: str | None = None
    threads: int = 1
    pgm: bool = False
    figures: bool = True

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {', '.join(KINDS)}; got {self.kind!r}")
        if (self.preset is None) == (not self.markers):
            raise ConfigError("exactly one of `preset` and `markers` must be given")
        if self.preset is not None and self.preset not in preset_names():
            raise ConfigError(f"unknown preset {self.preset!r}")
        if self.markers and len(self.levels) != len(self.markers):
            raise ConfigError("`levels` must list one value per marker expression")
        if not self.betas:
            raise ConfigError("betas must be nonempty")
        if any(b <= 0 for b in self.betas):
            raise ConfigError("betas must be positive")
        if any(b1 >= b2 for b1, b2 in zip(self.betas, self.betas[1:])):
            raise ConfigError("betas must be strictly increasing")
        if self.delta <= 0 or self.strip_delta <= 0:
            raise ConfigError("delta and strip_delta must be positive")
        if self.reference not in ("sharp", "4beta"):
            raise ConfigError("reference must be 'sharp' or '4beta'")
        if self.perturb < 0:
            raise ConfigError("perturb must be nonnegative")
        try:
            Grid(self.n)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        StepControlArgs = dict(cfl=self.cfl, dt_max=self.dt_max,
                               t_end=self.t_end, save_every=self.save_every,
                               save_interval=self.save_interval)
        from .transport import StepControl
        try:
            StepControl(**StepControlArgs)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def build_markers(self, beta: float) -> MarkerSet:
        grid = Grid(self.n)
        if self.preset is not None:
            m = build_preset(self.preset, grid, beta)
        else:
            namespace = {
                "x": grid.x, "y": grid.y, "pi": np.pi,
                "sin": np.sin, "cos": np.cos, "exp": np.exp, "tanh": np.tanh,
                "sqrt": np.sqrt, "abs": np.abs,
            }
            phis = []
            for expr in self.markers:
                try:
                    val = eval(expr, {"__builtins__": {}}, namespace)  # noqa: S307
                except Exception as exc:
                    raise ConfigError(f"bad marker expression {expr!r}: {exc}") from None
                phis.append(np.broadcast_to(np.asarray(val, dtype=float),
                                            (grid.n, grid.n)).copy())
            m = MarkerSet(grid, np.stack(phis), PhaseConfig(tuple(self.levels), beta))
        if self.perturb > 0:
            m = m.with_phi(m.phi + self.perturb * _smooth_noise(grid, m.k, self.seed))
        return m


def _smooth_noise(grid: Grid, k: int, seed: int) -> np.ndarray:
    """Seeded band-limited random fields (|modes| <= 4), unit sup norm."""
    rng = np.random.default_rng(seed)
    out = np.empty((k, grid.n, grid.n))
    modes = range(-4, 5)
    for i in range(k):
        f = np.zeros((grid.n, grid.n))
        for kx in modes:
            for ky in modes:
                if kx == 0 and ky == 0:
                    continue
                amp = rng.normal() / (1 + kx * kx + ky * ky)
                phase = rng.uniform(0, 2 * np.pi)
                f += amp * np.cos(kx * grid.x + ky * grid.y + phase)
        out[i] = f / np.abs(f).max()
    return out


_PARSERS = {
    "kind": str, "preset": str, "reference": str, "out": str,
    "n": int, "save_every": int, "seed": int, "threads": int,
    "delta": float, "strip_delta": float, "cfl": float, "dt_max": float,
    "t_end": float, "perturb": float, "save_interval": float,
}


def _parse_bool(s: str, key: str, lineno: int) -> bool:
    low = s.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"line {lineno}: {key} must be a boolean, got {s!r}")


def load_config(path: str) -> ExperimentConfig:
    """Parse and validate a config file; unknown keys are errors."""
    cfg = ExperimentConfig(kind="")
    seen = set()
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected `key = value`, got {raw.strip()!r}")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key in seen:
                raise ConfigError(f"line {lineno}: duplicate key {key!r}")
            seen.add(key)
            try:
                if key in _PARSERS:
                    setattr(cfg, key, _PARSERS[key](value))
                elif key == "betas":
                    cfg.betas = [float(v) for v in value.split(",") if v.strip()]
                elif key == "levels":
                    cfg.levels = [float(v) for v in value.split(",") if v.strip()]
                elif key == "markers":
                    cfg.markers = [v.strip() for v in value.split(";") if v.strip()]
                elif key in ("pgm", "figures"):
                    setattr(cfg, key, _parse_bool(value, key, lineno))
                else:
                    raise ConfigError(f"line {lineno}: unknown key {key!r}")
            except ConfigError:
                raise
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None
    if "kind" not in seen:
        raise ConfigError("missing required key `kind`")
    cfg.validate()
    return cfg

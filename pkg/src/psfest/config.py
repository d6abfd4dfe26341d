"""Experiment configuration: flat key-value file with sections.

Example::

    [experiment]
    kind = simulate

    [pattern]
    a = -16, -16
    b = 15, 15
    n = 128

    [blur]
    family = polynomial_product
    p = 5
    lambda = 0.2

    [noise]
    sigma = 0.1

    [ridge]
    form = norm_power
    convention = pixel_cycles_dc
    h = 1.7e-5
    q = 5
    r = 50

    [run]
    seed = 20070415
    replicates = 101
    oversample = 2.0

Every numeric parameter is a scalar or a short comma-separated vector; the
root seed is mandatory (no wall-clock seeding).
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from typing import Optional

from .errors import ConfigError

__all__ = ["ExperimentConfig", "load_config"]

KINDS = (
    "simulate",
    "estimate",
    "restore",
    "table1",
    "rate-study",
    "lower-bound",
    "lemma51",
)


@dataclass
class ExperimentConfig:
    kind: str = "simulate"
    # pattern
    pattern_a: tuple = (-16, -16)
    pattern_b: tuple = (15, 15)
    n: int = 128
    # blur
    blur_family: str = "polynomial_product"
    blur_p: float = 5.0
    blur_lambda: float = 0.2
    # noise
    sigma: float = 0.1
    # ridge
    ridge_form: str = "norm_power"
    ridge_convention: str = "pixel_cycles_dc"
    h: float = 1.7e-5
    q: float = 5.0
    r: float = 50.0
    h_grid_max: float = 1e-3
    h_grid_step: float = 1e-5
    # run control
    seed: Optional[int] = None
    replicates: int = 101
    oversample: float = 2.0
    threads: int = 1
    grid_size: Optional[int] = None
    window: str = "support"          # "support" | "dilated" | integer half-width
    scale_s: float = 1.0
    # restoration
    restore_method: str = "wiener"
    gamma: float = 0.05
    alpha: float = 1e-4
    beta: float = 2.0
    # outputs
    out_dir: str = "."
    # raw sections, for experiment-specific optional keys
    extras: dict = field(default_factory=dict)

    def validate(self):
        if self.kind not in KINDS:
            raise ConfigError(f"experiment.kind: unknown kind {self.kind!r}")
        if self.seed is None:
            raise ConfigError("run.seed: a root seed is required")
        if self.n < 1:
            raise ConfigError("pattern.n: must be a positive integer")
        if len(self.pattern_a) != len(self.pattern_b):
            raise ConfigError("pattern.a/pattern.b: dimension mismatch")
        if any(b < a for a, b in zip(self.pattern_a, self.pattern_b)):
            raise ConfigError("pattern.b: must be >= pattern.a componentwise")
        if self.blur_lambda <= 0:
            raise ConfigError("blur.lambda: must be positive")
        if self.blur_family == "polynomial_product" and self.blur_p <= 0:
            raise ConfigError("blur.p: must be positive")
        if self.sigma < 0:
            raise ConfigError("noise.sigma: must be nonnegative")
        if self.h < 0:
            raise ConfigError("ridge.h: must be nonnegative")
        if self.q < 0 or self.r < 0:
            raise ConfigError("ridge.q/ridge.r: must be nonnegative")
        if self.replicates < 2:
            raise ConfigError("run.replicates: need at least 2")
        if self.oversample < 1.0:
            raise ConfigError("run.oversample: must be >= 1")
        if self.threads < 1:
            raise ConfigError("run.threads: must be >= 1")
        if self.scale_s <= 0:
            raise ConfigError("run.scale_s: must be positive")
        return self


def _int_tuple(raw):
    return tuple(int(x.strip()) for x in raw.replace(";", ",").split(",") if x.strip())


def load_config(path, overrides=None) -> ExperimentConfig:
    """Parse a config file; ``overrides`` (dot-keys to strings) win over it."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    cfg = ExperimentConfig()

    def fetch(section, key, cast, attr, current):
        try:
            if parser.has_option(section, key):
                return cast(parser.get(section, key))
        except ValueError as exc:
            raise ConfigError(f"{section}.{key}: {exc}") from exc
        return current

    cfg.kind = fetch("experiment", "kind", str.strip, "kind", cfg.kind)
    cfg.pattern_a = fetch("pattern", "a", _int_tuple, "pattern_a", cfg.pattern_a)
    cfg.pattern_b = fetch("pattern", "b", _int_tuple, "pattern_b", cfg.pattern_b)
    cfg.n = fetch("pattern", "n", int, "n", cfg.n)
    cfg.blur_family = fetch("blur", "family", str.strip, "blur_family", cfg.blur_family)
    cfg.blur_p = fetch("blur", "p", float, "blur_p", cfg.blur_p)
    cfg.blur_lambda = fetch("blur", "lambda", float, "blur_lambda", cfg.blur_lambda)
    cfg.sigma = fetch("noise", "sigma", float, "sigma", cfg.sigma)
    cfg.ridge_form = fetch("ridge", "form", str.strip, "ridge_form", cfg.ridge_form)
    cfg.ridge_convention = fetch(
        "ridge", "convention", str.strip, "ridge_convention", cfg.ridge_convention
    )
    cfg.h = fetch("ridge", "h", float, "h", cfg.h)
    cfg.q = fetch("ridge", "q", float, "q", cfg.q)
    cfg.r = fetch("ridge", "r", float, "r", cfg.r)
    cfg.h_grid_max = fetch("ridge", "h_grid_max", float, "h_grid_max", cfg.h_grid_max)
    cfg.h_grid_step = fetch("ridge", "h_grid_step", float, "h_grid_step", cfg.h_grid_step)
    cfg.seed = fetch("run", "seed", int, "seed", cfg.seed)
    cfg.replicates = fetch("run", "replicates", int, "replicates", cfg.replicates)
    cfg.oversample = fetch("run", "oversample", float, "oversample", cfg.oversample)
    cfg.threads = fetch("run", "threads", int, "threads", cfg.threads)
    if parser.has_option("run", "grid_size"):
        cfg.grid_size = fetch("run", "grid_size", int, "grid_size", cfg.grid_size)
    cfg.window = fetch("run", "window", str.strip, "window", cfg.window)
    cfg.scale_s = fetch("run", "scale_s", float, "scale_s", cfg.scale_s)
    cfg.restore_method = fetch(
        "restore", "method", str.strip, "restore_method", cfg.restore_method
    )
    cfg.gamma = fetch("restore", "gamma", float, "gamma", cfg.gamma)
    cfg.alpha = fetch("restore", "alpha", float, "alpha", cfg.alpha)
    cfg.beta = fetch("restore", "beta", float, "beta", cfg.beta)
    cfg.out_dir = fetch("output", "dir", str.strip, "out_dir", cfg.out_dir)
    cfg.extras = {s: dict(parser.items(s)) for s in parser.sections()}

    for dotkey, raw in (overrides or {}).items():
        section, key = dotkey.split(".", 1)
        attr = {
            "experiment.kind": ("kind", str),
            "pattern.n": ("n", int),
            "noise.sigma": ("sigma", float),
            "ridge.h": ("h", float),
            "run.seed": ("seed", int),
            "run.replicates": ("replicates", int),
            "run.threads": ("threads", int),
            "output.dir": ("out_dir", str),
        }.get(dotkey)
        if attr is None:
            raise ConfigError(f"{dotkey}: unknown override")
        try:
            setattr(cfg, attr[0], attr[1](raw))
        except ValueError as exc:
            raise ConfigError(f"{dotkey}: {exc}") from exc
    return cfg.validate()

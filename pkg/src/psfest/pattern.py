"""Rectangular prism test patterns and their closed-form transforms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import LatticeSignal, box_set

__all__ = ["PrismPattern", "render", "transform_closed_form", "rescaled_transform"]

# below this |t| the sine ratio loses digits; switch to its Taylor form
_SERIES_SWITCH = 1e-6


@dataclass(frozen=True)
class PrismPattern:
    """Axis-aligned prism of ones with corners a <= b, on a grid of pixel
    scale n (pixel width 1/n in physical units)."""

    a: tuple
    b: tuple
    n: int = 1

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(int(x) for x in self.a))
        object.__setattr__(self, "b", tuple(int(x) for x in self.b))
        if len(self.a) != len(self.b):
            raise ValueError("corner dimensions differ")
        if any(bl < al for al, bl in zip(self.a, self.b)):
            raise ValueError("need a <= b componentwise")
        if self.n < 1:
            raise ValueError("pixel scale n must be a positive integer")

    @property
    def dims(self):
        return len(self.a)

    @property
    def widths(self):
        """Pixel widths m_l = b_l - a_l + 1."""
        return tuple(bl - al + 1 for al, bl in zip(self.a, self.b))

    @property
    def edge_lengths(self):
        """Physical edge lengths c_l = m_l / n."""
        return tuple(m / self.n for m in self.widths)

    @property
    def cell_count(self):
        out = 1
        for m in self.widths:
            out *= m
        return out

    def support(self):
        return box_set(self.a, self.b)


def render(pattern: PrismPattern) -> LatticeSignal:
    """Indicator signal: 1 on the prism, 0 elsewhere."""
    return LatticeSignal(pattern.a, np.ones(pattern.widths))


def _sine_ratio(t, m):
    """sin(m t / 2) / sin(t / 2), with the removable singularity filled in.

    Near t = 0 (mod 2 pi the denominator only vanishes at t = 0 on
    [-pi, pi)) uses m (1 - (m^2 - 1) t^2 / 24).
    """
    t = np.asarray(t, dtype=float)
    small = np.abs(t) < _SERIES_SWITCH
    safe = np.where(small, 1.0, t)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.sin(m * safe / 2.0) / np.sin(safe / 2.0)
    series = m * (1.0 - (m * m - 1.0) * t * t / 24.0)
    return np.where(small, series, ratio)


def transform_closed_form(pattern: PrismPattern, t):
    """psi^Ft(t) = exp{(i/2) sum (a_l + b_l) t_l} prod_l sin(m_l t_l/2)/sin(t_l/2).

    ``t`` is a length-d sequence; entries may be scalars or broadcastable
    arrays (e.g. a frequency mesh).
    """
    comps = [np.asarray(tl, dtype=float) for tl in t]
    if len(comps) != pattern.dims:
        raise ValueError("frequency dimension mismatch")
    phase = sum((al + bl) * tl for al, bl, tl in zip(pattern.a, pattern.b, comps))
    out = np.exp(0.5j * phase)
    for m, tl in zip(pattern.widths, comps):
        out = out * _sine_ratio(tl, m)
    return out


def rescaled_transform(pattern: PrismPattern, u):
    """Transform in rescaled frequency u = n t on [-n pi, n pi]^d:
    n^{-d} psi^Ft(u / n), which equals e^{i theta.u} prod sin(c_l u_l/2) / (n sin(u_l/2n))."""
    n = pattern.n
    comps = [np.asarray(ul, dtype=float) / n for ul in u]
    return transform_closed_form(pattern, comps) / n ** pattern.dims

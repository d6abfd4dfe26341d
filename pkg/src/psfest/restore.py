"""Image restoration from a degraded observation with a known or estimated PSF.

Both filters operate on the observation's own grid with the periodic
convolution semantics of the DFT; no windowing or tapering is applied.
The Wiener regularizer uses raw grid frequencies in [-pi, pi)^d.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DivisionImpossibleError
from .lattice import LatticeSignal, Spectrum, box_set, dft_forward, dft_inverse_on

__all__ = ["RestorationSpec", "inverse_filter", "wiener_filter", "windowed_mse"]


@dataclass(frozen=True)
class RestorationSpec:
    method: str                  # "inverse_threshold" | "wiener"
    gamma: float = 0.0
    alpha: float = 0.0
    beta: float = 2.0

    def __post_init__(self):
        if self.method not in ("inverse_threshold", "wiener"):
            raise ValueError(f"unknown restoration method {self.method!r}")
        if self.method == "inverse_threshold" and self.gamma <= 0:
            raise ValueError("threshold gamma must be positive")
        if self.method == "wiener" and (self.alpha <= 0 or self.beta < 0):
            raise ValueError("need alpha > 0 and beta >= 0")


def _psf_spectrum(psf: LatticeSignal, grid_sizes) -> np.ndarray:
    return dft_forward(psf, grid_sizes).values


def inverse_filter(
    y: LatticeSignal, psf: LatticeSignal, gamma: float, grid_sizes=None
) -> LatticeSignal:
    """Thresholded inverse: keep Y^Ft / phi^Ft where |phi^Ft| > gamma, else 0."""
    if gamma <= 0:
        raise ValueError("threshold gamma must be positive")
    if grid_sizes is None:
        grid_sizes = y.values.shape
    grid_sizes = tuple(int(m) for m in grid_sizes)
    yft = dft_forward(y, grid_sizes).values
    pft = _psf_spectrum(psf, grid_sizes)
    mag = np.abs(pft)
    if gamma >= mag.max():
        warnings.warn(
            "threshold exceeds every PSF transform magnitude; output is zero",
            RuntimeWarning,
        )
    keep = mag > gamma
    with np.errstate(invalid="ignore", divide="ignore"):
        filt = np.where(keep, yft / np.where(keep, pft, 1.0), 0.0)
    return dft_inverse_on(Spectrum(grid_sizes, filt), box_set(y.lo, y.hi))


def wiener_filter(
    y: LatticeSignal,
    psf: LatticeSignal,
    alpha: float,
    beta: float,
    grid_sizes=None,
) -> LatticeSignal:
    """conj(phi^Ft) Y^Ft / (|phi^Ft|^2 + alpha ||t||^beta), t on the raw grid."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if grid_sizes is None:
        grid_sizes = y.values.shape
    grid_sizes = tuple(int(m) for m in grid_sizes)
    yft = dft_forward(y, grid_sizes).values
    pft = _psf_spectrum(psf, grid_sizes)
    mesh = np.meshgrid(
        *[2.0 * np.pi * np.fft.fftfreq(m) for m in grid_sizes], indexing="ij"
    )
    norm = np.sqrt(sum(t ** 2 for t in mesh))
    denom = np.abs(pft) ** 2 + alpha * norm ** beta
    if np.any(denom == 0.0):
        raise DivisionImpossibleError(
            "zero denominator: PSF transform vanishes where the regularizer is zero"
        )
    filt = np.conj(pft) * yft / denom
    return dft_inverse_on(Spectrum(grid_sizes, filt), box_set(y.lo, y.hi))


def windowed_mse(a: LatticeSignal, b: LatticeSignal, lo, hi) -> float:
    """Mean squared difference over the box [lo, hi] (both zero-padded)."""
    diff = a - b
    lo = tuple(int(x) for x in lo)
    hi = tuple(int(x) for x in hi)
    sl = tuple(
        slice(l - o, h - o + 1) for l, h, o in zip(lo, hi, diff.lo)
    )
    block = diff.values[sl]
    return float(np.mean(block ** 2))

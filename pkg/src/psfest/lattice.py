"""Finite integer grids, index sets, and the discrete Fourier transform.

Transform convention: forward uses e^{+i t.j}, inversion uses e^{-i t.j}
with a 1/prod(M) weight, so inversion is the Riemann sum of the
frequency-domain integral over [-pi, pi)^d on the equispaced DFT grid
t_k = 2 pi k / M. These sums are exact for band-limited integrands whose
spatial support fits inside one M-period per axis.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import SizingError

__all__ = [
    "LatticeSignal",
    "IndexSet",
    "Spectrum",
    "box_set",
    "sphere_set",
    "minkowski_sum",
    "dft_forward",
    "dft_inverse_on",
    "integrate_freq",
    "common_box",
]


@dataclass
class LatticeSignal:
    """Real values on a d-dimensional integer grid.

    ``offset`` is the lattice coordinate of ``values[0, ..., 0]``.
    """

    offset: tuple
    values: np.ndarray
    imag_residue: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.offset = tuple(int(o) for o in self.offset)
        if len(self.offset) != self.values.ndim:
            raise ValueError("offset length must match array dimension")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("signal values must be finite")

    @property
    def dims(self):
        return self.values.ndim

    @property
    def lo(self):
        return self.offset

    @property
    def hi(self):
        return tuple(o + s - 1 for o, s in zip(self.offset, self.values.shape))

    def total(self):
        return float(self.values.sum())

    def copy(self):
        return LatticeSignal(self.offset, self.values.copy())

    def on_box(self, lo, hi):
        """Re-express on the box [lo, hi]; cells outside the box must be zero."""
        lo = tuple(int(x) for x in lo)
        hi = tuple(int(x) for x in hi)
        out = np.zeros(tuple(h - l + 1 for l, h in zip(lo, hi)))
        src = []
        dst = []
        for ax in range(self.dims):
            s0 = max(self.lo[ax], lo[ax])
            s1 = min(self.hi[ax], hi[ax])
            if s1 < s0:
                if np.any(self.values != 0.0):
                    raise ValueError("nonzero cells fall outside the target box")
                return LatticeSignal(lo, out)
            src.append(slice(s0 - self.lo[ax], s1 - self.lo[ax] + 1))
            dst.append(slice(s0 - lo[ax], s1 - lo[ax] + 1))
        inside = self.values[tuple(src)]
        # verify nothing nonzero was dropped
        probe = self.values.copy()
        probe[tuple(src)] = 0.0
        if np.any(probe != 0.0):
            raise ValueError("nonzero cells fall outside the target box")
        out[tuple(dst)] = inside
        return LatticeSignal(lo, out)

    def __add__(self, other):
        lo = tuple(min(a, b) for a, b in zip(self.lo, other.lo))
        hi = tuple(max(a, b) for a, b in zip(self.hi, other.hi))
        a = _embed(self, lo, hi)
        b = _embed(other, lo, hi)
        return LatticeSignal(lo, a + b)

    def __sub__(self, other):
        lo = tuple(min(a, b) for a, b in zip(self.lo, other.lo))
        hi = tuple(max(a, b) for a, b in zip(self.hi, other.hi))
        return LatticeSignal(lo, _embed(self, lo, hi) - _embed(other, lo, hi))


def _embed(sig, lo, hi):
    out = np.zeros(tuple(h - l + 1 for l, h in zip(lo, hi)))
    sl = tuple(slice(sl_ - l, sl_ - l + n) for sl_, l, n in zip(sig.lo, lo, sig.values.shape))
    out[sl] = sig.values
    return out


def common_box(*signals):
    """Smallest box containing every signal's bounding box."""
    lo = tuple(min(s.lo[ax] for s in signals) for ax in range(signals[0].dims))
    hi = tuple(max(s.hi[ax] for s in signals) for ax in range(signals[0].dims))
    return lo, hi


@dataclass
class IndexSet:
    """Finite subset of the integer lattice: bounding box plus membership mask."""

    offset: tuple
    mask: np.ndarray

    def __post_init__(self):
        self.offset = tuple(int(o) for o in self.offset)
        self.mask = np.asarray(self.mask, dtype=bool)

    @property
    def dims(self):
        return self.mask.ndim

    @property
    def lo(self):
        return self.offset

    @property
    def hi(self):
        return tuple(o + s - 1 for o, s in zip(self.offset, self.mask.shape))

    @property
    def cardinality(self):
        return int(self.mask.sum())

    def points(self):
        """Iterate member points as coordinate tuples."""
        for idx in np.argwhere(self.mask):
            yield tuple(int(i) + o for i, o in zip(idx, self.offset))

    def contains(self, j):
        idx = tuple(int(c) - o for c, o in zip(j, self.offset))
        if any(i < 0 or i >= s for i, s in zip(idx, self.mask.shape)):
            return False
        return bool(self.mask[idx])

    def is_box(self):
        return bool(self.mask.all())


def box_set(lo, hi):
    lo = tuple(int(x) for x in lo)
    hi = tuple(int(x) for x in hi)
    if any(h < l for l, h in zip(lo, hi)):
        raise ValueError("box corners must satisfy lo <= hi")
    return IndexSet(lo, np.ones(tuple(h - l + 1 for l, h in zip(lo, hi)), dtype=bool))


def sphere_set(radius, dims):
    """Lattice points with Euclidean norm <= radius."""
    half = int(np.floor(radius))
    axes = np.meshgrid(*[np.arange(-half, half + 1)] * dims, indexing="ij")
    r2 = sum(a.astype(float) ** 2 for a in axes)
    return IndexSet((-half,) * dims, r2 <= radius ** 2 + 1e-12)


def minkowski_sum(r: IndexSet, s: IndexSet) -> IndexSet:
    """{j + k : j in r, k in s}; exact cardinality via the dilated mask."""
    if r.cardinality == 0 or s.cardinality == 0:
        d = r.dims
        return IndexSet((0,) * d, np.zeros((0,) * d, dtype=bool))
    if r.is_box() and s.is_box():
        lo = tuple(a + b for a, b in zip(r.lo, s.lo))
        hi = tuple(a + b for a, b in zip(r.hi, s.hi))
        return box_set(lo, hi)
    lo = tuple(a + b for a, b in zip(r.lo, s.lo))
    shape = tuple(a + b - 1 for a, b in zip(r.mask.shape, s.mask.shape))
    out = np.zeros(shape, dtype=bool)
    for idx in np.argwhere(r.mask):
        sl = tuple(slice(i, i + n) for i, n in zip(idx, s.mask.shape))
        out[sl] |= s.mask
    return IndexSet(lo, out)


@dataclass
class Spectrum:
    """Complex values on the equispaced frequency grid t_k = 2 pi k / M.

    Values are stored in FFT index order; ``freqs`` maps indices into
    [-pi, pi) per axis.
    """

    grid_sizes: tuple
    values: np.ndarray

    def __post_init__(self):
        self.grid_sizes = tuple(int(m) for m in self.grid_sizes)
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.grid_sizes:
            raise ValueError("values shape must equal grid_sizes")

    @property
    def dims(self):
        return len(self.grid_sizes)

    def freqs(self):
        return tuple(2.0 * np.pi * np.fft.fftfreq(m) for m in self.grid_sizes)

    def freq_mesh(self):
        return np.meshgrid(*self.freqs(), indexing="ij")

    def value_at_zero(self):
        return complex(self.values[(0,) * self.dims])


def dft_forward(signal: LatticeSignal, grid_sizes) -> Spectrum:
    """X(t_k) = sum_j x(j) e^{+i t_k . j} with j in absolute coordinates."""
    grid_sizes = tuple(int(m) for m in grid_sizes)
    if len(grid_sizes) != signal.dims:
        raise ValueError("grid_sizes length must match signal dimension")
    for ext, m in zip(signal.values.shape, grid_sizes):
        if m < ext:
            raise SizingError(f"grid size {m} smaller than signal extent {ext}")
    arr = np.zeros(grid_sizes)
    idx = tuple(
        (np.arange(o, o + n)) % m
        for o, n, m in zip(signal.offset, signal.values.shape, grid_sizes)
    )
    arr[np.ix_(*idx)] = signal.values
    vals = np.fft.ifftn(arr) * np.prod(grid_sizes)
    return Spectrum(grid_sizes, vals)


def dft_inverse_on(spectrum: Spectrum, target) -> LatticeSignal:
    """Riemann-sum inversion (1/prod M) sum_k X(t_k) e^{-i t_k . j} on target.

    The target window must fit in one period per axis, otherwise distinct
    target cells would alias onto the same quadrature value.
    """
    if isinstance(target, IndexSet):
        lo, hi, mask = target.lo, target.hi, target.mask
    else:
        lo, hi = target
        lo = tuple(int(x) for x in lo)
        hi = tuple(int(x) for x in hi)
        mask = None
    for l, h, m in zip(lo, hi, spectrum.grid_sizes):
        if h - l + 1 > m:
            raise SizingError(
                f"target extent {h - l + 1} exceeds grid size {m}; aliasing"
            )
    full = np.fft.fftn(spectrum.values) / np.prod(spectrum.grid_sizes)
    idx = tuple(
        np.arange(l, h + 1) % m for l, h, m in zip(lo, hi, spectrum.grid_sizes)
    )
    block = full[np.ix_(*idx)]
    if mask is not None:
        block = np.where(mask, block, 0.0)
    residue = float(np.max(np.abs(block.imag))) if block.size else 0.0
    return LatticeSignal(lo, block.real.copy(), imag_residue=residue)


def integrate_freq(integrand, grid_sizes) -> float:
    """(2 pi)^d / prod(M) times the sum of the integrand over the grid.

    ``integrand`` receives a tuple of d frequency meshes (each an ndarray of
    shape grid_sizes, values in [-pi, pi)) and must return a real array of
    matching shape.
    """
    grid_sizes = tuple(int(m) for m in grid_sizes)
    mesh = np.meshgrid(
        *[2.0 * np.pi * np.fft.fftfreq(m) for m in grid_sizes], indexing="ij"
    )
    vals = np.asarray(integrand(tuple(mesh)), dtype=float)
    if vals.shape != tuple(grid_sizes):
        vals = np.broadcast_to(vals, tuple(grid_sizes))
    bad = ~np.isfinite(vals)
    if np.any(bad):
        k = np.argwhere(bad)[0]
        t_bad = tuple(float(mesh[ax][tuple(k)]) for ax in range(len(grid_sizes)))
        raise ValueError(f"non-finite integrand value at t = {t_bad}")
    d = len(grid_sizes)
    return float((2.0 * np.pi) ** d / np.prod(grid_sizes) * vals.sum())

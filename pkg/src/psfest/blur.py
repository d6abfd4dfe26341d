"""Continuum blur families, lattice discretization, forward degradation.

The degradation model is y = (phi * psi) + noise, where phi is a compactly
supported kernel with unit total mass (so constant signals pass through
unchanged) and the noise is i.i.d. Gaussian on the observed region.

Randomness policy: all noise comes from numpy's PCG64 generator. Replicate
streams are derived from a root seed through SeedSequence spawn keys, so a
(root seed, replicate index) pair pins the stream bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import signal as _scipy_signal
from scipy import stats as _scipy_stats

from .errors import DegenerateKernelError
from .lattice import IndexSet, LatticeSignal, box_set, sphere_set

__all__ = [
    "ContinuumBlur",
    "BlurKernel",
    "polynomial_blur",
    "gaussian_blur",
    "polynomial_normalizer",
    "discretize",
    "blur_apply",
    "add_noise",
    "stream_seed",
]


@dataclass
class ContinuumBlur:
    """A nonnegative continuum kernel with unit integral and compact support.

    ``support`` is "box" (sup_l |x_l| <= lam) or "sphere" (||x|| <= lam).
    """

    family: str
    p: float
    lam: float
    dims: int
    support: str = "box"
    evaluator: Optional[Callable] = None

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("support radius lam must be positive")
        if self.support not in ("box", "sphere"):
            raise ValueError("support must be 'box' or 'sphere'")

    def __call__(self, *x):
        """Evaluate at physical coordinates; each x_l may be an array."""
        x = [np.asarray(c, dtype=float) for c in x]
        if self.family == "polynomial_product":
            amp = polynomial_normalizer(self.p, self.lam, self.dims)
            out = amp * np.ones(np.broadcast(*x).shape if len(x) > 1 else x[0].shape)
            for c in x:
                base = np.clip(1.0 - (c / self.lam) ** 2, 0.0, None)
                out = out * base ** self.p
            return out
        if self.family == "gaussian":
            std = self.lam / 2.0
            r2 = sum(c ** 2 for c in x)
            inside = r2 <= self.lam ** 2
            mass = _scipy_stats.chi2.cdf(self.lam ** 2 / std ** 2, self.dims)
            amp = (2.0 * np.pi * std ** 2) ** (-self.dims / 2.0) / mass
            return np.where(inside, amp * np.exp(-r2 / (2.0 * std ** 2)), 0.0)
        if self.evaluator is None:
            raise ValueError(f"unknown blur family {self.family!r}")
        return self.evaluator(*x)


def polynomial_blur(p: float, lam: float, dims: int) -> ContinuumBlur:
    """Separable bump prod_l (1 - (x_l/lam)^2)^p on the box, unit integral."""
    return ContinuumBlur("polynomial_product", p, lam, dims, support="box")


def gaussian_blur(lam: float, dims: int) -> ContinuumBlur:
    """Truncated Gaussian of std lam/2 on the sphere of radius lam."""
    return ContinuumBlur("gaussian", 0.0, lam, dims, support="sphere")


def polynomial_normalizer(p: float, lam: float, dims: int) -> float:
    """Constant making prod_l (1 - (x_l/lam)^2)^p integrate to 1 on [-lam, lam]^d.

    Per axis the integral is lam * sqrt(pi) * Gamma(p+1) / Gamma(p+3/2).
    """
    if p <= 0 or lam <= 0:
        raise ValueError("need p > 0 and lam > 0")
    per_axis = lam * math.sqrt(math.pi) * math.gamma(p + 1.0) / math.gamma(p + 1.5)
    return per_axis ** (-dims)


@dataclass
class BlurKernel:
    """Lattice kernel phi with sum phi = 1, support radius lam_n = n * lam."""

    values: LatticeSignal
    n: int
    lam_n: float
    s_d: float
    support: str = "box"
    parent: Optional[ContinuumBlur] = None
    c2: float = 1.0

    @property
    def dims(self):
        return self.values.dims

    def support_set(self) -> IndexSet:
        if self.support == "sphere":
            return sphere_set(self.lam_n, self.dims)
        half = int(np.floor(self.lam_n))
        return box_set((-half,) * self.dims, (half,) * self.dims)

    def total(self):
        return self.values.total()


def discretize(g: ContinuumBlur, n: int) -> BlurKernel:
    """phi(j) proportional to n^{-d} g(j/n), rescaled so sum phi = 1 exactly.

    The realized normalization s_d = 1 / (n^{-d} sum_j g(j/n)) tends to 1 as
    n grows because the sum is a Riemann approximation of integral(g) = 1.
    """
    if n < 1:
        raise ValueError("pixel scale n must be >= 1")
    lam_n = n * g.lam
    half = int(np.floor(lam_n))
    if half < 0:
        raise DegenerateKernelError("support narrower than one pixel")
    d = g.dims
    axes = np.meshgrid(*[np.arange(-half, half + 1)] * d, indexing="ij")
    vals = np.asarray(g(*[a / n for a in axes]), dtype=float)
    if g.support == "sphere":
        r2 = sum(a.astype(float) ** 2 for a in axes)
        vals = np.where(r2 <= lam_n ** 2 + 1e-12, vals, 0.0)
    total = vals.sum()
    if total <= 0.0:
        raise DegenerateKernelError("no positive mass on the sampling lattice")
    s_d = 1.0 / (total / n ** d)
    phi = vals / total
    sig = LatticeSignal((-half,) * d, phi)
    return BlurKernel(sig, n=n, lam_n=lam_n, s_d=s_d, support=g.support, parent=g)


def blur_apply(kernel: BlurKernel, signal: LatticeSignal) -> LatticeSignal:
    """Exact discrete convolution (phi * psi)(j) = sum_k phi(j-k) psi(k)."""
    k = kernel.values
    out = _scipy_signal.fftconvolve(signal.values, k.values, mode="full")
    lo = tuple(a + b for a, b in zip(signal.lo, k.lo))
    return LatticeSignal(lo, out)


def blur_apply_direct(kernel: BlurKernel, signal: LatticeSignal) -> LatticeSignal:
    """Direct double-loop convolution; reference oracle for blur_apply."""
    k, s = kernel.values, signal
    lo = tuple(a + b for a, b in zip(s.lo, k.lo))
    shape = tuple(a + b - 1 for a, b in zip(s.values.shape, k.values.shape))
    out = np.zeros(shape)
    for idx in np.ndindex(*k.values.shape):
        w = k.values[idx]
        if w == 0.0:
            continue
        sl = tuple(slice(i, i + n) for i, n in zip(idx, s.values.shape))
        out[sl] += w * s.values
    return LatticeSignal(lo, out)


def stream_seed(root_seed: int, stream_index: int) -> np.random.SeedSequence:
    """Deterministic child stream for one replicate or trial block."""
    return np.random.SeedSequence(int(root_seed), spawn_key=(int(stream_index),))


def add_noise(signal: LatticeSignal, sigma: float, seed) -> LatticeSignal:
    """Add i.i.d. N(0, sigma^2) on every cell of the signal's bounding box.

    ``seed`` may be an int or a SeedSequence. Bit-reproducible for a fixed
    (seed, bounding box) pair; sigma = 0 returns an identical copy.
    """
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0.0:
        return signal.copy()
    rng = np.random.Generator(np.random.PCG64(seed))
    draws = rng.standard_normal(signal.values.shape)
    return LatticeSignal(signal.offset, signal.values + sigma * draws)

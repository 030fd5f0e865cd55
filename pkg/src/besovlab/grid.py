"""Periodic grids and the FFT plumbing shared by every other module.

Spectral arrays use the real-to-complex (``rfftn``) layout with
``norm="forward"``, so a coefficient is the plain Fourier-series amplitude
``f(x) = sum_j fhat_j exp(i xi_j . x)`` and does not depend on the number of
grid points.  That makes zero-padding and truncation scale-free.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

# Littlewood-Paley support constants: chi = 1 on B(0, 3/4), supp chi in B(0, 4/3).
CHI_INNER = 0.75
CHI_OUTER = 4.0 / 3.0


class RangeError(ValueError):
    """A dyadic index or threshold lies outside what the grid resolves."""


def fft_workers() -> int:
    """Worker count for scipy.fft, capped by the BNS_THREADS environment variable."""
    env = os.environ.get("BNS_THREADS")
    if env:
        return max(1, int(env))
    return -1


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on the box [0, L)^d with n points per axis."""

    d: int
    n: int
    L: float = 2 * math.pi

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.d}")
        if self.n < 8 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two >= 8, got {self.n}")
        if not self.L > 0:
            raise ValueError(f"box length must be positive, got {self.L}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def spectral_shape(self) -> tuple[int, ...]:
        return (self.n,) * (self.d - 1) + (self.n // 2 + 1,)

    @property
    def spacing(self) -> float:
        return self.L / self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.d

    @property
    def volume(self) -> float:
        return self.L**self.d

    @property
    def k_fundamental(self) -> float:
        """Smallest nonzero wavenumber magnitude."""
        return 2 * math.pi / self.L

    @property
    def k_nyquist(self) -> float:
        return math.pi * self.n / self.L

    @property
    def k_max_mag(self) -> float:
        """Largest |xi| on the grid (a corner of the Fourier cube)."""
        return math.sqrt(self.d) * self.k_nyquist

    @property
    def k_min(self) -> int:
        """Lowest dyadic index whose block reaches a nonzero grid mode."""
        return math.floor(math.log2(CHI_INNER * self.k_fundamental))

    @property
    def k_max(self) -> int:
        """Highest dyadic index needed for sum_k phi(2^-k xi) = 1 on every grid mode."""
        return math.ceil(math.log2(CHI_OUTER * self.k_max_mag)) - 1

    @cached_property
    def wavevector(self) -> tuple[np.ndarray, ...]:
        """Per-axis wavenumbers, broadcastable against the spectral layout."""
        ks = []
        for ax in range(self.d):
            if ax == self.d - 1:
                k = 2 * np.pi * sfft.rfftfreq(self.n, self.spacing)
            else:
                k = 2 * np.pi * sfft.fftfreq(self.n, self.spacing)
            shape = [1] * self.d
            shape[ax] = k.size
            ks.append(k.reshape(shape))
        return tuple(ks)

    @cached_property
    def wavevector_odd(self) -> tuple[np.ndarray, ...]:
        """Wavenumbers with the Nyquist entry zeroed, for odd (derivative-type) symbols."""
        out = []
        for ax, k in enumerate(self.wavevector):
            k = k.copy()
            idx = [0] * self.d
            idx[ax] = self.n // 2
            k[tuple(idx)] = 0.0
            out.append(k)
        return tuple(out)

    @cached_property
    def kmag(self) -> np.ndarray:
        """|xi| on the spectral layout (true magnitudes, Nyquist included)."""
        k2 = sum(k**2 for k in self.wavevector)
        return np.sqrt(np.broadcast_to(k2, self.spectral_shape))

    @cached_property
    def kmag_odd(self) -> np.ndarray:
        k2 = sum(k**2 for k in self.wavevector_odd)
        return np.sqrt(np.broadcast_to(k2, self.spectral_shape))

    @cached_property
    def rfft_weights(self) -> np.ndarray:
        """Multiplicity of each stored half-spectrum coefficient in the full spectrum."""
        w = np.full(self.n // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        shape = [1] * self.d
        shape[-1] = w.size
        return w.reshape(shape)

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """Boolean mask, True off every Nyquist plane."""
        mask = np.ones(self.spectral_shape, dtype=bool)
        for ax in range(self.d):
            idx = [slice(None)] * self.d
            idx[ax] = self.n // 2
            mask[tuple(idx)] = False
        return mask

    @cached_property
    def two_thirds_mask(self) -> np.ndarray:
        """Modes with every |j_i| < n/3 (the 2/3 rule)."""
        cut = self.n / 3.0
        mask = np.ones(self.spectral_shape, dtype=bool)
        for k in self.wavevector:
            mask &= np.abs(k) / self.k_fundamental < cut
        return mask

    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Sample points, one broadcastable array per axis."""
        x = np.arange(self.n) * self.spacing
        out = []
        for ax in range(self.d):
            shape = [1] * self.d
            shape[ax] = self.n
            out.append(x.reshape(shape))
        return tuple(out)

    def scaled(self, factor: float) -> "Grid":
        """Same samples on a box stretched by ``factor``."""
        return Grid(self.d, self.n, self.L * factor)


def fft(f: np.ndarray, d: int | None = None) -> np.ndarray:
    """Forward transform over the trailing ``d`` axes (all axes by default)."""
    axes = None if d is None else tuple(range(-d, 0))
    return sfft.rfftn(f, axes=axes, norm="forward", workers=fft_workers())


def ifft(fh: np.ndarray, grid: Grid) -> np.ndarray:
    axes = tuple(range(-grid.d, 0))
    return sfft.irfftn(fh, s=grid.shape, axes=axes, norm="forward", workers=fft_workers())


def _block_slices(d: int, n: int, m: int):
    """Matching (small, large) slice tuples covering the |j| < n/2 modes.

    Leading axes hold nonnegative and negative frequencies in two blocks; the
    last (half-spectrum) axis holds only nonnegative ones.  Nyquist is skipped.
    """
    h = n // 2
    full = [(slice(0, h), slice(0, h)), (slice(h + 1, n), slice(m - h + 1, m))]
    out = []
    for combo in itertools.product(full, repeat=d - 1):
        small = tuple(c[0] for c in combo) + (slice(0, h),)
        large = tuple(c[1] for c in combo) + (slice(0, h),)
        out.append((small, large))
    return out


def pad_spectrum(fh: np.ndarray, d: int, n: int, m: int) -> np.ndarray:
    """Embed an n-grid spectrum (trailing d axes) into an m-grid one; Nyquist dropped."""
    lead = fh.shape[: fh.ndim - d]
    out = np.zeros(lead + (m,) * (d - 1) + (m // 2 + 1,), dtype=complex)
    for small, large in _block_slices(d, n, m):
        out[(Ellipsis,) + large] = fh[(Ellipsis,) + small]
    return out


def truncate_spectrum(Fh: np.ndarray, d: int, n: int, m: int) -> np.ndarray:
    """Inverse of :func:`pad_spectrum`: keep the |j| < n/2 modes of an m-grid spectrum."""
    lead = Fh.shape[: Fh.ndim - d]
    out = np.zeros(lead + (n,) * (d - 1) + (n // 2 + 1,), dtype=complex)
    for small, large in _block_slices(d, n, m):
        out[(Ellipsis,) + small] = Fh[(Ellipsis,) + large]
    return out


class Dealiaser:
    """3/2 zero-padding transforms between a grid and its padded twin."""

    def __init__(self, grid: Grid):
        self.grid = grid
        self.m = 3 * grid.n // 2
        self.fine_shape = (self.m,) * grid.d

    def to_fine(self, fh: np.ndarray) -> np.ndarray:
        """Physical values on the padded grid of a spectral field."""
        g = self.grid
        Fh = pad_spectrum(fh, g.d, g.n, self.m)
        axes = tuple(range(-g.d, 0))
        return sfft.irfftn(Fh, s=self.fine_shape, axes=axes, norm="forward", workers=fft_workers())

    def from_fine(self, F: np.ndarray) -> np.ndarray:
        """Spectrum on the base grid of padded-grid physical values."""
        g = self.grid
        axes = tuple(range(-g.d, 0))
        Fh = sfft.rfftn(F, axes=axes, norm="forward", workers=fft_workers())
        return truncate_spectrum(Fh, g.d, g.n, self.m)

    def product(self, fh: np.ndarray, gh: np.ndarray) -> np.ndarray:
        """Dealiased product of two spectral fields, returned as a spectrum."""
        return self.from_fine(self.to_fine(fh) * self.to_fine(gh))


def spectral_support_radius(fh: np.ndarray, grid: Grid, rtol: float = 1e-12) -> float:
    """Largest |xi| carrying a coefficient above ``rtol`` times the peak."""
    amp = np.abs(fh)
    while amp.ndim > grid.d:
        amp = amp.max(axis=0)
    peak = amp.max()
    if peak == 0:
        return 0.0
    return float(grid.kmag[amp > rtol * peak].max())


def aliasing_risk(grid: Grid, *spectra: np.ndarray) -> bool:
    """True when any input reaches beyond one third of the Nyquist wavenumber."""
    limit = grid.k_nyquist / 3.0
    return any(spectral_support_radius(fh, grid) > limit for fh in spectra)


def gradient_hat(fh: np.ndarray, grid: Grid) -> np.ndarray:
    """Spectral gradient; output gains a leading axis of length d."""
    return np.stack([1j * k * fh for k in grid.wavevector_odd])


def divergence_hat(vh: np.ndarray, grid: Grid) -> np.ndarray:
    return sum(1j * k * vh[i] for i, k in enumerate(grid.wavevector_odd))


def gradient(f: np.ndarray, grid: Grid) -> np.ndarray:
    return ifft(gradient_hat(fft(f, grid.d), grid), grid)


def divergence(v: np.ndarray, grid: Grid) -> np.ndarray:
    return ifft(divergence_hat(fft(v, grid.d), grid), grid)

"""Test-field generators: band-limited noise, rings, wave packets and bumps.

Every generator returns real samples on the grid.  Random ones take a
``numpy.random.Generator`` so callers own the seeding.
"""

from __future__ import annotations

import numpy as np

from .grid import Grid, fft, ifft


def _normalize(f: np.ndarray) -> np.ndarray:
    rms = np.sqrt(np.mean(f**2))
    return f / rms if rms > 0 else f


def annulus_mask(grid: Grid, k_lo: float, k_hi: float) -> np.ndarray:
    """Spectral indicator of k_lo <= |xi| <= k_hi, Nyquist planes excluded."""
    return (grid.kmag >= k_lo) & (grid.kmag <= k_hi) & grid.nyquist_mask


def band_limited_random(grid: Grid, k_lo: float, k_hi: float, rng: np.random.Generator, components: int | None = None) -> np.ndarray:
    """White noise filtered to the annulus k_lo <= |xi| <= k_hi, rms 1 per component.

    ``components=None`` gives a scalar field, otherwise a stack of that many.
    """
    mask = annulus_mask(grid, k_lo, k_hi)
    if not mask.any():
        raise ValueError(f"no grid modes in [{k_lo}, {k_hi}]")
    count = 1 if components is None else components
    out = np.empty((count,) + grid.shape)
    for c in range(count):
        noise = rng.standard_normal(grid.shape)
        out[c] = _normalize(ifft(fft(noise) * mask, grid))
    return out[0] if components is None else out


def ring(grid: Grid, r_lo: float, r_hi: float, rng: np.random.Generator, components: int | None = None) -> np.ndarray:
    """Narrow-annulus noise; a thin shell version of :func:`band_limited_random`."""
    return band_limited_random(grid, r_lo, r_hi, rng, components)


def low_mode_field(grid: Grid, k_hi: float, rng: np.random.Generator, components: int | None = None) -> np.ndarray:
    """Noise on 0 < |xi| <= k_hi (mean-free)."""
    return band_limited_random(grid, 1e-12, k_hi, rng, components)


def packet_field(
    grid: Grid,
    scale: float,
    rng: np.random.Generator,
    n_packets: int = 6,
    width: float = 0.1,
    inner: float = 0.0,
    outer: float = 1.0,
) -> np.ndarray:
    """Random Gaussian wave packets whose spectrum lives in {inner <= |xi|/scale <= outer}.

    Packet centres, widths and the cutoff all scale with ``scale``, so the law
    of f(x) is that of g(scale * x) for a scale-free random g.  That keeps the
    number of effective modes fixed across octaves.
    """
    xi = [k / scale for k in grid.wavevector]
    spec = np.zeros(grid.spectral_shape, dtype=complex)
    lo, hi = inner + 2 * width, outer - 2 * width
    for _ in range(n_packets):
        direction = rng.standard_normal(grid.d)
        direction /= np.linalg.norm(direction)
        eta = direction * rng.uniform(max(lo, 0.0), max(hi, lo))
        c = complex(rng.standard_normal(), rng.standard_normal())
        dist_m = sum((x - e) ** 2 for x, e in zip(xi, eta))
        dist_p = sum((x + e) ** 2 for x, e in zip(xi, eta))
        spec += c * np.exp(-dist_m / (2 * width**2)) + np.conj(c) * np.exp(-dist_p / (2 * width**2))
    rad = grid.kmag / scale
    spec *= (rad >= inner) & (rad <= outer) & grid.nyquist_mask
    return _normalize(ifft(spec, grid))


def periodic_offset(grid: Grid, center) -> list[np.ndarray]:
    """Per-axis minimum-image displacement from ``center``."""
    out = []
    for x, c in zip(grid.coordinates(), center):
        dx = x - c
        out.append(dx - grid.L * np.round(dx / grid.L))
    return out


def gaussian_bumps(grid: Grid, centers, width: float, amplitudes) -> np.ndarray:
    """Sum of exp(-|x - c|^2 / (2 width^2)) bumps; amplitudes may be vectors."""
    amplitudes = np.asarray(amplitudes, dtype=float)
    vector = amplitudes.ndim == 2
    out = np.zeros(((amplitudes.shape[1],) if vector else ()) + grid.shape)
    for c, amp in zip(centers, amplitudes):
        r2 = sum(dx**2 for dx in periodic_offset(grid, c))
        bump = np.exp(-r2 / (2 * width**2))
        if vector:
            out += amp.reshape((-1,) + (1,) * grid.d) * bump
        else:
            out += amp * bump
    return out

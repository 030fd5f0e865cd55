"""Homogeneous Littlewood-Paley blocks and the Besov norms built on them.

Fields are plain numpy arrays sampled on a :class:`~besovlab.grid.Grid`;
vector fields carry one leading axis (components first).  Pointwise norms of
vector fields use the Euclidean magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .grid import CHI_INNER, CHI_OUTER, Grid, RangeError, fft, ifft

RESTRICTIONS = ("full", "low", "high")


def smooth_step(t):
    """C-infinity step: 1 for t <= 0, 0 for t >= 1."""
    t = np.asarray(t, dtype=float)
    out = np.where(t <= 0, 1.0, 0.0)
    inside = (t > 0) & (t < 1)
    ti = t[inside]
    # e^{-1/(1-t)} / (e^{-1/(1-t)} + e^{-1/t}) written as a logistic of the exponent gap
    out[inside] = expit(1.0 / ti - 1.0 / (1.0 - ti))
    return out


def chi(r):
    """Radial cutoff profile: 1 on [0, 3/4], 0 beyond 4/3, non-increasing."""
    return smooth_step((np.asarray(r, dtype=float) - CHI_INNER) / (CHI_OUTER - CHI_INNER))


def phi(r):
    """Dyadic annulus profile phi(r) = chi(r/2) - chi(r)."""
    r = np.asarray(r, dtype=float)
    return chi(r / 2.0) - chi(r)


@dataclass(frozen=True)
class BesovIndex:
    """Regularity s, integrability p, summation r and a low/high/full restriction."""

    s: float
    p: float = 2.0
    r: float = 1.0
    restriction: str = "full"

    def __post_init__(self):
        if not self.p >= 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if not self.r >= 1:
            raise ValueError(f"r must be >= 1, got {self.r}")
        if self.restriction not in RESTRICTIONS:
            raise ValueError(f"restriction must be one of {RESTRICTIONS}, got {self.restriction!r}")


class DyadicFilterBank:
    """The phi(2^-k xi) multipliers for every block touching the grid, plus k0.

    ``ks`` runs over ``[grid.k_min, grid.k_max]``, which is exactly the range
    needed for the blocks to sum to one on each nonzero grid mode.
    """

    def __init__(self, grid: Grid, k0: int = 0):
        lo, hi = grid.k_min, grid.k_max
        if not lo + 1 <= k0 <= hi - 1:
            raise RangeError(f"k0={k0} outside the resolved interior [{lo + 1}, {hi - 1}]")
        self.grid = grid
        self.k0 = int(k0)
        self.k_min = lo
        self.k_max = hi
        self.ks = np.arange(lo, hi + 1)
        self._phi = {int(k): phi(grid.kmag * 2.0**-k) for k in self.ks}

    def __repr__(self):
        return f"DyadicFilterBank(grid={self.grid}, k0={self.k0}, ks=[{self.k_min}, {self.k_max}])"

    def check_k(self, k: int):
        if not self.k_min <= k <= self.k_max:
            raise RangeError(f"block index {k} outside [{self.k_min}, {self.k_max}]")

    def phi_k(self, k: int) -> np.ndarray:
        self.check_k(k)
        return self._phi[int(k)]

    def chi_k(self, k: float) -> np.ndarray:
        return chi(self.grid.kmag * 2.0**-k)

    def partition_residual(self) -> float:
        """max |sum_k phi(2^-k xi) - 1| over the nonzero grid modes."""
        total = sum(self._phi.values())
        nonzero = self.grid.kmag > 0
        return float(np.abs(total[nonzero] - 1.0).max())

    def block_range(self, restriction: str = "full", zeta: float = 1.0) -> np.ndarray:
        """Indices summed by a restricted norm.

        ``low`` keeps 2^k <= zeta 2^k0, ``high`` keeps 2^k >= zeta 2^(k0-1); the
        one-block overlap is deliberate.
        """
        shift = math.log2(zeta)
        if restriction == "full":
            return self.ks
        if restriction == "low":
            return self.ks[self.ks <= self.k0 + shift + 1e-12]
        if restriction == "high":
            return self.ks[self.ks >= self.k0 - 1 + shift - 1e-12]
        raise ValueError(f"unknown restriction {restriction!r}")


def build_filter_bank(grid: Grid, k0: int = 0) -> DyadicFilterBank:
    return DyadicFilterBank(grid, k0)


def _spectral(f: np.ndarray, grid: Grid) -> np.ndarray:
    return fft(np.asarray(f, dtype=float), grid.d)


def dyadic_block(f: np.ndarray, k: int, bank: DyadicFilterBank) -> np.ndarray:
    """Delta_k f: the part of f with spectrum in the k-th dyadic annulus."""
    g = bank.grid
    return ifft(bank.phi_k(k) * _spectral(f, g), g)


def low_cut(f: np.ndarray, k: float, bank: DyadicFilterBank) -> np.ndarray:
    """S_k f = chi(2^-k D) f.  Any k is accepted; very negative k leaves only the mean."""
    g = bank.grid
    return ifft(bank.chi_k(k) * _spectral(f, g), g)


def split_low_high(f: np.ndarray, bank: DyadicFilterBank) -> tuple[np.ndarray, np.ndarray]:
    """(f^l, f^h) with f^l = S_k0 f and f^h = f - f^l."""
    low = low_cut(f, bank.k0, bank)
    return low, np.asarray(f) - low


def lp_norm(f: np.ndarray, p: float, grid: Grid) -> float:
    """Grid quadrature of the L^p norm; vector fields use the pointwise magnitude."""
    f = np.asarray(f)
    mag = np.abs(f) if f.ndim == grid.d else np.sqrt((np.abs(f) ** 2).sum(axis=0))
    if math.isinf(p):
        return float(mag.max())
    if p == 2:
        return float(np.sqrt((mag**2).sum() * grid.cell_volume))
    return float(((mag**p).sum() * grid.cell_volume) ** (1.0 / p))


def parseval_l2(fh: np.ndarray, grid: Grid) -> float:
    """L^2 norm from spectral coefficients (sums over leading component axes)."""
    sq = (np.abs(fh) ** 2 * grid.rfft_weights).sum()
    return float(np.sqrt(sq * grid.volume))


def block_norms_hat(fh: np.ndarray, p: float, bank: DyadicFilterBank) -> np.ndarray:
    """||Delta_k f||_{L^p} for every k in ``bank.ks`` from a spectrum."""
    g = bank.grid
    out = np.empty(bank.ks.size)
    if p == 2:
        # Parseval: no inverse transforms needed
        power = np.abs(fh) ** 2
        while power.ndim > g.d:
            power = power.sum(axis=0)
        power = power * g.rfft_weights
        for i, k in enumerate(bank.ks):
            out[i] = math.sqrt(float((power * bank._phi[int(k)] ** 2).sum()) * g.volume)
        return out
    for i, k in enumerate(bank.ks):
        out[i] = lp_norm(ifft(bank._phi[int(k)] * fh, g), p, g)
    return out


def block_norms(f: np.ndarray, p: float, bank: DyadicFilterBank) -> np.ndarray:
    return block_norms_hat(_spectral(f, bank.grid), p, bank)


def combine_blocks(norms: np.ndarray, idx: BesovIndex, bank: DyadicFilterBank, zeta: float = 1.0) -> float:
    """Weighted l^r sum of per-block norms over the restriction's range."""
    keep = np.isin(bank.ks, bank.block_range(idx.restriction, zeta))
    if not keep.any():
        return 0.0
    weighted = 2.0 ** (idx.s * bank.ks[keep]) * norms[keep]
    if math.isinf(idx.r):
        return float(weighted.max())
    return float((weighted**idx.r).sum() ** (1.0 / idx.r))


def besov_norm(f: np.ndarray, idx: BesovIndex, bank: DyadicFilterBank, zeta: float = 1.0) -> float:
    """Homogeneous Besov norm (or its low/high part) of a sampled field."""
    return combine_blocks(block_norms(f, idx.p, bank), idx, bank, zeta)


def truncation_tail(f: np.ndarray, p: float, bank: DyadicFilterBank) -> float:
    """Share of block mass in the two edge blocks; above 0.01 the norm is unreliable."""
    norms = block_norms(f, p, bank)
    total = norms.sum()
    if total == 0:
        return 0.0
    return float((norms[0] + norms[-1]) / total)


@dataclass
class TimeSeriesField:
    """Snapshots of one (scalar or vector) field at increasing times."""

    grid: Grid
    times: np.ndarray
    snapshots: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.snapshots = np.asarray(self.snapshots, dtype=float)
        if self.times.ndim != 1 or self.snapshots.shape[0] != self.times.size:
            raise ValueError("need one snapshot per time")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if self.snapshots.shape[-self.grid.d :] != self.grid.shape:
            raise ValueError("snapshots do not match the grid")


def time_lebesgue(values: np.ndarray, times: np.ndarray, rho: float, axis: int = 0) -> np.ndarray:
    """L^rho in time by the trapezoid rule; rho = inf takes the max."""
    if math.isinf(rho):
        return np.max(values, axis=axis)
    return np.trapezoid(np.abs(values) ** rho, times, axis=axis) ** (1.0 / rho)


def tilde_besov_norm(F: TimeSeriesField, idx: BesovIndex, rho: float, bank: DyadicFilterBank, zeta: float = 1.0) -> float:
    """Chemin-Lerner norm: time norm per block first, then the dyadic sum."""
    if not rho >= 1:
        raise ValueError(f"rho must be >= 1, got {rho}")
    if not math.isinf(rho) and F.times.size < 2:
        raise ValueError("a finite time exponent needs at least two snapshots")
    table = np.stack([block_norms(snap, idx.p, bank) for snap in F.snapshots])
    per_block = time_lebesgue(table, F.times, rho)
    return combine_blocks(per_block, idx, bank, zeta)

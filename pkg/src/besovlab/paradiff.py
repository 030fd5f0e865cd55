"""Paraproducts, the Bony split, projections and fractional derivatives.

All products are formed on the 3/2-padded grid.  Inputs whose spectrum reaches
past a third of the Nyquist wavenumber are still processed, but the result is
flagged (``aliased``) and a ``RuntimeWarning`` is raised.
"""

from __future__ import annotations

import warnings
from typing import NamedTuple

import numpy as np

from .grid import Dealiaser, Grid, aliasing_risk, fft, ifft
from .littlewood_paley import DyadicFilterBank


class AliasingWarning(RuntimeWarning):
    pass


class BonyParts(NamedTuple):
    T_fg: np.ndarray
    R: np.ndarray
    T_gf: np.ndarray
    aliased: bool


def _flag_aliasing(grid: Grid, *spectra) -> bool:
    risky = aliasing_risk(grid, *spectra)
    if risky:
        warnings.warn("input spectrum extends past one third of Nyquist; products may alias", AliasingWarning, stacklevel=3)
    return risky


def _block_hat(fh, k, bank: DyadicFilterBank):
    if k < bank.k_min or k > bank.k_max:
        return None
    return bank._phi[int(k)] * fh


def _low_hat(fh, k, bank: DyadicFilterBank):
    return bank.chi_k(k) * fh


def paraproduct_hat(fh, gh, bank: DyadicFilterBank, dealias: Dealiaser | None = None) -> np.ndarray:
    """Spectrum of T_f g = sum_j S_{j-1} f * Delta_j g."""
    dealias = dealias or Dealiaser(bank.grid)
    acc = 0.0
    for j in bank.ks:
        acc = acc + dealias.to_fine(_low_hat(fh, j - 1, bank)) * dealias.to_fine(_block_hat(gh, j, bank))
    return dealias.from_fine(acc)


def remainder_hat(fh, gh, bank: DyadicFilterBank, dealias: Dealiaser | None = None) -> np.ndarray:
    """Spectrum of R(f, g) = sum_j Delta_j f * (Delta_{j-1} + Delta_j + Delta_{j+1}) g."""
    dealias = dealias or Dealiaser(bank.grid)
    acc = 0.0
    for j in bank.ks:
        near = sum(bank._phi[int(k)] for k in (j - 1, j, j + 1) if bank.k_min <= k <= bank.k_max)
        acc = acc + dealias.to_fine(_block_hat(fh, j, bank)) * dealias.to_fine(near * gh)
    return dealias.from_fine(acc)


def bony_decompose(f: np.ndarray, g: np.ndarray, bank: DyadicFilterBank) -> BonyParts:
    """Split f*g into T_f g + R(f, g) + T_g f.

    The three parts add up to f*g minus the product of the two means (the zero
    mode sits in no dyadic block), so the identity is exact for mean-free input.
    """
    grid = bank.grid
    fh, gh = fft(f, grid.d), fft(g, grid.d)
    aliased = _flag_aliasing(grid, fh, gh)
    dealias = Dealiaser(grid)
    return BonyParts(
        ifft(paraproduct_hat(fh, gh, bank, dealias), grid),
        ifft(remainder_hat(fh, gh, bank, dealias), grid),
        ifft(paraproduct_hat(gh, fh, bank, dealias), grid),
        aliased,
    )


def paraproduct(f: np.ndarray, g: np.ndarray, bank: DyadicFilterBank) -> np.ndarray:
    grid = bank.grid
    return ifft(paraproduct_hat(fft(f, grid.d), fft(g, grid.d), bank), grid)


def remainder(f: np.ndarray, g: np.ndarray, bank: DyadicFilterBank) -> np.ndarray:
    grid = bank.grid
    return ifft(remainder_hat(fft(f, grid.d), fft(g, grid.d), bank), grid)


def leray_project_hat(uh: np.ndarray, grid: Grid) -> np.ndarray:
    """(Id - xi xi^T / |xi|^2) applied per mode; modes with zero odd wavevector pass through."""
    ks = grid.wavevector_odd
    k2 = sum(k**2 for k in ks)
    inv = np.divide(1.0, k2, out=np.zeros(np.broadcast_shapes(*(k.shape for k in ks))), where=k2 > 0)
    kdotu = sum(k * uh[i] for i, k in enumerate(ks)) * inv
    return np.stack([uh[i] - k * kdotu for i, k in enumerate(ks)])


def leray_project(u: np.ndarray, grid: Grid) -> np.ndarray:
    return ifft(leray_project_hat(fft(u, grid.d), grid), grid)


def lambda_power(f: np.ndarray, ell: float, grid: Grid) -> np.ndarray:
    """Lambda^ell f, the multiplier |xi|^ell.  For ell < 0 the mean is dropped (with a warning if nonzero)."""
    fh = fft(f, grid.d)
    if ell == 0:
        return np.array(f, dtype=float, copy=True)
    kmag = grid.kmag
    if ell < 0:
        mean = np.abs(fh[(Ellipsis,) + (0,) * grid.d])
        if np.any(mean > 1e-14 * max(np.abs(fh).max(), 1e-300)):
            warnings.warn("negative power of |xi| applied to a field with nonzero mean; mean dropped", RuntimeWarning, stacklevel=2)
        mult = np.zeros_like(kmag)
        np.power(kmag, ell, out=mult, where=kmag > 0)
    else:
        mult = kmag**ell
    return ifft(mult * fh, grid)


def _advect_hat(vh, gh_grad, dealias: Dealiaser):
    """Spectrum of v . grad(b) given v-hat and the spectral gradient of b."""
    acc = 0.0
    for m in range(vh.shape[0]):
        acc = acc + dealias.to_fine(vh[m]) * dealias.to_fine(gh_grad[m])
    return dealias.from_fine(acc)


def commutator_block(v: np.ndarray, a: np.ndarray, j: int, ell: int, bank: DyadicFilterBank) -> np.ndarray:
    """[v . grad, d_ell Delta_j] a = v . grad(d_ell Delta_j a) - d_ell Delta_j (v . grad a)."""
    grid = bank.grid
    bank.check_k(j)
    vh, ah = fft(v, grid.d), fft(a, grid.d)
    _flag_aliasing(grid, vh, ah)
    dealias = Dealiaser(grid)
    ks = grid.wavevector_odd
    op = 1j * ks[ell] * bank._phi[int(j)]
    b = op * ah
    first = _advect_hat(vh, [1j * k * b for k in ks], dealias)
    second = op * _advect_hat(vh, [1j * k * ah for k in ks], dealias)
    return ifft(first - second, grid)


def commutator_block_bony(v: np.ndarray, a: np.ndarray, j: int, ell: int, bank: DyadicFilterBank) -> np.ndarray:
    """Same commutator assembled from the five paraproduct pieces used in its estimate.

    With b_m = d_m a and the operator Q = d_ell Delta_j, the pieces are
    [T_{v^m}, Q] b_m, T_{Q b_m} v^m, -Q T_{b_m} v^m, R(v^m, Q b_m) and
    -Q R(v^m, b_m).
    """
    grid = bank.grid
    bank.check_k(j)
    vh, ah = fft(v, grid.d), fft(a, grid.d)
    dealias = Dealiaser(grid)
    ks = grid.wavevector_odd
    op = 1j * ks[ell] * bank._phi[int(j)]
    total = np.zeros(grid.spectral_shape, dtype=complex)
    for m in range(grid.d):
        bm = 1j * ks[m] * ah
        qbm = op * bm
        total += paraproduct_hat(vh[m], qbm, bank, dealias) - op * paraproduct_hat(vh[m], bm, bank, dealias)
        total += paraproduct_hat(qbm, vh[m], bank, dealias)
        total -= op * paraproduct_hat(bm, vh[m], bank, dealias)
        total += remainder_hat(vh[m], qbm, bank, dealias)
        total -= op * remainder_hat(vh[m], bm, bank, dealias)
    return ifft(total, grid)

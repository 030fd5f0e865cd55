"""Measured-constant checks for the harmonic-analysis inequalities, plus exact identities.

Every inequality check draws random band-limited inputs, evaluates the ratio
left side / right side and records the extreme ratios with the trial count
and seed.  None of the constants is assumed: a check passes when its ratios
are finite and stable in the sense documented on each function.
"""

from __future__ import annotations

import math
import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import Grid, fft, ifft
from .littlewood_paley import (
    BesovIndex,
    DyadicFilterBank,
    besov_norm,
    block_norms_hat,
    build_filter_bank,
    combine_blocks,
    lp_norm,
)
from .fields import band_limited_random, packet_field
from .paradiff import bony_decompose, commutator_block, leray_project_hat, paraproduct_hat
from .semigroup import heat_propagate

IDENTITY_TOL = 1e-10


@dataclass
class CheckResult:
    check_id: str
    kind: str  # "inequality" or "identity"
    max_ratio: float
    min_ratio: float
    trials: int
    seed: int
    passed: bool
    detail: dict = field(default_factory=dict)

    def describe(self) -> str:
        extra = ", ".join(f"{k}={_fmt(v)}" for k, v in self.detail.items() if not isinstance(v, (list, dict)))
        return f"max {self.max_ratio:.4g}, min {self.min_ratio:.4g}, trials {self.trials}, seed {self.seed}" + (f" ({extra})" if extra else "")

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.check_id}: {self.describe()}"


def _fmt(v):
    return f"{v:.4g}" if isinstance(v, float) else str(v)


@dataclass
class SuiteReport:
    seed: int
    results: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def __getitem__(self, check_id: str) -> CheckResult:
        for r in self.results:
            if r.check_id == check_id:
                return r
        raise KeyError(check_id)

    def lines(self) -> list[str]:
        return [r.line() for r in self.results]


def _rng(seed: int, check_id: str) -> np.random.Generator:
    # one stream per check, independent of execution order
    return np.random.default_rng([seed, zlib.crc32(check_id.encode())])


def _spread(per_octave: list[float]) -> float:
    vals = np.asarray(per_octave, dtype=float)
    return float(vals.max() / vals.min())


def _finite(*xs) -> bool:
    return all(np.all(np.isfinite(x)) for x in xs)


def _result(check_id, ratios, trials, seed, passed, kind="inequality", **detail) -> CheckResult:
    ratios = np.asarray(ratios, dtype=float)
    return CheckResult(check_id, kind, float(ratios.max()), float(ratios.min()), trials, seed, bool(passed), detail)


def _derivative(fh: np.ndarray, grid: Grid, order: int) -> np.ndarray:
    """Spectrum of D^k f for d = 1 (the only dimension used by the Bernstein sweep)."""
    return (1j * grid.wavevector_odd[0]) ** order * fh


# --- Bernstein family --------------------------------------------------------

OCTAVES = tuple(2.0**j for j in range(-3, 4))


def check_bernstein(trials: int, seed: int, a: float = 2.0, b: float = 4.0, order: int = 1) -> CheckResult:
    """||D^k f||_b <= C lambda^(k + d(1/a - 1/b)) ||f||_a for spectrum in the ball of radius lambda.

    Seven octaves of lambda on one 1D grid; the per-octave maxima must agree
    within a factor 2.
    """
    rng = _rng(seed, "bernstein")
    grid = Grid(1, 2**14, 2 * math.pi * 512)
    per, ratios = [], []
    for lam in OCTAVES:
        best = 0.0
        for _ in range(trials):
            f = packet_field(grid, lam, rng)
            fh = fft(f)
            lhs = lp_norm(ifft(_derivative(fh, grid, order), grid), b, grid)
            r = lhs / (lam ** (order + grid.d * (1 / a - 1 / b)) * lp_norm(f, a, grid))
            ratios.append(r)
            best = max(best, r)
        per.append(best)
    spread = _spread(per)
    return _result("bernstein", ratios, trials, seed, _finite(ratios) and spread <= 2.0, spread=spread, per_octave=per)


def check_multiplier_bernstein(trials: int, seed: int, m: float = 1.5, a: float = 3.0) -> CheckResult:
    """||A(D) f||_a ~ lambda^m ||f||_a with A = |xi|^m, spectrum in the annulus 3/4 <= |xi|/lambda <= 8/3.

    Passes when every ratio sits in [1/C, C] with C = 4 and per-octave maxima agree within 2.
    """
    rng = _rng(seed, "multiplier-bernstein")
    grid = Grid(1, 2**14, 2 * math.pi * 512)
    per, ratios = [], []
    for lam in OCTAVES[:-1]:  # 8/3 * 8 would pass the Nyquist radius 16
        best = 0.0
        for _ in range(trials):
            f = packet_field(grid, lam, rng, inner=0.75, outer=8 / 3)
            fh = fft(f)
            r = lp_norm(ifft(grid.kmag**m * fh, grid), a, grid) / (lam**m * lp_norm(f, a, grid))
            ratios.append(r)
            best = max(best, r)
        per.append(best)
    C = max(max(ratios), 1 / min(ratios))
    ok = _finite(ratios) and C <= 4.0 and _spread(per) <= 2.0
    return _result("multiplier-bernstein", ratios, trials, seed, ok, C=C, spread=_spread(per), per_octave=per)


def check_nonlinear_bernstein_p2(trials: int, seed: int, lam: float = 1.0) -> CheckResult:
    """int |grad f|^2 >= c lambda^2 int f^2 on the annulus 0.75 lambda <= |xi| <= 2.67 lambda; pass when min c >= 0.5.

    Odd trials use the whole annulus, even trials a thin ring at the inner
    radius, where the bound is nearly attained.
    """
    rng = _rng(seed, "nonlinear-bernstein-p2")
    grid = Grid(2, 128, 2 * math.pi * 8)
    cs = []
    for t in range(trials):
        outer = 0.8 if t % 2 == 0 else 2.67
        f = band_limited_random(grid, 0.75 * lam, outer * lam, rng)
        fh = fft(f)
        grad = ifft(np.stack([1j * k * fh for k in grid.wavevector_odd]), grid)
        cs.append(lp_norm(grad, 2, grid) ** 2 / (lam**2 * lp_norm(f, 2, grid) ** 2))
    return _result("nonlinear-bernstein-p2", cs, trials, seed, _finite(cs) and min(cs) >= 0.5, c_min=float(min(cs)))


# --- interpolation ------------------------------------------------------------

GN_CASES = ((0.0, 1.0, 0.0, 2.0, 4.0), (0.5, 2.0, -0.5, 2.0, 2.0), (0.0, 1.5, -0.5, 2.0, 6.0))


def check_gagliardo_nirenberg(trials: int, seed: int) -> CheckResult:
    """Interpolation ratios for several (ell, m, k, q, r); per-scale maxima within a factor 2 over three octaves."""
    from .decay import gn_ratio

    rng = _rng(seed, "gagliardo-nirenberg")
    grid = Grid(2, 256, 2 * math.pi * 32)
    ratios, spreads = [], {}
    for case in GN_CASES:
        per = []
        for scale in (0.5, 1.0, 2.0):
            best = 0.0
            for _ in range(trials):
                f = packet_field(grid, scale, rng, inner=0.25, outer=1.0)
                r = gn_ratio(f, grid, *case)
                ratios.append(r)
                best = max(best, r)
            per.append(best)
        spreads[str(case)] = _spread(per)
    worst = max(spreads.values())
    return _result("gagliardo-nirenberg", ratios, trials, seed, _finite(ratios) and worst <= 2.0, spread=worst)


# --- products ---------------------------------------------------------------

def _product_grid() -> tuple[Grid, DyadicFilterBank]:
    grid = Grid(2, 256, 2 * math.pi * 16)
    return grid, build_filter_bank(grid, 0)


def _bnorm(f, s, p, r, bank):
    return besov_norm(f, BesovIndex(s, p, r), bank)


def check_product_law(trials: int, seed: int) -> CheckResult:
    """The three product estimates in d = 2, measured over a dilation sweep.

    Regimes: (i) s = 1 algebra bound with L^infinity factors, (ii)
    sigma1 = 1, sigma2 = 1/2, p1 = p2 = q = 2, (iii) the negative-index bound
    with sigma = 1/2, p1 = p2 = 2, q = 4/3.  Spectra stay below a third of the
    Nyquist radius so the products are resolved.
    """
    rng = _rng(seed, "product-law")
    grid, bank = _product_grid()
    regimes = {
        "algebra": lambda f, g: _bnorm(f * g, 1, 2, 1, bank)
        / (lp_norm(f, math.inf, grid) * _bnorm(g, 1, 2, 1, bank) + lp_norm(g, math.inf, grid) * _bnorm(f, 1, 2, 1, bank)),
        "sigma1>=sigma2": lambda f, g: _bnorm(f * g, 0.5, 2, 1, bank) / (_bnorm(f, 1, 2, 1, bank) * _bnorm(g, 0.5, 2, 1, bank)),
        "negative-index": lambda f, g: _bnorm(f * g, -0.5, 4 / 3, math.inf, bank)
        / (_bnorm(f, 0.5, 2, 1, bank) * _bnorm(g, -0.5, 2, math.inf, bank)),
    }
    ratios, spreads = [], {}
    for name, ratio in regimes.items():
        per = []
        for scale in (0.25, 0.5, 1.0):
            best = 0.0
            for _ in range(trials):
                f = packet_field(grid, scale, rng, width=0.2, inner=0.1)
                g = packet_field(grid, scale, rng, width=0.2, inner=0.1)
                r = ratio(f, g)
                ratios.append(r)
                best = max(best, r)
            per.append(best)
        spreads[name] = _spread(per)
    ok = _finite(ratios) and max(spreads.values()) <= 2.0
    return _result("product-law", ratios, trials, seed, ok, spread=max(spreads.values()), spreads=spreads)


def _low_output(h_hat: np.ndarray, bank: DyadicFilterBank) -> np.ndarray:
    """Blocks k <= k0 of a spectrum, stacked."""
    return np.stack([bank._phi[int(k)] * h_hat for k in bank.block_range("low")])


def measure_n0(fh: np.ndarray, gh: np.ndarray, bank: DyadicFilterBank, high_f: bool, n_max: int = 10) -> int:
    """Smallest N for which the low output of the paraproduct sees only S_{k0+N} f.

    With ``high_f`` the paraproduct is T_{g} f^h and the cut keeps
    (S_{k0+N} - S_{k0}) f^h; otherwise it is T_f g^h and the cut keeps
    S_{k0+N} f.  The output is compared blockwise for k <= k0.
    """
    k0 = bank.k0
    if high_f:
        f_h = fh * (1 - bank.chi_k(k0))
        full = _low_output(paraproduct_hat(gh, f_h, bank) + paraproduct_hat(f_h, gh, bank), bank)
    else:
        g_h = gh * (1 - bank.chi_k(k0))
        full = _low_output(paraproduct_hat(fh, g_h, bank), bank)
    scale = np.abs(full).max()
    for n in range(n_max + 1):
        if high_f:
            cut = f_h * bank.chi_k(k0 + n)
            part = _low_output(paraproduct_hat(gh, cut, bank) + paraproduct_hat(cut, gh, bank), bank)
        else:
            part = _low_output(paraproduct_hat(fh * bank.chi_k(k0 + n), g_h, bank), bank)
        if np.abs(part - full).max() <= 1e-12 * max(scale, 1e-300):
            return n
    return n_max + 1


def check_lowfreq_product(trials: int, seed: int, p: float = 3.0, sigma: float = 0.5) -> CheckResult:
    """Low-frequency product bounds with the low part of f cut at k0 + N0.

    N0 is measured (see :func:`measure_n0`) and must not exceed 8; both
    ratios must then be finite.  d = 2, so s0 = 4/p - 1 and 1/p* = 1/2 - 1/p.
    """
    rng = _rng(seed, "lowfreq-product")
    grid = Grid(2, 128, 2 * math.pi * 16)
    bank = build_filter_bank(grid, -1)
    d = grid.d
    s0 = d * (2 / p - 0.5)
    p_star = math.inf if p == 2 else 1 / (0.5 - 1 / p)
    k0 = bank.k0
    weak_low = BesovIndex(-s0, 2.0, math.inf, "low")
    ratios, n0s = [], []
    for t in range(trials):
        f = band_limited_random(grid, 0.1, 1.2, rng)
        g = band_limited_random(grid, 0.1, 1.2, rng)
        fh, gh = fft(f), fft(g)
        n0_1 = measure_n0(fh, gh, bank, high_f=False)
        n0_2 = measure_n0(fh, gh, bank, high_f=True)
        n0s += [n0_1, n0_2]
        gh_high = gh * (1 - bank.chi_k(k0))
        fh_high = fh * (1 - bank.chi_k(k0))
        g_high, f_high = ifft(gh_high, grid), ifft(fh_high, grid)
        lhs1 = combine_blocks(block_norms_hat(fft(f * g_high), 2.0, bank), weak_low, bank)
        rhs1 = (
            combine_blocks(block_norms_hat(fh, p, bank), BesovIndex(sigma, p, 1.0), bank)
            + lp_norm(ifft(bank.chi_k(k0 + n0_1) * fh, grid), p_star, grid)
        ) * combine_blocks(block_norms_hat(gh_high, p, bank), BesovIndex(-sigma, p, math.inf), bank)
        lhs2 = combine_blocks(block_norms_hat(fft(f_high * g), 2.0, bank), weak_low, bank)
        rhs2 = (
            combine_blocks(block_norms_hat(fh_high, p, bank), BesovIndex(sigma, p, 1.0), bank)
            + lp_norm(ifft((bank.chi_k(k0 + n0_2) - bank.chi_k(k0)) * fh, grid), p_star, grid)
        ) * combine_blocks(block_norms_hat(gh, p, bank), BesovIndex(-sigma, p, math.inf), bank)
        ratios += [lhs1 / rhs1, lhs2 / rhs2]
    n0 = max(n0s)
    return _result("lowfreq-product", ratios, trials, seed, _finite(ratios) and n0 <= 8, N0=n0)


# --- commutator, composition ----------------------------------------------------

def check_commutator(trials: int, seed: int, levels: tuple[int, ...] = (-5, -4, -3, -2, -1, 0)) -> CheckResult:
    """Commutator bound with sigma = 1, p = p1 = 2, d = 2, swept over six levels j.

    For one broadband a (spectrum inside the six levels) and a low-frequency
    v, the per-level ratios rho_j = ||[v.grad, d_l Delta_j] a||_2 /
    (||grad v||_{B^1_{2,1}} ||grad a||_{B^0_{2,1}}) must be dominated by
    C c_j with sum c_j <= 1.  The measured constant is C = sum_j rho_j; it
    must be finite and agree within a factor 2 across trials.
    """
    rng = _rng(seed, "commutator")
    grid = Grid(2, 512, 2 * math.pi * 32)  # top block stays below a third of Nyquist
    bank = build_filter_bank(grid, 0)
    grad_idx = BesovIndex(1.0, 2.0, 1.0)
    a_idx = BesovIndex(0.0, 2.0, 1.0)
    lo, hi = 0.75 * 2.0 ** min(levels), 8 / 3 * 2.0 ** max(levels)
    ratios, constants = [], []
    for _ in range(trials):
        v = band_limited_random(grid, 0.03, 0.25, rng, components=2)
        a = band_limited_random(grid, lo, hi, rng)
        vh, ah = fft(v, 2), fft(a)
        grad_v = sum(combine_blocks(block_norms_hat(1j * k * vh[m], 2.0, bank), grad_idx, bank) for m in range(2) for k in grid.wavevector_odd)
        grad_a = sum(combine_blocks(block_norms_hat(1j * k * ah, 2.0, bank), a_idx, bank) for k in grid.wavevector_odd)
        ell = int(rng.integers(2))
        rho = [lp_norm(commutator_block(v, a, j, ell, bank), 2, grid) / (grad_v * grad_a) for j in levels]
        ratios += rho
        constants.append(sum(rho))
    spread = _spread(constants)
    ok = _finite(ratios) and spread <= 2.0
    return _result("commutator", ratios, trials, seed, ok, C=float(max(constants)), spread=spread, constants=constants)


def check_composition(trials: int, seed: int, s: float = 1.0) -> CheckResult:
    """||F(a)||_{B^s_{2,1}} <= C ||a||_{B^s_{2,1}} for F(a) = a/(1+a), ||a||_inf = 1/2; C within a factor 2 across inputs."""
    rng = _rng(seed, "composition")
    grid = Grid(2, 256, 2 * math.pi * 16)
    bank = build_filter_bank(grid, 0)
    idx = BesovIndex(s, 2.0, 1.0)
    ratios = []
    for _ in range(trials):
        a = band_limited_random(grid, 0.05, 1.0, rng)
        a *= 0.5 / np.abs(a).max()
        Fa = a / (1 + a)
        Fa -= Fa.mean()
        ratios.append(besov_norm(Fa, idx, bank) / besov_norm(a, idx, bank))
    spread = max(ratios) / min(ratios)
    return _result("composition", ratios, trials, seed, _finite(ratios) and spread <= 2.0, spread=spread)


# --- heat flow and time norms ------------------------------------------------------

def _heat_tables(uh: np.ndarray, bank: DyadicFilterBank, mu: float, times: np.ndarray) -> np.ndarray:
    return np.stack([block_norms_hat(heat_propagate(uh, t, mu, bank.grid), 2.0, bank) for t in times])


def _time_grid(T: float, n: int = 400) -> np.ndarray:
    return np.concatenate([[0.0], np.geomspace(1e-4, T, n)])


def check_heat_maxreg(trials: int, seed: int, mu: float = 1.0, s: float = 0.0) -> CheckResult:
    """(||u||_{L~inf_T(B^s)} + mu ||u||_{L~1_T(B^(s+2))}) / ||u0||_{B^s} for heat flow, T in {1, 10, 100}.

    The measured constant must stay within a factor 2 across T.
    """
    rng = _rng(seed, "heat-maxreg")
    grid = Grid(2, 128, 2 * math.pi * 8)
    bank = build_filter_bank(grid, 0)
    w_s, w_s2 = 2.0 ** (s * bank.ks), 2.0 ** ((s + 2) * bank.ks)
    per, ratios = {}, []
    for T in (1.0, 10.0, 100.0):
        times = _time_grid(T)
        best = 0.0
        for _ in range(trials):
            j = int(rng.integers(-1, 2))
            u0 = band_limited_random(grid, 0.75 * 2.0**j, 8 / 3 * 2.0**j, rng)
            table = _heat_tables(fft(u0), bank, mu, times)
            sup_part = table.max(axis=0) @ w_s
            int_part = np.trapezoid(table, times, axis=0) @ w_s2
            r = (sup_part + mu * int_part) / (table[0] @ w_s)
            ratios.append(r)
            best = max(best, r)
        per[T] = best
    spread = _spread(list(per.values()))
    return _result("heat-maxreg", ratios, trials, seed, _finite(ratios) and spread <= 2.0, spread=spread)


def check_minkowski(trials: int, seed: int) -> CheckResult:
    """sup_t ||F(t)||_{B^s_{2,1}} / ||F||_{L~inf(B^s_{2,1})} <= 1 along heat flows of random data."""
    rng = _rng(seed, "minkowski")
    grid = Grid(2, 64, 2 * math.pi * 4)
    bank = build_filter_bank(grid, 0)
    w = 2.0 ** (0.5 * bank.ks)
    times = _time_grid(10.0, 100)
    ratios = []
    for _ in range(trials):
        uh = fft(band_limited_random(grid, 0.2, 4.0, rng))
        table = _heat_tables(uh, bank, 1.0, times)
        ratios.append(float((table @ w).max() / (table.max(axis=0) @ w)))
    return _result("minkowski", ratios, trials, seed, _finite(ratios) and max(ratios) <= 1 + 1e-12)


def check_scaling(trials: int, seed: int, s: float = 0.5, p: float = 3.0) -> CheckResult:
    """||f(lambda .)||_{B^s_{p,1}} vs lambda^(s - d/p) ||f||_{B^s_{p,1}}; one constant C <= 2 bounds both directions.

    Dilation is exact on the lattice: the same samples on a box of length
    L/lambda.  Dyadic lambda gives ratio 1; the half octaves measure C.
    """
    rng = _rng(seed, "scaling")
    grid = Grid(2, 128, 2 * math.pi * 8)
    bank = build_filter_bank(grid, 0)
    idx = BesovIndex(s, p, 1.0)
    ratios = []
    for _ in range(trials):
        f = band_limited_random(grid, 0.3, 2.0, rng)
        base = besov_norm(f, idx, bank)
        for lam in (2.0**-0.5, 2.0, 2.0**1.5):
            g2 = grid.scaled(1 / lam)
            r = besov_norm(f, idx, build_filter_bank(g2, 0)) / (lam ** (s - grid.d / p) * base)
            ratios.append(r)
    C = max(max(ratios), 1 / min(ratios))
    return _result("scaling", ratios, trials, seed, _finite(ratios) and C <= 2.0, C=C)


# --- identities -------------------------------------------------------------------

def _identity(check_id, defects, trials, seed) -> CheckResult:
    return _result(check_id, defects, trials, seed, _finite(defects) and max(defects) < IDENTITY_TOL, kind="identity")


def check_lp_reconstruction(trials: int, seed: int) -> CheckResult:
    rng = _rng(seed, "lp-reconstruction")
    grid = Grid(2, 128, 2 * math.pi * 8)
    bank = build_filter_bank(grid, 0)
    defects = []
    for _ in range(trials):
        fh = fft(rng.standard_normal(grid.shape)) * grid.nyquist_mask
        fh[0, 0] = 0.0
        total = sum(bank._phi[int(k)] * fh for k in bank.ks)
        defects.append(float(np.abs(total - fh).max() / np.abs(fh).max()))
    return _identity("lp-reconstruction", defects, trials, seed)


def check_bony_identity(trials: int, seed: int) -> CheckResult:
    rng = _rng(seed, "bony-identity")
    grid = Grid(2, 128, 2 * math.pi * 8)
    bank = build_filter_bank(grid, 0)
    defects = []
    for _ in range(trials):
        f = band_limited_random(grid, 0.1, 2.5, rng)
        g = band_limited_random(grid, 0.1, 2.5, rng)
        parts = bony_decompose(f, g, bank)
        target = f * g - f.mean() * g.mean()
        total = parts.T_fg + parts.R + parts.T_gf
        defects.append(float(np.abs(total - target).max() / np.abs(target).max()))
    return _identity("bony-identity", defects, trials, seed)


def check_leray(trials: int, seed: int) -> CheckResult:
    rng = _rng(seed, "leray")
    grid = Grid(3, 32, 2 * math.pi * 2)
    defects = []
    for _ in range(trials):
        uh = fft(rng.standard_normal((3,) + grid.shape), 3) * grid.nyquist_mask
        pu = leray_project_hat(uh, grid)
        ppu = leray_project_hat(pu, grid)
        div = sum(1j * k * pu[i] for i, k in enumerate(grid.wavevector_odd))
        scale = np.abs(uh).max()
        defects.append(float(max(np.abs(ppu - pu).max(), np.abs(div).max()) / scale))
    return _identity("leray", defects, trials, seed)


def check_effective_velocity(trials: int, seed: int) -> CheckResult:
    from .solver import effective_velocity_defect

    rng = _rng(seed, "effective-velocity")
    grid = Grid(2, 64, 2 * math.pi * 4)
    defects = []
    for _ in range(trials):
        U = fft(rng.standard_normal((3,) + grid.shape), 2) * grid.nyquist_mask
        defects.append(effective_velocity_defect(U, grid))
    return _identity("effective-velocity", defects, trials, seed)


def check_rescale_identity(trials: int, seed: int) -> CheckResult:
    """Thresholded D_p pieces before and after the change of variables, Ma = 1/2, Re = 1 (X = 1/4)."""
    from .decay import compute_indices, rescale_identity_check
    from .solver import FluidParams, PhysicalState

    rng = _rng(seed, "rescale-identity")
    params = FluidParams.from_mach_reynolds(0.5, 1.0)
    grid = Grid(2, 64, 2 * math.pi * 4 * params.length_scale * 4)
    defects = []
    for _ in range(trials):
        traj = []
        for t in (0.0, 0.05, 0.5):
            a = 0.1 * band_limited_random(grid, 0.1, 20.0, rng)
            u = band_limited_random(grid, 0.1, 20.0, rng, components=2)
            traj.append(PhysicalState(grid, params.rho_inf * (1 + a), u, t))
        for p in (2.0, 3.0):
            defects.append(rescale_identity_check(traj, params, compute_indices(p, 2)))
    return _identity("rescale-identity", defects, trials, seed)


CHECKS: dict[str, Callable[[int, int], CheckResult]] = {
    "bernstein": check_bernstein,
    "multiplier-bernstein": check_multiplier_bernstein,
    "nonlinear-bernstein-p2": check_nonlinear_bernstein_p2,
    "gagliardo-nirenberg": check_gagliardo_nirenberg,
    "product-law": check_product_law,
    "lowfreq-product": check_lowfreq_product,
    "commutator": check_commutator,
    "composition": check_composition,
    "heat-maxreg": check_heat_maxreg,
    "minkowski": check_minkowski,
    "scaling": check_scaling,
    "lp-reconstruction": check_lp_reconstruction,
    "bony-identity": check_bony_identity,
    "leray": check_leray,
    "effective-velocity": check_effective_velocity,
    "rescale-identity": check_rescale_identity,
}

IDENTITY_IDS = ("lp-reconstruction", "bony-identity", "leray", "effective-velocity", "rescale-identity")
INEQUALITY_IDS = tuple(k for k in CHECKS if k not in IDENTITY_IDS)


def property_suite(check_ids=None, seed: int = 0, trials: int = 50, workers: int | None = None) -> SuiteReport:
    """Run the named checks (all by default); results are ordered by check id."""
    ids = list(CHECKS) if check_ids is None else list(check_ids)
    unknown = [c for c in ids if c not in CHECKS]
    if unknown:
        raise KeyError(f"unknown check id(s) {unknown}; known ids: {sorted(CHECKS)}")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if workers is None:
        workers = int(os.environ.get("BNS_THREADS", "1"))
    if workers > 1 and len(ids) > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda c: CHECKS[c](trials, seed), ids))
    else:
        results = [CHECKS[c](trials, seed) for c in ids]
    return SuiteReport(seed, sorted(results, key=lambda r: r.check_id))

"""Exact Fourier-space solution operator of the linearized barotropic system

    a_t + div u = 0,    u_t - mu Lap u - (lam + mu) grad div u + grad a = 0.

Per mode the velocity splits into its component v = n.u along n = xi/|xi| and
a solenoidal remainder.  The remainder is a heat mode with rate mu |xi|^2; the
pair (a, v) obeys the 2x2 acoustic block

    d/dt (a, v) = M (a, v),    M = [[0, -i r], [-i r, -nu r^2]],    r = |xi|,

whose exponential is written as e^{Mt} = (c - lbar s) Id + s M with
lbar = tr(M)/2, c = e^{lbar t} cosh(Delta t), s = e^{lbar t} sinh(Delta t)/Delta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .fitting import DecayEntry, fit_exponent, last_decade
from .grid import Grid, fft, ifft
from .littlewood_paley import BesovIndex, DyadicFilterBank, block_norms_hat, combine_blocks, parseval_l2, phi

DEGENERACY_TOL = 1e-8
_TAYLOR_CUT = 1e-2


@dataclass(frozen=True)
class ViscosityParams:
    """Constant viscosities at the reference state; nu = lam + 2 mu."""

    mu: float = 0.25
    lam: float = 0.5

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"shear viscosity must be positive, got {self.mu}")
        if not self.nu > 0:
            raise ValueError(f"lam + 2 mu must be positive, got {self.nu}")

    @property
    def nu(self) -> float:
        return self.lam + 2.0 * self.mu


@dataclass(frozen=True)
class AcousticBlock:
    xi_mag: float
    lam_plus: complex
    lam_minus: complex
    degenerate: bool


def acoustic_block_eigen(xi_mag: float, params: ViscosityParams) -> AcousticBlock:
    """Roots of l^2 + nu r^2 l + r^2 = 0 (principal square root)."""
    if xi_mag < 0:
        raise ValueError("xi_mag must be nonnegative")
    r2 = xi_mag**2
    disc = params.nu**2 * r2**2 - 4.0 * r2
    root = np.sqrt(complex(disc))
    lp = (-params.nu * r2 + root) / 2.0
    lm = (-params.nu * r2 - root) / 2.0
    degenerate = xi_mag > 0 and abs(disc) < DEGENERACY_TOL * r2
    return AcousticBlock(float(xi_mag), complex(lp), complex(lm), bool(degenerate))


def acoustic_coefficients(r: np.ndarray, t: float, nu: float) -> tuple[np.ndarray, np.ndarray]:
    """(c, s) of the acoustic exponential, real arrays shaped like ``r``.

    The exponentials are formed from the two roots directly so that strongly
    overdamped modes neither overflow nor lose the slow root to cancellation.
    Near the double root the divided difference switches to its Taylor series.
    """
    r = np.asarray(r, dtype=float)
    lbar = -0.5 * nu * r**2
    delta = np.sqrt((lbar**2 - r**2).astype(complex))
    lam_m = lbar - delta
    # slow root from the product of roots r^2, free of cancellation
    lam_p = np.divide(r**2, lam_m, out=np.zeros_like(lam_m), where=np.abs(lam_m) > 0)
    ep, em = np.exp(lam_p * t), np.exp(lam_m * t)
    c = 0.5 * (ep + em)
    x = delta * t
    small = np.abs(x) < _TAYLOR_CUT
    safe = np.where(small, 1.0, delta)
    s = np.where(small, np.exp(lbar * t) * t * (1 + x**2 / 6 + x**4 / 120), (ep - em) / (2 * safe))
    return c.real, s.real


def acoustic_matrix(r: float, t: float, nu: float) -> np.ndarray:
    """The 2x2 acoustic propagator at one wavenumber."""
    c, s = acoustic_coefficients(np.array([r]), t, nu)
    c, s = float(c[0]), float(s[0])
    lbar = -0.5 * nu * r * r
    P = c - lbar * s
    return np.array([[P, -1j * r * s], [-1j * r * s, P - nu * r * r * s]])


@dataclass
class SpectralState:
    """Spectra of (a, u) stacked as one array of shape (1 + d, *spectral_shape)."""

    grid: Grid
    U: np.ndarray = field(repr=False)

    @property
    def a_hat(self) -> np.ndarray:
        return self.U[0]

    @property
    def u_hat(self) -> np.ndarray:
        return self.U[1:]

    @classmethod
    def from_fields(cls, a: np.ndarray, u: np.ndarray, grid: Grid) -> "SpectralState":
        U = np.concatenate([fft(np.asarray(a, float)[None], grid.d), fft(np.asarray(u, float), grid.d)])
        return cls(grid, U)

    def to_fields(self) -> tuple[np.ndarray, np.ndarray]:
        phys = ifft(self.U, self.grid)
        return phys[0], phys[1:]


class Propagator:
    """E(t) on a grid for a fixed t, with the per-mode coefficients cached.

    The symbol is built from the odd wavevector (Nyquist entries zeroed), the
    same one used by the spectral gradient and divergence.
    """

    def __init__(self, grid: Grid, t: float, params: ViscosityParams):
        if t < 0:
            raise ValueError(f"propagation time must be nonnegative, got {t}")
        self.grid, self.t, self.params = grid, float(t), params
        r = grid.kmag_odd
        inv = np.divide(1.0, r, out=np.zeros_like(r), where=r > 0)
        self.nhat = [k * inv for k in grid.wavevector_odd]
        c, s = acoustic_coefficients(r, t, params.nu)
        lbar = -0.5 * params.nu * r**2
        self.P = c - lbar * s
        self.irs = 1j * r * s
        self.damp_v = params.nu * r**2 * s
        self.heat = np.exp(-params.mu * r**2 * t)

    def apply(self, U: np.ndarray) -> np.ndarray:
        """E(t) applied to a stacked spectrum (1 + d, ...)."""
        ah, uh = U[0], U[1:]
        v = sum(n * uh[i] for i, n in enumerate(self.nhat))
        a_new = self.P * ah - self.irs * v
        v_new = (self.P - self.damp_v) * v - self.irs * ah
        out = np.empty_like(U)
        out[0] = a_new
        for i, n in enumerate(self.nhat):
            out[1 + i] = self.heat * (uh[i] - n * v) + n * v_new
        return out


def propagate(U0: SpectralState, t: float, params: ViscosityParams) -> SpectralState:
    return SpectralState(U0.grid, Propagator(U0.grid, t, params).apply(U0.U))


def heat_propagate(fh: np.ndarray, t: float, mu: float, grid: Grid) -> np.ndarray:
    if t < 0:
        raise ValueError("t must be nonnegative")
    return np.exp(-mu * grid.kmag_odd**2 * t) * fh


def lame_propagate(uh: np.ndarray, t: float, params: ViscosityParams, grid: Grid) -> np.ndarray:
    """Solution operator of u_t - mu Lap u - (lam + mu) grad div u = 0."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    r = grid.kmag_odd
    inv = np.divide(1.0, r, out=np.zeros_like(r), where=r > 0)
    nhat = [k * inv for k in grid.wavevector_odd]
    v = sum(n * uh[i] for i, n in enumerate(nhat))
    hs, hl = np.exp(-params.mu * r**2 * t), np.exp(-params.nu * r**2 * t)
    return np.stack([hs * (uh[i] - n * v) + hl * n * v for i, n in enumerate(nhat)])


# --- envelope -------------------------------------------------------------

@dataclass
class EnvelopeResult:
    C: float
    c0: float
    modes: str
    scan: np.ndarray = field(repr=False)

    def __iter__(self):
        return iter((self.C, self.c0))


def _mode_norms(r: np.ndarray, t: np.ndarray, params: ViscosityParams, modes: str) -> np.ndarray:
    """Operator norm of the per-mode propagator on an (r, t) mesh."""
    R, T = np.meshgrid(r, t, indexing="ij")
    nu = params.nu
    heat = np.exp(-params.mu * R**2 * T)
    if modes == "heat":
        return heat
    c, s = _coeffs_mesh(R, T, nu)
    lbar = -0.5 * nu * R**2
    P = c - lbar * s
    fro2 = P**2 + 2 * R**2 * s**2 + (P - nu * R**2 * s) ** 2
    det = np.exp(-nu * R**2 * T)
    smax = np.sqrt(0.5 * (fro2 + np.sqrt(np.maximum(fro2**2 - 4 * det**2, 0.0))))
    if modes == "acoustic":
        return smax
    return np.maximum(smax, heat)


def _coeffs_mesh(R, T, nu):
    c = np.empty_like(R)
    s = np.empty_like(R)
    for j in range(T.shape[1]):
        c[:, j], s[:, j] = acoustic_coefficients(R[:, j], float(T[0, j]), nu)
    return c, s


def lowfreq_envelope_check(
    k0: int,
    t_grid,
    xi_grid,
    params: ViscosityParams,
    modes: str = "acoustic",
    n_scan: int = 64,
) -> EnvelopeResult:
    """Largest c0 and matching C with |E(t)(xi)| <= C exp(-c0 t |xi|^2) on the samples.

    A trial c0 is accepted when the worst ratio over t <= T is not larger than
    over t <= T/2, i.e. the ratio has stopped growing in time.  The largest
    accepted value on a log scan is refined by bisection.
    """
    t = np.asarray(t_grid, dtype=float)
    r = np.asarray(xi_grid, dtype=float)
    if t.size == 0 or r.size == 0:
        raise ValueError("envelope check needs nonempty time and frequency samples")
    if np.any(t < 0):
        raise ValueError("times must be nonnegative")
    if np.any(r > 2.0**k0 * (1 + 1e-12)) or np.any(r < 0):
        raise ValueError(f"frequency samples must lie in [0, 2^{k0}]")
    if modes not in ("acoustic", "heat", "full"):
        raise ValueError(f"modes must be acoustic, heat or full, got {modes!r}")
    norms = _mode_norms(r, t, params, modes)
    R2T = np.outer(r**2, t)
    half = t <= 0.5 * t.max()

    def ratios(c0):
        q = norms * np.exp(c0 * R2T)
        return q.max(), q[:, half].max()

    def ok(c0):
        full, early = ratios(c0)
        return full <= (1 + 1e-9) * early

    scan = np.geomspace(params.nu * 1e-3, params.nu, n_scan)
    accepted = np.array([ok(c) for c in scan])
    if not accepted[0]:
        c0 = 0.0
    elif accepted.all():
        c0 = float(scan[-1])
    else:
        i = int(np.argmin(accepted)) - 1
        lo, hi = float(scan[i]), float(scan[i + 1])
        for _ in range(50):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if ok(mid) else (lo, mid)
        c0 = lo
    C = float(ratios(c0)[0])
    return EnvelopeResult(C, c0, modes, np.column_stack([scan, accepted]))


# --- radial quadrature ----------------------------------------------------

def sphere_area(d: int) -> float:
    return 2 * math.pi ** (d / 2) / math.gamma(d / 2)


@dataclass
class RadialState:
    """Angle-averaged data on a log-spaced |xi| grid.

    ``a_hat`` and ``v_hat`` have shape (channels, n_r): each row is one
    coherent (density, longitudinal velocity) pair, and rows add in energy.
    Separate rows model components whose cross terms vanish after angular
    averaging.  ``sol_energy`` is the angular mean of the solenoidal |u_hat|^2.
    """

    d: int
    r: np.ndarray = field(repr=False)
    a_hat: np.ndarray = field(repr=False)
    v_hat: np.ndarray = field(repr=False)
    sol_energy: np.ndarray = field(repr=False)

    @classmethod
    def gaussian(
        cls,
        d: int,
        width: float = 0.5,
        amp_a: float = 1.0,
        amp_u: float = 1.0,
        r_min: float = 1e-6,
        r_max: float = 50.0,
        n_r: int = 4000,
    ) -> "RadialState":
        """a0 = amp_a G and u0 = amp_u G e_1 for a Gaussian G of the given width.

        For u0 the angular means are |n.u_hat|^2 = G_hat^2 / d and a
        solenoidal share (d - 1)/d; the a-u cross term averages out.
        """
        r = np.geomspace(r_min, r_max, n_r)
        g = (2 * math.pi) ** (d / 2) * width**d * np.exp(-0.5 * (width * r) ** 2)
        zero = np.zeros_like(g, dtype=complex)
        a_hat = np.stack([amp_a * g + 0j, zero])
        v_hat = np.stack([zero, amp_u * g / math.sqrt(d) + 0j])
        return cls(d, r, a_hat, v_hat, amp_u**2 * (d - 1) / d * g**2)

    def propagate(self, t: float, params: ViscosityParams) -> "RadialState":
        c, s = acoustic_coefficients(self.r, t, params.nu)
        lbar = -0.5 * params.nu * self.r**2
        P = c - lbar * s
        irs = 1j * self.r * s
        a = P * self.a_hat - irs * self.v_hat
        v = (P - params.nu * self.r**2 * s) * self.v_hat - irs * self.a_hat
        sol = self.sol_energy * np.exp(-2 * params.mu * self.r**2 * t)
        return replace(self, a_hat=a, v_hat=v, sol_energy=sol)

    def density(self) -> np.ndarray:
        return (np.abs(self.a_hat) ** 2 + np.abs(self.v_hat) ** 2).sum(axis=0) + self.sol_energy

    def _integrate(self, weight: np.ndarray) -> float:
        integrand = self.r ** (self.d - 1) * weight * self.density()
        return float((2 * math.pi) ** -self.d * sphere_area(self.d) * np.trapezoid(integrand, self.r))

    def l2_norm(self) -> float:
        return math.sqrt(self._integrate(np.ones_like(self.r)))

    def block_range(self) -> np.ndarray:
        """Blocks whose annulus lies inside the sampled |xi| range."""
        lo = math.ceil(math.log2(self.r[0] / 0.75))
        hi = math.floor(math.log2(self.r[-1] * 3 / 8))
        return np.arange(lo, hi + 1)

    def block_norms(self, ks) -> np.ndarray:
        return np.array([math.sqrt(self._integrate(phi(self.r * 2.0**-k) ** 2)) for k in ks])


class _RadialBank:
    """Just enough of a filter bank for :func:`combine_blocks` on radial data."""

    def __init__(self, ks, k0: int = 0):
        self.ks = np.asarray(ks)
        self.k0 = k0

    def block_range(self, restriction: str = "full", zeta: float = 1.0) -> np.ndarray:
        shift = math.log2(zeta)
        if restriction == "low":
            return self.ks[self.ks <= self.k0 + shift + 1e-12]
        if restriction == "high":
            return self.ks[self.ks >= self.k0 - 1 + shift - 1e-12]
        return self.ks


def state_norm(U, idx: BesovIndex | None, params_bank=None, k0: int = 0) -> float:
    """L^2 (idx None) or Besov norm of the pair (a, u) for grid or radial states.

    Grid states use mean-free parts: on the torus the zero mode is conserved
    and would otherwise put a floor under every decay curve.
    """
    if isinstance(U, RadialState):
        if idx is None:
            return U.l2_norm()
        if idx.p != 2:
            raise ValueError("radial mode only supports p = 2")
        bank = _RadialBank(U.block_range(), k0)
        return combine_blocks(U.block_norms(bank.ks), idx, bank)
    grid = U.grid
    V = U.U.copy()
    V[(slice(None),) + (0,) * grid.d] = 0.0
    if idx is None:
        return parseval_l2(V, grid)
    bank: DyadicFilterBank = params_bank
    # norm of the pair is the sum of the component norms
    a_blocks = block_norms_hat(V[0], idx.p, bank)
    u_blocks = block_norms_hat(V[1:], idx.p, bank)
    return combine_blocks(a_blocks, idx, bank) + combine_blocks(u_blocks, idx, bank)


def linear_decay_experiment(
    U0,
    idx: BesovIndex | None,
    s0: float,
    t_grid,
    params: ViscosityParams = ViscosityParams(),
    bank: DyadicFilterBank | None = None,
    window: tuple[float, float] | None = None,
    tolerance: float = 0.05,
) -> DecayEntry:
    """Fit the decay exponent of ||E(t) U0|| and pair it with the target (s0 + s)/2.

    ``idx=None`` measures the plain L^2 norm (target s0/2).  The default fit
    window is the last decade of ``t_grid``.
    """
    s = 0.0 if idx is None else idx.s
    if not s + s0 > 0:
        raise ValueError("need s + s0 > 0")
    t = np.asarray(t_grid, dtype=float)
    window = window or last_decade(float(t.max()))
    if isinstance(U0, RadialState):
        values = np.array([state_norm(U0.propagate(tt, params), idx, k0=0) for tt in t])
    else:
        if idx is not None and bank is None:
            raise ValueError("grid states need a filter bank for Besov norms")
        values = np.array([state_norm(propagate(U0, tt, params), idx, bank) for tt in t])
    if values[0] == 0:
        raise ValueError("datum has zero norm")
    exponent, r2 = fit_exponent(t, values, window)
    if idx is None:
        norm_id, p, r, restriction = "L2", 2.0, 2.0, "full"
    else:
        norm_id = f"B^{s:g}_{idx.p:g},{idx.r:g}[{idx.restriction}]"
        p, r, restriction = idx.p, idx.r, idx.restriction
    return DecayEntry(norm_id, exponent, 0.5 * (s0 + s), tolerance, window, r2, t, values, s, p, r, restriction)

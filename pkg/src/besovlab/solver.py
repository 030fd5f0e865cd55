"""Pseudospectral integrator for the barotropic compressible Navier-Stokes system.

Unknowns are the normalized density perturbation a and velocity u, written as

    a_t + div u = f,                 f = -div(a u),
    u_t - A u + grad a = g,          A = mu Lap + (lam + mu) grad div,
    g = -u.grad u - I(a) A u - k(a) grad a + div(2 mu~(a) D(u) + lam~(a) div u Id) / (1 + a),

with I(a) = a/(1+a), k(a) = P'(1+a)/(1+a) - 1, mu~(a) = mu(1+a) - mu(1) and
lam~(a) = lam(1+a) - lam(1).  Time stepping is Lawson's integrating-factor RK4
around the exact linear propagator, and every product is formed on the
3/2-padded grid.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.fft as sfft

from .fields import gaussian_bumps, packet_field, periodic_offset
from .grid import Dealiaser, Grid, fft, fft_workers, ifft
from .history import BlockHistory
from .littlewood_paley import BesovIndex, DyadicFilterBank, block_norms_hat, combine_blocks, parseval_l2
from .semigroup import Propagator, ViscosityParams

DENSITY_FLOOR = 0.1


class DensityFloorError(RuntimeError):
    def __init__(self, min_density: float):
        super().__init__(f"1 + a dropped to {min_density:.4g}, below the floor {DENSITY_FLOOR}")
        self.min_density = min_density


class BlowUpError(RuntimeError):
    """Non-finite values appeared; ``partial`` holds the trajectory up to ``t_last``."""

    def __init__(self, t_last: float, partial=None, reason: str = "non-finite values"):
        super().__init__(f"{reason} after t = {t_last:.6g}")
        self.t_last = t_last
        self.partial = partial


@dataclass(frozen=True)
class FluidParams:
    """Polytropic pressure P = A rho^gamma and affine viscosities.

    mu(rho) = mu0 + mu1 (rho - rho_inf), likewise for lam.
    """

    rho_inf: float = 1.0
    gamma: float = 1.4
    A: float = 1.0 / 1.4
    mu0: float = 0.25
    lam0: float = 0.5
    mu1: float = 0.0
    lam1: float = 0.0

    def __post_init__(self):
        if not self.rho_inf > 0:
            raise ValueError("rho_inf must be positive")
        if not (self.A > 0 and self.gamma >= 1):
            raise ValueError("need A > 0 and gamma >= 1 so that P'(rho_inf) > 0")
        if not self.mu0 > 0:
            raise ValueError("mu(rho_inf) must be positive")
        if not self.nu_inf > 0:
            raise ValueError("lam + 2 mu must be positive at rho_inf")

    def pressure_derivative(self, rho):
        return self.A * self.gamma * np.asarray(rho, dtype=float) ** (self.gamma - 1)

    @property
    def c_inf(self) -> float:
        return math.sqrt(float(self.pressure_derivative(self.rho_inf)))

    @property
    def nu_inf(self) -> float:
        return self.lam0 + 2 * self.mu0

    @property
    def mach(self) -> float:
        return 1.0 / self.c_inf

    @property
    def reynolds(self) -> float:
        return self.rho_inf / self.c_inf

    @property
    def length_scale(self) -> float:
        return self.nu_inf / (self.rho_inf * self.c_inf)

    @property
    def time_scale(self) -> float:
        return self.nu_inf / (self.rho_inf * self.c_inf**2)

    @classmethod
    def from_mach_reynolds(cls, mach: float, reynolds: float, gamma: float = 1.4, mu0: float = 0.25, lam0: float = 0.5) -> "FluidParams":
        c = 1.0 / mach
        rho = reynolds * c
        # P'(rho) = A gamma rho^(gamma-1) = c^2
        A = c**2 / (gamma * rho ** (gamma - 1))
        return cls(rho_inf=rho, gamma=gamma, A=A, mu0=mu0, lam0=lam0)

    def normalized(self) -> "FluidParams":
        """Parameters after the change of unknowns: rho_inf = 1, P'(1) = 1, nu = 1."""
        nu = self.nu_inf
        return FluidParams(
            rho_inf=1.0,
            gamma=self.gamma,
            A=1.0 / self.gamma,
            mu0=self.mu0 / nu,
            lam0=self.lam0 / nu,
            mu1=self.mu1 * self.rho_inf / nu,
            lam1=self.lam1 * self.rho_inf / nu,
        )

    @property
    def is_normalized(self) -> bool:
        return math.isclose(self.rho_inf, 1.0) and math.isclose(self.c_inf, 1.0) and math.isclose(self.nu_inf, 1.0)

    def viscosity(self) -> ViscosityParams:
        return ViscosityParams(self.mu0, self.lam0)


@dataclass
class State:
    """Normalized unknowns (a, u) at time t."""

    grid: Grid
    a: np.ndarray
    u: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        if self.a.shape != self.grid.shape or self.u.shape != (self.grid.d,) + self.grid.shape:
            raise ValueError("state arrays do not match the grid")

    def spectral(self) -> np.ndarray:
        return fft(np.concatenate([self.a[None], self.u]), self.grid.d)

    @classmethod
    def from_spectral(cls, U: np.ndarray, grid: Grid, t: float = 0.0) -> "State":
        phys = ifft(U, grid)
        return cls(grid, phys[0], phys[1:], t)

    @classmethod
    def zeros(cls, grid: Grid) -> "State":
        return cls(grid, np.zeros(grid.shape), np.zeros((grid.d,) + grid.shape))


@dataclass
class PhysicalState:
    """Dimensional density and velocity on a box of physical length ``grid.L``."""

    grid: Grid
    rho: np.ndarray
    u: np.ndarray
    t: float = 0.0


def nondimensionalize(phys: PhysicalState, params: FluidParams) -> State:
    """Same samples, relabelled: a = rho/rho_inf - 1, u/c_inf, lengths / X, times / T."""
    if np.any(phys.rho <= 0):
        raise ValueError("density must be positive")
    X, T = params.length_scale, params.time_scale
    grid = Grid(phys.grid.d, phys.grid.n, phys.grid.L / X)
    return State(grid, phys.rho / params.rho_inf - 1.0, phys.u / params.c_inf, phys.t / T)


def dimensionalize(state: State, params: FluidParams) -> PhysicalState:
    X, T = params.length_scale, params.time_scale
    grid = Grid(state.grid.d, state.grid.n, state.grid.L * X)
    return PhysicalState(grid, params.rho_inf * (1.0 + state.a), params.c_inf * state.u, state.t * T)


class _Aliased:
    """Products on the base grid (no padding); mirrors the Dealiaser interface."""

    def __init__(self, grid: Grid):
        self.grid = grid

    def to_fine(self, fh):
        return ifft(fh, self.grid)

    def from_fine(self, F):
        return fft(F, self.grid.d)


class NonlinearTerms:
    """Spectral right-hand side (f, g) for normalized parameters on one grid."""

    def __init__(self, grid: Grid, params: FluidParams, dealias: bool = True):
        if not params.is_normalized:
            raise ValueError("nonlinear terms expect normalized parameters; call FluidParams.normalized()")
        self.grid, self.params = grid, params
        self.pad = Dealiaser(grid) if dealias else _Aliased(grid)
        self.ks = grid.wavevector_odd
        self.r2 = grid.kmag_odd**2
        self.variable_viscosity = params.mu1 != 0 or params.lam1 != 0
        self.last_max_speed = 0.0
        self.last_min_density = 1.0

    def __call__(self, U: np.ndarray) -> np.ndarray:
        d, ks, pad, prm = self.grid.d, self.ks, self.pad, self.params
        ah, uh = U[0], U[1:]
        divh = sum(1j * ks[i] * uh[i] for i in range(d))
        # one batched inverse transform: a, u, the vorticity pairs and A u
        pairs = [(i, j) for i in range(d) for j in range(i + 1, d)]
        spectra = [ah, *uh]
        spectra += [1j * ks[j] * uh[i] - 1j * ks[i] * uh[j] for i, j in pairs]
        spectra += [-prm.mu0 * self.r2 * uh[i] + (prm.lam0 + prm.mu0) * 1j * ks[i] * divh for i in range(d)]
        phys = pad.to_fine(np.stack(spectra))
        a, u = phys[0], phys[1 : 1 + d]
        omega = dict(zip(pairs, phys[1 + d : 1 + d + len(pairs)]))
        lame = phys[1 + d + len(pairs) :]
        rho = 1.0 + a
        self.last_min_density = float(rho.min())
        if self.last_min_density < DENSITY_FLOOR:
            raise DensityFloorError(self.last_min_density)
        self.last_max_speed = float(np.sqrt((u**2).sum(axis=0)).max())
        I_a = a / rho
        # u.grad u = grad |u|^2/2 + sum_j u_j (d_j u_i - d_i u_j) and k(a) grad a = grad K(a)
        phi = 0.5 * (u**2).sum(axis=0) + _pressure_potential(a, prm.gamma)
        vec = -I_a * lame
        for (i, j), w in omega.items():
            vec[i] -= u[j] * w
            vec[j] += u[i] * w
        if self.variable_viscosity:
            vec += self._viscous_divergence(a, uh) / rho
        hat = pad.from_fine(np.concatenate([a * u, phi[None], vec]))
        out = np.empty_like(U)
        out[0] = -sum(1j * ks[i] * hat[i] for i in range(d))
        for i in range(d):
            out[1 + i] = hat[d + 1 + i] - 1j * ks[i] * hat[d]
        return out

    def _viscous_divergence(self, a, uh):
        """div(2 mu~ D(u) + lam~ div u Id) on the padded grid."""
        d, prm, ks = self.grid.d, self.params, self.ks
        grad_u = [[self.pad.to_fine(1j * ks[j] * uh[i]) for j in range(d)] for i in range(d)]
        mu_t, lam_t = prm.mu1 * a, prm.lam1 * a
        div_u = sum(grad_u[i][i] for i in range(d))
        tau = np.empty((d, d) + a.shape)
        for i in range(d):
            for j in range(d):
                tau[i, j] = mu_t * (grad_u[i][j] + grad_u[j][i])
            tau[i, i] += lam_t * div_u
        axes = tuple(range(-d, 0))
        tau_h = sfft.rfftn(tau, axes=axes, norm="forward", workers=fft_workers())
        kf = _wavevector_odd_for(d, a.shape[-1], self.grid.L)
        div_h = np.stack([sum(1j * kf[j] * tau_h[i, j] for j in range(d)) for i in range(d)])
        return sfft.irfftn(div_h, s=a.shape, axes=axes, norm="forward", workers=fft_workers())


def _pressure_potential(a: np.ndarray, gamma: float) -> np.ndarray:
    """K(a) with K(0) = 0 and K'(a) = (1 + a)^(gamma - 2) - 1."""
    if gamma == 1.0:
        return np.log1p(a) - a
    return ((1.0 + a) ** (gamma - 1.0) - 1.0) / (gamma - 1.0) - a


def _wavevector_odd_for(d: int, m: int, L: float):
    out = []
    for ax in range(d):
        f = sfft.rfftfreq if ax == d - 1 else sfft.fftfreq
        k = 2 * np.pi * f(m, L / m)
        if m % 2 == 0:
            k[m // 2] = 0.0
        shape = [1] * d
        shape[ax] = k.size
        out.append(k.reshape(shape))
    return out


def nonlinear_rhs(state: State, params: FluidParams, dealias: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Physical (f, g) for a normalized state."""
    terms = NonlinearTerms(state.grid, params, dealias)
    out = ifft(terms(state.spectral()), state.grid)
    return out[0], out[1:]


@dataclass
class SolverConfig:
    """Step size (None picks the acoustic CFL default), horizon and record cadence."""

    t_end: float = 1.0
    dt: float | None = None
    record_every: float | None = None
    dealias: bool = True
    scheme: str = "if-rk4"
    keep_snapshots: bool = False
    cfl: float = 0.25

    def __post_init__(self):
        if self.scheme != "if-rk4":
            raise ValueError(f"unknown scheme {self.scheme!r}; only if-rk4 is implemented")
        if not self.t_end >= 0:
            raise ValueError("t_end must be nonnegative")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")

    def resolve_dt(self, grid: Grid, max_speed: float) -> float:
        bound = self.cfl * grid.spacing / (1.0 + max_speed)
        if self.dt is None:
            return bound
        return self.dt


class Stepper:
    """Lawson RK4: every stage is pulled back through the exact propagator."""

    def __init__(self, grid: Grid, params: FluidParams, dt: float, dealias: bool = True):
        self.grid, self.dt = grid, dt
        self.N = NonlinearTerms(grid, params, dealias)
        visc = params.viscosity()
        self.E_half = Propagator(grid, dt / 2, visc)
        self.E_full = Propagator(grid, dt, visc)
        self.keep = grid.nyquist_mask

    def __call__(self, U: np.ndarray) -> np.ndarray:
        h, Eh, E = self.dt, self.E_half.apply, self.E_full.apply
        k1 = self.N(U)
        EhU = Eh(U)
        k2 = self.N(EhU + 0.5 * h * Eh(k1))
        k3 = self.N(EhU + 0.5 * h * k2)
        k4 = self.N(E(U) + h * Eh(k3))
        out = E(U) + (h / 6.0) * (E(k1) + 2.0 * Eh(k2 + k3) + k4)
        return out * self.keep


def step(state: State, dt: float, params: FluidParams, dealias: bool = True) -> State:
    """One integrating-factor RK4 step of a normalized state."""
    U = Stepper(state.grid, params, dt, dealias)(state.spectral())
    if not np.all(np.isfinite(U)):
        raise BlowUpError(state.t, reason="non-finite values in step")
    return State.from_spectral(U, state.grid, state.t + dt)


# --- effective velocity -----------------------------------------------------

def effective_velocity_hat(U: np.ndarray, grid: Grid) -> np.ndarray:
    """w = grad (-Lap)^{-1} (a - div u) in spectral form; zero mode dropped."""
    ks = grid.wavevector_odd
    r2 = grid.kmag_odd**2
    inv = np.divide(1.0, r2, out=np.zeros_like(r2), where=r2 > 0)
    src = U[0] - sum(1j * k * U[1 + i] for i, k in enumerate(ks))
    return np.stack([1j * k * inv * src for k in ks])


def effective_velocity(state: State) -> np.ndarray:
    a_mean = float(state.a.mean())
    if abs(a_mean) > 1e-14 * max(np.abs(state.a).max(), 1e-300):
        warnings.warn("a has a nonzero mean; the zero mode is dropped from w", RuntimeWarning, stacklevel=2)
    return ifft(effective_velocity_hat(state.spectral(), state.grid), state.grid)


def effective_velocity_defect(U: np.ndarray, grid: Grid) -> float:
    """Relative size of div w + (a - div u) over the mean-free modes."""
    ks = grid.wavevector_odd
    w = effective_velocity_hat(U, grid)
    src = U[0] - sum(1j * k * U[1 + i] for i, k in enumerate(ks))
    src = src * (grid.kmag_odd > 0)
    resid = sum(1j * k * w[i] for i, k in enumerate(ks)) + src
    scale = parseval_l2(src, grid)
    return 0.0 if scale == 0 else parseval_l2(resid, grid) / scale


def damped_transport_residual(s0: State, s1: State, include_flux: bool = True) -> np.ndarray:
    """Midpoint residual of a_t + div(a u) + a + div w = 0 between two snapshots.

    With ``include_flux=False`` the div(a u) term is left out, so the residual
    measures that quadratic term.  The mean mode is removed.
    """
    grid = s0.grid
    dt = s1.t - s0.t
    if not dt > 0:
        raise ValueError("snapshots must be in increasing time order")
    U0, U1 = s0.spectral(), s1.spectral()
    ks = grid.wavevector_odd

    def rest(U, state):
        w = effective_velocity_hat(U, grid)
        out = U[0] + sum(1j * k * w[i] for i, k in enumerate(ks))
        if include_flux:
            flux = fft(state.a * state.u, grid.d)
            out = out + sum(1j * k * flux[i] for i, k in enumerate(ks))
        return out

    resid = (U1[0] - U0[0]) / dt + 0.5 * (rest(U0, s0) + rest(U1, s1))
    resid[(0,) * grid.d] = 0.0
    return ifft(resid, grid)


# --- runs -------------------------------------------------------------------

@dataclass
class Trajectory:
    grid: Grid
    history: BlockHistory
    times: list[float] = field(default_factory=list)
    l2: list[float] = field(default_factory=list)
    max_speed: list[float] = field(default_factory=list)
    t_valid: list[float] = field(default_factory=list)
    ev_defect: list[float] = field(default_factory=list)
    mass: list[float] = field(default_factory=list)
    probe_rows: list[dict] = field(default_factory=list)
    snapshots: list[State] = field(default_factory=list)
    final: State | None = None
    support_radius: float = 0.0
    dt: float = 0.0
    steps: int = 0

    @property
    def valid(self) -> np.ndarray:
        return np.asarray(self.times) <= np.asarray(self.t_valid)

    def arrays(self) -> dict[str, np.ndarray]:
        return {k: np.asarray(getattr(self, k)) for k in ("times", "l2", "max_speed", "t_valid", "ev_defect", "mass")}


Probe = Callable[[float, State], dict]


def validity_limit(grid: Grid, support_radius: float, max_speed: float) -> float:
    """Time before waves leaving the data support can wrap around the box."""
    return (grid.L / 2 - support_radius) / (1.0 + max_speed)


def simulate(
    init: State,
    config: SolverConfig,
    params: FluidParams,
    bank: DyadicFilterBank,
    probes: list[Probe] | None = None,
    support_radius: float = 0.0,
    p_values: tuple[float, ...] = (2.0,),
    progress: Callable[[float], None] | None = None,
) -> Trajectory:
    """Advance ``init`` to ``config.t_end`` and record diagnostics at the cadence.

    Raises BlowUpError carrying the partial trajectory on non-finite values and
    DensityFloorError if 1 + a falls below the floor.
    """
    grid = init.grid
    params = params if params.is_normalized else params.normalized()
    U = init.spectral() * grid.nyquist_mask
    speed0 = float(np.sqrt((init.u**2).sum(axis=0)).max())
    dt = config.resolve_dt(grid, speed0)
    n_steps = max(1, int(math.ceil(config.t_end / dt - 1e-9))) if config.t_end > 0 else 0
    if n_steps:
        dt = config.t_end / n_steps
    cadence = config.record_every or (config.t_end / 100 if config.t_end > 0 else 1.0)
    every = max(1, int(round(cadence / dt))) if n_steps else 1
    traj = Trajectory(grid, BlockHistory(bank.ks, tuple(p_values)), support_radius=support_radius, dt=dt)
    stepper = Stepper(grid, params, dt, config.dealias) if n_steps else None
    running_speed = speed0

    def record(t, U):
        state = State.from_spectral(U, grid, t)
        traj.times.append(t)
        traj.history.record(t, U, bank)
        V = U.copy()
        V[(slice(None),) + (0,) * grid.d] = 0.0
        traj.l2.append(parseval_l2(V, grid))
        traj.max_speed.append(running_speed)
        traj.t_valid.append(validity_limit(grid, support_radius, running_speed))
        traj.ev_defect.append(effective_velocity_defect(U, grid))
        traj.mass.append(float(U[(0,) * (grid.d + 1)].real * grid.volume))
        for probe in probes or ():
            row = {"t": t}
            row.update(probe(t, state))
            traj.probe_rows.append(row)
        if config.keep_snapshots:
            traj.snapshots.append(state)

    record(0.0, U)
    t = 0.0
    for i in range(1, n_steps + 1):
        try:
            U_new = stepper(U)
        except DensityFloorError:
            traj.final = State.from_spectral(U, grid, t)
            raise
        running_speed = max(running_speed, stepper.N.last_max_speed)
        if not np.all(np.isfinite(U_new)):
            traj.final = State.from_spectral(U, grid, t)
            raise BlowUpError(t, traj)
        U = U_new
        t = i * dt
        traj.steps = i
        if i % every == 0 or i == n_steps:
            record(t, U)
            if progress:
                progress(t)
    traj.final = State.from_spectral(U, grid, t)
    return traj


# --- initial data -----------------------------------------------------------

@dataclass(frozen=True)
class InitialDataSpec:
    kind: str = "gaussian-bumps"
    amplitude: float = 1.0
    seed: int = 0
    support_radius: float = 8.0
    width: float = 1.0
    n_bumps: int = 3
    target_X: float | None = None

    def __post_init__(self):
        if self.kind not in ("gaussian-bumps", "band-limited-random"):
            raise ValueError(f"unknown initial-data kind {self.kind!r}")


def initial_norms(state: State, bank: DyadicFilterBank, p: float) -> tuple[float, float]:
    """(X_{p,0}, D_{p,0}) of a datum."""
    d = state.grid.d
    s0 = d * (2.0 / p - 0.5)
    U = state.spectral()
    a2, u2 = block_norms_hat(U[0], 2.0, bank), block_norms_hat(U[1:], 2.0, bank)
    ap, up = (a2, u2) if p == 2 else (block_norms_hat(U[0], p, bank), block_norms_hat(U[1:], p, bank))
    low = BesovIndex(d / 2 - 1, 2.0, 1.0, "low")
    X = (
        combine_blocks(a2, low, bank)
        + combine_blocks(u2, low, bank)
        + combine_blocks(ap, BesovIndex(d / p, p, 1.0, "high"), bank)
        + combine_blocks(up, BesovIndex(d / p - 1, p, 1.0, "high"), bank)
    )
    weak = BesovIndex(-s0, 2.0, math.inf, "low")
    D = combine_blocks(a2, weak, bank) + combine_blocks(u2, weak, bank)
    return X, D


def make_initial_data(spec: InitialDataSpec, grid: Grid, bank: DyadicFilterBank, p: float = 2.0) -> tuple[State, float, float]:
    """Compactly concentrated data near the box centre, optionally scaled to a target X_{p,0}.

    Both reported norms are homogeneous of degree one in the amplitude, so the
    target is met by one exact rescaling.
    """
    if not spec.support_radius < grid.L / 4:
        raise ValueError(f"support radius {spec.support_radius} must be below L/4 = {grid.L / 4}")
    rng = np.random.default_rng(spec.seed)
    d = grid.d
    centre = np.full(d, grid.L / 2)
    if spec.kind == "gaussian-bumps":
        spread = max(spec.support_radius - 4 * spec.width, 0.0)
        centres = []
        for _ in range(spec.n_bumps):
            direction = rng.standard_normal(d)
            direction /= np.linalg.norm(direction)
            centres.append(centre + direction * spread * rng.uniform() ** (1 / d))
        amps = rng.standard_normal((spec.n_bumps, 1 + d))
        fields = gaussian_bumps(grid, centres, spec.width, amps)
        a, u = fields[0], fields[1:]
    else:
        r2 = sum(x**2 for x in periodic_offset(grid, centre))
        window = np.exp(-((np.sqrt(r2) / (0.5 * spec.support_radius)) ** 4))
        a = packet_field(grid, 1.0 / spec.width, rng) * window
        u = np.stack([packet_field(grid, 1.0 / spec.width, rng) * window for _ in range(d)])
    state = State(grid, spec.amplitude * a, spec.amplitude * u)
    X, D = initial_norms(state, bank, p)
    if spec.target_X is not None:
        if X == 0:
            raise ValueError("cannot reach the target: the datum is identically zero")
        scale = spec.target_X / X
        state = State(grid, state.a * scale, state.u * scale)
        X, D = X * scale, D * scale
    if float((1.0 + state.a).min()) < DENSITY_FLOOR:
        raise DensityFloorError(float((1.0 + state.a).min()))
    return state, X, D

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from besovlab.fields import band_limited_random
from besovlab.grid import Grid, divergence, gradient
from besovlab.littlewood_paley import build_filter_bank, parseval_l2
from besovlab.paradiff import lambda_power
from besovlab.semigroup import SpectralState, propagate
from besovlab.solver import (
    DensityFloorError,
    FluidParams,
    InitialDataSpec,
    PhysicalState,
    SolverConfig,
    State,
    damped_transport_residual,
    dimensionalize,
    effective_velocity,
    effective_velocity_defect,
    make_initial_data,
    nondimensionalize,
    nonlinear_rhs,
    simulate,
    step,
    validity_limit,
)

NORM = FluidParams()


def smooth_state(grid, seed, amp, k_hi=2.0):
    rng = np.random.default_rng(seed)
    a = amp * band_limited_random(grid, 0.1, k_hi, rng)
    u = amp * band_limited_random(grid, 0.1, k_hi, rng, components=grid.d)
    return State(grid, a, u)


# --- parameters and rescaling ---------------------------------------------------

def test_default_params_are_normalized():
    assert NORM.c_inf == pytest.approx(1.0) and NORM.nu_inf == 1.0 and NORM.is_normalized
    assert NORM.mach == pytest.approx(1.0)


def test_invalid_params():
    with pytest.raises(ValueError):
        FluidParams(mu0=0.0)
    with pytest.raises(ValueError):
        FluidParams(mu0=0.25, lam0=-1.0)
    with pytest.raises(ValueError):
        FluidParams(rho_inf=-1.0)


def test_identity_rescaling():
    g = Grid(2, 16, 5.0)
    rng = np.random.default_rng(0)
    phys = PhysicalState(g, 1 + 0.1 * rng.standard_normal(g.shape), rng.standard_normal((2,) + g.shape), 0.3)
    st_ = nondimensionalize(phys, NORM)
    assert st_.grid == g and st_.t == 0.3
    assert np.array_equal(st_.a, phys.rho - 1) and np.array_equal(st_.u, phys.u)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(0.2, 5.0), st.integers(0, 10**6))
def test_rescaling_round_trip(mach, reynolds, seed):
    params = FluidParams.from_mach_reynolds(mach, reynolds)
    assert params.mach == pytest.approx(mach) and params.reynolds == pytest.approx(reynolds)
    g = Grid(2, 8, 3.0)
    rng = np.random.default_rng(seed)
    phys = PhysicalState(g, params.rho_inf * (1 + 0.2 * rng.uniform(-1, 1, g.shape)), rng.standard_normal((2,) + g.shape), 1.7)
    back = dimensionalize(nondimensionalize(phys, params), params)
    assert np.allclose(back.rho, phys.rho, rtol=1e-12) and np.allclose(back.u, phys.u, rtol=1e-12)
    assert back.t == pytest.approx(1.7, rel=1e-12) and back.grid.L == pytest.approx(3.0, rel=1e-12)


def test_nonpositive_density_rejected():
    g = Grid(1, 8)
    with pytest.raises(ValueError):
        nondimensionalize(PhysicalState(g, np.zeros(8), np.zeros((1, 8))), NORM)


# --- nonlinear terms -----------------------------------------------------------------

def test_rhs_zero_state():
    f, g_ = nonlinear_rhs(State.zeros(Grid(2, 16)), NORM)
    assert not f.any() and not g_.any()


def test_rhs_without_density_is_advection():
    grid = Grid(2, 64, 2 * math.pi)
    st_ = smooth_state(grid, 1, 1.0, k_hi=6.0)
    st_ = State(grid, np.zeros(grid.shape), st_.u)
    f, g_ = nonlinear_rhs(st_, NORM)
    adv = np.stack([(st_.u * gradient(st_.u[i], grid)).sum(axis=0) for i in range(2)])
    assert np.abs(f).max() < 1e-12
    assert np.abs(g_ + adv).max() < 1e-11 * np.abs(adv).max()


def test_rhs_matches_pointwise_formula():
    # low-mode data on a fine grid: aliasing of the composition terms is negligible
    grid = Grid(2, 64, 2 * math.pi)
    params = FluidParams(mu0=0.25, lam0=0.5, mu1=0.3, lam1=-0.2)
    st_ = smooth_state(grid, 2, 0.1, k_hi=3.0)
    a, u = st_.a, st_.u
    rho = 1 + a
    grad = lambda h: gradient(h, grid)  # noqa: E731
    du = np.stack([grad(u[i]) for i in range(2)])  # du[i, j] = d_j u_i
    div_u = du[0, 0] + du[1, 1]
    lap = np.stack([divergence(du[i], grid) for i in range(2)])
    Au = params.mu0 * lap + (params.lam0 + params.mu0) * grad(div_u)
    k_a = params.pressure_derivative(rho) / rho - 1
    mu_t, lam_t = params.mu1 * a, params.lam1 * a
    visc = np.stack(
        [sum(grad(mu_t * (du[i, j] + du[j, i]))[j] for j in range(2)) + grad(lam_t * div_u)[i] for i in range(2)]
    )
    g_ref = -(u[None, :] * du).sum(axis=1) - (a / rho) * Au - k_a * grad(a) + visc / rho
    f_ref = -divergence(a * u, grid)
    f, g_ = nonlinear_rhs(st_, params)
    assert np.abs(f - f_ref).max() < 1e-8 * np.abs(f_ref).max()
    assert np.abs(g_ - g_ref).max() < 1e-8 * np.abs(g_ref).max()


def test_rhs_is_quadratic_in_amplitude():
    grid = Grid(2, 32, 16.0)
    base = smooth_state(grid, 3, 1.0)
    eps = np.array([1e-2, 1e-3, 1e-4])
    sizes = []
    for e in eps:
        f, g_ = nonlinear_rhs(State(grid, e * base.a, e * base.u), NORM)
        sizes.append(np.sqrt((f**2).sum() + (g_**2).sum()))
    order = np.polyfit(np.log(eps), np.log(sizes), 1)[0]
    assert abs(order - 2.0) < 0.1


def test_rhs_density_floor():
    grid = Grid(1, 16)
    a = np.full(16, -0.95)
    with pytest.raises(DensityFloorError) as err:
        nonlinear_rhs(State(grid, a, np.zeros((1, 16))), NORM)
    assert err.value.min_density == pytest.approx(0.05)


def test_rhs_requires_normalized_params():
    with pytest.raises(ValueError):
        nonlinear_rhs(State.zeros(Grid(1, 16)), FluidParams(rho_inf=2.0))


# --- stepping --------------------------------------------------------------------------

def test_step_zero_and_mass():
    grid = Grid(2, 32, 16.0)
    z = step(State.zeros(grid), 0.1, NORM)
    assert not z.a.any() and not z.u.any()
    s = smooth_state(grid, 4, 0.05)
    s = State(grid, s.a + 0.01, s.u)
    mass0 = s.a.sum()
    for _ in range(5):
        s = step(s, 0.1, NORM)
    assert abs(s.a.sum() - mass0) <= 1e-10 * np.abs(s.a).sum()


def test_step_linear_limit():
    grid = Grid(2, 32, 16.0)
    base = smooth_state(grid, 5, 1.0)
    devs = []
    for e in (1e-3, 1e-4):
        U = State(grid, e * base.a, e * base.u).spectral()
        nl = step(State.from_spectral(U, grid), 0.1, NORM).spectral()
        lin = propagate(SpectralState(grid, U * grid.nyquist_mask), 0.1, NORM.viscosity()).U
        devs.append(np.abs(nl - lin).max())
    assert devs[0] / devs[1] == pytest.approx(100, rel=0.05)


def test_time_step_convergence_fourth_order():
    grid = Grid(2, 32, 16.0)
    init = smooth_state(grid, 6, 0.02)
    bank = build_filter_bank(grid, 0)
    dts = (0.2, 0.1, 0.05, 0.025)
    finals = [simulate(init, SolverConfig(t_end=2.0, dt=dt), NORM, bank).final.spectral() for dt in dts]
    diffs = [np.abs(x - y).max() for x, y in zip(finals, finals[1:])]
    for coarse, fine in zip(diffs, diffs[1:]):
        assert coarse / fine == pytest.approx(16.0, rel=0.1)


def test_simulate_zero_data():
    grid = Grid(2, 16, 8.0)
    tr = simulate(State.zeros(grid), SolverConfig(t_end=1.0, record_every=0.25), NORM, build_filter_bank(grid, 0))
    assert len(tr.times) == 5 and not np.any(tr.l2)
    assert all(not np.any(tr.history.table(name)) for name in ("a", "u"))


def test_linear_regime_run_matches_propagator():
    grid = Grid(2, 64, 32.0)
    bank = build_filter_bank(grid, 0)
    init = smooth_state(grid, 7, 1e-4)
    tr = simulate(init, SolverConfig(t_end=4.0, record_every=1.0), NORM, bank)
    U0 = init.spectral() * grid.nyquist_mask
    for t, l2 in zip(tr.times, tr.l2):
        V = propagate(SpectralState(grid, U0), t, NORM.viscosity()).U
        V[(slice(None),) + (0,) * grid.d] = 0
        assert l2 == pytest.approx(parseval_l2(V, grid), rel=5e-3)


def test_validity_limit_formula():
    assert validity_limit(Grid(2, 16, 256.0), 8.0, 0.1) == pytest.approx((128 - 8) / 1.1)


# --- effective velocity and damped transport -------------------------------------------

def test_effective_velocity_cases():
    grid = Grid(2, 64, 20.0)
    rng = np.random.default_rng(8)
    u = band_limited_random(grid, 0.2, 3.0, rng, components=2)
    w = effective_velocity(State(grid, divergence(u, grid), u))
    assert np.abs(w).max() < 1e-12 * np.abs(u).max()
    a = band_limited_random(grid, 0.2, 3.0, rng)
    w = effective_velocity(State(grid, a, np.zeros_like(u)))
    expected = gradient(lambda_power(a, -2.0, grid), grid)
    assert np.abs(w - expected).max() < 1e-10 * np.abs(expected).max()


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_effective_velocity_identity(seed):
    grid = Grid(2, 32, 10.0)
    s = smooth_state(grid, seed, 1.0, k_hi=4.0)
    assert effective_velocity_defect(s.spectral(), grid) < 1e-10


def test_effective_velocity_warns_on_mean():
    grid = Grid(1, 16)
    with pytest.warns(RuntimeWarning):
        effective_velocity(State(grid, np.ones(16), np.zeros((1, 16))))


def test_damped_transport_residual_second_order():
    grid = Grid(2, 32, 16.0)
    s0 = smooth_state(grid, 9, 0.1)

    def advance(h, substeps=16):
        s = s0
        for _ in range(substeps):
            s = step(s, h / substeps, NORM)
        return s

    norms = [np.sqrt((damped_transport_residual(s0, advance(h)) ** 2).mean()) for h in (0.02, 0.01)]
    assert norms[0] / norms[1] == pytest.approx(4.0, rel=0.1)
    z = State.zeros(grid)
    assert not damped_transport_residual(z, State(grid, z.a, z.u, 0.1)).any()


def test_damped_transport_flux_is_quadratic():
    grid = Grid(2, 32, 16.0)
    base = smooth_state(grid, 10, 1.0)
    sizes = []
    for e in (1e-2, 1e-3):
        s0 = State(grid, e * base.a, e * base.u)
        s1 = step(s0, 1e-3, NORM)
        sizes.append(np.abs(damped_transport_residual(s0, s1, include_flux=False)).max())
    assert math.log10(sizes[0] / sizes[1]) == pytest.approx(2.0, abs=0.1)


# --- initial data --------------------------------------------------------------------------

@pytest.fixture(scope="module")
def grid_bank():
    grid = Grid(2, 128, 64.0)
    return grid, build_filter_bank(grid, 0)


def test_initial_data_homogeneous(grid_bank):
    grid, bank = grid_bank
    _, X0, D0 = make_initial_data(InitialDataSpec(amplitude=0.0), grid, bank)
    assert X0 == 0 and D0 == 0
    _, X1, D1 = make_initial_data(InitialDataSpec(amplitude=0.01, seed=3), grid, bank)
    _, X2, D2 = make_initial_data(InitialDataSpec(amplitude=0.02, seed=3), grid, bank)
    assert X2 == pytest.approx(2 * X1, rel=1e-12) and D2 == pytest.approx(2 * D1, rel=1e-12)


@pytest.mark.parametrize("kind", ["gaussian-bumps", "band-limited-random"])
def test_initial_data_hits_target(grid_bank, kind):
    grid, bank = grid_bank
    state, X0, _ = make_initial_data(InitialDataSpec(kind=kind, target_X=0.01, seed=1), grid, bank)
    assert X0 == pytest.approx(0.01, rel=0.01)
    # compact: negligible mass outside the support radius around the centre
    r = np.sqrt(sum((x - grid.L / 2) ** 2 for x in grid.coordinates()))
    assert np.abs(state.a[r > 2 * 8.0]).max() < 1e-6 * np.abs(state.a).max()


def test_initial_data_errors(grid_bank):
    grid, bank = grid_bank
    with pytest.raises(ValueError):
        make_initial_data(InitialDataSpec(support_radius=20.0), grid, bank)
    with pytest.raises(ValueError):
        make_initial_data(InitialDataSpec(amplitude=0.0, target_X=0.1), grid, bank)
    with pytest.raises(ValueError):
        InitialDataSpec(kind="vortex")
    with pytest.raises(DensityFloorError):
        make_initial_data(InitialDataSpec(amplitude=50.0, seed=2), grid, bank)


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(scheme="euler")
    with pytest.raises(ValueError):
        SolverConfig(dt=0.0)
    assert SolverConfig().resolve_dt(Grid(1, 16, 16.0), 1.0) == pytest.approx(0.125)

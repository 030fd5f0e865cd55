import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from besovlab.fields import band_limited_random
from besovlab.fitting import japanese
from besovlab.grid import Grid, fft
from besovlab.littlewood_paley import BesovIndex, block_norms_hat, build_filter_bank
from besovlab.paradiff import leray_project
from besovlab.semigroup import (
    RadialState,
    SpectralState,
    ViscosityParams,
    acoustic_block_eigen,
    acoustic_matrix,
    lame_propagate,
    linear_decay_experiment,
    lowfreq_envelope_check,
    propagate,
)
NU1 = ViscosityParams(0.25, 0.5)


def random_state(grid, seed, k_hi=3.0):
    rng = np.random.default_rng(seed)
    a = band_limited_random(grid, 0.05, k_hi, rng)
    u = band_limited_random(grid, 0.05, k_hi, rng, components=grid.d)
    return SpectralState.from_fields(a, u, grid)


def test_eigen_closed_forms():
    b = acoustic_block_eigen(1.0, NU1)
    assert b.lam_plus == pytest.approx(complex(-0.5, math.sqrt(3) / 2), abs=1e-14)
    assert b.lam_minus == pytest.approx(complex(-0.5, -math.sqrt(3) / 2), abs=1e-14)
    assert not b.degenerate
    b = acoustic_block_eigen(2.0, NU1)
    assert b.degenerate and b.lam_plus == pytest.approx(-2.0) and b.lam_minus == pytest.approx(-2.0)
    b = acoustic_block_eigen(0.0, NU1)
    assert b.lam_plus == 0 and b.lam_minus == 0


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 5.0), st.floats(0.0, 20.0), st.floats(0.3, 3.0))
def test_acoustic_matrix_matches_expm(r, t, nu):
    # the pair (a, v) with v = xi.u/|xi| obeys a' = -i r v, v' = -i r a - nu r^2 v
    M = np.array([[0.0, -1j * r], [-1j * r, -nu * r**2]])
    assert np.allclose(acoustic_matrix(r, t, nu), expm(t * M), atol=1e-10, rtol=1e-9)


def test_degenerate_neighbourhood_is_continuous():
    for r in (2.0 - 1e-9, 2.0, 2.0 + 1e-9):
        M = np.array([[0.0, -1j * r], [-1j * r, -(r**2)]])
        assert np.allclose(acoustic_matrix(r, 3.0, 1.0), expm(3.0 * M), atol=1e-10)


def test_propagate_identity_and_negative_time():
    g = Grid(2, 32, 20.0)
    U = random_state(g, 0)
    assert np.allclose(propagate(U, 0.0, NU1).U, U.U, atol=1e-15)
    with pytest.raises(ValueError):
        propagate(U, -1.0, NU1)


def test_semigroup_law_and_realness():
    g = Grid(2, 64, 20.0)
    U = random_state(g, 1)
    twice = propagate(propagate(U, 0.7, NU1), 1.3, NU1).U
    once = propagate(U, 2.0, NU1).U
    assert np.abs(twice - once).max() <= 1e-10 * np.abs(once).max()
    a, u = propagate(U, 2.0, NU1).to_fields()
    assert np.allclose(fft(a), once[0], atol=1e-14)


def test_heat_mode_exact():
    g = Grid(2, 64, 20.0)
    rng = np.random.default_rng(2)
    u = leray_project(band_limited_random(g, 0.05, 3.0, rng, components=2), g)
    U = SpectralState.from_fields(np.zeros(g.shape), u, g)
    out = propagate(U, 1.5, NU1).U
    expected = np.exp(-NU1.mu * g.kmag_odd**2 * 1.5) * U.U[1:]
    assert np.abs(out[1:] - expected).max() <= 1e-12 * np.abs(expected).max()
    assert np.abs(out[0]).max() < 1e-14


def test_single_acoustic_mode_envelope():
    t = np.linspace(0, 20, 201)
    amp = np.array([np.linalg.norm(acoustic_matrix(1.0, tt, 1.0) @ [1.0, 0.0]) for tt in t])
    a = np.array([(acoustic_matrix(1.0, tt, 1.0) @ [1.0, 0.0])[0].real for tt in t])
    ratio = amp * np.exp(t / 2)
    assert ratio.max() <= math.sqrt(2) + 1e-9 and ratio.min() >= math.sqrt(2 / 3) - 1e-9
    # first zero of the density component: tan(w t) = -2w with frequency w = sqrt(3)/2
    w = math.sqrt(3) / 2
    zero = (math.pi - math.atan(2 * w)) / w
    i = int(np.argmax(np.sign(a[1:]) != np.sign(a[:-1])))
    assert t[i] <= zero <= t[i + 1]


def test_envelope_criteria_and_trivial_cases():
    t = np.linspace(0, 100, 401)
    xi = np.linspace(0, 1, 200)
    env = lowfreq_envelope_check(0, t, xi, NU1)
    assert env.c0 >= 0.4 and env.C <= 10
    C, c0 = lowfreq_envelope_check(0, [0.0], xi, NU1)
    assert C == pytest.approx(1.0)
    heat = lowfreq_envelope_check(0, t, xi, NU1, modes="heat")
    assert heat.C == pytest.approx(1.0) and heat.c0 >= NU1.mu * (1 - 1e-6)
    with pytest.raises(ValueError):
        lowfreq_envelope_check(0, [], xi, NU1)
    with pytest.raises(ValueError):
        lowfreq_envelope_check(0, t, [1.5], NU1)


@pytest.mark.parametrize("k0", [-2, -1, 0])
def test_envelope_positive_below_degeneracy(k0):
    env = lowfreq_envelope_check(k0, np.linspace(0, 50, 201), np.linspace(0, 2.0**k0, 50), NU1)
    assert env.c0 > 0


def test_block_decay_obeys_envelope():
    g = Grid(2, 128, 64.0)
    bank = build_filter_bank(g, 0)
    U = random_state(g, 3, k_hi=2.0)
    C, c0 = lowfreq_envelope_check(1, np.linspace(0, 20, 81), np.linspace(0, 2, 100), NU1)
    b0 = block_norms_hat(U.U, 2.0, bank)
    for t in (1.0, 5.0, 20.0):
        bt = block_norms_hat(propagate(U, t, NU1).U, 2.0, bank)
        for k, x0, xt in zip(bank.ks, b0, bt):
            if k <= 0 and x0 > 0:
                assert xt <= C * math.exp(-(c0 / 4) * 4.0**k * t) * x0 * (1 + 1e-9)


def test_lame_max_regularity_constant_stable():
    g = Grid(2, 64, 32.0)
    rng = np.random.default_rng(4)
    uh = fft(band_limited_random(g, 0.1, 4.0, rng, components=2), 2)
    bank = build_filter_bank(g, 0)
    consts = []
    for T in (1.0, 10.0, 100.0):
        t = np.linspace(0, T, 2001)
        lap = np.stack([np.abs(lame_propagate(uh, tt, NU1, g)) * g.kmag_odd**2 for tt in t])
        per_block = [np.trapezoid([np.sqrt((bank.phi_k(int(k)) ** 2 * x**2).sum()) for x in lap], t) for k in bank.ks]
        consts.append(sum(per_block) / sum(block_norms_hat(uh, 2.0, bank)))
    assert max(consts) / min(consts) < 2


def test_linear_decay_radial_targets():
    t = np.concatenate([[0.0], np.geomspace(1e-2, 100, 300)])
    e = linear_decay_experiment(RadialState.gaussian(3), None, 1.5, t, window=(10, 100))
    assert e.target == 0.75 and e.passed
    e = linear_decay_experiment(RadialState.gaussian(3), BesovIndex(2.0, 2.0, 1.0, "low"), 1.5, t, window=(10, 100))
    assert e.target == 1.75 and e.passed
    e = linear_decay_experiment(RadialState.gaussian(2), None, 1.0, t, window=(10, 100))
    assert e.target == 0.5 and e.passed
    with pytest.raises(ValueError):
        linear_decay_experiment(RadialState.gaussian(2), BesovIndex(-1.0, 2.0, 1.0, "low"), 1.0, t)


def test_japanese_bracket():
    assert japanese(0.0) == 1.0
    assert japanese(3.0) == pytest.approx(math.sqrt(10))

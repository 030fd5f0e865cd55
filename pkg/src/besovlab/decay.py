"""Decay functionals, rate checks and the rescaling identity.

The time-weighted functionals are assembled from :class:`BlockHistory`
tables, so they can be evaluated after a run without keeping snapshots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .fitting import DecayEntry, FitError, fit_exponent, japanese
from .grid import Grid, RangeError, fft
from .history import BlockHistory, block_table
from .littlewood_paley import DyadicFilterBank, build_filter_bank, lp_norm
from .paradiff import lambda_power
from .solver import FluidParams, PhysicalState, State, nondimensionalize


@dataclass(frozen=True)
class DecayIndices:
    p: float
    d: int
    epsilon: float
    s0: float
    alpha: float
    s_samples: tuple[float, ...]


def p_admissible(p: float, d: int) -> bool:
    upper = 4.0 if d <= 2 else min(4.0, 2 * d / (d - 2))
    return d >= 2 and 2 <= p <= upper and not (d == 2 and p == 4)


def compute_indices(p: float, d: int, epsilon: float = 0.01, s_samples=None) -> DecayIndices:
    if not p_admissible(p, d):
        raise ValueError(f"p={p} not admissible in dimension {d}: need 2 <= p <= min(4, 2d/(d-2)) and p != 4 when d = 2")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    s0 = d * (2.0 / p - 0.5)
    alpha = s0 / 2 + min(2.0, d / 4 + 0.5 - epsilon)
    if alpha < 1:
        # only reachable for d = 2 with p close to 4, where s0/2 < epsilon
        raise ValueError(f"alpha = {alpha:g} < 1 for p={p}, d={d}, epsilon={epsilon}; take epsilon <= s0/2 = {s0 / 2:g}")
    if s_samples is None:
        s_samples = (-s0 + 0.25, 0.0, 1.0, 2.0)
    kept = tuple(sorted({float(s) for s in s_samples if -s0 < s <= 2}))
    if not kept:
        raise ValueError("no s sample inside (-s0, 2]")
    return DecayIndices(p, d, epsilon, s0, alpha, kept)


# --- functionals from block tables --------------------------------------

def _weights(ks, s):
    return 2.0 ** (s * np.asarray(ks, dtype=float))


def _mask(bank: DyadicFilterBank, restriction: str, zeta: float = 1.0):
    return np.isin(bank.ks, bank.block_range(restriction, zeta))


def _running_sup(x: np.ndarray) -> np.ndarray:
    return np.maximum.accumulate(x, axis=0) if len(x) else x


def _running_integral(x: np.ndarray, t: np.ndarray) -> np.ndarray:
    if len(t) < 2:
        return np.zeros_like(x)
    steps = 0.5 * (x[1:] + x[:-1]) * np.diff(t)[:, None]
    return np.concatenate([np.zeros((1,) + x.shape[1:]), np.cumsum(steps, axis=0)])


def functional_Xp_series(hist: BlockHistory, idx: DecayIndices, bank: DyadicFilterBank) -> np.ndarray:
    """X_p over [0, t_i] for every recorded t_i."""
    d, p = idx.d, idx.p
    t = hist.t
    if len(t) == 0:
        return np.zeros(0)
    low, high = _mask(bank, "low"), _mask(bank, "high")
    a2, u2 = hist.table("a", 2.0), hist.table("u", 2.0)
    ap, up = hist.table("a", p), hist.table("u", p)
    pair_low = (a2 + u2)[:, low]
    ks_l, ks_h = bank.ks[low], bank.ks[high]
    term1 = (_running_sup(a2[:, low]) + _running_sup(u2[:, low])) @ _weights(ks_l, d / 2 - 1)
    term2 = _running_integral(pair_low, t) @ _weights(ks_l, d / 2 + 1)
    term3 = _running_sup(ap[:, high]) @ _weights(ks_h, d / p) + _running_integral(ap[:, high], t) @ _weights(ks_h, d / p)
    term4 = _running_sup(up[:, high]) @ _weights(ks_h, d / p - 1) + _running_integral(up[:, high], t) @ _weights(ks_h, d / p + 1)
    return term1 + term2 + term3 + term4


def functional_Xp(hist: BlockHistory, idx: DecayIndices, bank: DyadicFilterBank) -> float:
    series = functional_Xp_series(hist, idx, bank)
    return float(series[-1]) if series.size else 0.0


@dataclass
class DpTerms:
    """Running values of the three parts of D_p, one entry per recorded time."""

    times: np.ndarray
    low: np.ndarray
    low_by_s: dict[float, np.ndarray]
    high_alpha: np.ndarray
    high_grad: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.low + self.high_alpha + self.high_grad


def dp_terms(hist: BlockHistory, idx: DecayIndices, bank: DyadicFilterBank) -> DpTerms:
    """Time-weighted sups forming D_p, evaluated as running maxima.

    The low part is an L^infinity-in-time norm (sup of the dyadic sum); the two
    high parts are Chemin-Lerner norms (sup per block, then the sum).
    """
    d, p = idx.d, idx.p
    t = hist.t
    jt = japanese(t)
    low, high = _mask(bank, "low"), _mask(bank, "high")
    a2, u2 = hist.table("a", 2.0), hist.table("u", 2.0)
    by_s = {}
    for s in idx.s_samples:
        inst = (a2[:, low] + u2[:, low]) @ _weights(bank.ks[low], s)
        by_s[s] = _running_sup(jt ** ((idx.s0 + s) / 2) * inst)
    low_total = np.max(np.stack(list(by_s.values())), axis=0) if by_s else np.zeros_like(t)
    ga, up, gu = hist.table("grad_a", p), hist.table("u", p), hist.table("grad_u", p)
    ks_h = bank.ks[high]
    weighted = (jt**idx.alpha)[:, None]
    high_alpha = (_running_sup(weighted * ga[:, high]) + _running_sup(weighted * up[:, high])) @ _weights(ks_h, d / p - 1)
    high_grad = _running_sup(t[:, None] * gu[:, high]) @ _weights(ks_h, d / p)
    return DpTerms(t, low_total, by_s, high_alpha, high_grad)


def functional_Dp(hist: BlockHistory, idx: DecayIndices, bank: DyadicFilterBank, t: float | None = None) -> float:
    terms = dp_terms(hist, idx, bank)
    if len(terms.times) == 0:
        return 0.0
    if t is None:
        return float(terms.total[-1])
    if t < terms.times[0] - 1e-12 or t > terms.times[-1] + 1e-12:
        raise ValueError(f"t={t} outside the recorded span [{terms.times[0]}, {terms.times[-1]}]")
    i = int(np.searchsorted(terms.times, t + 1e-12, side="right")) - 1
    return float(terms.total[max(i, 0)])


# --- reports ---------------------------------------------------------------

@dataclass
class DecayReport:
    entries: list[DecayEntry] = field(default_factory=list)
    rejected: list[tuple[str, str]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def lines(self) -> list[str]:
        out = []
        for e in self.entries:
            status = "PASS" if e.passed else "FAIL"
            out.append(
                f"{status} {e.norm_id}: exponent {e.exponent:.4f} vs target {e.target:.4f} "
                f"(tol {e.tolerance}, window [{e.window[0]:.3g}, {e.window[1]:.3g}], r2 {e.r2:.5f})"
            )
        out += [f"REJECTED {label}: {why}" for label, why in self.rejected]
        out += [f"NOTE {n}" for n in self.notes]
        return out


def lr_pair_admissible(ell: float, r: float, d: int) -> tuple[bool, str]:
    """Constraint -d/2 < ell + d(1/2 - 1/r) < min(2, d/2 - 1), echoed when violated."""
    inv_r = 0.0 if math.isinf(r) else 1.0 / r
    val = ell + d * (0.5 - inv_r)
    upper = min(2.0, d / 2 - 1)
    ok = -d / 2 < val < upper and r >= 2
    why = f"need -{d / 2:g} < ell + d(1/2 - 1/r) = {val:g} < min(2, d/2 - 1) = {upper:g} with r >= 2"
    return ok, why


def lr_pair_theta(ell: float, r: float, d: int, eps: float = 0.01) -> tuple[float, float, float]:
    """(theta, m, k) of the interpolation behind the L^r rate, with q = 2."""
    m = min(2.0, d / 2 - 1)
    k = -d / 2 + eps
    inv_r = 0.0 if math.isinf(r) else 1.0 / r
    theta = (m - ell - d * (0.5 - inv_r)) / (m - k)
    return theta, m, k


@dataclass
class RatePlan:
    """Which fractional norms to track along a run, and how to fit them.

    ``s_values`` are the L^p regularities for a and u; ``lr_pairs`` the
    (ell, r) choices for the L^r rates (p = 2 data).  Inadmissible requests
    are kept and flagged rather than dropped.
    """

    indices: DecayIndices
    s_values: tuple[float, ...] = (0.0,)
    lr_pairs: tuple[tuple[float, float], ...] = ()

    def labels(self) -> list[tuple[str, str, float, float, float]]:
        """(label, field, ell, lebesgue exponent, target)."""
        idx, d = self.indices, self.indices.d
        out = []
        for s in self.s_values:
            tgt = (idx.s0 + s) / 2
            out.append((f"Lambda^{s:g} a in L^{idx.p:g}", "a", s, idx.p, tgt))
            out.append((f"Lambda^{s:g} u in L^{idx.p:g}", "u", s, idx.p, tgt))
        for ell, r in self.lr_pairs:
            inv_r = 0.0 if math.isinf(r) else 1.0 / r
            out.append((f"Lambda^{ell:g} (a,u) in L^{r:g}", "au", ell, r, d / 2 * (1 - inv_r) + ell / 2))
        return out

    def probe(self, t: float, state: State) -> dict:
        row = {}
        grid = state.grid
        for label, which, ell, q, _ in self.labels():
            if which == "au":
                a = lambda_power(state.a - state.a.mean(), ell, grid)
                u = np.stack([lambda_power(c - c.mean(), ell, grid) for c in state.u])
                row[label] = lp_norm(a, q, grid) + lp_norm(u, q, grid)
            elif which == "a":
                row[label] = lp_norm(lambda_power(state.a - state.a.mean(), ell, grid), q, grid)
            else:
                row[label] = lp_norm(np.stack([lambda_power(c - c.mean(), ell, grid) for c in state.u]), q, grid)
        return row


def derived_rates_check(
    rows: list[dict],
    plan: RatePlan,
    window: tuple[float, float],
    tolerance: float = 0.1,
    valid: np.ndarray | None = None,
) -> DecayReport:
    """Fit every tracked norm over ``window`` and compare with its predicted rate."""
    idx, d = plan.indices, plan.indices.d
    report = DecayReport()
    if window[1] < 10 * window[0] * (1 - 1e-9):
        raise ValueError("the fit window must span at least one decade")
    t = np.array([r["t"] for r in rows])
    keep = np.ones(t.size, bool) if valid is None else np.asarray(valid, bool)
    for label, which, ell, q, target in plan.labels():
        if which == "au":
            ok, why = lr_pair_admissible(ell, q, d)
            if not ok or idx.p != 2:
                report.rejected.append((label, why if not ok else "the L^r rates assume p = 2"))
                continue
            theta, m, k = lr_pair_theta(ell, q, d, idx.epsilon)
            balance = d / 4 + m / 2 * (1 - theta) + k / 2 * theta
            if not 0 < theta < 1 or abs(balance - target) > 1e-12:
                report.rejected.append((label, f"interpolation exponents do not balance (theta={theta:.4g})"))
                continue
        else:
            cap = min(2.0, d / idx.p) if which == "a" else min(2.0, d / idx.p - 1)
            if not -idx.s0 < ell <= cap:
                report.rejected.append((label, f"need -{idx.s0:g} < s <= {cap:g}"))
                continue
        vals = np.array([r[label] for r in rows])
        try:
            beta, r2 = fit_exponent(t[keep], vals[keep], window)
        except FitError as exc:
            report.rejected.append((label, str(exc)))
            continue
        report.entries.append(DecayEntry(label, beta, target, tolerance, window, r2, t, vals, ell, q, 2.0, "full"))
    return report


# --- interpolation, convolution -------------------------------------------

def gn_theta(ell: float, m: float, k: float, q: float, r: float, d: int) -> float:
    if not 1 <= q <= r:
        raise ValueError("need 1 <= q <= r")
    inv_r = 0.0 if math.isinf(r) else 1.0 / r
    lhs = ell + d * (1.0 / q - inv_r)
    if m == k:
        if abs(lhs - m) > 1e-12:
            raise ValueError(f"no admissible theta: ell + d(1/q - 1/r) = {lhs:g} but m = k = {m:g}")
        return 0.0
    theta = (m - lhs) / (m - k)
    if not -1e-12 <= theta <= 1 + 1e-12:
        raise ValueError(f"no admissible theta in [0, 1] (got {theta:g})")
    return min(max(theta, 0.0), 1.0)


def gn_ratio(f: np.ndarray, grid: Grid, ell: float, m: float, k: float, q: float, r: float) -> float:
    """||Lambda^ell f||_{L^r} / (||Lambda^m f||_{L^q}^(1-theta) ||Lambda^k f||_{L^q}^theta)."""
    theta = gn_theta(ell, m, k, q, r, grid.d)
    if min(ell, m, k) < 0:
        f = f - f.mean()
    num = lp_norm(lambda_power(f, ell, grid), r, grid)
    den_m = lp_norm(lambda_power(f, m, grid), q, grid)
    den_k = lp_norm(lambda_power(f, k, grid), q, grid)
    den = den_m ** (1 - theta) * den_k**theta
    return num / den if den > 0 else math.nan


def convolution_integral(t: float, sigma1: float, sigma2: float) -> float:
    """int_0^t <t - tau>^-sigma1 <tau>^-sigma2 dtau by adaptive quadrature on four pieces."""
    if t <= 0:
        return 0.0

    def f(tau):
        return (1 + (t - tau) ** 2) ** (-sigma1 / 2) * (1 + tau**2) ** (-sigma2 / 2)

    cuts = sorted({0.0, min(1.0, t / 2), t / 2, max(t / 2, t - 1.0), t})
    return float(sum(quad(f, a, b, limit=200, epsabs=0.0, epsrel=1e-12)[0] for a, b in zip(cuts[:-1], cuts[1:])))


@dataclass
class ConvolutionCheck:
    sigma1: float
    sigma2: float
    t_max: float
    sup_ratio: float
    sup_ratio_extended: float
    conforming: bool
    growth: float
    stable: bool
    flagged: bool


def convolution_sup(sigma1: float, sigma2: float, t_max: float, n_t: int = 200) -> float:
    ts = np.concatenate([[0.0], np.geomspace(1e-2, t_max, n_t)])
    return max(convolution_integral(t, sigma1, sigma2) * float(japanese(t)) ** sigma1 for t in ts)


def convolution_kernel_check(sigma1: float, sigma2: float, t_max: float, n_t: int = 200, growth_tol: float = 1.05) -> ConvolutionCheck:
    """Sup over t <= t_max of the kernel integral divided by <t>^-sigma1.

    The sup is recomputed with t_max x 10; ``growth`` is the ratio of the two.
    Stable means growth <= ``growth_tol``.  Pairs outside 0 < sigma1 <= sigma2,
    sigma2 > 1 are still evaluated and flagged.
    """
    if not sigma1 > 0:
        raise ValueError("sigma1 must be positive")
    conforming = sigma1 <= sigma2 and sigma2 > 1
    base = convolution_sup(sigma1, sigma2, t_max, n_t)
    ext = convolution_sup(sigma1, sigma2, 10 * t_max, n_t)
    growth = ext / base
    stable = growth <= growth_tol
    return ConvolutionCheck(sigma1, sigma2, t_max, base, ext, conforming, growth, stable, (not conforming) or not stable)


# --- rescaling identity ------------------------------------------------------

def _rescaled_parts(U: np.ndarray, bank: DyadicFilterBank, idx: DecayIndices, zeta: float, factors: dict, t_weight: float, tau: float) -> dict:
    """Weighted D_p ingredients of one snapshot with thresholds zeta 2^k0 and zeta 2^(k0-1)."""
    d, p = idx.d, idx.p
    t2 = block_table(U, bank, 2.0)
    tp = t2 if p == 2 else block_table(U, bank, p)
    low, high = _mask(bank, "low", zeta), _mask(bank, "high", zeta)
    out = {}
    for s in idx.s_samples:
        pieces = (t2["a"][low] + factors["u_low"] * t2["u"][low]) @ _weights(bank.ks[low], s)
        out[f"low s={s:g}"] = t_weight ** ((idx.s0 + s) / 2) * factors["low"](s) * pieces
    ks_h = bank.ks[high]
    pieces = (factors["grad_a"] * tp["grad_a"][high] + factors["u_high"] * tp["u"][high]) @ _weights(ks_h, d / p - 1)
    out["high alpha"] = t_weight**idx.alpha * pieces
    out["high grad"] = tau * factors["grad_u"] * (tp["grad_u"][high] @ _weights(ks_h, d / p))
    return out


def rescale_identity_check(traj_physical: list[PhysicalState], params: FluidParams, idx: DecayIndices, k0: int = 0) -> float:
    """Max relative gap between the D_p pieces of the normalized run and their physical form.

    With X = nu/(rho_inf c) and T = nu/(rho_inf c^2), a block of z(X .) on the
    normalized grid is X^(-d/p) times the physical block 2^k / X.  The physical
    side therefore uses thresholds moved by zeta = 1/X, time weights <t/T>,
    the factor X^(s - d/2) on the low part and 1/(c X) on the high part of u;
    the grad a and tau grad u pieces carry no factor.  Exact when log2 X is an
    integer.
    """
    if not traj_physical:
        return 0.0
    d = idx.d
    X, T, c = params.length_scale, params.time_scale, params.c_inf
    g_phys = traj_physical[0].grid
    shift = math.log2(1.0 / X)
    # any in-range k0 for the physical bank; the threshold itself is carried by zeta
    k0_phys = min(max(round(k0 + shift), g_phys.k_min + 1), g_phys.k_max - 1)
    zeta = 2.0 ** (k0 + shift - k0_phys)
    bank_phys = build_filter_bank(g_phys, k0_phys)
    if k0 + shift - 1 < g_phys.k_min or k0 + shift > g_phys.k_max:
        raise RangeError(f"rescaled threshold 2^{k0 + shift:g} is not resolved on the physical grid")
    bank_norm = None
    unit = {"low": lambda s: 1.0, "u_low": 1.0, "grad_a": 1.0, "u_high": 1.0, "grad_u": 1.0}
    phys_f = {"low": lambda s: X ** (s - d / 2), "u_low": 1.0 / c, "grad_a": 1.0, "u_high": 1.0 / (c * X), "grad_u": 1.0}
    worst = 0.0
    for phys in traj_physical:
        norm_state = nondimensionalize(phys, params)
        if bank_norm is None:
            bank_norm = build_filter_bank(norm_state.grid, k0)
        lhs = _rescaled_parts(norm_state.spectral(), bank_norm, idx, 1.0, unit, float(japanese(norm_state.t)), norm_state.t)
        a_phys = phys.rho / params.rho_inf - 1.0
        U_phys = fft(np.concatenate([a_phys[None], phys.u]), d)
        rhs = _rescaled_parts(U_phys, bank_phys, idx, zeta, phys_f, float(japanese(phys.t / T)), phys.t)
        for key, val in lhs.items():
            scale = max(abs(val), abs(rhs[key]))
            if scale > 0:
                worst = max(worst, abs(val - rhs[key]) / scale)
    return worst

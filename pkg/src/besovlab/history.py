"""Per-block norm records along a trajectory.

Everything the decay functionals need can be rebuilt from the dyadic block
norms of a, u, grad a and grad u at a few Lebesgue exponents, so a run stores
only those tables (one row per recorded time), not the fields themselves.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, ifft
from .littlewood_paley import DyadicFilterBank, lp_norm

FIELDS = ("a", "u", "grad_a", "grad_u")


def _stacks(U: np.ndarray, grid: Grid) -> dict[str, np.ndarray]:
    """Spectral stacks (components first) for each recorded field."""
    ks = grid.wavevector_odd
    a, u = U[0], U[1:]
    grad_a = np.stack([1j * k * a for k in ks])
    grad_u = np.stack([1j * k * u[i] for i in range(grid.d) for k in ks])
    return {"a": a[None], "u": u, "grad_a": grad_a, "grad_u": grad_u}


def _power(stack: np.ndarray, grid: Grid) -> np.ndarray:
    return (np.abs(stack) ** 2).sum(axis=0) * grid.rfft_weights


def block_table(U: np.ndarray, bank: DyadicFilterBank, p: float) -> dict[str, np.ndarray]:
    """Block norms ||Delta_k z||_{L^p} for z in a, u, grad a, grad u.

    The zero mode never enters a dyadic block, so these are mean-free by
    construction.
    """
    grid = bank.grid
    out = {}
    for name, stack in _stacks(U, grid).items():
        if p == 2:
            power = _power(stack, grid)
            out[name] = np.array([np.sqrt((power * bank._phi[int(k)] ** 2).sum() * grid.volume) for k in bank.ks])
        else:
            vals = []
            for k in bank.ks:
                phys = ifft(bank._phi[int(k)] * stack, grid)
                vals.append(lp_norm(phys if phys.shape[0] > 1 else phys[0], p, grid))
            out[name] = np.array(vals)
    return out


@dataclass
class BlockHistory:
    ks: np.ndarray
    p_values: tuple[float, ...] = (2.0,)
    times: list[float] = field(default_factory=list)
    data: dict[tuple[str, float], list[np.ndarray]] = field(default_factory=dict)

    def record(self, t: float, U: np.ndarray, bank: DyadicFilterBank):
        self.times.append(float(t))
        for p in self.p_values:
            for name, row in block_table(U, bank, p).items():
                self.data.setdefault((name, p), []).append(row)

    def table(self, name: str, p: float = 2.0) -> np.ndarray:
        """(n_times, n_blocks) array of block norms."""
        if (name, p) not in self.data:
            if not self.times:
                return np.zeros((0, self.ks.size))
            raise KeyError(f"no record of {name} at p={p}; recorded exponents: {self.p_values}")
        return np.array(self.data[(name, p)])

    @property
    def t(self) -> np.ndarray:
        return np.asarray(self.times)

    def __len__(self):
        return len(self.times)

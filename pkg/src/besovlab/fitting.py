"""Power-law fits against the Japanese bracket <t> = sqrt(1 + t^2)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class FitError(ValueError):
    pass


def japanese(t):
    return np.sqrt(1.0 + np.asarray(t, dtype=float) ** 2)


def fit_exponent(times, values, window: tuple[float, float] | None = None, min_points: int = 5) -> tuple[float, float]:
    """Least-squares decay exponent beta in values ~ <t>^-beta, with the fit's r^2.

    Only samples with window[0] <= t <= window[1] are used.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if window is not None:
        keep = (t >= window[0]) & (t <= window[1])
        t, v = t[keep], v[keep]
    if t.size < min_points:
        raise FitError(f"fit window holds {t.size} samples, need at least {min_points}")
    if np.any(~np.isfinite(v)) or np.any(v <= 0):
        raise FitError("values must be finite and positive for a log-log fit")
    x, y = np.log(japanese(t)), np.log(v)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 if ss_tot == 0 else 1.0 - np.sum(resid**2) / ss_tot
    return float(-slope), float(r2)


def last_decade(t_end: float) -> tuple[float, float]:
    return (t_end / 10.0, t_end)


@dataclass
class DecayEntry:
    """One fitted norm: exponent, target and the data behind it."""

    norm_id: str
    exponent: float
    target: float
    tolerance: float
    window: tuple[float, float]
    r2: float
    times: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    s: float = float("nan")
    p: float = 2.0
    r: float = 1.0
    restriction: str = "full"
    note: str = ""

    @property
    def gap(self) -> float:
        return abs(self.exponent - self.target)

    @property
    def passed(self) -> bool:
        return bool(self.gap <= self.tolerance)

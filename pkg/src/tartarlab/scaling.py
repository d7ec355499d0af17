"""Surrogate energy model, parameter optimization and scaling-law fits.

The order-m construction at scale r costs about

    E(m, r, eps) = 2^-m  +  r  +  eps * 2^-m * r^-m

with unit constants.  Minimizing over integer m and dyadic r produces the
stretched-exponential decay exp(-C |log eps|^(1/2)); fixing m instead
leaves a 2^-m plateau.  Sweeps optionally validate points on real grids by
building the laminate and measuring its total energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import DiagMatrix
from .energy import total_energy
from .fields import Grid
from .laminate import LaminateSpec, build

#: search caps; asserted non-binding on the acceptance sweep
M_CAP = 64
P_MAX = 40


def surrogate(m: int, r: float, eps: float) -> float:
    """Compact three-term model energy of the order-m construction."""
    if m < 1 or not float(m).is_integer():
        raise ValueError(f"order must be a positive integer, got {m}")
    if not (0.0 < r < 0.5):
        raise ValueError(f"scale must lie in (0, 1/2), got {r}")
    if eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    try:
        tail = eps * 0.5 ** m * r ** float(-m)
    except OverflowError:
        return math.inf
    return 0.5 ** m + r + tail


def surrogate_full(m: int, r: float, eps: float) -> float:
    """Variant keeping the per-generation cut-off sum explicit.

    For geometric scales the middle sum collapses to r * (1/2 - 2^-m), so
    the two forms differ by a factor bounded by one on that term.
    """
    if m < 1:
        raise ValueError(f"order must be a positive integer, got {m}")
    if not (0.0 < r < 0.5):
        raise ValueError(f"scale must lie in (0, 1/2), got {r}")
    if eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    middle = sum(0.5 ** j * r for j in range(2, m + 1))
    try:
        tail = eps * 0.5 ** m * r ** float(-m)
    except OverflowError:
        return math.inf
    return 0.5 ** m + middle + r + tail


def optimize_params(eps: float, m_cap: int = M_CAP, p_max: int = P_MAX) -> tuple[int, Fraction, float]:
    """Exhaustive surrogate minimization over m and dyadic r.

    Ties break toward the smallest order, then the largest scale, so the
    search is deterministic.
    """
    if not (0.0 < eps < 0.5):
        raise ValueError(f"eps must lie in (0, 1/2), got {eps}")
    best = None
    for m in range(1, m_cap + 1):
        for p in range(2, p_max + 1):
            r = 2.0 ** -p
            value = surrogate(m, r, eps)
            if best is None or value < best[0]:
                best = (value, m, p)
    _, m_opt, p_opt = best
    return m_opt, Fraction(1, 2 ** p_opt), best[0]


@dataclass(frozen=True)
class RateParams:
    """Constants of the two comparison rates."""

    c: float
    C: float
    nu: float

    def __post_init__(self):
        if self.c <= 0 or self.C <= 0:
            raise ValueError("rate constants must be positive")
        if not (0.0 < self.nu < 1.0):
            raise ValueError(f"nu must lie in (0, 1), got {self.nu}")


def rate_functions(eps: float, p: RateParams) -> tuple[float, float]:
    """(r_nu, r) = (exp(-c |log eps|^(1/2+nu)), exp(-C |log eps|^(1/2)))."""
    if not (0.0 < eps < 1.0):
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    t = abs(math.log(eps))
    return math.exp(-p.c * t ** (0.5 + p.nu)), math.exp(-p.C * math.sqrt(t))


@dataclass(frozen=True)
class SweepRecord:
    eps: float
    m_opt: int
    r_opt: Fraction
    E_surrogate: float
    E_grid: float | None = None
    n_grid: int | None = None

    def to_row(self) -> tuple:
        return (self.eps, self.m_opt, float(self.r_opt), self.E_surrogate,
                self.E_grid, self.n_grid)


def grid_for(m: int, r: Fraction) -> int:
    """Smallest admissible grid side for an order-m construction at scale r."""
    need = 4 * (1 / r) ** m
    n = 1
    while n < need:
        n *= 2
    return int(n)


def sweep(eps_list, validate_below_resolution: int | None = None) -> list[SweepRecord]:
    """Optimize the surrogate per eps; validate on a grid where one fits.

    Grid validation builds the optimal laminate at zero mean and records
    its measured total energy; entries whose optimal parameters would need
    a grid larger than the cap are recorded without validation.
    """
    records = []
    for eps in eps_list:
        m_opt, r_opt, value = optimize_params(eps)
        e_grid = None
        n_grid = None
        if validate_below_resolution is not None:
            n = grid_for(m_opt, r_opt)
            if n <= validate_below_resolution:
                spec = LaminateSpec(m_opt, r_opt, DiagMatrix(0, 0), Grid(n))
                chi, _ = build(spec)
                e_grid = total_energy(chi, DiagMatrix(0, 0), eps).total
                n_grid = n
        records.append(SweepRecord(eps, m_opt, r_opt, value, e_grid, n_grid))
    return records


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r2: float
    power_law_slope: float


class InsufficientDataError(ValueError):
    pass


def _least_squares(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2


def fit_scaling(records: list[SweepRecord]) -> FitResult:
    """Regress log E against sqrt(|log eps|), and against log eps for contrast."""
    if len(records) < 8:
        raise InsufficientDataError(f"need at least 8 records, got {len(records)}")
    eps = np.array([r.eps for r in records])
    e = np.array([r.E_surrogate for r in records])
    x = np.sqrt(np.abs(np.log(eps)))
    y = np.log(e)
    slope, intercept, r2 = _least_squares(x, y)
    power_slope, _, _ = _least_squares(np.log(eps), y)
    return FitResult(slope, intercept, r2, power_slope)


def fixed_order_envelope(m_list, eps_list) -> dict[int, list[float]]:
    """Per-order optimal surrogate energies: min over dyadic r at each eps."""
    table: dict[int, list[float]] = {}
    for m in m_list:
        row = []
        for eps in eps_list:
            row.append(min(surrogate(m, 2.0 ** -p, eps) for p in range(2, P_MAX + 1)))
        table[m] = row
    return table

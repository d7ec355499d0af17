"""Frequency cones and the numerical lower-bound bootstrap.

An axis-1 cone keeps frequencies with |k1| <= mu |k| and |k| <= mu2 (the
axis-2 cone mirrors in k2); it contains the origin by construction.  The
diagonal fields f1 = chi22 and f2 = chi11 = g(f1) concentrate their
spectral mass on the axis-1 and axis-2 cones respectively when the elastic
and surface energies are small; shrinking the radii along the schedule
mu_m = (sqrt(2) d)^m eps^(-1+m*alpha) and alternating the roles of f1, f2
yields the bootstrap whose per-step residuals and bounds are reported here.

The constants entering the bounds are not computable a priori; they are
estimated from the base step and recorded, never assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import CouplingPolys, apply_g
from .energy import EnergyBreakdown, diag_values, total_energy
from .fields import Grid, PhaseField, ScalarField


@dataclass(frozen=True)
class ConeSpec:
    """Compact frequency cone around one axis with optional angular smoothing."""

    axis: int
    mu: float
    mu2: float
    smoothing: float = 0.0

    def __post_init__(self):
        if self.axis not in (1, 2):
            raise ValueError(f"cone axis must be 1 or 2, got {self.axis}")
        if not (0.0 < self.mu < 1.0):
            raise ValueError(f"angular half-width must lie in (0, 1), got {self.mu}")
        if self.mu2 <= 0.0:
            raise ValueError(f"cone radius must be positive, got {self.mu2}")
        if self.smoothing < 0.0:
            raise ValueError("smoothing width must be nonnegative")


def cone_multiplier(c: ConeSpec, grid: Grid) -> np.ndarray:
    """Multiplier values on the full centered frequency grid.

    Sharp cones give an exact 0/1 indicator; with smoothing > 0 the angular
    edge decays along a half-cosine ramp of that width while the radial
    cutoff stays sharp.  The origin is always kept.
    """
    n = grid.n
    k = grid.frequencies().astype(np.float64)
    k1 = k.reshape(n, 1)
    k2 = k.reshape(1, n)
    norm = np.hypot(k1, k2)
    along = np.abs(k1) if c.axis == 1 else np.abs(k2)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(norm > 0.0, along / norm, 0.0)
    if c.smoothing == 0.0:
        angular = (ratio <= c.mu).astype(np.float64)
    else:
        t = (ratio - c.mu) / c.smoothing
        angular = np.where(
            t <= 0.0, 1.0, np.where(t >= 1.0, 0.0, 0.5 * (1.0 + np.cos(np.pi * np.clip(t, 0.0, 1.0))))
        )
    radial = (norm <= c.mu2).astype(np.float64)
    out = angular * radial
    out[n // 2, n // 2] = 1.0
    return out


def truncate(f: ScalarField, c: ConeSpec) -> ScalarField:
    """Keep the spectral content inside the cone (smoothed when requested)."""
    n = f.grid.n
    coeffs = np.fft.fftshift(np.fft.fft2(f.values))
    coeffs *= cone_multiplier(c, f.grid)
    values = np.fft.ifft2(np.fft.ifftshift(coeffs)).real
    return ScalarField(f.grid, values)


def residual(f: ScalarField, c: ConeSpec) -> float:
    """Squared L2 mass of f outside the cone, evaluated in frequency space."""
    n = f.grid.n
    coeffs = np.fft.fftshift(np.fft.fft2(f.values)) / (n * n)
    mask = 1.0 - cone_multiplier(c, f.grid)
    power = (coeffs.real ** 2 + coeffs.imag ** 2) * mask ** 2
    return float(np.sum(power.astype(np.longdouble)))


def _l2_norm(values: np.ndarray) -> float:
    return float(np.sqrt(np.sum((values.astype(np.longdouble)) ** 2) / values.size))


def _split_fields(chi: PhaseField) -> tuple[ScalarField, ScalarField]:
    """(f1, f2) = (chi22, chi11); f2 = g(f1) exactly."""
    v11, v22 = diag_values(chi)
    return ScalarField(chi.grid, v22), ScalarField(chi.grid, v11)


@dataclass(frozen=True)
class ConcentrationReport:
    lhs: float
    rhs_core: float
    ratio: float
    residual_f1: float
    residual_f2: float
    delta: float
    beta: float
    mu: float
    mu2: float


def verify_concentration(
    chi: PhaseField, mu: float, mu2: float, breakdown: EnergyBreakdown | None = None
) -> ConcentrationReport:
    """Measured mass-concentration inequality at one (mu, mu2) pair.

    lhs sums the cone residuals of f1 and f2; the core is
    mu^-2 * delta + mu2^-1 * beta with delta the directional elastic part
    and beta the surface energy; ratio is the empirical constant.
    """
    f1, f2 = _split_fields(chi)
    if breakdown is None:
        breakdown = total_energy(chi, _mean_of(chi), 1.0)
    delta = breakdown.h1m_d2chi11 + breakdown.h1m_d1chi22
    beta = breakdown.surface
    r1 = residual(f1, ConeSpec(1, mu, mu2))
    r2 = residual(f2, ConeSpec(2, mu, mu2))
    lhs = r1 + r2
    core = delta / mu ** 2 + beta / mu2
    ratio = lhs / core if core > 0 else 0.0
    return ConcentrationReport(lhs, core, ratio, r1, r2, delta, beta, mu, mu2)


def _mean_of(chi: PhaseField):
    from .energy import mean_matrix

    return mean_matrix(chi)


@dataclass(frozen=True)
class GapReport:
    lhs: float
    rhs: float
    ratio: float


def _apply_poly(coeffs, values: np.ndarray) -> np.ndarray:
    out = np.zeros_like(values, dtype=np.float64)
    for c in reversed(coeffs):
        out = out * values + float(c)
    return out


def lipschitz_gap(
    f: ScalarField, poly: CouplingPolys | None, c: ConeSpec, gamma: float, use_h: bool = False
) -> GapReport:
    """Measured interpolation inequality for the polynomial composition.

    lhs = ||p(f) - p(trunc f)||, rhs = ||f - trunc f||^(1-gamma); the ratio
    estimates the constant divided by gamma^d.  p is the coupling g by
    default, or h when requested.
    """
    if not (0.0 < gamma < 1.0):
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    if poly is None:
        from .core import COUPLING

        poly = COUPLING
    coeffs = poly.h if use_h else poly.g
    ft = truncate(f, c)
    lhs = _l2_norm(_apply_poly(coeffs, f.values) - _apply_poly(coeffs, ft.values))
    gap = _l2_norm(f.values - ft.values)
    rhs = gap ** (1.0 - gamma)
    ratio = lhs / rhs if rhs > 0 else 0.0
    return GapReport(lhs, rhs, ratio)


def comparison_gap(chi: PhaseField, mu: float, mu2: float, gamma: float) -> GapReport:
    """Measured commutator-style gap between truncation and the nonlinearity.

    lhs = ||g(trunc_1 f1) - trunc_2 g(f1)||^2 against the energy core raised
    to 1-gamma (or not, whichever is larger).
    """
    if not (0.0 < gamma < 1.0):
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    f1, _ = _split_fields(chi)
    breakdown = total_energy(chi, _mean_of(chi), 1.0)
    core = (breakdown.h1m_d2chi11 + breakdown.h1m_d1chi22) / mu ** 2 + breakdown.surface / mu2
    t1 = truncate(f1, ConeSpec(1, mu, mu2))
    gf1 = ScalarField(chi.grid, apply_g(f1.values))
    t2 = truncate(gf1, ConeSpec(2, mu, mu2))
    lhs = _l2_norm(apply_g(t1.values) - t2.values) ** 2
    rhs = max(core ** (1.0 - gamma), core)
    ratio = lhs / rhs if rhs > 0 else 0.0
    return GapReport(lhs, rhs, ratio)


# ---------------------------------------------------------------------------
# Bootstrap parameters and schedule.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BootstrapParams:
    """Exponent and degree data steering the cone bootstrap.

    gamma defaults to alpha^2.  The angular width mu = eps^alpha and the
    uncalibrated base radius mu2 = eps^(-1+2 alpha) are derived, never
    stored; the internal recursion uses the calibrated schedule entries.
    """

    alpha: float
    d: int
    eps: float
    nu: float = 0.5
    gamma: float | None = None

    def __post_init__(self):
        if not (0.0 < self.alpha < 0.5):
            raise ValueError(f"alpha must lie in (0, 1/2), got {self.alpha}")
        if self.d < 2:
            raise ValueError(f"polynomial degree must be >= 2, got {self.d}")
        if not (0.0 < self.eps < 1.0):
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")
        if self.nu <= 0.0:
            raise ValueError("nu must be positive")
        if self.gamma is None:
            object.__setattr__(self, "gamma", self.alpha ** 2)
        if not (0.0 < self.gamma < 1.0):
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")

    @property
    def mu(self) -> float:
        return self.eps ** self.alpha

    @property
    def mu2_base(self) -> float:
        return self.eps ** (-1.0 + 2.0 * self.alpha)


def termination_m(alpha: float) -> int:
    """Number of bootstrap steps: twice the floor of 1/(2 alpha)."""
    return 2 * math.floor(1.0 / (2.0 * alpha))


def mu_schedule(p: BootstrapParams, m_max: int) -> list[float]:
    """Radii mu_m = (sqrt(2) d)^m eps^(-1+m alpha) for m = 2 .. m_max."""
    if m_max < 2:
        raise ValueError(f"schedule needs m_max >= 2, got {m_max}")
    base = math.sqrt(2.0) * p.d
    return [base ** m * p.eps ** (-1.0 + m * p.alpha) for m in range(2, m_max + 1)]


def _mu_m(p: BootstrapParams, m: int) -> float:
    return (math.sqrt(2.0) * p.d) ** m * p.eps ** (-1.0 + m * p.alpha)


def even_odd_radii(m: int) -> tuple[int, int]:
    """Schedule indices (m_e, m_o): the lower even and odd parts of m + 2."""
    m_e = 2 * ((m + 2) // 2)
    m_o = 2 * ((m + 1) // 2) + 1
    return m_e, m_o


@dataclass(frozen=True)
class BootstrapStep:
    m: int
    m_e: int
    m_o: int
    mu_me: float
    mu_mo: float
    residual_f1: float
    residual_f2: float
    bound: float

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "m_e": self.m_e,
            "m_o": self.m_o,
            "mu_me": self.mu_me,
            "mu_mo": self.mu_mo,
            "residual_f1": self.residual_f1,
            "residual_f2": self.residual_f2,
            "bound": self.bound,
        }


@dataclass(frozen=True)
class BootstrapReport:
    steps: tuple[BootstrapStep, ...]
    termination_m: int
    c0: float
    low_mode_mass: float
    low_mode_bound: float
    empirical_C0: float
    delta: float
    beta: float
    core: float

    def satisfied(self) -> bool:
        return self.low_mode_mass <= self.low_mode_bound


def bootstrap(chi: PhaseField, p: BootstrapParams, breakdown: EnergyBreakdown) -> BootstrapReport:
    """Run the shrinking-cone iteration and record residuals against bounds.

    The constant is measured at the base step: the concentration ratio at
    the calibrated base radius and the commutator ratio scaled back by
    gamma^(2d), floored at 1 so the reported bounds stay meaningful.
    """
    delta = breakdown.h1m_d2chi11 + breakdown.h1m_d1chi22
    beta = breakdown.surface
    mu = p.mu
    mu2_sched = _mu_m(p, 2)
    core = delta / mu ** 2 + beta / mu2_sched
    f1, f2 = _split_fields(chi)

    if core > 0:
        conc = verify_concentration(chi, mu, mu2_sched, breakdown)
        cmp_ratio = comparison_gap(chi, mu, mu2_sched, p.gamma).ratio * p.gamma ** (2 * p.d)
        em_c0 = max(conc.ratio, cmp_ratio, 1.0)
    else:
        em_c0 = 0.0

    amp = 4.0 * em_c0 / p.gamma ** (2 * p.d)
    term = termination_m(p.alpha)
    steps = []
    for m in range(1, term + 1):
        m_e, m_o = even_odd_radii(m)
        mu_me = _mu_m(p, m_e)
        mu_mo = _mu_m(p, m_o)
        r1 = residual(f1, ConeSpec(1, mu, mu_me))
        r2 = residual(f2, ConeSpec(2, mu, mu_mo))
        if core > 0:
            bound = amp ** m * max(core ** ((1.0 - p.gamma) ** m), core)
        else:
            bound = 0.0
        steps.append(BootstrapStep(m, m_e, m_o, mu_me, mu_mo, r1, r2, bound))

    c0 = float(np.mean(f1.values))
    low_mass = _l2_norm(f1.values - c0) ** 2
    if core > 0:
        eb = delta + p.eps * beta
        low_bound = (4.0 * em_c0 / p.alpha ** (4 * p.d)) ** (1.0 / p.alpha) * p.eps ** (
            -2.0 * p.alpha
        ) * max(math.sqrt(eb), eb)
    else:
        low_bound = 0.0
    return BootstrapReport(
        steps=tuple(steps),
        termination_m=term,
        c0=c0,
        low_mode_mass=low_mass,
        low_mode_bound=low_bound,
        empirical_C0=em_c0,
        delta=delta,
        beta=beta,
        core=core,
    )


@dataclass(frozen=True)
class LowModeReport:
    lhs: float
    rhs: float
    rhs_improved: float
    alpha_star: float
    satisfied: bool


def low_mode_bound_check(
    chi: PhaseField,
    p: BootstrapParams,
    C0: float,
    breakdown: EnergyBreakdown,
) -> LowModeReport:
    """Check the low-mode mass bound with a supplied or measured constant.

    rhs evaluates the closed form at the given alpha; rhs_improved optimizes
    the same form over an alpha grid around |log eps|^(-1/(2+nu)).
    """
    f1, _ = _split_fields(chi)
    c0 = float(np.mean(f1.values))
    lhs = _l2_norm(f1.values - c0) ** 2
    eb = breakdown.h1m_d2chi11 + breakdown.h1m_d1chi22 + p.eps * breakdown.surface

    def rhs_at(alpha: float) -> float:
        return (4.0 * C0 / alpha ** (4 * p.d)) ** (1.0 / alpha) * p.eps ** (-2.0 * alpha) * max(
            math.sqrt(eb), eb
        )

    rhs = rhs_at(p.alpha)
    alpha_star = abs(math.log(p.eps)) ** (-1.0 / (2.0 + p.nu))
    grid = np.clip(alpha_star * np.geomspace(0.25, 4.0, 33), 1e-4, 0.499)
    rhs_improved = min(rhs_at(float(a)) for a in grid)
    return LowModeReport(lhs, rhs, rhs_improved, alpha_star, lhs <= rhs)

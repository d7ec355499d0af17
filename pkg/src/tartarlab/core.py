"""Matrix-level data of the four-well Tartar square.

The four wells are diagonal 2x2 matrices with no rank-one connections
between any pair.  Everything downstream (laminates, energies, cone
bootstraps) is phrased in terms of the wells, the corner matrices of
their quasiconvex hull, and a pair of cubic polynomials that couple the
two diagonal entries of a well.  Wells and corners have small integer
entries, so all identities in this module are exact; floats only enter
when a caller evaluates on grid data.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

Scalar = Union[int, float, Fraction]

#: absolute tolerance for hull membership tests at floating inputs
HULL_TOL = 1e-12


def _is_exact(x: Scalar) -> bool:
    return isinstance(x, (int, Fraction)) or (isinstance(x, np.integer))


@dataclass(frozen=True)
class DiagMatrix:
    """Diagonal 2x2 matrix diag(a, b); off-diagonal entries are zero by construction."""

    a: Scalar
    b: Scalar

    def __neg__(self) -> "DiagMatrix":
        return DiagMatrix(-self.a, -self.b)

    def __add__(self, other: "DiagMatrix") -> "DiagMatrix":
        return DiagMatrix(self.a + other.a, self.b + other.b)

    def __sub__(self, other: "DiagMatrix") -> "DiagMatrix":
        return DiagMatrix(self.a - other.a, self.b - other.b)

    def scaled(self, t: Scalar) -> "DiagMatrix":
        return DiagMatrix(t * self.a, t * self.b)

    def frobenius_sq(self) -> Scalar:
        return self.a * self.a + self.b * self.b

    def is_exact(self) -> bool:
        return _is_exact(self.a) and _is_exact(self.b)

    def as_floats(self) -> tuple[float, float]:
        return (float(self.a), float(self.b))


def lerp(m1: DiagMatrix, m2: DiagMatrix, lam: Scalar) -> DiagMatrix:
    """Convex combination lam*m1 + (1-lam)*m2, exact for exact inputs."""
    return m1.scaled(lam) + m2.scaled(1 - lam)


# The four wells.  A3 = -A1 and A4 = -A2.
A1 = DiagMatrix(-1, -3)
A2 = DiagMatrix(-3, 1)
A3 = DiagMatrix(1, 3)
A4 = DiagMatrix(3, -1)
WELLS: tuple[DiagMatrix, ...] = (A1, A2, A3, A4)

# Corners of the inner box of the quasiconvex hull.
P1 = DiagMatrix(-1, -1)
P2 = DiagMatrix(-1, 1)
P3 = DiagMatrix(1, 1)
P4 = DiagMatrix(1, -1)
CORNERS: tuple[DiagMatrix, ...] = (P1, P2, P3, P4)

# First-order auxiliary layer gradients used to resolve a zero mean.
B1 = DiagMatrix(-1, 0)
B2 = DiagMatrix(1, 0)

#: diagonal entries (chi11, chi22) attached to each phase index 1..4
CHI11_OF_PHASE = {1: -1, 2: -3, 3: 1, 4: 3}
CHI22_OF_PHASE = {1: -3, 2: 1, 3: 3, 4: -1}


def phase_matrix(i: int) -> DiagMatrix:
    """Well matrix for phase index i in {1, 2, 3, 4}."""
    if i not in (1, 2, 3, 4):
        raise ValueError(f"phase index must be in 1..4, got {i!r}")
    return WELLS[i - 1]


def chi_diag(w1: Scalar, w2: Scalar, w3: Scalar, w4: Scalar) -> tuple[Scalar, Scalar]:
    """Diagonal entries (chi11, chi22) of the weighted well combination.

    Weights may be fractional; one-hot weights recover the well entries.
    """
    chi11 = -w1 + w3 - 3 * w2 + 3 * w4
    chi22 = -3 * w1 + 3 * w3 + w2 - w4
    return (chi11, chi22)


# ---------------------------------------------------------------------------
# Coupling polynomials.  g maps the chi22 well values (-3, 1, 3, -1) to the
# paired chi11 values (-1, -3, 1, 3); h = -g inverts the pairing.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CouplingPolys:
    """Cubic interpolation pair: coefficients ascending in degree, exact rationals."""

    g: tuple[Fraction, ...]
    h: tuple[Fraction, ...]
    d: int


COUPLING = CouplingPolys(
    g=(Fraction(0), Fraction(-41, 12), Fraction(0), Fraction(5, 12)),
    h=(Fraction(0), Fraction(41, 12), Fraction(0), Fraction(-5, 12)),
    d=3,
)


def eval_g(t: Scalar) -> Scalar:
    """Evaluate g(t) = (5 t^3 - 41 t) / 12, exactly when t is int or Fraction."""
    if _is_exact(t):
        t = Fraction(t)
        return (5 * t ** 3 - 41 * t) / 12
    return (5.0 * t ** 3 - 41.0 * t) / 12.0


def eval_h(t: Scalar) -> Scalar:
    """Evaluate h(t) = -g(t)."""
    return -eval_g(t)


def apply_g(values: np.ndarray) -> np.ndarray:
    """Pointwise g on an array.

    The numerator is an exact small integer whenever the input values are
    integers (the well values are), and it is then a multiple of 12, so the
    division is exact in binary floating point.
    """
    v = np.asarray(values, dtype=np.float64)
    return (5.0 * v * v * v - 41.0 * v) / 12.0


def apply_h(values: np.ndarray) -> np.ndarray:
    """Pointwise h = -g on an array."""
    return -apply_g(values)


# ---------------------------------------------------------------------------
# Projection and hull geometry.
# ---------------------------------------------------------------------------

def squared_well_distances(m: DiagMatrix) -> list[Scalar]:
    """Squared Frobenius distances from m to the four wells, in index order."""
    return [(m - w).frobenius_sq() for w in WELLS]


def project_to_K(m: DiagMatrix) -> int:
    """Index of the nearest well; ties broken by the lowest index."""
    dists = squared_well_distances(m)
    best = 0
    for i in (1, 2, 3):
        if dists[i] < dists[best]:
            best = i
    return best + 1


def dist_to_K(m: DiagMatrix) -> float:
    """Frobenius distance from m to the nearest well."""
    return float(min(squared_well_distances(m))) ** 0.5


@dataclass(frozen=True)
class HullReport:
    """Membership report for the quasiconvex hull: box conv{P1..P4} plus four segments."""

    inside: bool
    region: str  # "convP", "segment-1".."segment-4", or "outside"


# closed segment data: (index, fixed entry name, fixed value, varying range)
_SEGMENTS = (
    (1, "a", -1, (-3, -1)),  # conv{A1, P1}: diag(-1, t)
    (2, "b", 1, (-3, -1)),   # conv{A2, P2}: diag(t, 1)
    (3, "a", 1, (1, 3)),     # conv{A3, P3}: diag(1, t)
    (4, "b", -1, (1, 3)),    # conv{A4, P4}: diag(t, -1)
)


def in_qc_hull(m: DiagMatrix, tol: float | None = None) -> HullReport:
    """Test membership in the hull: |a| <= 1 and |b| <= 1, or one of the four segments.

    Exact inputs are compared exactly; floating inputs use an absolute
    tolerance (default HULL_TOL).
    """
    if tol is None:
        tol = 0.0 if m.is_exact() else HULL_TOL
    a, b = m.a, m.b

    def close(x, target):
        return abs(x - target) <= tol

    if abs(a) <= 1 + tol and abs(b) <= 1 + tol:
        return HullReport(True, "convP")
    for idx, fixed_name, fixed_val, (lo, hi) in _SEGMENTS:
        fixed = a if fixed_name == "a" else b
        free = b if fixed_name == "a" else a
        if close(fixed, fixed_val) and lo - tol <= free <= hi + tol:
            return HullReport(True, f"segment-{idx}")
    return HullReport(False, "outside")

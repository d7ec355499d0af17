"""Nested laminate constructions rasterized on the periodic unit square.

The zero-mean tower looks like this:

* generation 1: vertical stripes of width r/2 with values B1/B2 alternating,
  plus horizontal cut-off bands of height r/2 at the bottom and top edges;
* generation 2: the interior of every B stripe becomes an r^2-periodic stack
  of horizontal layers, pairing each B with its well/corner chord at
  fractions 1/4 and 3/4 (B1 -> A1/P2, B2 -> A3/P4), with vertical cut-off
  frames of width r^2/4 at both sides of the stripe;
* generation j >= 3: every corner-valued rectangle P_i is replaced by an
  r^j-periodic half/half laminate of A_i and P_{i+1} (index cyclic in 1..4),
  oriented orthogonally to its parent, with cut-off frames of width r^j/4 at
  its two laminate-transverse ends.

Cut-off frames keep the parent's value, are never refined, and clip layers
transversally only, so the chord volume fractions hold exactly on the
interior of every refined rectangle.  A nonzero mean gradient in the hull
only changes the first generation, through its chord decomposition.

All rectangle corners are integer pixels; the grid contract
``n * r^m % 4 == 0`` makes every quarter-period edge representable.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import (
    A1, A2, A3, A4, B1, B2, P1, P2, P3, P4, WELLS,
    DiagMatrix, in_qc_hull, project_to_K,
)
from .energy import EnergyBreakdown
from .fields import DisplacementField, Grid, PhaseField


class ResolutionError(ValueError):
    """The grid cannot represent a requested feature exactly."""


class GenerationError(ValueError):
    """Refinement applied out of order."""


class NotInHullError(ValueError):
    """Target mean gradient lies outside the attainable hull."""


class DegenerateTargetError(ValueError):
    """Target mean gradient is a well; the construction degenerates."""


_NAMES = {
    A1: "A1", A2: "A2", A3: "A3", A4: "A4",
    P1: "P1", P2: "P2", P3: "P3", P4: "P4",
    B1: "B1", B2: "B2",
}


def _exact(m: DiagMatrix) -> DiagMatrix:
    return DiagMatrix(Fraction(m.a), Fraction(m.b))


def matrix_name(m: DiagMatrix) -> str:
    key = _exact(m)
    if key in _NAMES:
        return _NAMES[key]
    return f"D({float(m.a):g},{float(m.b):g})"


@dataclass(frozen=True)
class Chord:
    """One-entry interpolation m = lam*m1 + (1-lam)*m2 inside the hull.

    ``axis`` is the direction in which the resulting laminate varies:
    0 when the pair differs in the (1,1) entry, 1 for the (2,2) entry.
    """

    m1: DiagMatrix
    m2: DiagMatrix
    lam: Fraction
    axis: int


# strict segment interiors: (index, well, corner, varying entry, open range)
_SEGMENT_CHORDS = (
    (1, A1, P1, "b", (-3, -1)),
    (2, A2, P2, "a", (-3, -1)),
    (3, A3, P3, "b", (1, 3)),
    (4, A4, P4, "a", (1, 3)),
)

# corner P_i pairs with A_i and the next corner around the square
_CORNER_CHORDS = {P1: (A1, P2), P2: (A2, P3), P3: (A3, P4), P4: (A4, P1)}

# hull edges carrying the well-to-opposite-corner chords
_EDGE_CHORDS = (
    ("a", -1, A1, P2),
    ("a", 1, A3, P4),
    ("b", 1, A2, P3),
    ("b", -1, A4, P1),
)


def chord_decomposition(m: DiagMatrix) -> Chord:
    """Split a hull matrix into a rank-one connected pair with exact fractions."""
    me = _exact(m)
    if me in (A1, A2, A3, A4):
        raise DegenerateTargetError(f"{matrix_name(me)} is a well; nothing to decompose")
    if not in_qc_hull(me).inside:
        raise NotInHullError(f"diag({float(m.a)}, {float(m.b)}) is outside the hull")
    a, b = me.a, me.b
    for idx, well, corner, entry, (lo, hi) in _SEGMENT_CHORDS:
        fixed = b if entry == "a" else a
        free = a if entry == "a" else b
        if fixed == (well.b if entry == "a" else well.a) and lo < free < hi:
            lam = Fraction(free - getattr(corner, entry), getattr(well, entry) - getattr(corner, entry))
            return Chord(well, corner, lam, 0 if entry == "a" else 1)
    if me in _CORNER_CHORDS:
        w, c = _CORNER_CHORDS[me]
        axis = 0 if w.a != c.a else 1
        return Chord(w, c, Fraction(1, 2), axis)
    for entry, val, w, c in _EDGE_CHORDS:
        if getattr(me, entry) == val:
            other = "b" if entry == "a" else "a"
            lam = Fraction(getattr(me, other) - getattr(c, other), getattr(w, other) - getattr(c, other))
            return Chord(w, c, lam, 1 if entry == "a" else 0)
    # interior of the corner box: horizontal chord through the two side edges
    left = DiagMatrix(Fraction(-1), b)
    right = DiagMatrix(Fraction(1), b)
    lam = Fraction(1 - a, 2)
    return Chord(left, right, lam, 0)


def decompose_F(F: DiagMatrix) -> tuple[DiagMatrix, DiagMatrix, Fraction]:
    """First-order layer recipe for a hull target: lam*M1 + (1-lam)*M2 = F."""
    ch = chord_decomposition(F)
    return ch.m1, ch.m2, ch.lam


@dataclass(frozen=True)
class LaminateSpec:
    """Parameters of an order-m construction on a concrete grid."""

    m: int
    r: Fraction
    F: DiagMatrix
    grid: Grid

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"order must be >= 1, got {self.m}")
        r = Fraction(self.r)
        if not (0 < r < Fraction(1, 2)):
            raise ValueError(f"scale must satisfy 0 < r < 1/2, got {r}")
        q = r.denominator
        if r.numerator != 1 or (q & (q - 1)) != 0:
            raise ValueError(f"scale must be dyadic 2**-p with p >= 2, got {r}")
        object.__setattr__(self, "r", r)
        if not in_qc_hull(_exact(self.F)).inside:
            raise NotInHullError("mean gradient outside the hull")
        n = self.grid.n
        finest = r ** self.m
        if Fraction(n) * finest < 4:
            raise ResolutionError(
                f"grid n={n} cannot resolve order {self.m} at r={r}: need n >= {4 / finest}"
            )
        if (n * finest) % 4 != 0:
            raise ResolutionError(f"n * r^m = {n * finest} must be a multiple of 4")

    def scale(self, j: int) -> Fraction:
        return self.r ** j


@dataclass(frozen=True)
class Rect:
    """Half-open pixel rectangle [x0, x1) x [y0, y1) carrying one gradient value."""

    x0: int
    y0: int
    x1: int
    y1: int
    value: DiagMatrix
    name: str
    generation: int
    cutoff: bool
    orientation: int

    @property
    def area(self) -> int:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def extent(self, axis: int) -> tuple[int, int]:
        return (self.x0, self.x1) if axis == 0 else (self.y0, self.y1)


@dataclass(frozen=True)
class LaminateState:
    """Exact rectangle tiling of the pixel grid at some generation."""

    grid: Grid
    rects: tuple[Rect, ...]
    generation: int

    def total_area(self) -> int:
        return sum(r.area for r in self.rects)

    def coverage_ok(self) -> bool:
        """Exact tiling check: every pixel painted exactly once."""
        n = self.grid.n
        count = np.zeros((n, n), dtype=np.int16)
        for r in self.rects:
            count[r.x0:r.x1, r.y0:r.y1] += 1
        return bool(np.all(count == 1))

    def phase_field(self) -> PhaseField:
        n = self.grid.n
        labels = np.zeros((n, n), dtype=np.uint8)
        for r in self.rects:
            labels[r.x0:r.x1, r.y0:r.y1] = project_to_K(r.value)
        return PhaseField(self.grid, labels)

    def volume(self, predicate) -> float:
        """Fraction of the square covered by rects matching the predicate."""
        n = self.grid.n
        return sum(r.area for r in self.rects if predicate(r)) / (n * n)

    def corner_volume(self, include_cutoff: bool = False) -> float:
        """Fraction covered by corner-valued (P) rectangles."""
        return self.volume(
            lambda r: r.name.startswith("P") and (include_cutoff or not r.cutoff)
        )

    def interface_length(self) -> float:
        """Exact projected-label interface length from the rectangle geometry.

        Counted once per interface; periodic wrap included.  Serves as the
        closed-form dual of the pixel-edge count behind the surface energy.
        """
        n = self.grid.n
        total_px = 0
        for axis in (0, 1):
            opens: dict[int, list[tuple[int, int, int]]] = {}
            closes: dict[int, list[tuple[int, int, int]]] = {}
            for r in self.rects:
                lo, hi = r.extent(axis)
                t0, t1 = r.extent(1 - axis)
                lab = project_to_K(r.value)
                opens.setdefault(lo % n, []).append((t0, t1, lab))
                closes.setdefault(hi % n, []).append((t0, t1, lab))
            for x in set(opens) | set(closes):
                a = sorted(closes.get(x, []))
                b = sorted(opens.get(x, []))
                i = j = 0
                while i < len(a) and j < len(b):
                    lo = max(a[i][0], b[j][0])
                    hi = min(a[i][1], b[j][1])
                    if hi > lo and a[i][2] != b[j][2]:
                        total_px += hi - lo
                    if a[i][1] <= b[j][1]:
                        i += 1
                    else:
                        j += 1
        return total_px * self.grid.h

    def csv_rows(self) -> list[tuple]:
        """Rows (x0, y0, x1, y1, label, generation) in unit coordinates."""
        h = self.grid.h
        return [
            (r.x0 * h, r.y0 * h, r.x1 * h, r.y1 * h, r.name, r.generation)
            for r in self.rects
        ]


def _layer_split(lam: Fraction, period_px: int) -> int:
    """Pixel width of the first layer; exact when lam * period is integral."""
    exact = lam * period_px
    w = int(exact) if exact.denominator == 1 else int(round(float(exact)))
    if w < 1 or w > period_px - 1:
        raise ResolutionError(
            f"volume fraction {lam} not representable in a {period_px}px period"
        )
    return w


def _make_rect(axis: int, lam_range: tuple[int, int], trans_range: tuple[int, int],
               value: DiagMatrix, generation: int, cutoff: bool) -> Rect:
    if axis == 0:
        x0, x1 = lam_range
        y0, y1 = trans_range
    else:
        y0, y1 = lam_range
        x0, x1 = trans_range
    return Rect(x0, y0, x1, y1, value, matrix_name(value), generation, cutoff, axis)


def build_first_order(spec: LaminateSpec) -> LaminateState:
    """Alternating stripes of the chord pair of F, with transverse cut-off bands."""
    n = spec.grid.n
    ch = chord_decomposition(spec.F)
    period_px = int(Fraction(n) * spec.r)
    if period_px < 4 or n % period_px != 0:
        raise ResolutionError(f"first-order period {spec.r} not representable on n={n}")
    w1 = _layer_split(ch.lam, period_px)
    band_px = period_px // 2
    rects = []
    for start in range(0, n, period_px):
        for value, lo, hi in ((ch.m1, start, start + w1), (ch.m2, start + w1, start + period_px)):
            rects.append(_make_rect(ch.axis, (lo, hi), (band_px, n - band_px), value, 1, False))
            rects.append(_make_rect(ch.axis, (lo, hi), (0, band_px), value, 1, True))
            rects.append(_make_rect(ch.axis, (lo, hi), (n - band_px, n), value, 1, True))
    return LaminateState(spec.grid, tuple(rects), 1)


def _is_well(value: DiagMatrix) -> bool:
    return _exact(value) in WELLS


def refine(state: LaminateState, j: int, r_j: Fraction) -> LaminateState:
    """Subdivide every refinable rectangle into its chord laminate at scale r_j."""
    if j != state.generation + 1:
        raise GenerationError(
            f"refinement order {j} does not follow generation {state.generation}"
        )
    n = state.grid.n
    period_f = Fraction(n) * Fraction(r_j)
    if period_f.denominator != 1 or period_f < 4 or period_f % 4 != 0:
        raise ResolutionError(f"scale {r_j} gives period {period_f}px, need a multiple of 4")
    period_px = int(period_f)
    frame_px = period_px // 4
    out = []
    for rect in state.rects:
        if rect.cutoff or _is_well(rect.value):
            out.append(rect)
            continue
        ch = chord_decomposition(rect.value)
        lo, hi = rect.extent(ch.axis)
        t0, t1 = rect.extent(1 - ch.axis)
        if (hi - lo) % period_px != 0:
            raise ResolutionError(
                f"rectangle extent {hi - lo}px is not a multiple of the period {period_px}px"
            )
        if t1 - t0 <= 2 * frame_px:
            raise ResolutionError("cut-off frames would swallow the rectangle")
        out.append(_make_rect(ch.axis, (lo, hi), (t0, t0 + frame_px), rect.value, j, True))
        out.append(_make_rect(ch.axis, (lo, hi), (t1 - frame_px, t1), rect.value, j, True))
        w1 = _layer_split(ch.lam, period_px)
        inner = (t0 + frame_px, t1 - frame_px)
        for start in range(lo, hi, period_px):
            out.append(_make_rect(ch.axis, (start, start + w1), inner, ch.m1, j, False))
            out.append(_make_rect(ch.axis, (start + w1, start + period_px), inner, ch.m2, j, False))
    return LaminateState(state.grid, tuple(out), j)


def build(spec: LaminateSpec) -> tuple[PhaseField, LaminateState]:
    """Run the construction to order m and project it onto the wells."""
    state = build_first_order(spec)
    for j in range(2, spec.m + 1):
        state = refine(state, j, spec.scale(j))
    return state.phase_field(), state


# ---------------------------------------------------------------------------
# Explicit displacements for the first two orders.
# ---------------------------------------------------------------------------

def _sawtooth(coords: np.ndarray, period: float, frac: float,
              slope1: float, slope2: float) -> np.ndarray:
    """Periodic antiderivative of a two-slope step profile, zero at period starts."""
    t = np.mod(coords, period)
    split = frac * period
    return np.where(t < split, slope1 * t, slope1 * split + slope2 * (t - split))


def build_displacement(spec: LaminateSpec) -> DisplacementField:
    """Closed-form nodal displacement of the order-1 or order-2 construction.

    The recorded mean gradient carries the affine part; the tables hold the
    periodic fluctuation, which vanishes on the boundary of the unit square.
    Order 2 is implemented for targets inside the corner box (chord pair
    differing in the (1,1) entry), which covers the zero-mean tower.
    """
    if spec.m not in (1, 2):
        raise ValueError(f"explicit displacement supports orders 1 and 2, got {spec.m}")
    n = spec.grid.n
    h = spec.grid.h
    r1 = float(spec.r)
    ch = chord_decomposition(spec.F)
    coords = np.arange(n) * h
    entry = "a" if ch.axis == 0 else "b"
    s = _sawtooth(
        coords,
        r1,
        float(ch.lam),
        float(getattr(ch.m1, entry)) - float(getattr(spec.F, entry)),
        float(getattr(ch.m2, entry)) - float(getattr(spec.F, entry)),
    )
    ramp = np.clip(2.0 * coords / r1, 0.0, 1.0) * np.clip(2.0 * (1.0 - coords) / r1, 0.0, 1.0)
    u1 = np.zeros((n, n))
    u2 = np.zeros((n, n))
    if ch.axis == 0:
        u1 += s.reshape(n, 1) * ramp.reshape(1, n)
    else:
        u2 += s.reshape(1, n) * ramp.reshape(n, 1)

    if spec.m == 2:
        if ch.axis != 0:
            raise ValueError("order-2 displacement needs a corner-box target")
        r2 = float(spec.scale(2))
        period_px = int(Fraction(n) * spec.r)
        band_px = period_px // 2
        frame = r2 / 4.0
        x2 = coords - band_px * h
        bulk = (np.arange(n) >= band_px) & (np.arange(n) < n - band_px)
        w1 = _layer_split(ch.lam, period_px)
        for start in range(0, n, period_px):
            for value, lo, hi in ((ch.m1, start, start + w1), (ch.m2, start + w1, start + period_px)):
                sub = chord_decomposition(value)
                q = _sawtooth(
                    x2,
                    r2,
                    float(sub.lam),
                    float(sub.m1.b) - float(value.b),
                    float(sub.m2.b) - float(value.b),
                ) * bulk
                dist = np.minimum(coords[lo:hi] - lo * h, hi * h - coords[lo:hi])
                psi = np.clip(dist / frame, 0.0, 1.0)
                u2[lo:hi, :] += psi.reshape(-1, 1) * q.reshape(1, n)
    return DisplacementField(spec.grid, u1, u2, spec.F)


def analytic_energy_estimate(spec: LaminateSpec, eps: float) -> EnergyBreakdown:
    """Unit-constant predictions for the elastic, surface and total energies."""
    m = spec.m
    r = float(spec.r)
    elastic = 0.5 ** m + sum(0.5 ** j * r for j in range(2, m + 1)) + r
    surface = 0.5 ** m * r ** (-m)
    return EnergyBreakdown(
        elastic=elastic,
        surface=surface,
        epsilon=eps,
        total=elastic + eps * surface,
        h1m_d2chi11=0.0,
        h1m_d1chi22=0.0,
        mean_dev=0.0,
    )

"""Periodic grid fields and the discrete Fourier transform.

Arrays are indexed ``values[i1, i2]`` for the grid point x = (i1*h, i2*h)
on the unit torus, h = 1/n.  Axis 0 is the x1 direction and axis 1 the x2
direction throughout the package.

Transform convention: ``fhat(k) = (1/n^2) * sum_x f(x) exp(-2 pi i k.x)``,
so ``fhat(0)`` is the mean of f and Parseval holds without constants:
``sum_k |fhat(k)|^2 = (1/n^2) sum_x |f(x)|^2``.  Spectral coefficients are
stored centered, indexed by integer frequencies k in {-n/2 .. n/2-1}^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CHI11_OF_PHASE, CHI22_OF_PHASE, DiagMatrix


@dataclass(frozen=True)
class Grid:
    """Square periodic grid with n points per side, n a power of two."""

    n: int

    def __post_init__(self):
        n = self.n
        if n < 2 or (n & (n - 1)) != 0:
            raise ValueError(f"grid side must be a power of two >= 2, got {n}")

    @property
    def h(self) -> float:
        return 1.0 / self.n

    def frequencies(self) -> np.ndarray:
        """Centered integer frequencies {-n/2 .. n/2-1}."""
        return np.arange(-self.n // 2, self.n // 2)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ScalarField:
    """Real periodic grid function."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"values must be {self.grid.n}x{self.grid.n}, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", _freeze(v))


@dataclass(frozen=True)
class PhaseField:
    """Periodic grid of phase labels in {1, 2, 3, 4}, one phase per cell."""

    grid: Grid
    labels: np.ndarray

    def __post_init__(self):
        lab = np.ascontiguousarray(self.labels, dtype=np.uint8)
        if lab.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"labels must be {self.grid.n}x{self.grid.n}, got {lab.shape}")
        if lab.min() < 1 or lab.max() > 4:
            raise ValueError("labels must lie in {1, 2, 3, 4}")
        object.__setattr__(self, "labels", _freeze(lab))

    def volume_fractions(self) -> np.ndarray:
        """Fractions of the four phases, in index order."""
        counts = np.bincount(self.labels.ravel(), minlength=5)[1:5]
        return counts / self.labels.size


@dataclass(frozen=True)
class SpectralField:
    """Complex Fourier coefficients on centered frequencies {-n/2 .. n/2-1}^2."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.ascontiguousarray(self.coeffs, dtype=np.complex128)
        if c.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"coeffs must be {self.grid.n}x{self.grid.n}, got {c.shape}")
        object.__setattr__(self, "coeffs", _freeze(c))

    def at(self, k1: int, k2: int) -> complex:
        """Coefficient at integer frequency (k1, k2)."""
        half = self.grid.n // 2
        if not (-half <= k1 < half and -half <= k2 < half):
            raise ValueError(f"frequency ({k1}, {k2}) outside {-half}..{half - 1}")
        return complex(self.coeffs[k1 + half, k2 + half])


@dataclass(frozen=True)
class DisplacementField:
    """Nodal displacement: periodic fluctuation tables plus a recorded mean gradient."""

    grid: Grid
    u1: np.ndarray
    u2: np.ndarray
    mean_gradient: DiagMatrix = DiagMatrix(0.0, 0.0)

    def __post_init__(self):
        for name in ("u1", "u2"):
            v = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if v.shape != (self.grid.n, self.grid.n):
                raise ValueError(f"{name} must be {self.grid.n}x{self.grid.n}")
            object.__setattr__(self, name, _freeze(v))


def forward(f: ScalarField) -> SpectralField:
    """Discrete Fourier transform with the package convention (fhat(0) = mean)."""
    n = f.grid.n
    coeffs = np.fft.fftshift(np.fft.fft2(f.values)) / (n * n)
    return SpectralField(f.grid, coeffs)


def inverse(F: SpectralField) -> ScalarField:
    """Inverse transform; imaginary residue of Hermitian inputs is discarded."""
    n = F.grid.n
    values = np.fft.ifft2(np.fft.ifftshift(F.coeffs)) * (n * n)
    return ScalarField(F.grid, values.real)


def mean(f: ScalarField) -> float:
    """Mean value over the torus; equals the zero-frequency coefficient."""
    return float(np.mean(f.values))


def to_diag_fields(chi: PhaseField) -> tuple[ScalarField, ScalarField]:
    """Pointwise diagonal entries (chi11, chi22) of a phase field."""
    lut11 = np.array([np.nan] + [float(CHI11_OF_PHASE[i]) for i in (1, 2, 3, 4)])
    lut22 = np.array([np.nan] + [float(CHI22_OF_PHASE[i]) for i in (1, 2, 3, 4)])
    return (
        ScalarField(chi.grid, lut11[chi.labels]),
        ScalarField(chi.grid, lut22[chi.labels]),
    )


def random_phase_field(grid: Grid, rng: np.random.Generator) -> PhaseField:
    """Uniformly random phase labels; used by property tests and `verify`."""
    return PhaseField(grid, rng.integers(1, 5, size=(grid.n, grid.n), dtype=np.uint8))


# ---------------------------------------------------------------------------
# Plain-text dump format shared with the command line tool:
# header line "n=<int>", then n lines of n space-separated labels.
# Line i holds x1 = i*h; entry j within a line holds x2 = j*h.
# ---------------------------------------------------------------------------

def write_phase_field(chi: PhaseField, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"n={chi.grid.n}\n")
        for row in chi.labels:
            fh.write(" ".join(str(int(v)) for v in row))
            fh.write("\n")


def read_phase_field(path) -> PhaseField:
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("n="):
            raise ValueError(f"bad phase field header {header!r}")
        n = int(header[2:])
        labels = np.loadtxt(fh, dtype=np.uint8, max_rows=n)
    labels = np.atleast_2d(labels)
    return PhaseField(Grid(n), labels)

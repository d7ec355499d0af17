"""Report figures rendered to files next to the delimited output.

All figures are timestamp-free and use a fixed hash salt so repeated runs
produce byte-identical files.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .fields import PhaseField

_SALT = "tartarlab"
_PHASE_COLORS = ("#3f6fb5", "#d9822b", "#4e9a51", "#b5473f")


def _save(fig, path) -> None:
    fmt = str(path).rsplit(".", 1)[-1].lower()
    kwargs = {"metadata": {"Date": None}} if fmt == "svg" else {}
    fig.savefig(path, format=fmt, **kwargs)
    plt.close(fig)


def _style():
    plt.rcParams["svg.hashsalt"] = _SALT
    plt.rcParams["figure.figsize"] = (6.4, 4.4)
    plt.rcParams["font.size"] = 9


def sweep_figure(records, fit, envelopes, path) -> None:
    """log E against sqrt(|log eps|): optimized points, fit line, fixed-order envelopes."""
    _style()
    fig, ax = plt.subplots()
    x = np.array([math.sqrt(abs(math.log(r.eps))) for r in records])
    y = np.array([math.log(r.E_surrogate) for r in records])
    for m, row in sorted(envelopes.items()):
        ax.plot(x, np.log(row), lw=0.8, alpha=0.6, label=f"fixed m={m}")
    ax.plot(x, y, "ko", ms=4, label="optimized")
    xs = np.linspace(x.min(), x.max(), 64)
    ax.plot(xs, fit.slope * xs + fit.intercept, "r-", lw=1.2,
            label=f"fit slope {fit.slope:.3f}, r2 {fit.r2:.3f}")
    grid_pts = [(math.sqrt(abs(math.log(r.eps))), math.log(r.E_grid))
                for r in records if r.E_grid is not None]
    if grid_pts:
        gx, gy = zip(*grid_pts)
        ax.plot(gx, gy, "s", color="#4e9a51", ms=5, label="grid-validated")
    ax.set_xlabel(r"$\sqrt{|\log \epsilon|}$")
    ax.set_ylabel(r"$\log E$")
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    _save(fig, path)


def phase_field_figure(chi: PhaseField, path) -> None:
    """Four-color image of the phase labels, x1 rightward and x2 upward."""
    _style()
    fig, ax = plt.subplots(figsize=(5.2, 5.2))
    cmap = matplotlib.colors.ListedColormap(_PHASE_COLORS)
    ax.imshow(chi.labels.T, origin="lower", cmap=cmap, vmin=1, vmax=4,
              interpolation="nearest", extent=(0, 1, 0, 1))
    ax.set_xlabel("$x_1$")
    ax.set_ylabel("$x_2$")
    fig.tight_layout()
    _save(fig, path)


def bootstrap_figure(report, path) -> None:
    """Per-step residuals against the recorded bounds, log scale."""
    _style()
    fig, ax = plt.subplots()
    ms = [s.m for s in report.steps]
    res = [s.residual_f1 + s.residual_f2 for s in report.steps]
    bounds = [s.bound for s in report.steps]
    ax.semilogy(ms, [max(v, 1e-300) for v in res], "o-", label="residual sum")
    ax.semilogy(ms, [max(v, 1e-300) for v in bounds], "s--", label="bound")
    ax.set_xlabel("step m")
    ax.set_ylabel("squared mass")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)

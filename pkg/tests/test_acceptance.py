"""Acceptance suite: every criterion at its stated tolerance.

Each check appends one pass/fail line to RESULTS; the conftest terminal
hook prints them after the run, so the per-criterion verdicts are visible
regardless of capture settings.  Checks that fail do so honestly: the
assertion messages carry the measured numbers.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from tartarlab import cli, cones, scaling
from tartarlab.core import DiagMatrix, apply_g, apply_h, eval_g, eval_h
from tartarlab.energy import (
    diag_values, direct_minimum, elastic_energy, mean_matrix, total_energy,
)
from tartarlab.fields import Grid, PhaseField, random_phase_field
from tartarlab.laminate import LaminateSpec, analytic_energy_estimate, build

RESULTS: list[str] = []

R4 = Fraction(1, 4)
F0 = DiagMatrix(0, 0)
EPS_GRID = [2.0 ** k for k in range(-8, -61, -2)]  # 27 points


def record(num: int, name: str, ok: bool, detail: str) -> None:
    RESULTS.append(f"criterion {num} ({name}): {'PASS' if ok else 'FAIL'} -- {detail}")
    assert ok, f"criterion {num} ({name}): {detail}"


# ---------------------------------------------------------------------------
# shared heavy fixtures
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def laminates_4096():
    t0 = time.time()
    out = {}
    for m in (1, 2, 3, 4):
        spec = LaminateSpec(m, R4, F0, Grid(4096))
        chi, state = build(spec)
        out[m] = (chi, state, total_energy(chi, F0, 0.01))
    out["elapsed"] = time.time() - t0
    return out


@pytest.fixture(scope="module")
def laminates_1024():
    out = {}
    for m in (1, 2, 3, 4):
        spec = LaminateSpec(m, R4, F0, Grid(1024))
        chi, _ = build(spec)
        out[m] = (chi, total_energy(chi, F0, 1e-3))
    return out


@pytest.fixture(scope="module")
def sweep_records():
    t0 = time.time()
    records = scaling.sweep(EPS_GRID, validate_below_resolution=4096)
    return records, time.time() - t0


# ---------------------------------------------------------------------------
# criterion 1: oracle equivalence of the elastic energy
# ---------------------------------------------------------------------------

def test_criterion_1_oracle_equivalence():
    rng = np.random.default_rng(101)
    t0 = time.time()
    worst = 0.0
    for _ in range(100):
        chi = random_phase_field(Grid(16), rng)
        F = mean_matrix(chi)
        closed = elastic_energy(chi, F)
        iterative, _ = direct_minimum(chi, F)
        worst = max(worst, abs(closed - iterative) / closed)
    elapsed = time.time() - t0
    record(1, "oracle equivalence", worst <= 1e-8 and elapsed <= 30.0,
           f"max relative gap {worst:.3e} over 100 fields, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# criterion 2: discrete rigidity
# ---------------------------------------------------------------------------

def test_criterion_2_discrete_rigidity():
    t0 = time.time()
    zero, nonconstant_zero = 0, 0
    g2 = Grid(2)
    for code in range(256):
        labels = np.array(
            [[code % 4, code // 4 % 4], [code // 16 % 4, code // 64 % 4]],
            dtype=np.uint8,
        ) + 1
        chi = PhaseField(g2, labels)
        if elastic_energy(chi, mean_matrix(chi)) <= 1e-12:
            zero += 1
            if len(set(labels.ravel().tolist())) > 1:
                nonconstant_zero += 1
    rng = np.random.default_rng(202)
    g4 = Grid(4)
    bad = 0
    for _ in range(10_000):
        chi = random_phase_field(g4, rng)
        if len(set(chi.labels.ravel().tolist())) == 1:
            continue
        if elastic_energy(chi, mean_matrix(chi)) <= 1e-12:
            bad += 1
    elapsed = time.time() - t0
    record(2, "discrete rigidity", zero == 4 and nonconstant_zero == 0 and bad == 0
           and elapsed <= 10.0,
           f"2x2: {zero} zero-energy fields (want 4, all constant); "
           f"4x4: {bad} nonconstant zeros in 10^4 samples, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# criterion 3: construction bookkeeping at n = 4096
# ---------------------------------------------------------------------------

def test_criterion_3_elastic_within_factor_8(laminates_4096):
    ratios = {}
    for m in (1, 2, 3, 4):
        _, _, bd = laminates_4096[m]
        pred = analytic_energy_estimate(LaminateSpec(m, R4, F0, Grid(4096)), 0.01)
        ratios[m] = bd.elastic / pred.elastic
    ok = all(1 / 8 <= v <= 8 for v in ratios.values())
    record(3, "elastic within factor 8",
           ok and laminates_4096["elapsed"] <= 300.0,
           "measured/predicted = "
           + ", ".join(f"m={m}: {v:.2f}" for m, v in ratios.items())
           + f"; build+energy {laminates_4096['elapsed']:.0f}s")


def test_criterion_3_surface_within_factor_8(laminates_4096):
    ratios = {}
    for m in (1, 2, 3, 4):
        _, _, bd = laminates_4096[m]
        ratios[m] = bd.surface / (0.5 ** m * float(R4) ** -m)
    ok = all(1 / 8 <= v <= 8 for v in ratios.values())
    record(3, "surface within factor 8", ok,
           "measured/predicted = "
           + ", ".join(f"m={m}: {v:.2f}" for m, v in ratios.items()))


def test_criterion_3_elastic_strictly_decreasing(laminates_4096):
    values = [laminates_4096[m][2].elastic for m in (1, 2, 3, 4)]
    ok = all(values[i] > values[i + 1] for i in range(3))
    record(3, "elastic strictly decreasing", ok,
           "E_el(m=1..4) = " + ", ".join(f"{v:.4f}" for v in values))


def test_criterion_3_surface_strictly_increasing(laminates_4096):
    values = [laminates_4096[m][2].surface for m in (1, 2, 3, 4)]
    ok = all(values[i] < values[i + 1] for i in range(3))
    record(3, "surface strictly increasing", ok,
           "E_surf(m=1..4) = " + ", ".join(f"{v:.2f}" for v in values))


# ---------------------------------------------------------------------------
# criterion 4: scaling-law functional form
# ---------------------------------------------------------------------------

def test_criterion_4_fit_quality(sweep_records):
    records, elapsed = sweep_records
    fit = scaling.fit_scaling(records)
    caps_free = all(
        r.m_opt < scaling.M_CAP and r.r_opt.denominator < 2 ** scaling.P_MAX
        for r in records
    )
    ok = (fit.r2 >= 0.98 and fit.slope < 0 and len(records) >= 25
          and caps_free and elapsed <= 120.0)
    record(4, "stretched-exponential fit", ok,
           f"r2 = {fit.r2:.4f}, slope = {fit.slope:.3f}, "
           f"{len(records)} points, search caps non-binding: {caps_free}, "
           f"sweep {elapsed:.0f}s")


def test_criterion_4_windowed_power_slope(sweep_records):
    records, _ = sweep_records
    window = [r for r in records if r.eps <= 2.0 ** -40]
    fit = scaling.fit_scaling(window)
    ok = abs(fit.power_law_slope) <= 0.15
    record(4, "super-polynomial signature", ok,
           f"|power-law slope| = {abs(fit.power_law_slope):.4f} on eps <= 2^-40 "
           f"({len(window)} points)")


def test_criterion_4_grid_validation_within_factor_8(sweep_records):
    records, _ = sweep_records
    validated = [(r.eps, r.E_grid / r.E_surrogate) for r in records if r.E_grid is not None]
    ok = bool(validated) and all(1 / 8 <= v <= 8 for _, v in validated)
    record(4, "grid validation within factor 8", ok,
           "E_grid/E_surrogate = "
           + ", ".join(f"2^{math.log2(e):.0f}: {v:.2f}" for e, v in validated))


# ---------------------------------------------------------------------------
# criterion 5: infinite-order signature
# ---------------------------------------------------------------------------

def test_criterion_5_infinite_order_signature(sweep_records):
    records, _ = sweep_records
    table = scaling.fixed_order_envelope([1, 2, 3, 4, 5, 6], EPS_GRID)
    opt = {r.eps: r.E_surrogate for r in records}
    details = []
    ok = True
    for m in (1, 2, 3, 4, 5, 6):
        plateau = table[m][-1]  # envelope at eps = 2^-60
        ok_plateau = 0.5 ** m <= plateau <= 2.0 * 0.5 ** m
        beats = any(opt[e] < 0.9 * table[m][i] for i, e in enumerate(EPS_GRID))
        ok &= ok_plateau and beats
        details.append(f"m={m}: plateau/2^-m={plateau / 0.5 ** m:.2f}"
                       f"{'' if beats else ' (never undercut)'}")
    record(5, "infinite-order signature", ok, "; ".join(details))


# ---------------------------------------------------------------------------
# criterion 6: cone concentration
# ---------------------------------------------------------------------------

#: regression cap for the measured concentration constant (observed max 0.38)
CONCENTRATION_CAP = 1.0


def test_criterion_6_cone_concentration(laminates_1024):
    worst = 0.0
    n = 1024
    for m in (1, 2, 3, 4):
        chi, bd = laminates_1024[m]
        for mu in (2.0 ** -4, 2.0 ** -3, 2.0 ** -2, 2.0 ** -1):
            for mu2 in (n / 8, n / 4, n / 2):
                rep = cones.verify_concentration(chi, mu, mu2, bd)
                assert math.isfinite(rep.ratio)
                worst = max(worst, rep.ratio)
    ns = 256
    labels = np.ones((ns, ns), dtype=np.uint8)
    labels[ns // 2:, :] = 3
    for axis in (0, 1):
        chi = PhaseField(Grid(ns), labels if axis == 0 else labels.T)
        bd = total_energy(chi, mean_matrix(chi), 1.0)
        for mu in (2.0 ** -4, 2.0 ** -1):
            for mu2 in (ns / 8, ns / 2):
                rep = cones.verify_concentration(chi, mu, mu2, bd)
                assert math.isfinite(rep.ratio)
                worst = max(worst, rep.ratio)
    # spectrum-in-cone cases have exactly zero residual
    x = np.arange(64) / 64.0
    from tartarlab.fields import ScalarField
    f = ScalarField(Grid(64), np.cos(2 * np.pi * 5 * x).reshape(64, 1) * np.ones((1, 64)))
    zero = cones.residual(f, cones.ConeSpec(2, 0.5, 32.0))
    const = PhaseField(Grid(64), np.full((64, 64), 2, dtype=np.uint8))
    rep0 = cones.verify_concentration(const, 0.25, 16.0,
                                      total_energy(const, mean_matrix(const), 1.0))
    ok = worst <= CONCENTRATION_CAP and zero == 0.0 and rep0.lhs == 0.0
    record(6, "cone concentration", ok,
           f"max ratio {worst:.4f} <= {CONCENTRATION_CAP} across the mu-grid; "
           f"in-cone residuals exactly zero")


# ---------------------------------------------------------------------------
# criterion 7: bootstrap integrity
# ---------------------------------------------------------------------------

def test_criterion_7_bootstrap_integrity(laminates_1024):
    p = cones.BootstrapParams(alpha=0.2, d=3, eps=1e-3)
    base = math.sqrt(2.0) * p.d
    sched = cones.mu_schedule(p, 12)
    sched_err = max(
        abs(v - base ** m * p.eps ** (-1 + m * p.alpha)) / v
        for m, v in zip(range(2, 13), sched)
    )
    term_ok = (cones.termination_m(0.2) == 4 and cones.termination_m(0.1) == 10
               and cones.termination_m(0.07) == 14)
    amp_ok = True
    low_ok = True
    for m in (1, 2, 3, 4):
        chi, bd = laminates_1024[m]
        rep = cones.bootstrap(chi, p, bd)
        amp = 4.0 * rep.empirical_C0 / p.gamma ** (2 * p.d)
        prev = rep.core
        for s in rep.steps:
            amp_ok &= (s.residual_f1 + s.residual_f2) <= amp * prev * (1 + 1e-12)
            prev = s.bound
        low_ok &= rep.satisfied()
        low = cones.low_mode_bound_check(chi, p, rep.empirical_C0, bd)
        low_ok &= low.satisfied
    ok = sched_err <= 1e-12 and term_ok and amp_ok and low_ok
    record(7, "bootstrap integrity", ok,
           f"schedule max rel err {sched_err:.1e}; termination exact: {term_ok}; "
           f"amplification holds: {amp_ok}; low-mode bound satisfied: {low_ok}")


# ---------------------------------------------------------------------------
# criterion 8: coupling exactness
# ---------------------------------------------------------------------------

def test_criterion_8_coupling_exactness(laminates_1024):
    rng = np.random.default_rng(808)
    fields_under_test = [laminates_1024[m][0] for m in (1, 2, 3, 4)]
    fields_under_test += [random_phase_field(Grid(32), rng) for _ in range(25)]
    fields_under_test += [PhaseField(Grid(8), np.full((8, 8), i, dtype=np.uint8))
                          for i in (1, 2, 3, 4)]
    exact = True
    for chi in fields_under_test:
        v11, v22 = diag_values(chi)
        exact &= bool(np.all(apply_g(v22) == v11))
        exact &= bool(np.all(apply_h(v11) == v22))
    zero_ok = eval_g(0) == 0 and eval_h(0) == 0
    record(8, "coupling exactness", exact and zero_ok,
           f"g(chi22) == chi11 and h(chi11) == chi22 with zero error on "
           f"{len(fields_under_test)} fields; g(0) = h(0) = 0 exactly")


# ---------------------------------------------------------------------------
# criterion 9: determinism of the command line reports
# ---------------------------------------------------------------------------

def test_criterion_9_determinism(tmp_path):
    pairs = []
    for name in ("s1", "s2"):
        out = tmp_path / name
        assert cli.main(["sweep", "--eps-grid=-8:-36:15", "--n-cap", "1024",
                         "--out", str(out)]) == 0
        pairs.append(out)
    sweep_same = all(
        (pairs[0] / f).read_bytes() == (pairs[1] / f).read_bytes()
        for f in ("sweep.csv", "fit.json", "sweep.svg")
    )
    boots = []
    for name in ("b1", "b2"):
        out = tmp_path / name
        assert cli.main(["bootstrap", "--n", "256", "--m", "2", "--r", "1/4",
                         "--alpha", "0.2", "--eps", "1e-3", "--out", str(out)]) == 0
        boots.append(out)
    boot_same = all(
        (boots[0] / f).read_bytes() == (boots[1] / f).read_bytes()
        for f in ("report.jsonl", "report.csv", "summary.json")
    )
    record(9, "determinism", sweep_same and boot_same,
           f"sweep outputs byte-identical: {sweep_same}; "
           f"bootstrap outputs byte-identical: {boot_same}")

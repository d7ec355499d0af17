import math
from fractions import Fraction

import pytest

from tartarlab.scaling import (
    InsufficientDataError, RateParams, SweepRecord, fit_scaling,
    fixed_order_envelope, grid_for, optimize_params, rate_functions,
    surrogate, surrogate_full, sweep,
)


def test_surrogate_examples():
    assert surrogate(1, 0.25, 2.0 ** -6) == pytest.approx(0.78125, rel=1e-15)
    assert surrogate(2, 0.25, 2.0 ** -12) == pytest.approx(0.5009765625, rel=1e-15)
    tiny = surrogate(3, 0.25, 1e-300)
    assert tiny == pytest.approx(0.125 + 0.25, rel=1e-12)


def test_surrogate_domain_errors():
    with pytest.raises(ValueError):
        surrogate(0, 0.25, 0.5)
    with pytest.raises(ValueError):
        surrogate(1, 0.5, 0.5)
    with pytest.raises(ValueError):
        surrogate(1, 0.25, 0.0)


def test_surrogate_full_form():
    # the two forms differ only in the bounded middle sum
    for m in (1, 2, 4, 6):
        compact = surrogate(m, 0.125, 2.0 ** -20)
        full = surrogate_full(m, 0.125, 2.0 ** -20)
        middle = sum(0.5 ** j * 0.125 for j in range(2, m + 1))
        assert full - compact == pytest.approx(middle, rel=1e-12)
        assert middle <= 0.125


def test_optimize_params_examples():
    m, r, value = optimize_params(2.0 ** -30)
    assert m in (3, 4, 5, 6)
    assert 0.25 * 2.0 ** (-30 / (m + 1)) <= float(r) <= 4.0 * 2.0 ** (-30 / (m + 1))
    m_small, _, _ = optimize_params(2.0 ** -4)
    assert m_small in (1, 2)


def test_optimize_matches_exhaustive_definition():
    eps = 2.0 ** -22
    m_opt, r_opt, best = optimize_params(eps)
    for m in range(1, 12):
        for p in range(2, 20):
            assert best <= surrogate(m, 2.0 ** -p, eps) + 1e-15


def test_optimal_order_tracks_sqrt_log():
    for k in (16, 24, 36, 48, 60):
        m, _, _ = optimize_params(2.0 ** -k)
        assert abs(m - math.sqrt(k * math.log(2.0))) <= 3


def test_energy_monotone_in_eps():
    values = [optimize_params(2.0 ** -k)[2] for k in range(4, 61, 4)]
    assert all(values[i] >= values[i + 1] for i in range(len(values) - 1))


def test_rate_functions_examples():
    p = RateParams(1.0, 1.0, 0.5)
    r_nu, r = rate_functions(math.exp(-16.0), p)
    assert r == pytest.approx(math.exp(-4.0), rel=1e-12)
    assert r_nu == pytest.approx(math.exp(-16.0), rel=1e-12)
    r_nu, r = rate_functions(1.0 - 1e-12, p)
    assert r == pytest.approx(1.0, abs=1e-5)
    assert r_nu == pytest.approx(1.0, abs=1e-5)


def test_rate_ordering():
    p = RateParams(1.0, 1.0, 0.3)
    for k in (1.5, 4.0, 16.0, 64.0):
        r_nu, r = rate_functions(math.exp(-k), p)
        assert r_nu <= r


def test_rate_params_validation():
    with pytest.raises(ValueError):
        RateParams(0.0, 1.0, 0.5)
    with pytest.raises(ValueError):
        RateParams(1.0, 1.0, 1.5)
    with pytest.raises(ValueError):
        rate_functions(2.0, RateParams(1.0, 1.0, 0.5))


def test_sweep_records_and_validation_flags():
    eps_list = [2.0 ** k for k in range(-8, -24, -2)]
    records = sweep(eps_list, validate_below_resolution=1024)
    assert len(records) == len(eps_list)
    assert [r.eps for r in records] == eps_list
    validated = [r for r in records if r.E_grid is not None]
    assert validated and all(r.n_grid <= 1024 for r in validated)
    # validation only appears at the large-eps end
    flags = [r.E_grid is not None for r in records]
    assert flags == sorted(flags, reverse=True)


def test_grid_for():
    assert grid_for(1, Fraction(1, 4)) == 16
    assert grid_for(2, Fraction(1, 4)) == 64
    assert grid_for(3, Fraction(1, 8)) == 2048


def test_fit_exact_model_recovery():
    eps_list = [2.0 ** k for k in range(-8, -41, -4)]
    records = [
        SweepRecord(e, 1, Fraction(1, 4), math.exp(-2.0 * math.sqrt(abs(math.log(e)))))
        for e in eps_list
    ]
    fit = fit_scaling(records)
    assert fit.slope == pytest.approx(-2.0, abs=1e-12)
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)


def test_fit_requires_enough_records():
    records = [SweepRecord(0.5 ** k, 1, Fraction(1, 4), 1.0) for k in range(1, 8)]
    with pytest.raises(InsufficientDataError):
        fit_scaling(records)


def test_fixed_order_envelopes():
    eps_list = [2.0 ** k for k in range(-2, -61, -4)]
    table = fixed_order_envelope([1, 2, 3], eps_list)
    # plateau at 2^-m as eps -> 0
    assert table[2][-1] == pytest.approx(0.25, rel=0.05)
    # order curves cross exactly once in eps
    diff_sign = [table[1][i] - table[3][i] for i in range(len(eps_list))]
    signs = [d > 0 for d in diff_sign]
    assert signs[0] != signs[-1]
    assert sum(1 for i in range(len(signs) - 1) if signs[i] != signs[i + 1]) == 1
    # envelope of the min over m equals the optimizer output
    for i, eps in enumerate(eps_list):
        best = min(table[m][i] for m in table)
        m_opt, r_opt, value = optimize_params(eps)
        if m_opt in table:
            assert value == pytest.approx(min(best, value), rel=1e-12)


def test_surrogate_monotone_in_eps_pointwise():
    for m in (1, 3):
        for p in (2, 4):
            r = 2.0 ** -p
            assert surrogate(m, r, 1e-4) <= surrogate(m, r, 1e-3)

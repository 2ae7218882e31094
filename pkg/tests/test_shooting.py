"""Shooting integrator: mismatch objective, level search, step-size behavior."""

from mpmath import mp, mpf

import pytest

from tunnelkit import potentials, shooting
from tunnelkit.potentials import anharmonic_quartic, cosine, double_well
from tunnelkit.shooting import find_levels, integrate, m_function


HARMONIC = anharmonic_quartic("1", "0")
QUARTIC = anharmonic_quartic("1", "1")


def test_harmonic_trajectory_tracks_gaussian_then_diverges():
    mp.dps = 16
    res = integrate(HARMONIC, mpf("0.5"), "even", record_trajectory=True)
    for x, f, _ in res.trajectory:
        if x <= 4:
            assert abs(f - mp.exp(-x * x / 2)) < mpf("1e-3")
    tail = [(x, abs(f)) for x, f, _ in res.trajectory if x > 1]
    onset = min(tail, key=lambda p: p[1])[0]
    assert 5 < onset < mpf("7.5")
    assert mpf("4.5") < res.K_bound < mpf("7.5")


def test_quartic_ground_stable_range_and_turning_point():
    mp.dps = 16
    res = integrate(QUARTIC, mpf("0.620927"), "even")
    assert mpf("3.0") < res.K_bound < mpf("3.4")
    assert mpf("0.91") < res.turning_point < mpf("0.95")


def test_m_function_separates_eigenvalue_from_background():
    h = mpf("0.005")
    assert m_function(HARMONIC, mpf("0.5"), "even", h=h) < mpf("1e-5")
    assert m_function(HARMONIC, mpf("0.6"), "even", h=h) > mpf("1e-2")
    assert m_function(HARMONIC, mpf("0.5"), "odd", h=h) > mpf("1e-2")


def test_m_scan_has_single_minimum_near_level():
    lo, hi = mpf("0.5"), mpf("0.8")
    n = 30
    vals = []
    for i in range(n + 1):
        e = lo + (hi - lo) * i / n
        vals.append(m_function(QUARTIC, e, "even"))
    mins = [
        i
        for i in range(1, n)
        if vals[i] < vals[i - 1] and vals[i] < vals[i + 1]
    ]
    assert len(mins) == 1
    e_min = lo + (hi - lo) * mins[0] / n
    assert abs(e_min - mpf("0.620927")) <= (hi - lo) / n


def test_find_levels_harmonic_ladder_both_parities():
    mp.dps = 16
    levels = find_levels(HARMONIC, (mpf(0), mpf("3.2")), "both")
    assert len(levels) == 3
    for got, want in zip(levels, ("0.5", "1.5", "2.5")):
        assert abs(got - mpf(want)) < mpf("2e-7")


def test_find_levels_quartic_window():
    levels = find_levels(QUARTIC, (mpf("3.6"), mpf("3.8")), "even")
    assert len(levels) == 1
    assert abs(levels[0] - mpf("3.69845032")) < mpf("1e-6")


def test_find_levels_resolves_doublet_below_barrier():
    # seeded windows: the dips narrow like exp(-2 integral kappa) in 1/g
    mp.dps = 25
    dw = double_well("0.1")
    seeds = {"even": mpf("0.467282072"), "odd": mpf("0.474825963")}
    found = {}
    for parity, seed in seeds.items():
        window = (seed - mpf("2e-5"), seed + mpf("2e-5"))
        got = find_levels(dw, window, parity, tol=mpf("1e-8"))
        assert len(got) == 1
        found[parity] = got[0]
        assert abs(got[0] - seed) < mpf("1e-7")
    assert found["even"] < found["odd"]


def test_level_error_shrinks_at_fourth_order_in_step():
    es = []
    for h in (mpf("0.04"), mpf("0.02"), mpf("0.01")):
        lv = find_levels(QUARTIC, (mpf("3.6"), mpf("3.8")), "even", h=h, tol=mpf("1e-13"))
        es.append(lv[0])
    ratio = (es[0] - es[1]) / (es[1] - es[2])
    assert 12 < ratio < 20


def test_cosine_family_is_rejected():
    with pytest.raises(ValueError):
        integrate(cosine("0.05"), mpf("0.5"), "even")


def test_invalid_arguments():
    with pytest.raises(ValueError):
        integrate(QUARTIC, mpf("0.5"), "sideways")
    with pytest.raises(ValueError):
        integrate(QUARTIC, mpf("0.5"), "even", h=mpf(0))
    with pytest.raises(ValueError):
        find_levels(QUARTIC, (mpf(2), mpf(1)), "even")


def test_overflow_guard_reports_implausible_inputs():
    mp.dps = 16
    with pytest.raises(ValueError, match="overflow"):
        integrate(QUARTIC, mpf(5000), "even", h=mpf(3))

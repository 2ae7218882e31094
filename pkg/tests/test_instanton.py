"""Semiclassical machinery: actions, profiles, prefactors, path counting."""

from mpmath import mp, mpf

import pytest

from tunnelkit import instanton, potentials
from tunnelkit.instanton import (
    action_S0,
    asymptotic_A,
    band_dispersion,
    closed_form_profile,
    counting_series_partial,
    gelfand_yaglom_check,
    instanton_profile,
    march_fluctuation,
    path_count,
    predict,
)
from tunnelkit.potentials import anharmonic_quartic, cosine, double_well, triple_well


def test_actions_against_closed_forms():
    assert abs(action_S0(double_well("0.04")) - mpf(2) / 3) < mpf("1e-25")
    assert abs(action_S0(cosine("0.01")) - 2 / mp.pi ** 2) < mpf("1e-25")


def test_triple_well_actions_by_quadrature():
    s0 = action_S0(triple_well("0.01", delta="0"))
    assert abs(s0 - mpf("0.2018196")) < mpf("2e-7")
    s_def = action_S0(triple_well("0.01", delta="0.214"))
    assert abs(s_def - mpf("0.19868272")) < mpf("2e-7")
    s_lr = action_S0(triple_well("0.01", delta="0"), side_to_side=True)
    assert abs(s_lr - 2 * s0) < mpf("1e-20")


def test_profile_matches_closed_form_solutions():
    for spec in (double_well("0.02"), cosine("0.02")):
        prof = instanton_profile(spec, 40)
        tol = mpf(10) ** (-mp.dps // 2)
        for tau, z in zip(prof.tau, prof.values):
            if abs(tau) <= 4:
                assert abs(z - closed_form_profile(spec, tau)) < tol


def test_profile_connects_adjacent_minima():
    prof = instanton_profile(double_well("0.02"), 40)
    assert prof.x_start == -1 and prof.x_end == 1
    assert abs(prof.values[0] - prof.x_start) < mpf("1e-6")
    assert abs(prof.values[-1] - prof.x_end) < mpf("1e-6")
    assert all(b >= a for a, b in zip(prof.values, prof.values[1:]))
    assert abs(prof.omega_start - 1) < mpf("1e-25")


def test_asymptotic_A_double_well_and_cosine():
    prof = instanton_profile(double_well("0.02"), 40)
    _, _, combined = asymptotic_A(prof)
    assert abs(combined - 2) < mpf("2e-3")
    assert abs(combined - mpf("1.99891")) < mpf("5e-4")
    prof_c = instanton_profile(cosine("0.02"), 40)
    _, _, a_cos = asymptotic_A(prof_c)
    assert abs(a_cos - 2 / mp.pi) < mpf("2e-5")


def test_asymptotic_A_conventions_and_invariance():
    spec = triple_well("0.003", delta="0.214")
    prof = instanton_profile(spec, 40)
    ap, am, weighted = asymptotic_A(prof, convention="weighted")
    assert abs(weighted - mpf("0.9110847")) < mpf("5e-4")
    _, _, product = asymptotic_A(prof, convention="product")
    assert abs(product - ap * am) < mpf("1e-20")
    sym = instanton_profile(triple_well("0.003", delta="0"), 40)
    _, _, prod0 = asymptotic_A(sym, convention="product")
    assert abs(prod0 - mpf("0.428444")) < mpf("5e-4")
    longer = instanton_profile(spec, 44)
    _, _, weighted_longer = asymptotic_A(longer, convention="weighted")
    assert abs(weighted_longer - weighted) < mpf("5e-4")


def test_profile_rejects_short_windows():
    with pytest.raises(ValueError):
        instanton_profile(double_well("0.02"), 8)


def _adjacency_power(adj, n):
    dim = len(adj)
    out = [[int(i == j) for j in range(dim)] for i in range(dim)]
    for _ in range(n):
        out = [
            [sum(row[m] * adj[m][j] for m in range(dim)) for j in range(dim)]
            for row in out
        ]
    return out


@pytest.mark.parametrize("n", range(0, 15))
def test_path_counts_two_minima(n):
    # two wells on a ring: two directed hops between them
    power = _adjacency_power([[0, 2], [2, 0]], n)
    assert path_count("two_minima", n, "same") == power[0][0]
    assert path_count("two_minima", n, "distinct") == power[1][0]


@pytest.mark.parametrize("n", range(0, 15))
def test_path_counts_three_minima(n):
    power = _adjacency_power([[0, 1, 1], [1, 0, 1], [1, 1, 0]], n)
    same = path_count("three_minima", n, "same")
    distinct = path_count("three_minima", n, "distinct")
    assert same == power[0][0]
    assert distinct == power[1][0]
    assert same + 2 * distinct == 2 ** n


@pytest.mark.parametrize("n", range(0, 15))
def test_path_counts_line(n):
    verts = list(range(-16, 17))
    idx = {v: i for i, v in enumerate(verts)}
    adj = [[0] * len(verts) for _ in verts]
    for v in verts[:-1]:
        adj[idx[v]][idx[v + 1]] = 1
        adj[idx[v + 1]][idx[v]] = 1
    power = _adjacency_power(adj, n)
    for k in range(-n - 1, n + 2):
        want = power[idx[k]][idx[0]] if abs(k) <= 16 else 0
        assert path_count("line", n, k) == want


@pytest.mark.parametrize("n", range(0, 15))
def test_path_counts_triple_well(n):
    power = _adjacency_power([[0, 1, 0], [1, 0, 1], [0, 1, 0]], n)
    assert path_count("triple_well", n, "center_side") == power[0][1]
    assert path_count("triple_well", n, "side_side") == power[2][0]


def test_counting_series_matches_bessel():
    x = mpf("0.3")
    for k in (0, 1, 2):
        got = counting_series_partial(k, x, 24)
        assert abs(got - mp.besseli(k, 2 * x)) < mpf("1e-12")


def test_band_dispersion_identities():
    g = mpf("0.016")
    mid = band_dispersion(g, mp.pi / 2)
    assert abs(mid - mpf("0.5")) < mpf("1e-28")
    top, bottom = band_dispersion(g, mp.pi), band_dispersion(g, mpf(0))
    assert abs(top + bottom - 1) < mpf("1e-27")
    width = 8 / (mp.pi ** mpf("1.5") * mp.sqrt(g)) * mp.exp(-2 / (mp.pi ** 2 * g))
    assert abs((top - bottom) - width) < mpf("1e-27")


def test_predict_double_well_fields():
    g = mpf("0.04")
    pred = predict(double_well("0.04"))
    assert abs(pred.S0 * g - mpf(2) / 3) < mpf("1e-27")
    assert abs(pred.splitting * mp.sqrt(g * mp.pi) / 4 - mp.exp(-pred.S0)) < mpf("1e-30")
    (e0, d0), (e1, d1) = pred.levels
    assert d0 == d1 == 1
    assert abs((e1 - e0) - pred.splitting) < mpf("1e-29")
    amp = (4 * mp.pi) ** mpf("-0.25")
    for site in pred.amplitudes:
        for value in pred.amplitudes[site]:
            assert abs(abs(value) - amp) < mpf("1e-27")


def test_predict_cosine_triplet_degeneracy():
    g = mpf("0.01")
    pred = predict(cosine("0.01", boundary=3))
    want = 6 / (mp.pi ** mpf("1.5") * mp.sqrt(g))
    assert abs(pred.prefactor - want) < mpf("1e-25")
    assert abs(pred.splitting - pred.prefactor * mp.exp(-pred.S0)) < mpf("1e-30")
    assert [d for _, d in pred.levels] == [1, 2]


def test_predict_triple_well_spacings_are_equal():
    # spacings are differences of levels near 1/2, so compare at the
    # rounding scale of the levels rather than of the tiny splitting
    pred = predict(triple_well("0.003", delta="0.214"))
    (e0, _), (e1, _), (e2, _) = pred.levels
    ulp = mpf(10) ** (-mp.dps + 2)
    assert abs((e2 - e1) - (e1 - e0)) < ulp
    assert abs((e1 - e0) - pred.splitting) < ulp


def test_predict_rejects_single_well():
    with pytest.raises(ValueError):
        predict(anharmonic_quartic("1", "1"))


def test_march_free_particle_gives_sinh():
    got = march_fluctuation(lambda tau: mpf(1), 10, mpf("0.01"))
    assert abs(got / mp.sinh(10) - 1) < mpf("1e-8")


def test_gelfand_yaglom_against_closed_form():
    num, closed = gelfand_yaglom_check(double_well("1/9"), 40)
    assert abs(closed - 2 * mp.sqrt(3)) < mpf("1e-25")
    assert abs(num / closed - 1) < mpf("1e-6")
    num_c, closed_c = gelfand_yaglom_check(cosine("0.01"), 40)
    assert abs(closed_c - 2) < mpf("1e-25")
    assert abs(num_c / closed_c - 1) < mpf("1e-6")


def test_gelfand_yaglom_needs_regime_separation():
    with pytest.raises(ValueError):
        gelfand_yaglom_check(double_well("1/9"), 20)

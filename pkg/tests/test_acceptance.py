"""End-to-end acceptance checks, one test per numbered criterion.

Each test exercises the public API the way a study would: build, solve,
compare against frozen reference values, and stay inside the stated
wall-clock budget. The terminal summary hook in conftest prints one
PASS/FAIL line per criterion.
"""

import time

import mpmath
from mpmath import mp, mpf

import pytest

from tunnelkit import analysis, cli, fock, instanton, planewave, shooting
from tunnelkit.potentials import (
    anharmonic_quartic,
    cosine,
    double_well,
    triple_well,
)

# quartic oscillator eps = g = 1: matrix-route and shooting-route
# reference energies, plus the relative drift the shooting column
# carries at the top of the window (integrator step error).
QUARTIC_MATRIX_REF = (
    "0.620927", "2.02597", "3.69845", "5.55758", "7.56842", "9.70915", "11.9645",
)
QUARTIC_SHOOT_REF = (
    "0.620927", "2.02597", "3.69845", "5.5576", "7.56935", "9.71146", "11.9697",
)
QUARTIC_SHOOT_DRIFT = (None, None, None, None, "1.22e-4", "2.38e-4", "4.32e-4")

DW_GRID = ("0.005", "0.00625", "0.008", "0.01", "0.0125", "0.02", "0.04")
COSINE_GRID = ("0.008", "0.01", "0.0125", "0.016", "0.02")
SIDE_GRID = ("0.004", "0.005", "0.00625", "0.008", "0.01", "0.02")

ALPHA_TARGET = mpf(71) / 48


def sig_match(value, ref: str, sig: int) -> bool:
    """True when value rounds to ref at sig significant figures (0.51 ulp)."""
    r = mpf(ref)
    ulp = mpf(10) ** (int(mp.floor(mp.log10(abs(r)))) - (sig - 1))
    return abs(value - r) <= mpf("0.51") * ulp


@pytest.fixture(scope="module")
def dw_scan():
    with mpmath.mp.workdps(30):
        t0 = time.monotonic()
        points = analysis.splitting_scan("double_well", DW_GRID, threads=4)
        wall = time.monotonic() - t0
    return {str(p.g): p for p in points}, wall


def _point(scan, g_str):
    return scan[str(mpf(g_str))]


def test_criterion_01_quartic_two_route_spectrum():
    t0 = time.monotonic()
    spec = anharmonic_quartic("1", "1")
    matrix_levels = fock.lowest_eigenvalues(fock.build_anharmonic("1", "1", "0", 40), 7)
    shoot_levels = shooting.find_levels(spec, (mpf(0), mpf("12.2")), "both")
    elapsed = time.monotonic() - t0

    assert len(matrix_levels.eigenvalues) == 7
    assert len(shoot_levels) == 7
    for e, ref in zip(matrix_levels.eigenvalues, QUARTIC_MATRIX_REF):
        assert sig_match(e, ref, 6)
    for e, ref, drift in zip(shoot_levels, QUARTIC_SHOOT_REF, QUARTIC_SHOOT_DRIFT):
        if drift is None:
            assert sig_match(e, ref, 5)
        else:
            # shooting reference rows 4-6 drift from the matrix values by
            # the recorded relative offsets; agreement is bounded by them
            assert abs(e - mpf(ref)) / mpf(ref) <= mpf("1.5") * mpf(drift)
    for e_m, e_s in zip(matrix_levels.eigenvalues[:4], shoot_levels[:4]):
        assert abs(e_m - e_s) / e_s <= mpf("1e-6")
    for e_m, e_s in zip(matrix_levels.eigenvalues, shoot_levels):
        assert abs(e_m - e_s) / e_s <= mpf("1e-6")
    assert elapsed < 120


def test_criterion_02_harmonic_limit_exact_ladder():
    t0 = time.monotonic()
    build = fock.build_anharmonic("1", "0", "0", 40)
    spectrum = fock.lowest_eigenvalues(build, 41)
    tol = mpf(10) ** (-mp.dps + 5)
    for n, e in enumerate(spectrum.eigenvalues):
        assert abs(e - (n + mpf("0.5"))) <= tol
    assert time.monotonic() - t0 < 60


def test_criterion_03_double_well_agreement_window(dw_scan):
    scan, wall = dw_scan
    for p in scan.values():
        assert p.error is None
    p04 = _point(scan, "0.04")
    assert p04.M_used == 40
    assert mpf("0.05") <= p04.rel_diff <= mpf("0.09")
    rels = [_point(scan, g).rel_diff for g in ("0.005", "0.01", "0.02", "0.04")]
    assert all(a < b for a, b in zip(rels, rels[1:]))
    assert wall < 600


def _planted_points(alpha, beta, gamma, g_strs):
    pts = []
    for g in g_strs:
        g = mpf(g)
        rel = alpha * g + beta * g**2 + gamma * g**3
        pts.append(
            analysis.ComparisonPoint(
                g=g,
                delta_e_num=mpf(1),
                delta_e_wkb=mpf(1),
                rel_diff=rel,
                M_used=0,
                digits_used=mp.dps,
                error=None,
            )
        )
    return pts


def test_criterion_04_correction_fit_recovers_cubic_slope(dw_scan):
    scan, _ = dw_scan
    pts = [_point(scan, g) for g in ("0.005", "0.00625", "0.008", "0.01", "0.0125")]
    fit = analysis.fit_corrections(pts)
    assert abs(fit.alpha - ALPHA_TARGET) <= mpf("0.02") * ALPHA_TARGET

    planted = _planted_points(ALPHA_TARGET, mpf(-2), mpf(5), SIDE_GRID)
    exact = analysis.fit_corrections(planted)
    assert abs(exact.alpha - ALPHA_TARGET) < mpf("1e-12")
    assert abs(exact.beta + 2) < mpf("1e-10")
    assert abs(exact.gamma - 5) < mpf("1e-8")


def test_criterion_05_periodic_two_and_three_well():
    refs = analysis.splitting_scan("cosine", ("0.011", "0.04"), K=2, threads=2)
    rel_011, rel_040 = refs[0].rel_diff, refs[1].rel_diff
    assert abs(rel_040 - mpf("0.20")) <= mpf("0.04")
    assert abs(rel_011 - mpf("0.05")) <= mpf("0.04")

    g = mpf("0.016")
    pred3 = instanton.predict(cosine("0.016", boundary=3))
    want = 6 / (mp.pi ** mpf("1.5") * mp.sqrt(g))
    assert abs(pred3.prefactor - want) <= mpf("1e-25")
    assert abs(pred3.splitting - pred3.prefactor * mp.exp(-pred3.S0)) <= mpf("1e-30")

    fit2 = analysis.fit_corrections(
        analysis.splitting_scan("cosine", COSINE_GRID, K=2, threads=4)
    )
    fit3 = analysis.fit_corrections(
        analysis.splitting_scan("cosine", COSINE_GRID, K=3, threads=4)
    )
    gap = abs(fit3.alpha - fit2.alpha)
    assert gap <= 3 * (fit2.errors[0] + fit3.errors[0])


def test_criterion_06_band_structure_identities():
    t0 = time.monotonic()
    profiles = {K: planewave.band_profile(K, "0.05") for K in (2, 3, 4, 5, 6, 8)}
    lows = [profiles[K][0][1] for K in (2, 3, 4, 6, 8)]
    assert max(lows) - min(lows) <= mpf("1e-25")
    tops = {K: profiles[K][-1][1] for K in profiles}
    even_tops = [tops[K] for K in (2, 4, 6, 8)]
    assert max(even_tops) - min(even_tops) <= mpf("1e-25")
    assert tops[3] < min(even_tops) - mpf("1e-9")
    assert tops[5] < min(even_tops) - mpf("1e-9")

    def residual(g_str):
        g = mpf(g_str)
        prof = planewave.band_profile(200, g_str)
        mid_theta, mid_e = prof[50]
        assert abs(mid_theta - mp.pi / 2) <= mpf("1e-25")
        width = instanton.band_dispersion(g, mp.pi) - instanton.band_dispersion(g, 0)
        return max(abs(2 * (e - mid_e) / width + mp.cos(th)) for th, e in prof)

    r_coarse = residual("0.016")
    assert r_coarse <= mpf("0.1")
    assert residual("0.008") < r_coarse
    assert time.monotonic() - t0 < 300


def _walk_counts(neighbors, node, steps):
    """Endpoint histogram of every length-n edge walk, by enumeration."""
    if steps == 0:
        return {node: 1}
    out = {}
    for nxt in neighbors(node):
        for end, c in _walk_counts(neighbors, nxt, steps - 1).items():
            out[end] = out.get(end, 0) + c
    return out


def test_criterion_07_path_counting_exact():
    double_edge = {0: (1, 1), 1: (0, 0)}.__getitem__
    triangle = {0: (1, 2), 1: (0, 2), 2: (0, 1)}.__getitem__

    def line(x):
        return (x - 1, x + 1)

    for n in range(15):
        ends = _walk_counts(double_edge, 0, n)
        assert instanton.path_count("two_minima", n, "same") == ends.get(0, 0)
        assert instanton.path_count("two_minima", n, "distinct") == ends.get(1, 0)
        ends = _walk_counts(triangle, 0, n)
        assert instanton.path_count("three_minima", n, "same") == ends.get(0, 0)
        assert instanton.path_count("three_minima", n, "distinct") == ends.get(1, 0)
        assert ends.get(1, 0) == ends.get(2, 0)
        ends = _walk_counts(line, 0, n)
        for k in range(-n, n + 1):
            assert instanton.path_count("line", n, k) == ends.get(k, 0)

    for k in (0, 1, 2):
        series = instanton.counting_series_partial(k, "0.3", 40)
        assert abs(series - mp.besseli(k, mpf("0.6"))) <= mpf("1e-12")


def test_criterion_08_triple_well_semiclassics():
    s0_sym = instanton.action_S0(triple_well("0.01", delta="0"))
    s0_def = instanton.action_S0(triple_well("0.01", delta="0.214"))
    assert abs(s0_sym - mpf("0.2019")) <= mpf("2e-4")
    assert abs(s0_def - mpf("0.1987")) <= mpf("2e-4")

    prof_sym = instanton.instanton_profile(triple_well("0.003", delta="0"), 40)
    _, _, product = instanton.asymptotic_A(prof_sym, convention="product")
    assert abs(product - mpf("0.4284")) <= mpf("0.002")
    prof_def = instanton.instanton_profile(triple_well("0.003", delta="0.214"), 40)
    _, _, weighted = instanton.asymptotic_A(prof_def, convention="weighted")
    assert abs(weighted - mpf("0.9119")) <= mpf("0.002")

    # Known red: the side pair tunnels through a center level detuned
    # by O(g), so its true prefactor power is ~g^-2, not the model's
    # g^-1/2; forcing the model biases the fitted slope to 0.3931 on
    # this grid (freeing the power recovers 0.4025..0.4032). No grid
    # inside [0.004, 0.02] gets the biased fit within 1%.
    pairs = analysis.side_pair_splittings(SIDE_GRID, delta="0", threads=4)
    _, slope = analysis.exp_law_fit(pairs)
    assert abs(slope - mpf("0.4036")) <= mpf("0.01") * mpf("0.4036")


def test_criterion_09_resonant_center_well():
    t0 = time.monotonic()
    _, lv1 = analysis.find_delta_c("0.01")
    ratio = (lv1[2] - lv1[1]) / (lv1[1] - lv1[0])
    assert abs(ratio - 1) <= mpf("0.001")

    # M = 400 keeps the basis at the density measured converged to
    # 1e-12 in delta_c at g = 0.01 (M*g = 1.2); the basis tail shrinks
    # further as g falls at fixed M*g, and the lean basis keeps this
    # single-core search inside the wall-clock budget
    dc3, lv3 = analysis.find_delta_c("0.003", M=400)
    pred = instanton.predict(triple_well("0.003", delta=str(dc3)))
    spacing = (lv3[2] - lv3[0]) / 2
    rel = (pred.splitting - spacing) / pred.splitting
    assert abs(rel) <= mpf("0.05")
    assert time.monotonic() - t0 < 1800


def test_criterion_10_determinant_cross_check():
    # the reduced fluctuation problem is the same for every well
    # separation; both couplings exercise the same closed form
    for g in ("1/9", "1/16"):
        spec = double_well(g)
        numeric, closed = instanton.gelfand_yaglom_check(spec, 40)
        assert abs(numeric / closed - 1) <= mpf("0.01")
        doubled, _ = instanton.gelfand_yaglom_check(spec, 80)
        assert abs(doubled / numeric - 1) < mpf("0.001")


def _cli_csv(tmp_path, name, args, threads):
    out = tmp_path / name
    code = cli.main(args + ["--threads", str(threads), "--output", str(out)])
    assert code == 0
    return out.read_bytes()


def test_criterion_11_thread_determinism(tmp_path):
    runs = {
        "split": ["splitting", "--family", "double_well", "--g-grid", "0.02,0.04"],
        "band": ["band", "--K", "16", "--g", "0.05"],
    }
    for name, args in runs.items():
        single = _cli_csv(tmp_path, name + "1.csv", args, 1)
        pooled = _cli_csv(tmp_path, name + "4.csv", args, 4)
        assert single == pooled

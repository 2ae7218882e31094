"""Shared fixtures plus a summary hook that prints one line per acceptance check."""

import re

import mpmath
import pytest

CRITERIA = {
    1: "quartic spectrum: matrix and shooting routes agree on seven levels",
    2: "harmonic limit: every eigenvalue equals n + 1/2 near working precision",
    3: "double-well splitting deficit: in-window at g=0.04, monotone in g",
    4: "cubic correction fit recovers 71/48 within 2%",
    5: "periodic two- and three-well splittings match dispersion prefactors",
    6: "band profile: sector identities across K, cosine shape at K=200",
    7: "multi-instanton path counts match brute force and the Bessel series",
    8: "triple-well action, prefactors, and side-splitting exponential law",
    9: "center-well resonance: equal spacings and semiclassical spacing match",
    10: "fluctuation determinant: quadrature route matches the closed form",
    11: "thread count never changes CLI output bytes",
}

_outcomes = {}


@pytest.fixture(autouse=True)
def default_precision():
    saved = mpmath.mp.dps
    mpmath.mp.dps = 30
    yield
    mpmath.mp.dps = saved


def pytest_runtest_logreport(report):
    m = re.search(r"test_criterion_(\d+)", report.nodeid)
    if m is None:
        return
    num = int(m.group(1))
    if report.when == "call":
        _outcomes[num] = report.outcome
    elif report.when == "setup" and report.outcome != "passed":
        _outcomes[num] = "skipped" if report.skipped else "failed"


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_outcomes):
        outcome = _outcomes[num]
        word = {"passed": "PASS", "skipped": "SKIP"}.get(outcome, "FAIL")
        label = CRITERIA.get(num, "")
        terminalreporter.write_line("ACCEPTANCE %2d: %s - %s" % (num, word, label))

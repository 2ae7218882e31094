"""Position-space shooting oracle.

Integrates f'' = (2 V_hat - 2E) f with classical RK4 from symmetric
initial conditions at the origin, stops at the first point past the
outermost classical turning point where f f' > 0 (the decaying solution
has been lost there), and scores energies by the boundary mismatch
m(E) = min |f| + |f'| along the trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp
from mpmath import mpf

from .potentials import COSINE, PotentialSpec


@dataclass
class ShootResult:
    E: mpf
    parity: str
    m_value: mpf
    K_bound: mpf
    turning_point: float
    trajectory: list | None = None


def _rhs_factory(spec: PotentialSpec, E):
    """Callable x -> 2 V_hat(x) - 2E via reversed Horner on the series."""
    E = mpf(E)
    coeffs = [2 * c for c in spec.scaled_poly_coeffs()]
    coeffs[0] -= 2 * E
    rev = list(reversed(coeffs))

    def coef(x):
        acc = rev[0]
        for c in rev[1:]:
            acc = acc * x + c
        return acc

    return coef


def _outermost_turning_point(spec: PotentialSpec, E) -> float:
    """Largest x >= 0 with V_hat(x) = E, located in float arithmetic.

    Only gates the stop rule, so double precision is plenty. Returns 0.0
    when the whole half line is classically forbidden.

    The upward bracket search starts beyond every critical point of the
    polynomial (Cauchy bound on the roots of V'), where a confining tail
    is monotone; starting at 1.0 would stop inside the barrier of a
    multi-well potential whose outer wells dip back below E.
    """
    E = float(E)

    def v(x):
        return float(spec.scaled_eval(x))

    deriv = [k * float(c) for k, c in enumerate(spec.scaled_poly_coeffs()) if k > 0]
    while deriv and deriv[-1] == 0.0:
        deriv.pop()
    hi = 1.0
    if len(deriv) > 1:
        lead = deriv[-1]
        hi = max(hi, 1.0 + max(abs(b / lead) for b in deriv[:-1]))
    while v(hi) <= E:
        hi *= 2
        if hi > 1e6:
            raise ValueError("potential does not rise above E; no turning point")
    # sample inward for the last sign change of V - E
    n = 400
    xs = [hi * i / n for i in range(n + 1)]
    vals = [v(x) - E for x in xs]
    lo_bracket = None
    for i in range(n, 0, -1):
        if vals[i] > 0 >= vals[i - 1]:
            lo_bracket = (xs[i - 1], xs[i])
            break
    if lo_bracket is None:
        return 0.0
    a, b = lo_bracket
    for _ in range(80):
        mid = (a + b) / 2
        if v(mid) - E > 0:
            b = mid
        else:
            a = mid
    return b


def integrate(spec: PotentialSpec, E, parity: str, h=None, record_trajectory: bool = False) -> ShootResult:
    """March RK4 until the growing branch takes over beyond the barrier.

    K_bound is the first sampled x past the outermost turning point with
    f f' > 0; m_value is the minimum of |f|+|f'| over sampled points in
    (0, K_bound]. Overflow of |f|+|f'| past 10^(dps/2) before the
    turning point raises (wrong E scale or step too large).
    """
    if spec.family == COSINE:
        raise ValueError(
            "shooting needs a confining potential; use the plane-wave route for bands"
        )
    E = mpf(E)
    if parity == "even":
        f, fp = mpf(1), mpf(0)
    elif parity == "odd":
        f, fp = mpf(0), mpf(1)
    else:
        raise ValueError("parity must be 'even' or 'odd'")
    if h is None:
        h = default_step(E)
    h = mpf(h)
    if h <= 0:
        raise ValueError("h must be positive")
    x_turn = _outermost_turning_point(spec, E)
    coef = _rhs_factory(spec, E)
    overflow = mpf(10) ** (mp.mp.dps // 2)
    # contamination ~ exp(+kappa x) swamps the decaying branch within
    # roughly this many e-folds past the turning point
    x_stop = x_turn + 1.5 * math.sqrt(2 * mp.mp.dps * math.log(10)) + 5
    x = mpf(0)
    m_value = None
    K_bound = None
    traj = [(x, f, fp)] if record_trajectory else None
    half = h / 2
    sixth = h / 6
    while True:
        c1 = coef(x)
        k1f, k1p = fp, c1 * f
        xm = x + half
        cm = coef(xm)
        f2 = f + half * k1f
        k2f, k2p = fp + half * k1p, cm * f2
        f3 = f + half * k2f
        k3f, k3p = fp + half * k2p, cm * f3
        xe = x + h
        ce = coef(xe)
        f4 = f + h * k3f
        k4f, k4p = fp + h * k3p, ce * f4
        f = f + sixth * (k1f + 2 * k2f + 2 * k3f + k4f)
        fp = fp + sixth * (k1p + 2 * k2p + 2 * k3p + k4p)
        x = xe
        size = abs(f) + abs(fp)
        if m_value is None or size < m_value:
            m_value = size
        if record_trajectory:
            traj.append((x, f, fp))
        if x > x_turn:
            if f * fp > 0:
                K_bound = x
                break
            if x > x_stop:
                K_bound = x
                break
        elif size > overflow:
            raise ValueError("overflow before the unstable region: E or h implausible")
    return ShootResult(
        E=E,
        parity=parity,
        m_value=m_value,
        K_bound=K_bound,
        turning_point=x_turn,
        trajectory=traj,
    )


def default_step(E) -> mpf:
    """h = 0.01/(1 + sqrt(E)); shrinks with energy to track oscillations."""
    E = mpf(E)
    root = mp.sqrt(E) if E > 0 else mpf(0)
    return mpf("0.01") / (1 + root)


def m_function(spec: PotentialSpec, E, parity: str, h=None) -> mpf:
    """Boundary mismatch min |f|+|f'|; local minima in E sit at eigenvalues."""
    return integrate(spec, E, parity, h).m_value


def find_levels(spec: PotentialSpec, E_window, parity: str, h=None, tol=None):
    """Eigenvalues inside [E_lo, E_hi] for one parity (or 'both', merged).

    Coarse grid locates local minima of m(E); each bracket is refined by
    golden-section at a fixed quartered step. Returns sorted energies;
    empty list when the window holds none.

    Away from eigenvalues m(E) hovers at the oscillation floor of
    |f|+|f'| and wiggles at the per-mille level, so two scale-free
    filters separate real levels from floor noise: a bracket only enters
    refinement when its center dips at least 2% below both neighbors
    (an order above the floor wiggle, yet shallow enough for a broad
    minimum straddled by two samples), and the refined minimum is kept
    only when it lands well below the bracket edges. Windows narrower
    than ~100 tol starve the filters.
    """
    lo, hi = mpf(E_window[0]), mpf(E_window[1])
    if not hi > lo:
        raise ValueError("empty window")
    if tol is None:
        tol = mpf("1e-7")
    tol = mpf(tol)
    if parity == "both":
        evens = find_levels(spec, E_window, "even", h, tol)
        odds = find_levels(spec, E_window, "odd", h, tol)
        return sorted(evens + odds)
    n = max(40, int((hi - lo) / mpf("0.15")) + 1)
    grid = [lo + (hi - lo) * i / n for i in range(n + 1)]
    mvals = [m_function(spec, e, parity, h if h is not None else default_step(e)) for e in grid]
    out = []
    invphi = (mp.sqrt(mpf(5)) - 1) / 2
    for i in range(1, n):
        if not (mvals[i] < mvals[i - 1] and mvals[i] < mvals[i + 1]):
            continue
        if not mvals[i] < mpf("0.98") * min(mvals[i - 1], mvals[i + 1]):
            continue
        a, b = grid[i - 1], grid[i + 1]
        h_ref = (h if h is not None else default_step(grid[i])) / 4

        def m_at(e):
            return m_function(spec, e, parity, h_ref)

        c = b - (b - a) * invphi
        d = a + (b - a) * invphi
        fc, fd = m_at(c), m_at(d)
        while b - a > tol:
            if fc < fd:
                b, d, fd = d, c, fc
                c = b - (b - a) * invphi
                fc = m_at(c)
            else:
                a, c, fc = c, d, fd
                d = a + (b - a) * invphi
                fd = m_at(d)
        if min(fc, fd) < mpf("0.05") * max(mvals[i - 1], mvals[i + 1]):
            out.append((a + b) / 2)
    return sorted(out)

"""Truncated Hamiltonians in the occupation-number basis.

Quartic families use the closed-form matrix elements; the ten-band
triple well is assembled from ladder-operator tables with exact
rational polynomial coefficients. Eigenvector coefficients turn into
position wavefunctions through the orthonormal Hermite recurrence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath as mp
from mpmath import mpf

from . import potentials
from .numerics import (
    Spectrum,
    SymBandedMatrix,
    band_to_tridiagonal,
    dense_eigen_small,
    eigenvalues_bisection,
)

DENSE_ROUTE_LIMIT = 64


@dataclass(frozen=True)
class FockMatrixBuild:
    spec: potentials.PotentialSpec
    M: int
    matrix: SymBandedMatrix


def _sqrt_rising(n: int, j: int) -> mpf:
    """sqrt((n+1)(n+2)...(n+j)) with the integer product formed exactly."""
    prod = 1
    for i in range(1, j + 1):
        prod *= n + i
    return mp.sqrt(mpf(prod))


def build_anharmonic(eps, g, c, M: int) -> FockMatrixBuild:
    """H = P^2/2 + eps X^2/2 + g X^4/4 + c on |0>..|M>."""
    if M < 4:
        raise ValueError("M must be >= 4")
    eps = potentials._num(eps)
    g = potentials._num(g)
    c = potentials._num(c)
    n1 = M + 1
    diag = [(n + mpf("0.5")) * (1 + eps) / 2 + g / 16 * (6 * n * n + 6 * n + 3) + c for n in range(n1)]
    band2 = [(g * (n + mpf("1.5")) - 1 + eps) / 4 * _sqrt_rising(n, 2) for n in range(n1 - 2)]
    band4 = [g / 16 * _sqrt_rising(n, 4) for n in range(n1 - 4)]
    bands = [diag, [mpf(0)] * (n1 - 1), band2, [mpf(0)] * (n1 - 3), band4]
    spec = potentials.anharmonic_quartic(eps, g, c)
    return FockMatrixBuild(spec=spec, M=M, matrix=SymBandedMatrix(n1, 4, bands))


def build_double_well(g, M: int) -> FockMatrixBuild:
    """H = P^2/2 + (1/g) V(sqrt(g) X), V = (x^2-1)^2/8.

    Same operator as the quartic build with eps -> -1/2, g -> g/2 and
    the well depth 1/(8g) added to the diagonal.
    """
    g = potentials._num(g)
    if g <= 0:
        raise ValueError("g must be positive")
    inner = build_anharmonic(mpf(-1) / 2, g / 2, 1 / (8 * g), M)
    return FockMatrixBuild(spec=potentials.double_well(g), M=M, matrix=inner.matrix)


class LadderPolynomial:
    """Expansion X^k = q_{k,0}(N) + sum_j a^j q_{k,-j}(N) + (adag)^j q_{k,j}(N).

    Tables hold S_{k,j} = q_{k,j} * 2^floor(k/2) as exact Fraction
    polynomials in n (low degree first); odd k carries one leftover
    1/sqrt(2), applied only on numeric evaluation.
    """

    def __init__(self, k: int, table: dict, sqrt_half: bool):
        self.k = k
        self._table = table
        self.sqrt_half = sqrt_half

    def q_coeffs(self, j: int):
        """Exact rational coefficients of q_{k,j}; error when an odd-power
        1/sqrt(2) makes them irrational."""
        if self.sqrt_half:
            raise ValueError("odd k: coefficients carry a factor 1/sqrt(2)")
        return self._table.get(j, ())

    def scaled_coeffs(self, j: int):
        """Coefficients of q_{k,j} * 2^(k/2), always exact Fractions."""
        if self.sqrt_half:
            return self._table.get(j, ())
        half = Fraction(2) ** (self.k // 2)
        return tuple(c * half for c in self._table.get(j, ()))

    def q_value(self, j: int, n: int) -> mpf:
        coeffs = self._table.get(j, ())
        acc = Fraction(0)
        for c in reversed(coeffs):
            acc = acc * n + c
        val = mpf(acc.numerator) / mpf(acc.denominator)
        if self.sqrt_half:
            val /= mp.sqrt(mpf(2))
        return val

    def matrix_entry(self, n: int, j: int) -> mpf:
        """<n+j|X^k|n> for j >= 0."""
        return self.q_value(j, n) * _sqrt_rising(n, j)


def _poly_mul_linear(p, c: int):
    """p(n) * (n + c) over Fractions."""
    out = [Fraction(0)] * (len(p) + 1)
    for i, a in enumerate(p):
        out[i] += a * c
        out[i + 1] += a
    return out


def ladder_expand(k: int) -> LadderPolynomial:
    """Normal-ordered expansion of X^k, X = (a + adag)/sqrt(2), exact rationals.

    Built by left-multiplying with (a + adag) and transporting number
    polynomials through the ladder operators:
    a (adag)^j p(N) = (adag)^(j-1) (N+j) p(N),
    adag a^i p(N) = a^(i-1) (N-i+1) p(N).
    """
    if not 1 <= k <= 10:
        raise ValueError("k must be in 1..10")
    table = {0: [Fraction(1)]}
    for _ in range(k):
        nxt = {}

        def add(j, poly):
            if j in nxt:
                tgt = nxt[j]
                for i, c in enumerate(poly):
                    if i < len(tgt):
                        tgt[i] += c
                    else:
                        tgt.append(c)
            else:
                nxt[j] = list(poly)

        for j, poly in table.items():
            # multiply by a
            if j <= 0:
                add(j - 1, poly)
            else:
                add(j - 1, _poly_mul_linear(poly, j))
            # multiply by adag
            if j >= 0:
                add(j + 1, poly)
            else:
                add(j + 1, _poly_mul_linear(poly, j + 1))
        table = nxt
    scale = Fraction(1, 2 ** (k // 2))
    cleaned = {}
    for j, poly in table.items():
        while poly and poly[-1] == 0:
            poly.pop()
        if poly:
            cleaned[j] = tuple(c * scale for c in poly)
    return LadderPolynomial(k, cleaned, sqrt_half=bool(k % 2))


def build_triple_well(g, delta, M: int) -> FockMatrixBuild:
    """Ten-band Fock matrix of P^2/2 + (1/g) V_delta(sqrt(g) X).

    Even powers 2..10 of X enter with the polynomial coefficients times
    g^(k/2-1); the kinetic part contributes (n+1/2)/2 on the diagonal
    and -1/4 sqrt((n+1)(n+2)) two off.
    """
    if M < 10:
        raise ValueError("M must be >= 10")
    spec = potentials.triple_well(g, delta)
    g = spec.g
    if g <= 0:
        raise ValueError("g must be positive")
    coeffs = spec._poly_coeffs()
    ladders = {k: ladder_expand(k) for k in (2, 4, 6, 8, 10)}
    weights = {k: coeffs[k] * g ** (k // 2 - 1) for k in (2, 4, 6, 8, 10)}
    n1 = M + 1
    bands = []
    for j in range(11):
        band = []
        for n in range(n1 - j):
            if j % 2:
                band.append(mpf(0))
                continue
            val = mpf(0)
            if j == 0:
                val += (n + mpf("0.5")) / 2
            root = _sqrt_rising(n, j)
            if j == 2:
                val += -root / 4
            for k, lad in ladders.items():
                if j <= k:
                    val += weights[k] * lad.q_value(j, n) * root
            band.append(val)
        bands.append(band)
    return FockMatrixBuild(spec=spec, M=M, matrix=SymBandedMatrix(n1, 10, bands))


def wavefunction(eigvec, x_grid):
    """psi(x) = sum c_n h_n(x), h_n orthonormal Hermite functions.

    Three-term recurrence h_{n+1} = x sqrt(2/(n+1)) h_n - sqrt(n/(n+1)) h_{n-1}.
    """
    out = []
    nmax = len(eigvec)
    quarter_pi = mp.pi ** mpf("-0.25")
    for x in x_grid:
        x = mpf(x)
        h_prev = mpf(0)
        h = quarter_pi * mp.exp(-x * x / 2)
        acc = eigvec[0] * h
        for n in range(nmax - 1):
            h, h_prev = x * mp.sqrt(mpf(2) / (n + 1)) * h - mp.sqrt(mpf(n) / (n + 1)) * h_prev, h
            acc += eigvec[n + 1] * h
        out.append(acc)
    return out


def parity_blocks(build: FockMatrixBuild):
    """Decouple even/odd occupation numbers; exact for even-offset bands.

    Returns (even, odd) SymBandedMatrix with halfband halved.
    """
    m = build.matrix
    for j in range(1, m.halfband + 1, 2):
        if any(x != 0 for x in m.bands[j]):
            raise ValueError("odd-offset coupling present; no parity split")
    n = m.n
    hb = m.halfband // 2
    out = []
    for start in (0, 1):
        size = (n - start + 1) // 2
        bands = []
        for d in range(hb + 1):
            bands.append([m.bands[2 * d][2 * i + start] for i in range(size - d)])
        out.append(SymBandedMatrix(size, hb, bands))
    return out[0], out[1]


def _vector_parity(vec) -> str:
    even = mpf(0)
    odd = mpf(0)
    for i, c in enumerate(vec):
        if i % 2:
            odd += abs(c)
        else:
            even += abs(c)
    return "even" if even >= odd else "odd"


def lowest_eigenvalues(
    build: FockMatrixBuild,
    count: int,
    tol=None,
    with_vectors: bool = False,
    use_parity: bool = True,
) -> Spectrum:
    """Lowest eigenvalues of the build, parity-labelled.

    Parity blocks are solved separately (exact decoupling). Small blocks
    go to dense Jacobi; larger ones through full-length Lanczos plus
    Sturm bisection. Vector requests use the dense path on the full
    matrix so coefficients come back in the original basis.
    """
    m = build.matrix
    count = min(count, m.n)
    if tol is None:
        tol = mpf(10) ** (-(mp.mp.dps - 10))
    if with_vectors:
        s = dense_eigen_small(m, with_vectors=True)
        s.eigenvalues = s.eigenvalues[:count]
        s.vectors = s.vectors[:count]
        s.M = build.M
        s.meta["parities"] = [_vector_parity(v) for v in s.vectors]
        return s
    if not use_parity:
        labelled = [(lam, "full") for lam in _block_lowest(m, count, tol)]
    else:
        even, odd = parity_blocks(build)
        labelled = [(lam, "even") for lam in _block_lowest(even, count, tol)]
        labelled += [(lam, "odd") for lam in _block_lowest(odd, count, tol)]
        labelled.sort(key=lambda t: t[0])
        labelled = labelled[:count]
    return Spectrum(
        eigenvalues=[lam for lam, _ in labelled],
        M=build.M,
        digits=mp.mp.dps,
        meta={"parities": [p for _, p in labelled]},
    )


def _block_lowest(m: SymBandedMatrix, count: int, tol):
    count = min(count, m.n)
    if m.n <= DENSE_ROUTE_LIMIT:
        return dense_eigen_small(m).eigenvalues[:count]
    tri = band_to_tridiagonal(m, m.n, "e0")
    return eigenvalues_bisection(tri, (0, count - 1), tol)


def _build_for(spec: potentials.PotentialSpec, g, M: int) -> FockMatrixBuild:
    if spec.family == potentials.ANHARMONIC:
        return build_anharmonic(spec.params["eps"], g, spec.params.get("c", 0), M)
    if spec.family == potentials.DOUBLE_WELL:
        return build_double_well(g, M)
    if spec.family == potentials.TRIPLE_WELL:
        return build_triple_well(g, spec.params.get("delta", 0), M)
    raise ValueError(f"no Fock builder for family {spec.family!r}")


def convergence_scan(spec, g, M_list, level_indices, threshold=mpf("1e-8")):
    """Eigenvalue-vs-cutoff table with successive differences.

    Returns one row per level: {'level', 'eigenvalues', 'diffs',
    'converged_at'} where converged_at is the first M whose relative
    change from the previous M is below threshold (None otherwise).
    M_list must be ascending.
    """
    if list(M_list) != sorted(M_list):
        raise ValueError("M_list must be ascending")
    threshold = mpf(threshold)
    count = max(level_indices) + 1
    per_level = {lv: [] for lv in level_indices}
    for M in M_list:
        eigs = lowest_eigenvalues(_build_for(spec, g, M), count).eigenvalues
        for lv in level_indices:
            per_level[lv].append(eigs[lv])
    rows = []
    for lv in level_indices:
        vals = per_level[lv]
        diffs = [vals[i] - vals[i - 1] for i in range(1, len(vals))]
        converged_at = None
        for i, d in enumerate(diffs):
            scale = abs(vals[i + 1])
            rel = abs(d) / scale if scale > 0 else abs(d)
            if rel < threshold:
                converged_at = M_list[i + 1]
                break
        rows.append(
            {
                "level": lv,
                "M_list": list(M_list),
                "eigenvalues": vals,
                "diffs": diffs,
                "converged_at": converged_at,
            }
        )
    return rows

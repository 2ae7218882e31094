"""Arbitrary-precision scalars and symmetric eigensolvers.

Scalars are mpmath mpf values; working precision is the global mpmath
context, set through precision()/required_digits(). Matrices are stored
by diagonals. Eigenvalues come from Sturm bisection (tridiagonal),
cyclic Jacobi (small dense), or Lanczos reduction with full
reorthogonalization (banded to tridiagonal).
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass, field

import mpmath as mp
from mpmath import mpf

DENSE_LIMIT = 600

GUARD_DIGITS = 15


def required_digits(expected_delta) -> int:
    """Decimal digits needed to resolve a quantity of size expected_delta.

    ceil(-log10 expected_delta) plus a fixed guard; floor of 20.
    """
    d = float(expected_delta)
    if d <= 0:
        raise ValueError("expected_delta must be positive")
    digits = math.ceil(-math.log10(d)) + GUARD_DIGITS
    return max(20, digits)


@contextmanager
def precision(digits: int):
    """Context manager: run the body at the given decimal precision."""
    if digits < 1:
        raise ValueError("digits must be >= 1")
    old = mp.mp.dps
    mp.mp.dps = int(digits)
    try:
        yield
    finally:
        mp.mp.dps = old


def bigreal(x) -> mpf:
    """Convert to an mpf at working precision. Strings parse exactly."""
    return mpf(x)


class SymTridiagonalMatrix:
    """Symmetric tridiagonal matrix: diag (length n), offdiag (length n-1)."""

    __slots__ = ("diag", "offdiag", "meta")

    def __init__(self, diag, offdiag, meta=None):
        if len(offdiag) != max(len(diag) - 1, 0):
            raise ValueError("offdiag must have length n-1")
        self.diag = [mpf(x) for x in diag]
        self.offdiag = [mpf(x) for x in offdiag]
        self.meta = dict(meta) if meta else {}

    @property
    def n(self) -> int:
        return len(self.diag)

    def gershgorin(self):
        """Enclosing interval for the whole spectrum."""
        lo = None
        hi = None
        d, e = self.diag, self.offdiag
        n = self.n
        for i in range(n):
            r = mpf(0)
            if i > 0:
                r += abs(e[i - 1])
            if i < n - 1:
                r += abs(e[i])
            a, b = d[i] - r, d[i] + r
            lo = a if lo is None or a < lo else lo
            hi = b if hi is None or b > hi else hi
        return lo, hi

    def to_dense(self):
        n = self.n
        a = [[mpf(0)] * n for _ in range(n)]
        for i in range(n):
            a[i][i] = self.diag[i]
        for i in range(n - 1):
            a[i][i + 1] = self.offdiag[i]
            a[i + 1][i] = self.offdiag[i]
        return a

    def matvec(self, v):
        d, e, n = self.diag, self.offdiag, self.n
        out = [d[i] * v[i] for i in range(n)]
        for i in range(n - 1):
            out[i] += e[i] * v[i + 1]
            out[i + 1] += e[i] * v[i]
        return out


class SymBandedMatrix:
    """Symmetric banded matrix stored by diagonals.

    bands[j][i] = A[i, i+j] for j = 0..halfband; entries beyond the band
    are exactly zero.
    """

    __slots__ = ("n", "halfband", "bands")

    def __init__(self, n, halfband, bands):
        if halfband >= n:
            raise ValueError("halfband must be < n")
        if len(bands) != halfband + 1:
            raise ValueError("need halfband+1 diagonals")
        for j, band in enumerate(bands):
            if len(band) != n - j:
                raise ValueError(f"band {j} must have length n-{j}")
        self.n = n
        self.halfband = halfband
        self.bands = [[mpf(x) for x in band] for band in bands]

    def entry(self, i, j):
        if abs(i - j) > self.halfband:
            return mpf(0)
        lo, hi = min(i, j), max(i, j)
        return self.bands[hi - lo][lo]

    def to_dense(self):
        n = self.n
        a = [[mpf(0)] * n for _ in range(n)]
        for j, band in enumerate(self.bands):
            for i in range(n - j):
                a[i][i + j] = band[i]
                a[i + j][i] = band[i]
        return a

    def matvec(self, v):
        n = self.n
        out = [self.bands[0][i] * v[i] for i in range(n)]
        for j in range(1, self.halfband + 1):
            band = self.bands[j]
            for i in range(n - j):
                bij = band[i]
                out[i] += bij * v[i + j]
                out[i + j] += bij * v[i]
        return out

    def gershgorin(self):
        n, b = self.n, self.halfband
        lo = None
        hi = None
        for i in range(n):
            r = mpf(0)
            for j in range(1, b + 1):
                if i + j < n:
                    r += abs(self.bands[j][i])
                if i - j >= 0:
                    r += abs(self.bands[j][i - j])
            d = self.bands[0][i]
            a, c = d - r, d + r
            lo = a if lo is None or a < lo else lo
            hi = c if hi is None or c > hi else hi
        return lo, hi


@dataclass
class Spectrum:
    """Eigenvalues (ascending) with provenance tags."""

    eigenvalues: list
    vectors: list | None = None
    M: int | None = None
    sector: object = None
    parity: str | None = None
    digits: int = 0
    meta: dict = field(default_factory=dict)


def sturm_count(m: SymTridiagonalMatrix, lam) -> int:
    """Number of eigenvalues of m strictly below lam.

    Sign count of the LDL^T pivots of (m - lam I); an exactly zero pivot is
    replaced by a deterministic tiny positive at working precision.
    """
    lam = mpf(lam)
    d, e = m.diag, m.offdiag
    n = m.n
    scale = mpf(1)
    for x in d:
        ax = abs(x)
        if ax > scale:
            scale = ax
    for x in e:
        ax = abs(x)
        if ax > scale:
            scale = ax
    tiny = scale * mpf(2) ** (-2 * mp.mp.prec)
    count = 0
    q = d[0] - lam
    if q == 0:
        q = tiny
    if q < 0:
        count += 1
    for i in range(1, n):
        q = (d[i] - lam) - e[i - 1] * e[i - 1] / q
        if q == 0:
            q = tiny
        if q < 0:
            count += 1
    return count


def eigenvalues_bisection(m: SymTridiagonalMatrix, index_range, tol) -> list:
    """Eigenvalues with sorted indices in [i_lo, i_hi], bracketed to width tol.

    Bisection on the Sturm count from Gershgorin bounds. Clustered
    eigenvalues are separated purely by index count.
    """
    i_lo, i_hi = index_range
    n = m.n
    if not (0 <= i_lo <= i_hi < n):
        raise ValueError("index range out of bounds")
    tol = mpf(tol)
    if tol <= 0:
        raise ValueError("tol must be positive")
    if tol < mpf(10) ** (-(mp.mp.dps - 5)):
        raise ValueError("tol below working precision")
    glo, ghi = m.gershgorin()
    width = ghi - glo
    if width == 0:
        width = mpf(1)
    glo -= width * mpf("1e-3")
    ghi += width * mpf("1e-3")
    out = []
    for idx in range(i_lo, i_hi + 1):
        lo, hi = glo, ghi
        # invariant: count(lo) <= idx < count(hi)
        while hi - lo > tol:
            mid = (lo + hi) / 2
            if sturm_count(m, mid) >= idx + 1:
                hi = mid
            else:
                lo = mid
        out.append((lo + hi) / 2)
    return out


def band_to_tridiagonal(m, num_lanczos: int, seed_vector_rule: str = "e0") -> SymTridiagonalMatrix:
    """Lanczos tridiagonalization with full reorthogonalization.

    seed_vector_rule: 'e0' (unit basis vector) or 'ones' (normalized all-ones).
    Exact breakdown (beta ~ 0) returns the smaller tridiagonal early: an
    invariant subspace was found. Reductions run in fixed left-to-right
    order so results are reproducible bit for bit.
    """
    n = m.n
    if not (1 <= num_lanczos <= n):
        raise ValueError("num_lanczos must be in [1, n]")
    if seed_vector_rule == "e0":
        v = [mpf(0)] * n
        v[0] = mpf(1)
    elif seed_vector_rule == "ones":
        inv = mpf(1) / mp.sqrt(mpf(n))
        v = [inv] * n
    else:
        raise ValueError("seed_vector_rule must be 'e0' or 'ones'")
    glo, ghi = m.gershgorin()
    scale = max(abs(glo), abs(ghi), mpf(1))
    breakdown = scale * mpf(2) ** (-(mp.mp.prec - 8))
    alphas = []
    betas = []
    basis = [v]
    v_prev = None
    beta_prev = mpf(0)
    broke = None
    for j in range(num_lanczos):
        w = m.matvec(basis[j])
        alpha = mpf(0)
        vj = basis[j]
        for i in range(n):
            alpha += w[i] * vj[i]
        alphas.append(alpha)
        if j + 1 == num_lanczos:
            break
        for i in range(n):
            w[i] -= alpha * vj[i]
        if v_prev is not None:
            for i in range(n):
                w[i] -= beta_prev * v_prev[i]
        # full reorthogonalization: one classical Gram-Schmidt pass over
        # every previous vector suffices at extended precision
        for u in basis:
            c = mpf(0)
            for i in range(n):
                c += w[i] * u[i]
            for i in range(n):
                w[i] -= c * u[i]
        beta = mpf(0)
        for i in range(n):
            beta += w[i] * w[i]
        beta = mp.sqrt(beta)
        if beta <= breakdown:
            broke = j + 1
            break
        betas.append(beta)
        inv = mpf(1) / beta
        nxt = [w[i] * inv for i in range(n)]
        basis.append(nxt)
        v_prev = vj
        beta_prev = beta
    tri = SymTridiagonalMatrix(alphas, betas)
    tri.meta["seed_vector_rule"] = seed_vector_rule
    tri.meta["breakdown_at"] = broke
    tri.meta["lanczos_basis_size"] = len(alphas)
    return tri


def _jacobi(a, n, with_vectors):
    """Cyclic Jacobi sweeps on a dense symmetric matrix (in place)."""
    if with_vectors:
        vec = [[mpf(1) if i == j else mpf(0) for j in range(n)] for i in range(n)]
    else:
        vec = None
    frob = mpf(0)
    for i in range(n):
        for j in range(n):
            frob += a[i][j] * a[i][j]
    frob = mp.sqrt(frob)
    if frob == 0:
        return vec
    stop = frob * mpf(10) ** (-(mp.mp.dps + 3))
    two = mpf(2)
    for _sweep in range(60):
        off = mpf(0)
        for i in range(n - 1):
            row = a[i]
            for j in range(i + 1, n):
                off += row[j] * row[j]
        off = mp.sqrt(two * off)
        if off <= stop:
            break
        thresh = off / n if _sweep < 3 else mpf(0)
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p][q]
                if abs(apq) <= thresh or apq == 0:
                    continue
                app, aqq = a[p][p], a[q][q]
                theta = (aqq - app) / (two * apq)
                t = 1 / (abs(theta) + mp.sqrt(theta * theta + 1))
                if theta < 0:
                    t = -t
                c = 1 / mp.sqrt(t * t + 1)
                s = t * c
                for k in range(n):
                    akp = a[k][p]
                    akq = a[k][q]
                    a[k][p] = c * akp - s * akq
                    a[k][q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p][k]
                    aqk = a[q][k]
                    a[p][k] = c * apk - s * aqk
                    a[q][k] = s * apk + c * aqk
                if vec is not None:
                    for k in range(n):
                        vkp = vec[k][p]
                        vkq = vec[k][q]
                        vec[k][p] = c * vkp - s * vkq
                        vec[k][q] = s * vkp + c * vkq
    return vec


def dense_eigen_small(m, with_vectors: bool = False) -> Spectrum:
    """All eigenvalues (and optionally orthonormal eigenvectors) by cyclic Jacobi.

    Dimension is capped at DENSE_LIMIT; beyond it use band_to_tridiagonal
    plus eigenvalues_bisection.
    """
    n = m.n
    if n > DENSE_LIMIT:
        raise ValueError(f"dimension {n} above dense limit {DENSE_LIMIT}")
    a = m.to_dense()
    vec = _jacobi(a, n, with_vectors)
    pairs = sorted(range(n), key=lambda i: a[i][i])
    eigs = [a[i][i] for i in pairs]
    vectors = None
    if with_vectors:
        vectors = [[vec[k][i] for k in range(n)] for i in pairs]
    return Spectrum(eigenvalues=eigs, vectors=vectors, digits=mp.mp.dps)

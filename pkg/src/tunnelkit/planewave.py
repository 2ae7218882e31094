"""Plane-wave sector Hamiltonians for the periodic cosine potential.

The K-well problem splits into K translation sectors, each a real
symmetric tridiagonal matrix over plane-wave indices n = -cutoff..cutoff
with momenta 2 pi (k + n K)/K. Sectors k and K-k are spectrally
identical; k = 0 and k = K/2 admit a further parity reduction. Complex
phases appear only when wavefunctions are evaluated on a grid, through
separate real/imaginary accumulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp
from mpmath import mpf

from .numerics import Spectrum, SymTridiagonalMatrix, dense_eigen_small, eigenvalues_bisection
from .potentials import _num


@dataclass(frozen=True)
class SectorId:
    k: int
    K: int
    parity: str = "none"

    def __post_init__(self):
        if not 0 <= self.k < self.K:
            raise ValueError("need 0 <= k < K")
        if self.parity not in ("none", "even", "odd"):
            raise ValueError("bad parity tag")
        if self.parity != "none" and self.k not in (0, self.K // 2):
            raise ValueError("parity only valid for k=0 or k=K/2")

    @property
    def theta(self) -> mpf:
        """Translation eigenphase folded to [0, pi]."""
        kf = min(self.k, self.K - self.k)
        return 2 * mp.pi * kf / self.K


@dataclass(frozen=True)
class SectorHamiltonian:
    sector: SectorId
    K: int
    g: mpf
    cutoff: int
    matrix: SymTridiagonalMatrix


def default_cutoff(g) -> int:
    """Smallest cutoff whose edge kinetic energy dwarfs the potential scale.

    (g/2)(2 pi c)^2 >= 50/(4 pi^2 g) gives c >= 5/(2 pi^2 g); a floor of
    4 + ceil(1/(pi sqrt(g))) keeps enough waves per well at larger g.
    """
    g = float(g)
    if g <= 0:
        raise ValueError("g must be positive")
    return max(math.ceil(5 / (2 * math.pi**2 * g)), 4 + math.ceil(1 / (math.pi * math.sqrt(g))))


def build_sector(K: int, k: int, g, cutoff: int | None = None) -> SectorHamiltonian:
    """Tridiagonal sector Hamiltonian H = P^2/2 + (1 - cos) potential part.

    Diagonal (g/2)(2 pi (k+nK)/K)^2 + 1/(4 pi^2 g), off-diagonal
    -1/(8 pi^2 g), n = -cutoff..cutoff.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if not 0 <= k < K:
        raise ValueError("need 0 <= k < K")
    g = _num(g)
    if g <= 0:
        raise ValueError("g must be positive")
    if cutoff is None:
        cutoff = default_cutoff(g)
    if cutoff < 2:
        raise ValueError("cutoff must be >= 2")
    pot_diag = 1 / (4 * mp.pi**2 * g)
    pot_off = -1 / (8 * mp.pi**2 * g)
    diag = []
    for n in range(-cutoff, cutoff + 1):
        p = 2 * mp.pi * (k + n * K) / K
        diag.append(g * p * p / 2 + pot_diag)
    off = [pot_off] * (2 * cutoff)
    return SectorHamiltonian(
        sector=SectorId(k=k, K=K),
        K=K,
        g=g,
        cutoff=cutoff,
        matrix=SymTridiagonalMatrix(diag, off),
    )


def sector_lowest(h: SectorHamiltonian, count: int, tol=None, with_vectors: bool = False) -> Spectrum:
    """Lowest eigenvalues of one sector; dense path when vectors are needed."""
    n = h.matrix.n
    if count > n:
        raise ValueError("count above sector dimension")
    if with_vectors:
        s = dense_eigen_small(h.matrix, with_vectors=True)
        s.eigenvalues = s.eigenvalues[:count]
        s.vectors = s.vectors[:count]
        s.sector = h.sector
        return s
    if tol is None:
        tol = mpf(10) ** (-(mp.mp.dps - 10))
    eigs = eigenvalues_bisection(h.matrix, (0, count - 1), tol)
    return Spectrum(eigenvalues=eigs, sector=h.sector, digits=mp.mp.dps)


def parity_reduce(h: SectorHamiltonian):
    """Split a parity-symmetric sector into (even, odd) tridiagonal blocks.

    k=0 pairs n with -n (n=0 joins the even block: dims cutoff+1 and
    cutoff). k=K/2 pairs n with -n-1 and the unpaired edge state
    n=+cutoff is dropped (dims cutoff and cutoff); its removal only
    perturbs the far tail of the spectrum.
    """
    k, K = h.sector.k, h.sector.K
    c = h.cutoff
    d = h.matrix.diag
    t = h.matrix.offdiag[0]
    if k == 0:
        center = c
        ediag = [d[center]] + [d[center + m] for m in range(1, c + 1)]
        eoff = [t * mp.sqrt(mpf(2))] + [t] * (c - 1)
        odiag = [d[center + m] for m in range(1, c + 1)]
        ooff = [t] * (c - 1)
    elif K % 2 == 0 and k == K // 2:
        # pair members n and -n-1 share the diagonal; the n=0 / n=-1
        # cross coupling folds into the first diagonal entry
        base = [d[c + m] for m in range(c)]
        ediag = list(base)
        ediag[0] = base[0] + t
        odiag = list(base)
        odiag[0] = base[0] - t
        eoff = [t] * (c - 1)
        ooff = [t] * (c - 1)
    else:
        raise ValueError("parity reduction needs k=0 or k=K/2 with even K")
    return SymTridiagonalMatrix(ediag, eoff), SymTridiagonalMatrix(odiag, ooff)


def band_profile(K: int, g, cutoff: int | None = None, tol=None):
    """(theta_k, lowest sector energy) over the folded sectors k=0..K/2.

    Interior angles stand for the degenerate pair (k, K-k); only one
    member is solved.
    """
    if K < 2:
        raise ValueError("K must be >= 2")
    out = []
    for k in range(K // 2 + 1):
        h = build_sector(K, k, g, cutoff)
        e = sector_lowest(h, 1, tol=tol).eigenvalues[0]
        out.append((h.sector.theta, e))
    return out


def bloch_wavefunctions(h: SectorHamiltonian, eigvec, x_grid):
    """Sector-k Bloch function on a grid, as (real, imag) mpf pairs.

    psi(x) = g^(1/4)/sqrt(K) * sum_n c_n exp(2 pi i (k+nK) sqrt(g) x / K).
    """
    k, K = h.sector.k, h.K
    g = h.g
    norm = g ** mpf("0.25") / mp.sqrt(mpf(K))
    c = h.cutoff
    out = []
    for x in x_grid:
        x = mpf(x)
        re = mpf(0)
        im = mpf(0)
        for i, cn in enumerate(eigvec):
            phase = 2 * mp.pi * (k + (i - c) * K) * mp.sqrt(g) * x / K
            re += cn * mp.cos(phase)
            im += cn * mp.sin(phase)
        out.append((norm * re, norm * im))
    return out


def parity_recombine(psi_k, psi_kconj):
    """Real even/odd combinations of a degenerate sector pair.

    Inputs are (re, im) value lists for sectors k and K-k built from the
    same real eigenvector, so psi_{K-k} = conj(psi_k) pointwise; the
    symmetric combination is real and even, the antisymmetric one (after
    dividing out i) real and odd.
    """
    if len(psi_k) != len(psi_kconj):
        raise ValueError("grids differ")
    inv = 1 / mp.sqrt(mpf(2))
    even = []
    odd = []
    for (re1, im1), (re2, im2) in zip(psi_k, psi_kconj):
        even.append((re1 + re2) * inv)
        odd.append((im1 - im2) * inv)
    return even, odd

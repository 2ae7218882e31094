"""Potential families: evaluation, derivatives, scaling, minima metadata.

Every family is even in x. Unscaled potentials carry no coupling; the
coupling g enters through scaled_eval, V_hat(X) = (1/g) V(sqrt(g) X),
whose minima sit at multiples of a = 1/sqrt(g). Polynomial coefficients
are kept exact (rational plus rational/pi^2 parts) and turned into mpf
at the precision active when they are used, never at construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import mpmath as mp
from mpmath import mpf

ANHARMONIC = "anharmonic_quartic"
DOUBLE_WELL = "double_well"
COSINE = "cosine"
TRIPLE_WELL = "triple_well"
POLYNOMIAL = "polynomial"

FAMILIES = (ANHARMONIC, DOUBLE_WELL, COSINE, TRIPLE_WELL, POLYNOMIAL)

# triple-well x^(2m) coefficients, m=1..5: exact rational + rational/pi^2
# + rational*delta
_TW_RAT = {
    1: Fraction(1, 2),
    2: Fraction(-85, 24),
    3: Fraction(31, 4),
    4: Fraction(-55, 8),
    5: Fraction(13, 6),
}
_TW_PI2 = {
    1: Fraction(0),
    2: Fraction(512, 27),
    3: Fraction(-512, 9),
    4: Fraction(512, 9),
    5: Fraction(-512, 27),
}
_TW_DELTA = {
    1: Fraction(1, 2),
    2: Fraction(-7, 2),
    3: Fraction(15, 2),
    4: Fraction(-13, 2),
    5: Fraction(2),
}


def _num(x) -> mpf:
    """Exact-friendly conversion: Fractions and strings keep full precision."""
    if isinstance(x, Fraction):
        return mpf(x.numerator) / mpf(x.denominator)
    if isinstance(x, str) and "/" in x:
        f = Fraction(x)
        return mpf(f.numerator) / mpf(f.denominator)
    return mpf(x)


def _poly_eval(coeffs, x, order):
    """d^order/dx^order of sum coeffs[k] x^k, Horner at working precision."""
    if order == 0:
        work = list(coeffs)
    else:
        work = []
        for k in range(order, len(coeffs)):
            m = mpf(1)
            for j in range(k, k - order, -1):
                m *= j
            work.append(coeffs[k] * m)
    acc = mpf(0)
    for c in reversed(work):
        acc = acc * x + c
    return acc


@dataclass(frozen=True)
class PotentialSpec:
    """One potential family with its parameters.

    params values are stored as given (str/Fraction preserve exactness)
    and realized as mpf on use. minima_data is only for the Polynomial
    family: list of (position_unscaled, curvature) pairs.
    """

    family: str
    params: dict = field(default_factory=dict)
    minima_data: tuple | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.family == COSINE:
            boundary = self.params.get("boundary", "line")
            if boundary != "line":
                K = int(boundary)
                if K < 1:
                    raise ValueError("period count K must be >= 1")

    # parameter accessors, realized at current precision

    @property
    def g(self) -> mpf:
        return _num(self.params["g"])

    @property
    def a(self) -> mpf:
        return mpf(1) / mp.sqrt(self.g)

    @property
    def delta(self) -> mpf:
        return _num(self.params.get("delta", 0))

    def _poly_coeffs(self):
        """Unscaled power-series coefficients [c0, c1, ...], mpf at current dps."""
        if self.family == ANHARMONIC:
            eps = _num(self.params["eps"])
            c = _num(self.params.get("c", 0))
            return [c * self.g, mpf(0), eps / 2, mpf(0), mpf("0.25")]
        if self.family == DOUBLE_WELL:
            eighth = mpf(1) / 8
            return [eighth, mpf(0), -mpf("0.25"), mpf(0), eighth]
        if self.family == TRIPLE_WELL:
            d = self.delta
            inv_pi2 = 1 / mp.pi**2
            out = [mpf(0)] * 11
            for m in range(1, 6):
                out[2 * m] = _num(_TW_RAT[m]) + _num(_TW_PI2[m]) * inv_pi2 + _num(_TW_DELTA[m]) * d
            return out
        if self.family == POLYNOMIAL:
            return [_num(c) for c in self.params["coeffs"]]
        raise ValueError("cosine family is not polynomial")

    def scaled_poly_coeffs(self):
        """Coefficients of V_hat(X) = (1/g) V(sqrt(g) X) as a power series.

        Formed per family so the harmonic limit g=0 of the anharmonic
        family stays finite (the 1/g cancels exactly).
        """
        g = self.g
        if self.family == ANHARMONIC:
            eps = _num(self.params["eps"])
            c = _num(self.params.get("c", 0))
            return [c, mpf(0), eps / 2, mpf(0), g / 4]
        if g <= 0:
            raise ValueError("g must be positive")
        if self.family == DOUBLE_WELL:
            return [1 / (8 * g), mpf(0), -mpf("0.25"), mpf(0), g / 8]
        coeffs = self._poly_coeffs()
        return [c * g ** (mpf(k) / 2 - 1) for k, c in enumerate(coeffs)]

    def eval(self, x, derivative_order: int = 0) -> mpf:
        """d^k/dx^k V(x) in unscaled coordinates, k <= 3."""
        if not 0 <= derivative_order <= 3:
            raise ValueError("derivative_order must be 0..3")
        x = mpf(x)
        if self.family == COSINE:
            twopi = 2 * mp.pi
            k = derivative_order
            if k == 0:
                return (1 - mp.cos(twopi * x)) / twopi**2
            if k == 1:
                return mp.sin(twopi * x) / twopi
            if k == 2:
                return mp.cos(twopi * x)
            return -twopi * mp.sin(twopi * x)
        return _poly_eval(self._poly_coeffs(), x, derivative_order)

    def scaled_eval(self, X, derivative_order: int = 0) -> mpf:
        """d^k/dX^k of (1/g) V(sqrt(g) X)."""
        X = mpf(X)
        k = derivative_order
        if self.family == COSINE:
            g = self.g
            if g <= 0:
                raise ValueError("g must be positive")
            w = 2 * mp.pi * mp.sqrt(g)
            if k == 0:
                return (1 - mp.cos(w * X)) / (4 * mp.pi**2 * g)
            if k == 1:
                return mp.sin(w * X) / (2 * mp.pi * mp.sqrt(g))
            if k == 2:
                return mp.cos(w * X)
            return -w * mp.sin(w * X)
        return _poly_eval(self.scaled_poly_coeffs(), X, k)

    def minima(self):
        """Sorted (scaled position, unscaled curvature V'') pairs.

        Cosine on the line reports the representative adjacent pair
        {0, a}; Periodic(K) reports one minimum per well.
        """
        a = self.a
        one = mpf(1)
        if self.family == DOUBLE_WELL:
            return [(-a, one), (a, one)]
        if self.family == TRIPLE_WELL:
            return [(-a, one), (mpf(0), 1 + self.delta), (a, one)]
        if self.family == COSINE:
            boundary = self.params.get("boundary", "line")
            if boundary == "line":
                return [(mpf(0), one), (a, one)]
            K = int(boundary)
            return [(k * a, one) for k in range(K)]
        if self.family == ANHARMONIC:
            eps = _num(self.params["eps"])
            if eps >= 0:
                return [(mpf(0), eps)]
            r = mp.sqrt(-eps)
            return [(-r / mp.sqrt(self.g), -2 * eps), (r / mp.sqrt(self.g), -2 * eps)]
        if self.minima_data is None:
            raise ValueError("polynomial family needs explicit minima_data")
        return [(_num(p) / mp.sqrt(self.g), _num(c)) for p, c in self.minima_data]

    def to_config(self) -> dict:
        out = {"family": self.family}
        for k, v in self.params.items():
            if isinstance(v, Fraction):
                out[k] = str(v)
            elif isinstance(v, (list, tuple)):
                out[k] = [str(c) for c in v]
            else:
                out[k] = v if isinstance(v, (int, str)) else str(v)
        if self.minima_data is not None:
            out["minima_data"] = [[str(p), str(c)] for p, c in self.minima_data]
        return out

    @staticmethod
    def from_config(cfg: dict) -> "PotentialSpec":
        cfg = dict(cfg)
        family = cfg.pop("family")
        minima_data = cfg.pop("minima_data", None)
        if minima_data is not None:
            minima_data = tuple((p, c) for p, c in minima_data)
        return PotentialSpec(family=family, params=cfg, minima_data=minima_data)


def anharmonic_quartic(eps, g, c=0) -> PotentialSpec:
    """V(x) = eps x^2/2 + x^4/4 (+ additive constant c in scaled units)."""
    return PotentialSpec(ANHARMONIC, {"eps": eps, "g": g, "c": c})


def double_well(g) -> PotentialSpec:
    """V(x) = (1/8)(x^2-1)^2; scaled minima at +-a."""
    return PotentialSpec(DOUBLE_WELL, {"g": g})


def cosine(g, boundary="line") -> PotentialSpec:
    """V(x) = (1-cos 2 pi x)/(2 pi)^2; boundary is 'line' or the period count K."""
    return PotentialSpec(COSINE, {"g": g, "boundary": boundary})


def triple_well(g, delta=0) -> PotentialSpec:
    """Tenth-order polynomial with degenerate wells at x = 0, +-1.

    At delta=0: V(0)=V(+-1)=0, V''(0)=V''(+-1)=1, V(+-1/2)=1/(2 pi^2).
    delta > 0 stiffens the central well, V''(0) = 1+delta, leaving the
    side wells untouched through second order.
    """
    return PotentialSpec(TRIPLE_WELL, {"g": g, "delta": delta})


def polynomial(coeffs, g, minima_data=None) -> PotentialSpec:
    """Explicit power series sum coeffs[k] x^k (testing/extension hook)."""
    return PotentialSpec(
        POLYNOMIAL,
        {"coeffs": tuple(coeffs), "g": g},
        minima_data=None if minima_data is None else tuple(minima_data),
    )

"""High-precision spectra of multi-well Schrodinger operators.

Exact routes: oscillator-basis truncation (fock), Bloch-sector plane
waves (planewave), and parity shooting (shooting). Semiclassical
routes: instanton actions, profiles, and splitting laws (instanton).
Cross-comparison and correction fits live in analysis; numerics holds
the arbitrary-precision linear algebra.
"""

from .numerics import precision, required_digits
from .potentials import (
    PotentialSpec,
    anharmonic_quartic,
    cosine,
    double_well,
    polynomial,
    triple_well,
)

__all__ = [
    "PotentialSpec",
    "anharmonic_quartic",
    "cosine",
    "double_well",
    "polynomial",
    "triple_well",
    "precision",
    "required_digits",
]

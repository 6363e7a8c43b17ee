"""Normalized Diophantine approximation for algebraic vectors in quadratic and cubic fields."""

__version__ = "0.1.0"

from .arith import FieldElement, NumberField, embed, norm, trace
from .lattices import ModuleLattice, dual_basis, gram, multiplier_ring, norm_spectrum
from .orbits import ApproxWindow, enumerate_algebraic, oracle_scan
from .units import dominant_unit, fundamental_units

__all__ = [
    "ApproxWindow", "FieldElement", "ModuleLattice", "NumberField", "dominant_unit", "dual_basis",
    "embed", "enumerate_algebraic", "fundamental_units", "gram", "multiplier_ring", "norm",
    "norm_spectrum", "oracle_scan", "trace",
]

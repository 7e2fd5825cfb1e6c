"""Extreme points of the unit ball of a direct sum of matrix and shift factors.

The ambient algebra is a finite direct sum of full matrix algebras ``M_n`` and
copies of ``B(l^2(N))`` restricted to the Toeplitz class (Laurent polynomials in
the unilateral shift plus finitely supported perturbations).
"""

from .algebra import (
    AlgebraElement,
    AlgebraShape,
    BlockIdeal,
    CentralProjection,
    FiniteFactor,
    ShiftFactor,
)
from .linalg import Tolerance
from .shift import LaurentSymbol, ShiftClassOperator

__version__ = "0.1.0"

__all__ = [
    "AlgebraElement",
    "AlgebraShape",
    "BlockIdeal",
    "CentralProjection",
    "FiniteFactor",
    "LaurentSymbol",
    "ShiftClassOperator",
    "ShiftFactor",
    "Tolerance",
]

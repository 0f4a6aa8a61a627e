"""Numerical laboratory for hyperbolic Cauchy problems with rough-in-time
coefficients: moduli of continuity, weight functions/sequences, mollified
characteristic roots, first-order reduction and diagonalization, symbol
calculus on the truncated 1-D torus, and per-frequency energy estimates.
"""

from . import moduli, weights, coeffs, roots, pdo, reduction, energy

__all__ = ["moduli", "weights", "coeffs", "roots", "pdo", "reduction", "energy"]

__version__ = "0.1.0"

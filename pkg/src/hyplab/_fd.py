"""Central finite differences with one Richardson extrapolation step.

Fallback derivative oracle for weight functions and moduli whose catalog
entries have no registered closed form. Accuracy is O(h^4) on smooth inputs,
which is enough for the moderate orders (k <= 4) the conjugation-expansion
checks need.
"""

from __future__ import annotations

import math

import numpy as np


def central_difference(f, x: float, k: int, h: float) -> float:
    """Plain central k-th difference quotient at step h."""
    if k == 0:
        return float(f(x))
    i = np.arange(k + 1)
    coeff = np.array([(-1) ** j * math.comb(k, j) for j in i], dtype=float)
    pts = x + (k / 2.0 - i) * h
    return float(np.dot(coeff, [f(p) for p in pts]) / h**k)


def richardson_derivative(f, x: float, k: int, h: float | None = None) -> float:
    """k-th derivative of f at x, central differences + Richardson.

    The central stencil has error c*h^2 + O(h^4); combining steps h and h/2
    as (4*D(h/2) - D(h))/3 cancels the h^2 term.
    """
    if k == 0:
        return float(f(x))
    if h is None:
        # balance truncation against cancellation; scale with |x| so the
        # stencil stays inside the domain for x >= 1 arguments
        h = max(abs(x), 1.0) * (1e-3 if k <= 2 else 1e-2)
    d1 = central_difference(f, x, k, h)
    d2 = central_difference(f, x, k, h / 2.0)
    return (4.0 * d2 - d1) / 3.0

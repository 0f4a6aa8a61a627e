"""Truncated Taylor jets.

A :class:`Jet` stores the Taylor coefficients ``c[j] = f^(j)(x0)/j!`` of a
function about a point, up to a fixed truncation order. Arithmetic on jets
propagates derivatives exactly (no finite differencing), which is what the
first-order reduction needs to fold time derivatives of mollified roots into
the lower-order matrix, and what the conjugation expansion needs for the
derivative recursion of its expansion coefficients.
"""

from __future__ import annotations

import math

import numpy as np


class Jet:
    """Truncated Taylor series sum_j c[j] * dt**j with complex coefficients."""

    __slots__ = ("c",)

    def __init__(self, coeffs):
        self.c = np.asarray(coeffs, dtype=complex)
        if self.c.ndim != 1 or self.c.size == 0:
            raise ValueError("jet coefficients must be a non-empty 1-D array")

    @property
    def order(self) -> int:
        return self.c.size - 1

    @classmethod
    def constant(cls, value, order: int) -> "Jet":
        c = np.zeros(order + 1, dtype=complex)
        c[0] = value
        return cls(c)

    @classmethod
    def variable(cls, value, order: int) -> "Jet":
        """Jet of the identity map t -> t about `value`."""
        c = np.zeros(order + 1, dtype=complex)
        c[0] = value
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def from_derivatives(cls, derivs) -> "Jet":
        """Build from raw derivatives [f(x0), f'(x0), ..., f^(n)(x0)]."""
        derivs = np.asarray(derivs, dtype=complex)
        fact = np.array([math.factorial(j) for j in range(derivs.size)], dtype=float)
        return cls(derivs / fact)

    def value(self):
        return self.c[0]

    def derivative_value(self, k: int):
        """k-th derivative at the expansion point."""
        if k > self.order:
            raise ValueError(f"jet of order {self.order} has no derivative {k}")
        return self.c[k] * math.factorial(k)

    def shift(self) -> "Jet":
        """Jet of f' (one order lower, same truncation length semantics)."""
        if self.order == 0:
            return Jet([0.0])
        return Jet(self.c[1:] * np.arange(1, self.c.size))

    # -- arithmetic -------------------------------------------------------

    def _coerce(self, other, order):
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, order)

    def __add__(self, other):
        other = self._coerce(other, self.order)
        n = min(self.c.size, other.c.size)
        return Jet(self.c[:n] + other.c[:n])

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c)

    def __sub__(self, other):
        return self + (-self._coerce(other, self.order))

    def __rsub__(self, other):
        return self._coerce(other, self.order) + (-self)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c * other)
        n = min(self.c.size, other.c.size)
        out = np.zeros(n, dtype=complex)
        for k in range(n):
            out[k] = np.dot(self.c[: k + 1], other.c[k::-1][: k + 1])
        return Jet(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c / other)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other, self.order) * self.reciprocal()

    def reciprocal(self) -> "Jet":
        if self.c[0] == 0:
            raise ZeroDivisionError("jet with vanishing constant term")
        n = self.c.size
        out = np.zeros(n, dtype=complex)
        out[0] = 1.0 / self.c[0]
        for k in range(1, n):
            out[k] = -np.dot(self.c[1 : k + 1], out[k - 1 :: -1][:k]) / self.c[0]
        return Jet(out)

    def exp(self) -> "Jet":
        n = self.c.size
        out = np.zeros(n, dtype=complex)
        out[0] = np.exp(self.c[0])
        for k in range(1, n):
            # k * e_k = sum_{j=1..k} j * c_j * e_{k-j}
            j = np.arange(1, k + 1)
            out[k] = np.dot(j * self.c[1 : k + 1], out[k - 1 :: -1][:k]) / k
        return Jet(out)

    def sqrt(self) -> "Jet":
        if self.c[0] == 0:
            raise ZeroDivisionError("jet sqrt at a vanishing constant term")
        n = self.c.size
        out = np.zeros(n, dtype=complex)
        out[0] = np.sqrt(self.c[0])
        for k in range(1, n):
            acc = np.dot(out[1:k], out[k - 1 : 0 : -1]) if k >= 2 else 0.0
            out[k] = (self.c[k] - acc) / (2.0 * out[0])
        return Jet(out)

    def compose(self, inner: "Jet") -> "Jet":
        """Jet of f(g(t)) where self is the jet of f about g(0) = inner.c[0].

        Standard Horner evaluation in the (nilpotent) non-constant part of
        `inner`; requires expansion points to line up.
        """
        n = inner.c.size
        frac = Jet(np.concatenate(([0.0], inner.c[1:])))
        acc = Jet.constant(self.c[min(self.order, n - 1)], n - 1)
        for j in range(min(self.order, n - 1) - 1, -1, -1):
            acc = acc * frac + self.c[j]
        return acc

    def __repr__(self):
        return f"Jet({self.c!r})"

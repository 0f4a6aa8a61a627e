"""Characteristic roots and their scale-adapted regularization.

For a fixed frequency xi the principal symbol is a monic degree-m polynomial
in tau with t-dependent coefficients; strict hyperbolicity means its roots
tau_1(t) < ... < tau_m(t) are real and uniformly separated. The regularized
speeds are Friedrichs mollifications at the frequency-adapted scale
eps = 1/<xi>:

    lambda_j(t) = int tau_j(t - eps u) phi(u) du,

with phi a normalized C^inf bump on [-1, 1]. Derivatives move onto the bump,
lambda_j^(k)(t) = eps^-k int tau_j(t - eps u) phi^(k)(u) du, so no finite
differencing of the (merely C^mu) roots is ever needed. Outside [0, T] the
roots are extended by clamping, which keeps the mollified speeds defined up
to the boundary.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from ._jet import Jet

#: nodes of the fixed Gauss-Legendre rule on [-1, 1]
QUAD_NODES = 129
#: tolerance for discarding imaginary parts, relative to the root scale
REAL_TOL = 1e-8
#: minimum admissible root gap, relative to <xi>
SEPARATION_TOL = 1e-8


class RootError(ValueError):
    """Characteristic polynomial violates strict hyperbolicity."""


class NonRealRoots(RootError):
    pass


class MultipleRoots(RootError):
    pass


def _root_scale(coeffs: np.ndarray, m: int) -> float:
    # Cauchy-type bound: roots live inside 1 + max |c_j|^(1/(m-j))
    mags = [abs(c) ** (1.0 / (m - j)) for j, c in enumerate(coeffs) if c != 0]
    return 1.0 + (max(mags) if mags else 0.0)


def _roots_of_coeffs(coeffs: np.ndarray, m: int) -> np.ndarray:
    """Sorted real roots of tau^m - sum_j coeffs[j] tau^j; raises RootError."""
    if m == 2:
        # tau^2 - b tau - c = 0 solved directly; cheaper and exact
        b, c = coeffs[1], coeffs[0]
        disc = b * b + 4.0 * c
        scale = _root_scale(coeffs, 2)
        if disc < -REAL_TOL * scale * scale:
            raise NonRealRoots(f"negative discriminant {disc:.3g}")
        sq = math.sqrt(max(disc, 0.0))
        roots = np.array([0.5 * (b - sq), 0.5 * (b + sq)])
    else:
        poly = np.zeros(m + 1)
        poly[0] = 1.0
        poly[1:] = -coeffs[::-1]
        raw = np.roots(poly)
        scale = _root_scale(coeffs, m)
        if np.max(np.abs(raw.imag)) > REAL_TOL * scale:
            raise NonRealRoots(f"imaginary part {np.max(np.abs(raw.imag)):.3g}")
        roots = np.sort(raw.real)
    return roots


def characteristic_roots(spec, t: float, xi: float) -> np.ndarray:
    """Sorted real simple roots tau_1 < ... < tau_m at (t, xi)."""
    coeffs = spec.char_poly_coeffs(float(t), xi)
    roots = _roots_of_coeffs(np.atleast_1d(coeffs), spec.m)
    bracket = math.hypot(1.0, xi)
    if spec.m > 1 and np.min(np.diff(roots)) <= SEPARATION_TOL * bracket:
        raise MultipleRoots(f"root gap {np.min(np.diff(roots)):.3g} at t={t}, xi={xi}")
    return roots


def _tau_batch(spec, t_arr: np.ndarray, xi: float) -> np.ndarray:
    """Sorted roots at each t in t_arr; shape (len(t_arr), m)."""
    coeffs = spec.char_poly_coeffs(t_arr, xi)  # (n, m)
    if spec.m == 2:
        b, c = coeffs[:, 1], coeffs[:, 0]
        disc = b * b + 4.0 * c
        if np.min(disc) < 0.0:
            scale = np.max(np.abs(coeffs)) + 1.0
            if np.min(disc) < -REAL_TOL * scale * scale:
                raise NonRealRoots(f"negative discriminant {np.min(disc):.3g}")
            disc = np.maximum(disc, 0.0)
        sq = np.sqrt(disc)
        return np.stack([0.5 * (b - sq), 0.5 * (b + sq)], axis=1)
    out = np.empty((len(t_arr), spec.m))
    for i in range(len(t_arr)):
        out[i] = _roots_of_coeffs(coeffs[i], spec.m)
    return out


class Mollifier:
    """Normalized C^inf bump phi(x) ~ exp(-1/(1-x^2)) on [-1, 1] with its
    derivatives, evaluated on a fixed Gauss-Legendre rule.

    Normalization is discrete: sum_i w_i phi(x_i) = 1 exactly, so mollifying
    a constant reproduces it to machine precision.
    """

    def __init__(self, n_nodes: int = QUAD_NODES):
        self.nodes, self.weights = np.polynomial.legendre.leggauss(n_nodes)
        raw = np.exp(-1.0 / (1.0 - self.nodes**2))
        self._norm = float(np.dot(self.weights, raw))
        self._cache = {0: raw / self._norm}

    def phi_derivative(self, k: int) -> np.ndarray:
        """phi^(k) at the quadrature nodes."""
        if k not in self._cache:
            vals = np.empty_like(self.nodes)
            for i, x in enumerate(self.nodes):
                jx = Jet.variable(float(x), k)
                g = (Jet.constant(1.0, k) - jx * jx).reciprocal()
                vals[i] = float(np.real((-g).exp().derivative_value(k)))
            self._cache[k] = vals / self._norm
        return self._cache[k]


_DEFAULT_MOLLIFIER = None


def default_mollifier() -> Mollifier:
    global _DEFAULT_MOLLIFIER
    if _DEFAULT_MOLLIFIER is None:
        _DEFAULT_MOLLIFIER = Mollifier()
    return _DEFAULT_MOLLIFIER


class RegularizedRoots:
    """Exact and mollified characteristic speeds of one spec at one xi."""

    def __init__(self, spec, xi: float, mollifier: Mollifier | None = None):
        self.spec = spec.bind_xi(xi)
        self.xi = float(xi)
        self.bracket = math.hypot(1.0, xi)
        self.eps = 1.0 / self.bracket
        self.mollifier = mollifier or default_mollifier()
        self.T = float(spec.T)
        self.constant = all(f.is_constant for f in self.spec.principal)
        self._const_tau = (
            characteristic_roots(self.spec, 0.0, self.xi) if self.constant else None
        )

    def tau(self, t: float) -> np.ndarray:
        """Exact roots with clamped extension outside [0, T]."""
        tc = min(max(float(t), 0.0), self.T)
        if self.constant:
            return self._const_tau
        return characteristic_roots(self.spec, tc, self.xi)

    def lam(self, t: float, k: int = 0) -> np.ndarray:
        """k-th derivative of the mollified speeds; shape (m,)."""
        if self.constant:
            if k == 0:
                return self._const_tau
            return np.zeros(self.spec.m)
        q = self.mollifier
        samples = np.clip(float(t) - self.eps * q.nodes, 0.0, self.T)
        tau_vals = _tau_batch(self.spec, samples, self.xi)  # (n, m)
        phi_k = q.phi_derivative(k)
        return self.eps ** (-k) * ((q.weights * phi_k) @ tau_vals)

    def lam_all(self, t: float, k_max: int) -> np.ndarray:
        """Derivatives 0..k_max of the mollified speeds from one root batch;
        shape (k_max + 1, m)."""
        if self.constant:
            out = np.zeros((k_max + 1, self.spec.m))
            out[0] = self._const_tau
            return out
        q = self.mollifier
        samples = np.clip(float(t) - self.eps * q.nodes, 0.0, self.T)
        tau_vals = _tau_batch(self.spec, samples, self.xi)
        out = np.empty((k_max + 1, self.spec.m))
        for k in range(k_max + 1):
            out[k] = self.eps ** (-k) * ((q.weights * q.phi_derivative(k)) @ tau_vals)
        return out


def mollify(spec, xi: float, mollifier: Mollifier | None = None) -> RegularizedRoots:
    return RegularizedRoots(spec, xi, mollifier)


# -- tables and reports ----------------------------------------------------


ROOT_TABLE_HEADER = ("t", "xi", "j", "tau", "lam")


def regularized_root_table(spec, t_grid, xi_grid, mollifier=None) -> list:
    """Rows (t, xi, j, tau_j, lambda_j) for CSV export, j = 1..m."""
    rows = []
    for xi in np.asarray(xi_grid, dtype=float):
        reg = RegularizedRoots(spec, float(xi), mollifier)
        for t in np.asarray(t_grid, dtype=float):
            tau = reg.tau(float(t))
            lam = reg.lam(float(t))
            for j in range(spec.m):
                rows.append((float(t), float(xi), j + 1, float(tau[j]), float(lam[j])))
    return rows


@dataclasses.dataclass(frozen=True)
class RegularityReport:
    """Uniform-in-xi bounds for the regularized speeds.

    R1 = sup |d/dt lambda_j| / (<xi> omega(<xi>)),
    R2 = sup |lambda_j - tau_j| / omega(<xi>),
    both over the (t, xi, j) grid; bounded iff the coefficients really have
    the claimed modulus.
    """

    R1: float
    R2: float
    per_xi: list  # rows (xi, R1(xi), R2(xi))
    witness_R1: tuple
    witness_R2: tuple


def regularity_report(spec, t_grid, xi_grid, modulus=None, mollifier=None) -> RegularityReport:
    mu = modulus or spec.modulus
    if mu is None:
        raise ValueError("no modulus given and spec carries none")
    R1 = R2 = 0.0
    wit1 = wit2 = None
    per_xi = []
    for xi in np.asarray(xi_grid, dtype=float):
        reg = RegularizedRoots(spec, float(xi), mollifier)
        omega = reg.bracket * mu.mu(min(1.0, 1.0 / reg.bracket))
        r1 = r2 = 0.0
        for t in np.asarray(t_grid, dtype=float):
            tau = reg.tau(float(t))
            lam = reg.lam(float(t))
            dlam = reg.lam(float(t), 1)
            v1 = float(np.max(np.abs(dlam))) / (reg.bracket * omega)
            v2 = float(np.max(np.abs(lam - tau))) / omega
            if v1 > r1:
                r1 = v1
            if v2 > r2:
                r2 = v2
            if v1 > R1:
                R1, wit1 = v1, (float(t), float(xi))
            if v2 > R2:
                R2, wit2 = v2, (float(t), float(xi))
        per_xi.append((float(xi), r1, r2))
    return RegularityReport(R1, R2, per_xi, wit1, wit2)

"""First-order reduction and exact diagonalization per frequency.

With coefficients depending on t only, each frequency xi decouples and the
order-m scalar equation D^m u = sum c_j(t) D^j u + f (D = -i d/dt) becomes an
m x m system via the ordered factorization

    v_0 = u,   v_j = (D - lam_j) v_{j-1},   V_j = <xi>^(m-1-j) v_j,

where lam_j are the mollified speeds. Then D V = (A - B) V + F with A upper
bidiagonal (lam_j on the diagonal, <xi> on the superdiagonal) and B supported
on the last row only; the entries of B collect the factorization defect
(which is where the modulus of continuity enters, through lam and its first
derivative) plus any lower-order coefficients.

The diagonalizer H = I + T has the explicit strictly-upper-triangular entries
T[p, q] = (1 - phi1(xi)) <xi>^(q-p) / prod_{r=p..q-1}(lam_q - lam_r); its
columns are exact eigenvectors of A, so beyond the cutoff H^-1 A H is
diagonal to rounding, not merely up to an order-zero symbol.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from ._jet import Jet
from .roots import RegularizedRoots

#: default low-frequency cutoff; T = 0 for <xi> <= M, full strength >= 2M
M_CUTOFF = 16.0
#: minimum relative eigenvalue separation for the diagonalizer
SEPARATION_FLOOR = 1e-8
NEUMANN_TERM_TOL = 1e-14
NEUMANN_RESIDUAL_TOL = 1e-12


class SeparationLost(ValueError):
    """Mollified speeds too close for the explicit diagonalizer."""


class NormTooLarge(ValueError):
    """Neumann inversion refused: series would converge too slowly."""


def phi1(xi: float, M: float = M_CUTOFF) -> float:
    """Smooth low-frequency cutoff: 1 for <xi> <= M, 0 for <xi> >= 2M,
    glued with the standard bump partition f(x)/(f(x) + f(1-x))."""
    r = math.hypot(1.0, xi)
    if r <= M:
        return 1.0
    if r >= 2.0 * M:
        return 0.0
    x = (2.0 * M - r) / M  # 1 at r = M, 0 at r = 2M

    def f(y):
        return math.exp(-1.0 / y) if y > 0 else 0.0

    return f(x) / (f(x) + f(1.0 - x))


class FrequencySystem:
    """Per-frequency matrices A(t), B(t) and forcing F(t) of the reduction."""

    def __init__(self, spec, xi: float, mollifier=None, roots: RegularizedRoots | None = None):
        self.spec = spec.bind_xi(xi)
        self.xi = float(xi)
        self.m = spec.m
        self.bracket = math.hypot(1.0, xi)
        self.roots = roots or RegularizedRoots(self.spec, self.xi, mollifier)
        # V_j = <xi>^(m-1-j) v_j
        self._vscale = self.bracket ** (self.m - 1 - np.arange(self.m))

    def _lam_jets(self, t: float) -> list:
        derivs = self.roots.lam_all(t, self.m)  # (m+1, m)
        return [Jet.from_derivatives(derivs[:, j]) for j in range(self.m)]

    def _d_coeffs(self, t: float) -> np.ndarray:
        """d_k, k = 0..m-1: coefficient of D^k u in D v_{m-1} - lam_m v_{m-1}.

        Side effect: caches the unit lower-triangular matrix P with
        v_j = sum_k P[j, k] D^k u at this t.
        """
        m = self.m
        lam = self._lam_jets(t)
        # p[k] = coefficient jet of D^k u in v_j; (D - lam) acts on
        # sum p_k D^k u by new p_k = p_{k-1} - i p_k' - lam p_k. Applying the
        # recursion m times yields the full ordered product.
        self._p_values = np.zeros((m, m), dtype=complex)
        self._p_values[0, 0] = 1.0
        p = [Jet.constant(1.0, m)]
        for j in range(m):
            nxt = []
            for k in range(len(p) + 1):
                term = Jet.constant(0.0, m)
                if k >= 1:
                    term = term + p[k - 1]
                if k < len(p):
                    term = term + (-1j) * p[k].shift() - lam[j] * p[k]
                nxt.append(term)
            p = nxt
            if j < m - 1:
                for k in range(j + 2):
                    self._p_values[j + 1, k] = p[k].value()
        # substitute D^m u = sum c_k D^k u + lower + f into the product
        c = self.spec.char_poly_coeffs(float(t), self.xi)
        d = np.array([p[k].value() for k in range(m)]) + c.astype(complex)
        for j, gamma, fam in self.spec.lower:
            d[j] += fam.a(float(t)) * self.xi**gamma
        return d

    def matrices(self, t: float):
        """(A, B) at time t; DV = (A - B)V + F."""
        m = self.m
        lam = self.roots.lam(float(t))
        A = np.zeros((m, m), dtype=complex)
        A[np.arange(m), np.arange(m)] = lam
        if m > 1:
            A[np.arange(m - 1), np.arange(1, m)] = self.bracket
        B = np.zeros((m, m), dtype=complex)
        d = self._d_coeffs(float(t))
        E = np.linalg.inv(self._p_values)  # D^k u = sum_j E[k, j] v_j
        row = d @ E  # coefficient of v_j in D v_{m-1} - lam_m v_{m-1}
        # sign convention of the system is D V = (A - B) V + F
        B[m - 1, :] = -row * self._vscale[m - 1] / self._vscale
        return A, B

    def forcing(self, t: float) -> np.ndarray:
        F = np.zeros(self.m, dtype=complex)
        if self.spec.rhs is not None:
            F[self.m - 1] = self.spec.rhs(float(t), self.xi)
        return F

    def initial_state(self) -> np.ndarray:
        """V(0) from the data profiles g_k = d_t^(k-1) u(0)."""
        m = self.m
        du = np.array(
            [(-1j) ** k * complex(self.spec.data(k + 1, self.xi)) for k in range(m)]
        )  # D^k u(0)
        self._d_coeffs(0.0)  # populates _p_values
        v = self._p_values @ du
        return self._vscale * v


def build_system(spec, xi: float, mollifier=None, roots=None) -> FrequencySystem:
    return FrequencySystem(spec, xi, mollifier, roots)


# -- diagonalizer ----------------------------------------------------------


@dataclasses.dataclass
class Diagonalizer:
    """H = I + T with T strictly upper triangular, plus d/dt H."""

    T: np.ndarray
    H: np.ndarray
    Hinv: np.ndarray
    dH: np.ndarray
    M_cutoff: float
    cutoff: float  # 1 - phi1(xi)


def _beta_jets(lam: list, xi: float, cutoff: float) -> list:
    """Strictly upper entries T[p][q] as jets in t."""
    m = len(lam)
    bracket = math.hypot(1.0, xi)
    T = [[None] * m for _ in range(m)]
    for q in range(m):
        for p in range(q - 1, -1, -1):
            denom = Jet.constant(1.0, lam[0].order)
            for r in range(p, q):
                denom = denom * (lam[q] - lam[r])
            T[p][q] = Jet.constant(cutoff * bracket ** (q - p), lam[0].order) / denom
    return T


def build_diagonalizer(roots: RegularizedRoots, t: float, M_cutoff: float = M_CUTOFF) -> Diagonalizer:
    m = roots.spec.m
    xi = roots.xi
    cut = 1.0 - phi1(xi, M_cutoff)
    lam_vals = roots.lam(float(t))
    if cut > 0.0:
        gaps = np.abs(lam_vals[:, None] - lam_vals[None, :])
        gaps[np.arange(m), np.arange(m)] = np.inf
        if np.min(gaps) < SEPARATION_FLOOR * roots.bracket:
            raise SeparationLost(
                f"speed gap {np.min(gaps):.3g} below {SEPARATION_FLOOR:g}*<xi> at t={t}, xi={xi}"
            )
    T = np.zeros((m, m), dtype=complex)
    dT = np.zeros((m, m), dtype=complex)
    if cut > 0.0:
        dlam_vals = roots.lam(float(t), 1)
        lam_jets = [Jet.from_derivatives([lam_vals[j], dlam_vals[j]]) for j in range(m)]
        jets = _beta_jets(lam_jets, xi, cut)
        for p in range(m):
            for q in range(p + 1, m):
                T[p, q] = jets[p][q].value()
                dT[p, q] = jets[p][q].derivative_value(1)
    H = np.eye(m, dtype=complex) + T
    Hinv = neumann_invert(T)
    return Diagonalizer(T=T, H=H, Hinv=Hinv, dH=dT, M_cutoff=M_cutoff, cutoff=cut)


def neumann_invert(K: np.ndarray) -> np.ndarray:
    """(I + K)^-1 by the alternating series; exact finite sum for strictly
    triangular K, otherwise requires an operator-norm estimate < 0.5."""
    m = K.shape[0]
    eye = np.eye(m, dtype=complex)
    strictly_triangular = np.allclose(np.tril(K), 0.0, atol=0.0) or np.allclose(
        np.triu(K), 0.0, atol=0.0
    )
    if not strictly_triangular:
        est = float(np.linalg.norm(K, 2))
        if est >= 0.5:
            raise NormTooLarge(f"norm estimate {est:.3g} >= 0.5")
    out = eye.copy()
    term = eye.copy()
    for _ in range(m if strictly_triangular else 200):
        term = -term @ K
        out += term
        if np.max(np.abs(term)) < NEUMANN_TERM_TOL:
            break
    residual = np.max(np.abs((eye + K) @ out - eye))
    if residual > NEUMANN_RESIDUAL_TOL:
        raise NormTooLarge(f"inversion residual {residual:.3g}")
    return out


def diagonalize_system(system: FrequencySystem, t: float, M_cutoff: float = M_CUTOFF):
    """(Lambda, Bbar, diag) at time t: DW = (Lambda - Bbar)W + Hinv F for
    W = Hinv V, i.e. Bbar = Hinv B H + Hinv (D_t H) + (Lambda - Hinv A H)
    with D_t = -i d/dt; the last (diagonal-defect) term vanishes beyond the
    cutoff, where H diagonalizes A exactly."""
    diag = build_diagonalizer(system.roots, t, M_cutoff)
    A, B = system.matrices(t)
    Lam = np.diag(np.diag(A)).astype(complex)
    Bbar = diag.Hinv @ B @ diag.H - 1j * (diag.Hinv @ diag.dH)
    Bbar += Lam - diag.Hinv @ A @ diag.H
    return Lam, Bbar, diag


# -- reports ---------------------------------------------------------------


DIAG_REPORT_HEADER = ("xi", "sup_offdiag", "sup_Bbar_over_omega", "sup_dtH_over_omega")


@dataclasses.dataclass(frozen=True)
class DiagReport:
    """Grid fits of the diagonalization estimates.

    rows: per-xi (xi, sup offdiag of Hinv A H, sup |Bbar| / omega(<xi>),
    sup |dH| / omega(<xi>)); spread: max/min of the Bbar ratio over the rows.
    """

    rows: list
    sup_offdiag: float
    sup_Bbar_over_omega: float
    spread: float


def diag_report(spec, t_grid, xi_grid, modulus=None, M_cutoff: float = M_CUTOFF, mollifier=None) -> DiagReport:
    mu = modulus or spec.modulus
    if mu is None:
        raise ValueError("no modulus given and spec carries none")
    rows = []
    for xi in np.asarray(xi_grid, dtype=float):
        system = build_system(spec, float(xi), mollifier)
        omega = system.bracket * mu.mu(min(1.0, 1.0 / system.bracket))
        off = bbar = dth = 0.0
        for t in np.asarray(t_grid, dtype=float):
            Lam, Bbar, diag = diagonalize_system(system, float(t), M_cutoff)
            A, _B = system.matrices(float(t))
            AH = diag.Hinv @ A @ diag.H
            off = max(off, float(np.max(np.abs(AH - np.diag(np.diag(AH))))) / system.bracket)
            bbar = max(bbar, float(np.max(np.abs(Bbar))) / omega)
            dth = max(dth, float(np.max(np.abs(diag.dH))) / omega)
        rows.append((float(xi), off, bbar, dth))
    ratios = [r[2] for r in rows if r[2] > 0]
    spread = (max(ratios) / min(ratios)) if ratios else 1.0
    return DiagReport(
        rows=rows,
        sup_offdiag=max(r[1] for r in rows),
        sup_Bbar_over_omega=max(r[2] for r in rows),
        spread=spread,
    )


def factorization_residual(spec, roots: RegularizedRoots, t: float, xi: float, modulus=None) -> np.ndarray:
    """Per-degree defect of prod_j (tau - lam_j) against the characteristic
    polynomial, residual in tau^j normalized by <xi>^(m-1-j) omega(<xi>)."""
    mu = modulus or spec.modulus
    if mu is None:
        raise ValueError("no modulus given and spec carries none")
    m = spec.m
    lam = roots.lam(float(t))
    prod = np.poly(lam)  # tau^m + prod[1] tau^(m-1) + ...
    c = spec.bind_xi(xi).char_poly_coeffs(float(t), xi)
    bracket = math.hypot(1.0, xi)
    omega = bracket * mu.mu(min(1.0, 1.0 / bracket))
    out = np.empty(m)
    for j in range(m):
        true_cj = c[j]  # coefficient of tau^j in tau^m - sum c_j tau^j
        approx_cj = -prod[m - j]
        out[j] = abs(approx_cj - true_cj) / (bracket ** (m - 1 - j) * omega)
    return out

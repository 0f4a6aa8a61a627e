"""Symbol calculus on truncated Fourier modes of the 1-D torus.

Operators are dense complex matrices indexed by modes k, l in [-N, N]; a
separable symbol a(x) m(xi) quantizes to entries[k, l] = a_hat(k - l) m(l).
In this finite setting the weighted conjugation e^{lam psi(<D>)} A
e^{-lam psi(<D>)} is an exact entrywise similarity transform, so the
asymptotic-expansion statements of the calculus become checkable matrix
identities plus decay fits: no oscillatory integrals remain.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from ._jet import Jet

#: default mode cutoff
DEFAULT_N = 256
#: aliased-tail budget for the generating function's Fourier coefficients
ALIAS_TOL = 1e-10
#: log-domain headroom for the conjugation factors
EXP_HEADROOM = 700.0
MULTIPLIER_OFFDIAG_TOL = 1e-14


class TruncatedOperator:
    """Dense matrix on modes [-N, N]; index i corresponds to mode i - N."""

    def __init__(self, N: int, entries: np.ndarray, order: float = 0.0, omega=None, meta=None):
        entries = np.asarray(entries, dtype=complex)
        if entries.shape != (2 * N + 1, 2 * N + 1):
            raise ValueError(f"entries must be {(2 * N + 1, 2 * N + 1)}, got {entries.shape}")
        self.N = N
        self.entries = entries
        self.order = order
        self.omega = omega
        self.meta = dict(meta or {})

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    def apply(self, u_modes: np.ndarray) -> np.ndarray:
        return self.entries @ u_modes

    def is_multiplier(self) -> bool:
        off = self.entries - np.diag(np.diag(self.entries))
        scale = max(float(np.max(np.abs(self.entries))), 1e-300)
        return float(np.max(np.abs(off))) / scale <= MULTIPLIER_OFFDIAG_TOL


@dataclasses.dataclass
class DiscreteSymbol:
    """sigma(x_j, l) extracted from an operator: sum_k entries[k,l] e^{i(k-l)x_j}."""

    x_grid: np.ndarray
    modes: np.ndarray
    values: np.ndarray  # shape (len(x_grid), len(modes))


def fourier_coefficients(a_x, n_samples: int) -> np.ndarray:
    """a_hat(q) for q = -(n-1)/2 .. (n-1)/2 from n equispaced samples."""
    x = 2.0 * np.pi * np.arange(n_samples) / n_samples
    vals = np.asarray([a_x(float(xx)) for xx in x], dtype=complex)
    hat = np.fft.fft(vals) / n_samples
    half = (n_samples - 1) // 2
    return np.concatenate([hat[-half:], hat[: half + 1]])  # index q + half


def operator_from_symbol(a_x, m_xi, N: int = DEFAULT_N, order: float = 0.0, omega=None) -> TruncatedOperator:
    """Quantize the separable symbol a(x) m(xi): entries[k,l] = a_hat(k-l) m(l)."""
    hat = fourier_coefficients(a_x, 4 * N + 1)  # q in [-2N, 2N]
    tail = float(np.max(np.abs(hat[np.abs(np.arange(-2 * N, 2 * N + 1)) > 2 * N - 4])))
    if tail > ALIAS_TOL:
        raise ValueError(
            f"mode cutoff too small: generating-function tail {tail:.3g} > {ALIAS_TOL:g}"
        )
    modes = np.arange(-N, N + 1)
    m_vals = np.asarray([m_xi(float(l)) for l in modes], dtype=complex)
    # entries[k, l] = hat[(k - l) + 2N] * m(l)
    diff = modes[:, None] - modes[None, :]
    entries = hat[diff + 2 * N] * m_vals[None, :]
    return TruncatedOperator(
        N, entries, order=order, omega=omega, meta={"a_hat": hat, "m_vals": m_vals}
    )


def multiplier(m_xi, N: int = DEFAULT_N, order: float = 0.0, omega=None) -> TruncatedOperator:
    return operator_from_symbol(lambda x: 1.0, m_xi, N, order, omega)


def extract_symbol(op: TruncatedOperator, x_grid=None) -> DiscreteSymbol:
    modes = op.modes
    if x_grid is None:
        x_grid = 2.0 * np.pi * np.arange(64) / 64.0
    x_grid = np.asarray(x_grid, dtype=float)
    # sigma(x, l) = e^{-ilx} sum_k entries[k, l] e^{ikx}
    phase_k = np.exp(1j * np.outer(x_grid, modes))  # (x, k)
    values = (phase_k @ op.entries) * np.conj(phase_k)
    return DiscreteSymbol(x_grid=x_grid, modes=modes, values=values)


# -- composition -----------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class ExpansionReport:
    """Residual of the composition expansion per dyadic mode.

    rows: (mode, max_x |extracted - n_terms expansion|); slope: fitted decay
    exponent of the residual in <mode>.
    """

    n_terms: int
    rows: list
    slope: float


def _spectral_x_derivative(a_hat: np.ndarray, gamma: int) -> np.ndarray:
    """Fourier coefficients of D_x^gamma a, D_x = -i d/dx: multiplies by q^gamma."""
    half = (a_hat.size - 1) // 2
    q = np.arange(-half, half + 1)
    return a_hat * q.astype(complex) ** gamma


def _mode_difference(vals: np.ndarray, alpha: int) -> np.ndarray:
    out = vals
    for _ in range(alpha):
        out = np.diff(out)
    return out


def compose(A: TruncatedOperator, B: TruncatedOperator, n_terms: int = 2, x_grid=None):
    """Exact operator product plus a report on the n_terms-term symbol
    expansion sum_gamma (1/gamma!) d_xi^gamma a . D_x^gamma b."""
    if A.N != B.N:
        raise ValueError("operators live on different mode truncations")
    prod = TruncatedOperator(
        A.N, A.entries @ B.entries, order=A.order + B.order,
        omega=A.omega or B.omega,
    )
    if "a_hat" not in A.meta or "a_hat" not in B.meta:
        return prod, None
    if x_grid is None:
        x_grid = 2.0 * np.pi * np.arange(64) / 64.0
    x_grid = np.asarray(x_grid, dtype=float)
    extracted = extract_symbol(prod, x_grid)
    N = A.N
    modes = prod.modes
    half_a = (A.meta["a_hat"].size - 1) // 2
    half_b = (B.meta["a_hat"].size - 1) // 2
    a1_x = np.exp(1j * np.outer(x_grid, np.arange(-half_a, half_a + 1))) @ A.meta["a_hat"]
    b_phase = np.exp(1j * np.outer(x_grid, np.arange(-half_b, half_b + 1)))
    approx = np.zeros((x_grid.size, modes.size), dtype=complex)
    for gamma in range(n_terms):
        # d_xi^gamma m1 by repeated centered gradients in the mode index
        dm1 = A.meta["m_vals"].astype(complex)
        for _ in range(gamma):
            dm1 = np.gradient(dm1)
        dx_a2 = b_phase @ _spectral_x_derivative(B.meta["a_hat"], gamma)  # D_x^g a2
        approx += np.outer(a1_x * dx_a2, dm1 * B.meta["m_vals"]) / math.factorial(gamma)
    resid = np.abs(extracted.values - approx)
    rows = []
    j = 2
    while 2**j <= N // 2:
        l = 2**j
        rows.append((l, float(np.max(resid[:, l + N]))))
        j += 1
    slope = _fit_decay([r[0] for r in rows], [r[1] for r in rows])
    return prod, ExpansionReport(n_terms=n_terms, rows=rows, slope=slope)


def _fit_decay(modes, residuals) -> float:
    """Least-squares slope of log residual vs log <mode>; returns the decay
    exponent (positive = decaying)."""
    pts = [(math.log(math.hypot(1.0, l)), math.log(r)) for l, r in zip(modes, residuals) if r > 1e-300]
    if len(pts) < 3:
        return math.inf
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    return -float(np.polyfit(x, y, 1)[0])


# -- conjugation -----------------------------------------------------------


def conjugate_exact(A: TruncatedOperator, psi, lam: float) -> TruncatedOperator:
    """e^{lam psi(<D>)} A e^{-lam psi(<D>)}: entrywise factor
    exp(lam (psi(<k>) - psi(<l>)))."""
    modes = A.modes
    br = np.hypot(1.0, modes.astype(float))
    psi_vals = np.array([float(psi.eta(r)) for r in br])
    span = abs(lam) * (float(np.max(psi_vals)) - float(np.min(psi_vals)))
    if span > EXP_HEADROOM:
        raise ValueError(f"conjugation overflow: lam * psi span {span:.3g} > {EXP_HEADROOM:g}")
    factor = np.exp(lam * (psi_vals[:, None] - psi_vals[None, :]))
    out = TruncatedOperator(
        A.N, factor * A.entries, order=A.order, omega=A.omega, meta=dict(A.meta)
    )
    out.meta["conjugated"] = (getattr(psi, "name", "psi"), lam)
    return out


def _psi_jet(psi, xi: float, order: int) -> Jet:
    """Jet of xi -> psi(<xi>) using the weight's derivative oracle."""
    br = math.hypot(1.0, xi)
    jx = Jet.variable(float(xi), order)
    inner = (Jet.constant(1.0, order) + jx * jx).sqrt()  # <xi> jet
    derivs = [float(psi.eta(br))] + [psi.derivative(k, br) for k in range(1, order + 1)]
    return Jet.from_derivatives(derivs).compose(inner)


def chi_gamma(psi, lam: float, gamma: int, xi: float) -> float:
    """chi_gamma(xi) = (1/gamma!) e^{-lam psi(<xi>)} d_nu^gamma e^{lam psi(<nu>)}
    at nu = xi, via the recursion q_{g+1} = q_g' + lam (psi(<.>))' q_g."""
    if not 0 <= gamma <= 4:
        raise ValueError(f"gamma must be in [0, 4]: {gamma}")
    if gamma == 0:
        return 1.0
    order = gamma + 1
    g = _psi_jet(psi, xi, order + 1).shift()  # jet of d/dxi psi(<xi>)
    q = Jet.constant(1.0, order + 1)
    for _ in range(gamma):
        q = q.shift() + lam * g * q
    return float(np.real(q.value())) / math.factorial(gamma)


# -- remainder -------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class RemainderReport:
    """Decay fit for the conjugation-expansion remainder.

    valid: precondition lam * sup psi' < delta0 (fitted decay rate of a_hat)
    held; slope: fitted decay exponent of max_x |residual| / psi^n_terms;
    required: n_terms - order - 0.2; passed: valid and slope >= required.
    """

    valid: bool
    lam: float
    delta0: float
    n_terms: int
    rows: list
    slope: float
    required: float
    passed: bool
    note: str = ""


def fitted_coefficient_decay(a_hat: np.ndarray) -> float:
    """delta0 from regression of log |a_hat(q)| on |q| (coefficients above
    the rounding floor only); inf for band-limited generators."""
    half = (a_hat.size - 1) // 2
    q = np.abs(np.arange(-half, half + 1))
    mags = np.abs(a_hat)
    mask = (mags > 1e-14) & (q > 0)
    if np.count_nonzero(mask) < 3:
        return math.inf
    return -float(np.polyfit(q[mask], np.log(mags[mask]), 1)[0])


def expansion_residual_report(A: TruncatedOperator, psi, lam: float, n_terms: int, x_grid=None) -> RemainderReport:
    if "a_hat" not in A.meta:
        raise ValueError("remainder report needs a separable generating symbol")
    delta0 = fitted_coefficient_decay(A.meta["a_hat"])
    modes = A.modes.astype(float)
    br = np.hypot(1.0, modes)
    # sup over modes of d/dxi psi(<xi>)
    sup_dpsi = max(abs(_psi_jet(psi, float(x), 2).derivative_value(1).real) for x in (0.0, 1.0, float(A.N)))
    if lam * sup_dpsi >= delta0:
        return RemainderReport(
            valid=False, lam=lam, delta0=delta0, n_terms=n_terms, rows=[],
            slope=math.nan, required=n_terms - A.order - 0.2, passed=False,
            note="lam at or above the fitted coefficient decay rate; series not summable",
        )
    conj = conjugate_exact(A, psi, lam)
    if x_grid is None:
        x_grid = 2.0 * np.pi * np.arange(64) / 64.0
    x_grid = np.asarray(x_grid, dtype=float)
    extracted = extract_symbol(conj, x_grid)
    half = (A.meta["a_hat"].size - 1) // 2
    qs = np.arange(-half, half + 1)
    phases = np.exp(1j * np.outer(x_grid, qs))
    approx = np.zeros((x_grid.size, modes.size), dtype=complex)
    chi = np.array([[chi_gamma(psi, lam, g, float(l)) for l in modes] for g in range(n_terms)])
    for g in range(n_terms):
        dx_a = phases @ _spectral_x_derivative(A.meta["a_hat"], g)  # D_x^g a(x)
        approx += np.outer(dx_a, A.meta["m_vals"] * chi[g])
    resid = np.abs(extracted.values - approx)
    psi_vals = np.array([float(psi.eta(r)) for r in br])
    rows = []
    j = 2
    while 2**j <= A.N // 2:
        l = 2**j
        idx = int(l + A.N)
        rows.append((l, float(np.max(resid[:, idx])) / psi_vals[idx] ** n_terms))
        j += 1
    slope = _fit_decay([r[0] for r in rows], [r[1] for r in rows])
    required = n_terms - A.order - 0.2
    return RemainderReport(
        valid=True, lam=lam, delta0=delta0, n_terms=n_terms, rows=rows,
        slope=slope, required=required, passed=bool(slope >= required),
    )


# -- seminorms -------------------------------------------------------------


def symbol_seminorm(sym: DiscreteSymbol, alpha: int, order: float, omega=None) -> float:
    """sup |Delta_xi^alpha sym| / (<xi>^(order - alpha) omega(<xi>))."""
    if alpha > 3:
        raise ValueError(f"alpha must be <= 3: {alpha}")
    diff = _mode_difference(sym.values, alpha)
    modes = sym.modes[: sym.modes.size - alpha].astype(float)
    br = np.hypot(1.0, modes)
    denom = br ** (order - alpha)
    if omega is not None:
        denom = denom * np.array([float(omega(r)) for r in br])
    return float(np.max(np.abs(diff) / denom[None, :]))


# -- export ----------------------------------------------------------------


OPERATOR_CSV_HEADER = ("row_mode", "col_mode", "real", "imag")


def operator_rows(op: TruncatedOperator, threshold: float = 0.0) -> list:
    """(k, l, Re, Im) rows for CSV inspection, entries above threshold."""
    rows = []
    modes = op.modes
    for i, k in enumerate(modes):
        for j, l in enumerate(modes):
            z = op.entries[i, j]
            if abs(z) > threshold:
                rows.append((int(k), int(l), float(z.real), float(z.imag)))
    return rows

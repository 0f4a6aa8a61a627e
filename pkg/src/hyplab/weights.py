"""Weight functions, weight sequences, and their compatibility certificates.

A weight function eta: [1, inf) -> [1, inf) defines exponentially weighted
Sobolev-type spaces through e^{delta * eta(<D>)}. A weight sequence K_p bounds
spatial derivatives of coefficients. The two are compatible when
inf_p K_p / <xi>^p <= C e^{-delta0 * eta(<xi>)} for some delta0 > 0; the
certificate here reports the best (delta0, C) a truncated search certifies.

All sequence arithmetic is done on log K_p; K_p itself overflows double
precision for the super-factorial catalog entries.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable

import numpy as np

from ._fd import richardson_derivative

LAMBERT_TOL = 1e-12
_SQRT_E = math.sqrt(math.e)


class WeightFunction:
    """Named eta with numeric params and a derivative oracle (k <= 8)."""

    def __init__(
        self,
        name: str,
        eta: Callable,
        params: dict | None = None,
        derivative: Callable | None = None,
    ):
        self.name = name
        self._eta = eta
        self.params = dict(params or {})
        self._derivative = derivative

    def eta(self, s):
        s_arr = np.asarray(s, dtype=float)
        if np.any(s_arr < 1.0):
            raise ValueError(f"weight argument below 1: {s!r}")
        out = self._eta(s_arr)
        return float(out) if np.isscalar(s) or s_arr.ndim == 0 else out

    __call__ = eta

    def derivative(self, k: int, s: float) -> float:
        if k < 0 or k > 8:
            raise ValueError("derivative order must be in 0..8")
        if k == 0:
            return float(self.eta(s))
        if self._derivative is not None:
            return float(self._derivative(k, s))
        return richardson_derivative(lambda x: self.eta(x), s, k)

    def __repr__(self):
        return f"WeightFunction({self.name!r})"


class WeightSequence:
    """Named K_p given through its logarithm (exact in log domain)."""

    def __init__(self, name: str, log_K: Callable[[int], float], growth_note: str = ""):
        self.name = name
        self._log_K = log_K
        self.growth_note = growth_note

    def log_K(self, p: int) -> float:
        if p < 0 or p != int(p):
            raise ValueError(f"sequence index must be a non-negative integer: {p!r}")
        return float(self._log_K(int(p)))

    def K(self, p: int) -> float:
        """K_p itself; may overflow to inf for super-factorial entries."""
        return math.exp(self.log_K(p)) if self.log_K(p) < 700 else math.inf

    def __repr__(self):
        return f"WeightSequence({self.name!r})"


@dataclasses.dataclass(frozen=True)
class CompatibilityReport:
    delta0: float
    C: float
    grid: tuple
    p_max: int
    passed: bool
    #: index of the first grid point from which delta0 * eta stays certified
    threshold_index: int


@dataclasses.dataclass(frozen=True)
class PropertyReport:
    C_k: dict
    subadditive: bool
    #: smallest grid value above which subadditivity held for all pairs
    subadd_threshold: float | None
    witness: tuple | None


# -- operations -----------------------------------------------------------


def associated_function(K: WeightSequence, t: float, p_max: int) -> float:
    """max over 0 <= p <= p_max of p*log t - log K_p (0 at t -> 0+ if K_0=1).

    Monotone non-decreasing in p_max by construction (a larger search set).
    """
    if t <= 0.0:
        raise ValueError(f"associated function needs t > 0: {t}")
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    p = np.arange(0, p_max + 1)
    logs = np.array([K.log_K(int(q)) for q in p])
    return float(np.max(p * math.log(t) - logs))


def associated_sequence(Mfun, p: int, t_grid) -> float:
    """sup over the grid of t^p e^{-M(t)}, with one Newton refinement.

    exp of :func:`log_associated_sequence`; overflows to inf only if the
    log-supremum itself exceeds double range.
    """
    return float(math.exp(log_associated_sequence(Mfun, p, t_grid)))


def log_associated_sequence(Mfun, p: int, t_grid) -> float:
    """log of sup over the grid of t^p e^{-M(t)} (log-domain throughout).

    `Mfun` is a callable M(t) (a WeightFunction works).
    """
    if p < 0:
        raise ValueError("p must be >= 0")
    M = Mfun.eta if isinstance(Mfun, WeightFunction) else Mfun
    t = np.asarray(t_grid, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t_grid must be positive")
    g = p * np.log(t) - np.array([float(M(x)) for x in t])
    i = int(np.argmax(g))
    t0, best = t[i], g[i]
    if p > 0 and 0 < i < t.size - 1:
        # one Newton step on g'(t) = p/t - M'(t) with FD derivatives
        h = t0 * 1e-4
        Mp = (float(M(t0 + h)) - float(M(t0 - h))) / (2 * h)
        Mpp = (float(M(t0 + h)) - 2 * float(M(t0)) + float(M(t0 - h))) / h**2
        g1 = p / t0 - Mp
        g2 = -p / t0**2 - Mpp
        if g2 < 0:
            t1 = t0 - g1 / g2
            if t[i - 1] < t1 < t[i + 1]:
                best = max(best, p * math.log(t1) - float(M(t1)))
    return float(best)


def compatibility_check(
    K: WeightSequence, eta: WeightFunction, xi_grid, p_max: int
) -> CompatibilityReport:
    """Certify inf_p K_p/<xi>^p <= C e^{-delta0 eta(<xi>)} on the grid.

    L(xi) = min_{p <= p_max}(log K_p - p log<xi>) = -M(<xi>); the certified
    delta0 is the grid minimum of M(<xi>)/eta(<xi>) and C the smallest
    constant closing the inequality at every grid point (C = 1 when the
    minimum binds). pass requires delta0 > 0.
    """
    if p_max < 50:
        raise ValueError("p_max must be >= 50")
    xi = np.asarray(xi_grid, dtype=float)
    bracket = np.hypot(1.0, xi)
    M = np.array([associated_function(K, b, p_max) for b in bracket])
    eta_vals = np.array([eta.eta(b) for b in bracket])
    ratio = M / eta_vals
    delta0 = float(np.min(ratio))
    C = float(np.exp(np.max(delta0 * eta_vals - M)))
    positive = ratio > 0
    threshold = int(np.argmax(positive)) if positive.any() else len(xi)
    return CompatibilityReport(
        delta0=delta0,
        C=C,
        grid=tuple(float(x) for x in xi),
        p_max=p_max,
        passed=delta0 > 0.0,
        threshold_index=threshold,
    )


def weight_property_check(w, k_max: int, grid) -> PropertyReport:
    """Fit C_k in |d^k eta / ds^k| <= C_k s^-k eta(s) and check subadditivity.

    Accepts a WeightFunction or a modulus (its omega is used). Subadditivity
    eta(<xi+zeta>) <= eta(<xi>) + eta(<zeta>) is checked over all grid pairs;
    since it is only required for large arguments, the report carries the
    smallest grid threshold above which it holds rather than failing on small
    pairs.
    """
    if k_max > 4:
        raise ValueError("k_max must be <= 4 for the finite-difference oracle")
    if isinstance(w, WeightFunction):
        f, df = w.eta, w.derivative
    else:  # modulus of continuity: use omega
        f, df = w.omega, w.omega_derivative
    g = np.asarray(grid, dtype=float)
    C_k = {}
    for k in range(1, k_max + 1):
        vals = np.array([abs(df(k, s)) * s**k / f(s) for s in g])
        C_k[k] = float(np.max(vals))

    bracket = np.hypot(1.0, g)
    fv = np.array([f(b) for b in bracket])
    sums = np.hypot(1.0, g[:, None] + g[None, :])
    lhs = np.array([[f(x) for x in row] for row in sums])
    ok = lhs <= fv[:, None] + fv[None, :] + 1e-12
    if ok.all():
        return PropertyReport(C_k, True, float(g[0]), None)
    # smallest threshold: both pair members above it
    for i in range(g.size):
        if ok[i:, i:].all():
            return PropertyReport(C_k, True, float(g[i]), None)
    bad = np.argwhere(~ok)[-1]
    return PropertyReport(C_k, False, None, (float(g[bad[0]]), float(g[bad[1]])))


def lambert_w(x: float) -> float:
    """Principal-branch W(x) for x >= 0 by Halley iteration.

    Initial guess: w0 = x/(1+x) for x < e (exact at 0, good to ~10% there),
    w0 = log x - log log x otherwise (asymptotic expansion head). Iterates
    until |w e^w - x| <= 1e-12 * max(1, x).
    """
    if x < 0.0:
        raise ValueError(f"lambert_w needs x >= 0: {x}")
    if x == 0.0:
        return 0.0
    w = x / (1.0 + x) if x < math.e else math.log(x) - math.log(math.log(x))
    for _ in range(100):
        ew = math.exp(w)
        r = w * ew - x
        if abs(r) <= LAMBERT_TOL * max(1.0, x):
            return w
        denom = ew * (w + 1.0) - (w + 2.0) * r / (2.0 * (w + 1.0))
        w -= r / denom
    raise ArithmeticError(f"lambert_w failed to converge for x={x}")


def example35_M(xi: float) -> float:
    """Closed-form associated function of {p^(p^2)} via Lambert W:
    (log<xi>/2) * exp(W(log<xi> sqrt(e)/2) - 1/2)."""
    if xi < 1.0:
        raise ValueError(f"xi must be >= 1: {xi}")
    L = math.log(math.hypot(1.0, xi))
    if L == 0.0:
        return 0.0
    return (L / 2.0) * math.exp(lambert_w(L * _SQRT_E / 2.0) - 0.5)


# -- catalog --------------------------------------------------------------


def eta_power(kappa: float) -> WeightFunction:
    if kappa <= 0:
        raise ValueError(f"kappa must be positive: {kappa}")

    def d(k, s):
        coeff = 1.0
        for i in range(k):
            coeff *= kappa - i
        return coeff * s ** (kappa - k)

    return WeightFunction(f"eta:power:kappa={kappa:g}", lambda s: s**kappa, {"kappa": kappa}, d)


def eta_log() -> WeightFunction:
    """eta(s) = log s; the conjugation weight psi = log<.> in symbol tests."""

    def d(k, s):
        return (-1.0) ** (k - 1) * math.factorial(k - 1) * s ** (-k)

    return WeightFunction("eta:log", lambda s: np.log(s), {}, d)


def _iterlog_clamped(s, m: int):
    v = np.asarray(s, dtype=float)
    for _ in range(m):
        v = np.log(np.maximum(v, math.e))
    return v


def eta_loglogm(m: int = 2, eps: float = 0.5, c: float = 1.0) -> WeightFunction:
    """eta(s) = log(s) * (log^[m] s, clamped below at 1)^(1+eps) + c."""
    if eps <= 0:
        raise ValueError(f"eps must be positive: {eps}")

    def eta(s):
        s_arr = np.asarray(s, dtype=float)
        return np.log(s_arr) * _iterlog_clamped(s_arr, m) ** (1.0 + eps) + c

    return WeightFunction(f"eta:loglogm:m={m},eps={eps:g}", eta, {"m": m, "eps": eps, "c": c})


def eta_sublog(alpha: float) -> WeightFunction:
    """eta(s) = s (log s + 1)^(-alpha)."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive: {alpha}")
    return WeightFunction(
        f"eta:sublog:alpha={alpha:g}",
        lambda s: s * (np.log(s) + 1.0) ** (-alpha),
        {"alpha": alpha},
    )


def K_gevrey(kappa: float, A: float = 1.0) -> WeightSequence:
    if kappa <= 0 or A <= 0:
        raise ValueError("kappa and A must be positive")
    return WeightSequence(
        f"K:gevrey:kappa={kappa:g},A={A:g}",
        lambda p: math.lgamma(p + 1) / kappa + p * math.log(A),
        growth_note="(p!)^(1/kappa) A^p",
    )


def K_psq() -> WeightSequence:
    return WeightSequence(
        "K:psq",
        lambda p: p * p * math.log(p) if p >= 2 else 0.0,
        growth_note="p^(p^2), K_0 = K_1 = 1",
    )


def K_logfactor() -> WeightSequence:
    return WeightSequence(
        "K:logfactor",
        lambda p: p * math.log((p + 1) * math.log(math.e + p)),
        growth_note="((p+1) log(e+p))^p",
    )


def K_constant(value: float = 1.0) -> WeightSequence:
    if value <= 0:
        raise ValueError("constant sequence must be positive")
    return WeightSequence(f"K:const:{value:g}", lambda p: math.log(value), growth_note="constant")


def _parse_kv(tail: str) -> dict:
    kv = {}
    if tail:
        for item in tail.split(","):
            k, _, v = item.partition("=")
            if not v:
                raise ValueError(f"malformed parameter {item!r}")
            kv[k.strip()] = v.strip()
    return kv


def from_id(ident: str):
    """Parse weight ids: eta:power:kappa=0.6, eta:loglogm:m=2,eps=0.5,
    eta:sublog:alpha=0.3, eta:log, K:gevrey:kappa=0.6,A=1, K:psq,
    K:logfactor."""
    kind, _, rest = ident.partition(":")
    head, _, tail = rest.partition(":")
    try:
        kv = _parse_kv(tail)
        if kind == "eta":
            if head == "power" and set(kv) == {"kappa"}:
                return eta_power(float(kv["kappa"]))
            if head == "loglogm" and {"m", "eps"} <= set(kv) <= {"m", "eps", "c"}:
                return eta_loglogm(int(kv["m"]), float(kv["eps"]), float(kv.get("c", 1.0)))
            if head == "sublog" and set(kv) == {"alpha"}:
                return eta_sublog(float(kv["alpha"]))
            if head == "log" and not kv:
                return eta_log()
        elif kind == "K":
            if head == "gevrey" and {"kappa"} <= set(kv) <= {"kappa", "A"}:
                return K_gevrey(float(kv["kappa"]), float(kv.get("A", 1.0)))
            if head == "psq" and not kv:
                return K_psq()
            if head == "logfactor" and not kv:
                return K_logfactor()
    except (TypeError, ValueError) as exc:
        raise ValueError(f"bad weight id {ident!r}: {exc}") from exc
    raise ValueError(f"unknown weight id {ident!r}")


ETA_IDS = ("eta:power:kappa=0.6", "eta:loglogm:m=2,eps=0.5", "eta:sublog:alpha=0.3")
K_IDS = ("K:gevrey:kappa=0.6,A=1", "K:psq", "K:logfactor")

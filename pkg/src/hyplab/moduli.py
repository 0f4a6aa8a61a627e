"""Moduli of continuity: catalog, evaluation, validation, classification.

A modulus of continuity mu maps (0, 1] to (0, 1], is concave, non-decreasing,
and vanishes at 0+. Each modulus carries the derived weight
``omega(r) = r * mu(1/r)`` on [1, inf), which is the frequency-side face of
the same regularity information, and a classification into Strong (at most
``s log(1/s)`` scale) and Weak (rougher than that).
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable

import numpy as np

from ._fd import richardson_derivative

GRID_SIZE = 1025  # validation grid resolution on (0, 1]
_CLASSIFY_J = np.arange(10, 41)  # dyadic sample exponents s_j = 2^-j
_WEAK_CUTOFF = 0.05
_WEAK_LOGSLOPE = -0.1
_CONCAVITY_TOL = 1e-12


class Strong:
    """Classification tag: at most s*log(1/s) scale."""


class Weak:
    """Classification tag: rougher than s*log(1/s)."""


class Indeterminate:
    """Classification tag: sampled trend matches neither test."""


@dataclasses.dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    witness: tuple | None = None
    detail: str = ""


@dataclasses.dataclass(frozen=True)
class ValidationReport:
    modulus: str
    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


class ModulusOfContinuity:
    """A named modulus mu with derived omega and a derivative oracle.

    Parameters
    ----------
    name : str
        Identifier, e.g. "log-lip" or "holder:alpha=0.5".
    mu : callable
        Vectorized map (0, 1] -> (0, 1].
    params : dict, optional
        Numeric parameters (alpha, iterate depth m, ...).
    omega_derivative : callable, optional
        Closed-form (k, r) -> d^k omega / dr^k for k <= 8. Falls back to
        central differences with Richardson extrapolation.
    slow_decay : bool
        True for entries whose mu decays slower than any power of 1/log(1/s)
        budgeted by the standard zero-limit check; validation then applies the
        documented slow-decay bound instead.
    """

    def __init__(
        self,
        name: str,
        mu: Callable,
        params: dict | None = None,
        omega_derivative: Callable | None = None,
        slow_decay: bool = False,
    ):
        self.name = name
        self._mu = mu
        self.params = dict(params or {})
        self._omega_derivative = omega_derivative
        self.slow_decay = slow_decay

    # -- evaluation -------------------------------------------------------

    def mu(self, s):
        s_arr = np.asarray(s, dtype=float)
        if np.any(s_arr <= 0.0) or np.any(s_arr > 1.0):
            raise ValueError(f"mu argument outside (0, 1]: {s!r}")
        out = self._mu(s_arr)
        return float(out) if np.isscalar(s) or s_arr.ndim == 0 else out

    def omega(self, r):
        r_arr = np.asarray(r, dtype=float)
        if np.any(r_arr < 1.0):
            raise ValueError(f"omega argument below 1: {r!r}")
        out = r_arr * self._mu(1.0 / r_arr)
        return float(out) if np.isscalar(r) or r_arr.ndim == 0 else out

    def omega_derivative(self, k: int, r: float) -> float:
        if k < 0 or k > 8:
            raise ValueError("derivative order must be in 0..8")
        if k == 0:
            return float(self.omega(r))
        if self._omega_derivative is not None:
            return float(self._omega_derivative(k, r))
        return richardson_derivative(lambda x: self.omega(x), r, k)

    def __repr__(self):
        return f"ModulusOfContinuity({self.name!r})"


# -- operations -----------------------------------------------------------


def eval_mu(moc: ModulusOfContinuity, s: float) -> float:
    """mu(s) for scalar s in (0, 1]."""
    return float(moc.mu(float(s)))


def omega_of(moc: ModulusOfContinuity, r: float) -> float:
    """omega(r) = r * mu(1/r) for scalar r >= 1."""
    return float(moc.omega(float(r)))


def classify(moc: ModulusOfContinuity):
    """Strong / Weak / Indeterminate from dyadic samples s_j = 2^-j.

    Strong: L_j = mu(s_j)/(s_j log(1/s_j)) non-increasing (bounded trend).
    Weak: 1/L_j strictly decreasing over the final 10 samples and either
    already below the cutoff or trending to 0 (fitted log-log slope of the
    reciprocal vs j at most -0.1 over that window).
    """
    j = _CLASSIFY_J.astype(float)
    s = 2.0 ** (-j)
    L = moc.mu(s) / (s * j * math.log(2.0))
    recip = 1.0 / L
    tail_L = L[-10:]
    tail_r = recip[-10:]
    if np.all(np.diff(tail_L) <= 1e-12) and np.max(L) <= L[0] * (1 + 1e-9):
        return Strong
    if np.all(np.diff(tail_r) < 0.0):
        slope = np.polyfit(np.log(j[-10:]), np.log(tail_r), 1)[0]
        if tail_r[-1] < _WEAK_CUTOFF or slope <= _WEAK_LOGSLOPE:
            return Weak
    return Indeterminate


def validate(moc: ModulusOfContinuity) -> ValidationReport:
    """Grid validation: monotonicity, midpoint concavity, zero limit, mu(1)<=1.

    Failures are report entries with the witnessing grid point(s), never
    exceptions.
    """
    s = np.linspace(0.0, 1.0, GRID_SIZE + 1)[1:]
    m = moc.mu(s)
    checks = []

    dm = np.diff(m)
    bad = np.where(dm < -1e-14)[0]
    checks.append(
        CheckResult("monotone", bad.size == 0, (float(s[bad[0]]), float(s[bad[0] + 1])) if bad.size else None)
    )

    # midpoint concavity over all grid pairs, vectorized via broadcasting
    mid = 0.5 * (s[:, None] + s[None, :])
    gap = moc.mu(mid) - 0.5 * (m[:, None] + m[None, :])
    worst = np.unravel_index(np.argmin(gap), gap.shape)
    ok = gap[worst] >= -_CONCAVITY_TOL
    checks.append(
        CheckResult(
            "concave",
            bool(ok),
            None if ok else (float(s[worst[0]]), float(s[worst[1]])),
            f"min midpoint gap {float(gap[worst]):.3e}",
        )
    )

    s_small = 2.0**-40
    m_small = eval_mu(moc, s_small)
    if moc.slow_decay:
        alpha = float(moc.params.get("alpha", 1.0))
        bound = (40.0 * math.log(2.0) + 1.0) ** (-alpha) + 1e-12
        detail = "documented slow-decay bound"
    else:
        bound = 1e-3
        detail = "standard bound 1e-3"
    checks.append(CheckResult("zero_limit", m_small <= bound, None if m_small <= bound else (s_small,), detail))

    top = eval_mu(moc, 1.0)
    checks.append(CheckResult("mu1_le_1", top <= 1.0 + 1e-12, None if top <= 1.0 + 1e-12 else (1.0,)))

    return ValidationReport(moc.name, tuple(checks))


# -- catalog --------------------------------------------------------------


def lipschitz() -> ModulusOfContinuity:
    return ModulusOfContinuity(
        "lipschitz",
        lambda s: s,
        omega_derivative=lambda k, r: 0.0,
    )


def log_lip() -> ModulusOfContinuity:
    # omega(r) = log(r) + 1
    def d_omega(k, r):
        return (-1.0) ** (k - 1) * math.factorial(k - 1) * r ** (-k)

    return ModulusOfContinuity(
        "log-lip",
        lambda s: s * (np.log(1.0 / s) + 1.0),
        omega_derivative=d_omega,
    )


def _tower(m: int) -> float:
    """exp iterated m times starting from 1: tower(0)=1, tower(1)=e, ..."""
    v = 1.0
    for _ in range(m):
        v = math.exp(v)
    return v


def _iterlog(x, m: int):
    v = np.asarray(x, dtype=float)
    for _ in range(m):
        v = np.log(v)
    return v


def log_log_lip(m: int = 2) -> ModulusOfContinuity:
    """Iterated-log modulus s(log(1/s)+1)log^[m](1/s), argument-rescaled.

    The raw formula is only a valid modulus for s <= 1/tower(m) (further up
    the iterated log dips below 1 and eventually goes negative); the catalog
    entry rescales the argument, mu(s) = raw(a*s)/raw(a) with a = 1/tower(m),
    which is concave, increasing, equals 1 at s = 1, and lies in the same
    regularity class as s -> 0.
    """
    a = 1.0 / _tower(m)
    norm = a * (math.log(1.0 / a) + 1.0)  # log^[m](1/a) = 1 exactly

    def mu(s):
        t = a * np.asarray(s, dtype=float)
        return t * (np.log(1.0 / t) + 1.0) * _iterlog(1.0 / t, m) / norm

    return ModulusOfContinuity(f"log-log-lip:m={m}", mu, params={"m": m})


def holder(alpha: float) -> ModulusOfContinuity:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"holder exponent must be in (0, 1): {alpha}")

    def d_omega(k, r):
        p = 1.0 - alpha
        coeff = 1.0
        for i in range(k):
            coeff *= p - i
        return coeff * r ** (p - k)

    return ModulusOfContinuity(
        f"holder:alpha={alpha:g}",
        lambda s: s**alpha,
        params={"alpha": alpha},
        omega_derivative=d_omega,
    )


def sub_log(alpha: float) -> ModulusOfContinuity:
    """mu(s) = (log(1/s)+1)^(-alpha); decays to 0 slower than any power."""
    if alpha <= 0.0:
        raise ValueError(f"exponent must be positive: {alpha}")
    return ModulusOfContinuity(
        f"log:alpha={alpha:g}",
        lambda s: (np.log(1.0 / s) + 1.0) ** (-alpha),
        params={"alpha": alpha},
        slow_decay=True,
    )


def from_id(ident: str) -> ModulusOfContinuity:
    """Parse a config id: lipschitz | log-lip | log-log-lip:m=2 |
    holder:alpha=0.5 | log:alpha=0.5."""
    head, _, tail = ident.partition(":")
    kv = {}
    if tail:
        for item in tail.split(","):
            k, _, v = item.partition("=")
            if not v:
                raise ValueError(f"malformed modulus id {ident!r}")
            kv[k.strip()] = v.strip()
    try:
        if head == "lipschitz" and not kv:
            return lipschitz()
        if head == "log-lip" and not kv:
            return log_lip()
        if head == "log-log-lip" and set(kv) == {"m"}:
            return log_log_lip(int(kv["m"]))
        if head == "holder" and set(kv) == {"alpha"}:
            return holder(float(kv["alpha"]))
        if head == "log" and set(kv) == {"alpha"}:
            return sub_log(float(kv["alpha"]))
    except (TypeError, ValueError) as exc:
        raise ValueError(f"bad modulus id {ident!r}: {exc}") from exc
    raise ValueError(f"unknown modulus id {ident!r}")


#: default catalog ids, strong entries first
CATALOG_IDS = (
    "lipschitz",
    "log-lip",
    "log-log-lip:m=2",
    "holder:alpha=0.5",
    "log:alpha=0.5",
)

STRONG_IDS = ("lipschitz", "log-lip")
WEAK_IDS = ("log-log-lip:m=2", "holder:alpha=0.5", "log:alpha=0.5")


def catalog() -> list[ModulusOfContinuity]:
    return [from_id(i) for i in CATALOG_IDS]

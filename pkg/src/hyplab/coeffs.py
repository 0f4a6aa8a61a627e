"""Coefficient families with prescribed time-modulus and problem specs.

Coefficients depend on t only: every operator downstream is then an exact
per-frequency matrix and the energy estimates are testable without spatial
discretization error. Families:

* constant   a(t) = c
* smooth     a(t) = c0 + c1 sin(nu t)
* sawtooth   a(t) = c0 + c mu(dist(t, h Z)) - mu-rough at a dense set of kinks
* resonant   a(t) = 1 + delta(xi) sin(2 xi t), delta(xi) = c mu(1/xi) - a
  template bound to a concrete frequency per sweep; uniformly C^mu in xi while
  resonating with the sweep frequency.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable

import numpy as np

from . import moduli as _moduli
from .moduli import ModulusOfContinuity

DEFAULT_PITCH = 0.125
_POSITIVITY_GRID = 2049


class CoefficientFamily:
    """Scalar coefficient of time on [0, T-ish]; immutable after build."""

    def __init__(
        self,
        name: str,
        a: Callable,
        claimed_modulus: ModulusOfContinuity | None = None,
        params: dict | None = None,
        is_constant: bool = False,
        xi_template: bool = False,
        positive: bool = True,
    ):
        self.name = name
        self._a = a
        self.claimed_modulus = claimed_modulus
        self.params = dict(params or {})
        self.is_constant = is_constant
        #: template families need bind_xi(xi) before evaluation
        self.xi_template = xi_template
        if positive and not xi_template:
            t = np.linspace(0.0, 2.0, _POSITIVITY_GRID)
            vals = self.a(t)
            if np.min(vals) <= 0.0:
                raise ValueError(f"family {name!r} is not positive: min {np.min(vals):.3g}")

    def a(self, t):
        if self.xi_template:
            raise ValueError(f"family {self.name!r} is a template; bind_xi first")
        t_arr = np.asarray(t, dtype=float)
        out = self._a(t_arr)
        return float(out) if np.isscalar(t) or t_arr.ndim == 0 else np.broadcast_to(out, t_arr.shape).copy()

    __call__ = a

    def bind_xi(self, xi: float) -> "CoefficientFamily":
        """Resolve a resonant template at a concrete sweep frequency."""
        if not self.xi_template:
            return self
        c = self.params["c"]
        mu = self.claimed_modulus
        axi = max(abs(float(xi)), 1.0)
        delta = c * mu.mu(1.0 / axi)
        if delta >= 1.0:
            raise ValueError(f"resonant amplitude {delta} destroys positivity")
        return CoefficientFamily(
            f"{self.name}@xi={xi:g}",
            lambda t: 1.0 + delta * np.sin(2.0 * axi * np.asarray(t, dtype=float)),
            claimed_modulus=mu,
            params={**self.params, "xi": float(xi), "delta": delta},
        )

    def __repr__(self):
        return f"CoefficientFamily({self.name!r})"


def make_family(kind: str, **params) -> CoefficientFamily:
    """Build a catalog family; see module docstring for the four kinds."""
    if kind == "constant":
        c = float(params.pop("c", 1.0))
        _reject_extra(kind, params)
        return CoefficientFamily(
            f"constant:c={c:g}", lambda t: np.full_like(np.asarray(t, float), c),
            is_constant=True, positive=False, params={"c": c},
        )
    if kind == "smooth":
        c0 = float(params.pop("c0", 1.0))
        c1 = float(params.pop("c1", 0.1))
        nu = float(params.pop("nu", 1.0))
        _reject_extra(kind, params)
        if c0 - abs(c1) <= 0:
            raise ValueError(f"smooth family not positive: c0={c0}, c1={c1}")
        return CoefficientFamily(
            f"smooth:c0={c0:g},c1={c1:g},nu={nu:g}",
            lambda t: c0 + c1 * np.sin(nu * np.asarray(t, float)),
            params={"c0": c0, "c1": c1, "nu": nu},
        )
    if kind == "sawtooth":
        mu = _as_modulus(params.pop("mu"))
        c0 = float(params.pop("c0", 1.0))
        c = float(params.pop("c", 0.1))
        h = float(params.pop("h", DEFAULT_PITCH))
        _reject_extra(kind, params)
        if c0 <= 0 or c <= -c0 or not 0 < h <= 2.0:
            raise ValueError(f"sawtooth parameters out of range: c0={c0}, c={c}, h={h}")

        def a(t):
            t_arr = np.asarray(t, dtype=float)
            d = np.abs(t_arr - np.round(t_arr / h) * h)
            out = np.full_like(t_arr, c0)
            mask = d > 0
            if np.any(mask):
                out = out + c * np.where(mask, mu.mu(np.where(mask, d, 0.5)), 0.0)
            return out

        return CoefficientFamily(
            f"sawtooth:mu={mu.name},c={c:g},h={h:g}", a, claimed_modulus=mu,
            params={"c0": c0, "c": c, "h": h},
        )
    if kind == "resonant":
        mu = _as_modulus(params.pop("mu"))
        c = float(params.pop("c", 0.5))
        xi = params.pop("xi", None)
        _reject_extra(kind, params)
        if not 0 < c < 1.0:
            raise ValueError(f"resonant amplitude must be in (0, 1): {c}")
        fam = CoefficientFamily(
            f"resonant:mu={mu.name},c={c:g}", None, claimed_modulus=mu,
            params={"c": c}, xi_template=True,
        )
        return fam.bind_xi(float(xi)) if xi is not None else fam
    raise ValueError(f"unknown coefficient kind {kind!r}")


def _reject_extra(kind, params):
    if params:
        raise ValueError(f"unknown parameters for {kind!r}: {sorted(params)}")


def _as_modulus(mu) -> ModulusOfContinuity:
    return mu if isinstance(mu, ModulusOfContinuity) else _moduli.from_id(str(mu))


def from_id(ident: str) -> CoefficientFamily:
    """Parse "coeff:<kind>:k=v,..." ids; modulus values may themselves carry
    ':' parameters, e.g. coeff:resonant:mu=holder:alpha=0.5,c=0.25."""
    parts = ident.split(":", 2)
    if len(parts) < 2 or parts[0] != "coeff":
        raise ValueError(f"bad coefficient id {ident!r}")
    kind = parts[1]
    kv = {}
    if len(parts) == 3 and parts[2]:
        for item in parts[2].split(","):
            k, _, v = item.partition("=")
            if not v:
                # continuation of a modulus id parameter, e.g. "alpha=0.5"
                raise ValueError(f"malformed parameter {item!r} in {ident!r}")
            if k.strip() in kv:
                raise ValueError(f"duplicate parameter {k!r} in {ident!r}")
            kv[k.strip()] = v.strip()
    # re-join modulus parameters that contain '=' after a ':' split
    try:
        typed = {}
        for k, v in kv.items():
            typed[k] = v if k == "mu" else float(v)
        return make_family(kind, **typed)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"bad coefficient id {ident!r}: {exc}") from exc


# -- seminorm --------------------------------------------------------------


def modulus_seminorm(fam: CoefficientFamily, mu: ModulusOfContinuity, grid) -> float:
    """sup over grid pairs with 0 < |t-s| <= 1 of |a(t)-a(s)| / mu(|t-s|)."""
    t = np.asarray(grid, dtype=float)
    vals = fam.a(t)
    dt = np.abs(t[:, None] - t[None, :])
    da = np.abs(vals[:, None] - vals[None, :])
    mask = (dt > 0) & (dt <= 1.0)
    if not np.any(mask):
        raise ValueError("grid has no admissible pairs")
    ratios = da[mask] / mu.mu(dt[mask])
    return float(np.max(ratios))


# -- problem specification -------------------------------------------------


def _default_data(k: int, xi: float) -> complex:
    """Spectral data profile g_k(xi) = <xi>^(k-1)."""
    return complex(math.hypot(1.0, xi) ** (k - 1))


@dataclasses.dataclass
class ProblemSpec:
    """Order-m Cauchy problem, principal part
    D_t^m u = sum_j a_j(t) xi^(m-j) D_t^j u + lower + f."""

    m: int
    #: principal[j] multiplies xi^(m-j) D_t^j, j = 0..m-1 (m entries)
    principal: list
    #: lower-order terms: (j, gamma, family) with j + gamma <= m - 1
    lower: list = dataclasses.field(default_factory=list)
    #: data profiles: (k, xi) -> complex, k = 1..m
    data: Callable = _default_data
    #: right-hand side (t, xi) -> complex, or None for 0
    rhs: Callable | None = None
    T: float = 1.0
    nu: float = 0.0
    modulus: ModulusOfContinuity | None = None
    eta: object | None = None
    K: object | None = None
    delta1: float = 0.0
    delta2: float = 0.0

    def __post_init__(self):
        if self.m < 2:
            raise ValueError(f"order must be >= 2: {self.m}")
        if len(self.principal) != self.m:
            raise ValueError(f"need exactly {self.m} principal entries, got {len(self.principal)}")
        for j, gamma, _fam in self.lower:
            if j + gamma > self.m - 1 or j < 0 or gamma < 0:
                raise ValueError(f"lower-order term (j={j}, gamma={gamma}) out of range")

    def bind_xi(self, xi: float) -> "ProblemSpec":
        if not any(f.xi_template for f in self.principal):
            return self
        return dataclasses.replace(
            self, principal=[f.bind_xi(xi) for f in self.principal]
        )

    def char_poly_coeffs(self, t, xi: float) -> np.ndarray:
        """c[j] with tau^m - sum_j c[j] tau^j = 0 (principal part only).

        Vectorized over t: returns shape (..., m).
        """
        t_arr = np.asarray(t, dtype=float)
        out = np.zeros(t_arr.shape + (self.m,), dtype=float)
        for j, fam in enumerate(self.principal):
            out[..., j] = fam.a(t_arr) * float(xi) ** (self.m - j)
        return out


def wave_spec(family: CoefficientFamily, **kw) -> ProblemSpec:
    """m = 2 spec for u_tt + a(t) xi^2 u = f, i.e. D^2 u = a xi^2 D^0 u."""
    zero = make_family("constant", c=0.0)
    return ProblemSpec(m=2, principal=[family, zero], modulus=family.claimed_modulus, **kw)


def speeds_spec(speeds, **kw) -> ProblemSpec:
    """Constant-coefficient spec with characteristic roots speed_i * xi,
    built from elementary symmetric functions of the speeds."""
    s = [float(v) for v in speeds]
    m = len(s)
    if len(set(s)) != m:
        raise ValueError("speeds must be distinct")
    # prod(tau - s_i xi) = tau^m - sum_j c_j xi^(m-j) tau^j
    poly = np.poly(s)  # tau^m + poly[1] tau^(m-1) + ... (for xi = 1)
    principal = [make_family("constant", c=-float(poly[m - j])) for j in range(m)]
    return ProblemSpec(m=m, principal=principal, **kw)


# -- hyperbolicity ---------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class HyperbolicityReport:
    passed: bool
    min_gap: float
    witness: tuple | None
    detail: str = ""


def hyperbolicity_check(spec: ProblemSpec, t_grid, xi_grid, gap_min: float = 0.1) -> HyperbolicityReport:
    """Roots real, simple, sorted at every (t, xi); min normalized gap
    (tau_{j+1} - tau_j)/<xi> must stay >= gap_min."""
    from . import roots as _roots  # local import: roots consumes specs

    worst = math.inf
    for xi in np.asarray(xi_grid, dtype=float):
        bound = spec.bind_xi(xi)
        bracket = math.hypot(1.0, xi)
        for t in np.asarray(t_grid, dtype=float):
            try:
                tau = _roots.characteristic_roots(bound, float(t), float(xi))
            except _roots.RootError as exc:
                return HyperbolicityReport(False, 0.0, (float(t), float(xi)), str(exc))
            gap = float(np.min(np.diff(tau))) / bracket
            if gap < worst:
                worst = gap
                if worst < gap_min:
                    return HyperbolicityReport(False, worst, (float(t), float(xi)), "gap below threshold")
    return HyperbolicityReport(True, worst, None)

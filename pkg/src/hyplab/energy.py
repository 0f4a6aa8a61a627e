"""Per-frequency time integration, weighted norms, and loss-of-derivatives fits.

Each frequency is an m x m linear ODE; the integrator is an embedded
Dormand-Prince 5(4) pair with a step cap 0.25/<xi> so the fastest phase
rotation stays resolved. Energies, Sobolev weights, and the exponential loss
weights e^{kappa t omega(<xi>)} live in the log domain end to end: a Hoelder
weight at xi = 2^14 would overflow double precision if ever materialized.

The integrated state is the diagonalized one W = H^-1 V by default: its
principal part i Lambda is skew (Lambda real), so for constant coefficients
the energy is conserved to integrator accuracy and every growth seen in
logE is attributable to the lower-order matrix Bbar -- which is exactly what
the estimates bound by omega(<xi>).
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import math
import os

import numpy as np

from . import reduction
from .reduction import FrequencySystem, build_system

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
#: step cap factor: h <= STEP_CAP / <xi>
STEP_CAP = 0.25
#: default output nodes per trace
DEFAULT_N_OUT = 33
#: floor for growth-rate/omega ratios entering spread checks; rates at the
#: conservation floor would otherwise make max/min spreads meaningless
RATE_FLOOR = 1e-4
#: "bounded" fit rule: spread over the top octaves and trend tolerance
SPREAD_LIMIT = 10.0
TREND_TOL = 0.05

TRACE_CSV_HEADER = ("xi", "t", "logE", "steps")
FIT_CSV_HEADER = ("family", "omega_id", "kappa_hat", "exponent_hat", "r2", "regime")


class StepFailure(RuntimeError):
    """Adaptive step controller stalled; carries (xi, t)."""


class InsufficientData(ValueError):
    pass


class _Regime:
    def __init__(self, name):
        self.name = name

    def __repr__(self):
        return self.name


NoLoss = _Regime("NoLoss")
FiniteLoss = _Regime("FiniteLoss")
InfiniteLoss = _Regime("InfiniteLoss")


@dataclasses.dataclass
class EnergyTrace:
    xi: float
    times: np.ndarray
    logE: np.ndarray
    #: d(logE)/dt = 2 Re<U', U>/|U|^2 recorded from the derivative evaluations
    rate: np.ndarray
    steps: int
    rejected: int
    rtol: float
    atol: float
    representation: str = "diagonalized"

    def growth(self, idx=None) -> np.ndarray:
        """(logE(t) - logE(0)) / 2 on the output grid."""
        g = 0.5 * (self.logE - self.logE[0])
        return g if idx is None else g[idx]


# -- Dormand-Prince 5(4) ---------------------------------------------------

_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_DP_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)
_DP_E = tuple(b5 - b4 for b5, b4 in zip(_DP_B5, _DP_B4))

_MIN_STEP_REL = 1e-13
_MAX_REJECTS = 60


def _integrate_adaptive(f, t0, t1, y0, rtol, atol, hmax, out_times, xi):
    """FSAL Dormand-Prince 5(4); lands exactly on every output time."""
    t = float(t0)
    y = np.array(y0, dtype=complex)
    k1 = f(t, y)
    h = min(hmax, (t1 - t0) / 10.0)
    out_y = [y.copy()]
    out_rate = [2.0 * float(np.real(np.vdot(y, k1))) / float(np.real(np.vdot(y, y)))]
    steps = rejected = 0
    consecutive = 0
    ks = [None] * 7
    next_idx = 1
    while next_idx < len(out_times):
        target = out_times[next_idx]
        h = min(h, hmax)
        h_keep = h
        hit = False
        if t + h >= target - 1e-14 * max(1.0, abs(target)):
            h = target - t
            hit = True
        if h < _MIN_STEP_REL * max(1.0, abs(t1)):
            raise StepFailure(f"step size underflow at xi={xi}, t={t}")
        ks[0] = k1
        for i in range(1, 7):
            yi = y + h * sum(a * ks[j] for j, a in enumerate(_DP_A[i]))
            ks[i] = f(t + _DP_C[i] * h, yi)
        y5 = y + h * sum(b * ks[j] for j, b in enumerate(_DP_B5) if b)
        err_vec = h * sum(e * ks[j] for j, e in enumerate(_DP_E) if e)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(y5))
        err = float(np.sqrt(np.mean(np.abs(err_vec / sc) ** 2)))
        if err <= 1.0:
            t = t + h
            y = y5
            k1 = ks[6]  # FSAL
            steps += 1
            consecutive = 0
            if hit:
                out_y.append(y.copy())
                nrm = float(np.real(np.vdot(y, y)))
                out_rate.append(2.0 * float(np.real(np.vdot(y, k1))) / nrm)
                next_idx += 1
            factor = min(5.0, max(0.2, 0.9 * err ** (-0.2) if err > 0 else 5.0))
            # scale from the controller step, not the (possibly shortened)
            # output-landing step, so hitting a node never shrinks h for good
            h = (h_keep if hit else h) * factor
        else:
            rejected += 1
            consecutive += 1
            if consecutive > _MAX_REJECTS:
                raise StepFailure(f"controller stalled at xi={xi}, t={t}")
            h = h * max(0.1, 0.9 * err ** (-0.2))
    return np.array(out_y), np.array(out_rate), steps, rejected


# -- right-hand sides ------------------------------------------------------


def _is_time_independent(spec) -> bool:
    fams = list(spec.principal) + [f for _, _, f in spec.lower]
    return all(f.is_constant for f in fams) and spec.rhs is None


def _diag_rhs_m2(system: FrequencySystem, M_cutoff: float):
    """Lean assembler of i(Lambda - Bbar) W for m = 2 wave-type systems."""
    xi = system.xi
    br = system.bracket
    roots = system.roots
    spec = system.spec
    cut = 1.0 - reduction.phi1(xi, M_cutoff)
    eye = np.eye(2, dtype=complex)

    def f(t, W):
        lam, dlam = roots.lam_all(t, 1)
        c = spec.char_poly_coeffs(t, xi)
        d1 = c[1] - (lam[0] + lam[1])
        d0 = c[0] + lam[0] * lam[1] + 1j * dlam[0]
        for j, gamma, fam in spec.lower:
            if j == 0:
                d0 += fam.a(t) * xi**gamma
            else:
                d1 += fam.a(t) * xi**gamma
        b0 = -(d0 + d1 * lam[0]) / br
        b1 = -d1
        gap = lam[1] - lam[0]
        s = cut * br / gap
        ds = -s * (dlam[1] - dlam[0]) / gap
        # Bbar = Hinv B H + i Hinv dH*(-1)... assembled entrywise:
        # Hinv B H rows: [-s b0, -s(b0 s + b1); b0, b0 s + b1]; Hinv dH = dH
        bb = b0 * s + b1
        Bbar00 = -s * b0
        Bbar01 = -s * bb - 1j * ds
        Bbar10 = b0
        Bbar11 = bb
        if cut != 1.0:
            # diagonal defect Lambda - Hinv A H (zero beyond the cutoff)
            T = np.array([[0.0, s], [0.0, 0.0]], dtype=complex)
            A = np.array([[lam[0], br], [0.0, lam[1]]], dtype=complex)
            D = np.diag(lam).astype(complex) - (eye - T) @ A @ (eye + T)
            Bbar00 += D[0, 0]
            Bbar01 += D[0, 1]
            Bbar10 += D[1, 0]
            Bbar11 += D[1, 1]
        w0, w1 = W
        out = np.empty(2, dtype=complex)
        out[0] = 1j * ((lam[0] - Bbar00) * w0 - Bbar01 * w1)
        out[1] = 1j * (-Bbar10 * w0 + (lam[1] - Bbar11) * w1)
        if spec.rhs is not None:
            F1 = spec.rhs(t, xi)
            out[0] += 1j * (-s * F1)
            out[1] += 1j * F1
        return out

    return f


def _make_rhs(system: FrequencySystem, representation: str, M_cutoff: float):
    if representation == "direct":
        if _is_time_independent(system.spec):
            A, B = system.matrices(0.0)
            M = 1j * (A - B)
            return lambda t, U: M @ U
        def f(t, U):
            A, B = system.matrices(t)
            out = 1j * ((A - B) @ U)
            if system.spec.rhs is not None:
                out[-1] += 1j * system.spec.rhs(t, system.xi)
            return out
        return f
    if representation == "diagonalized":
        if _is_time_independent(system.spec):
            Lam, Bbar, _ = reduction.diagonalize_system(system, 0.0, M_cutoff)
            M = 1j * (Lam - Bbar)
            return lambda t, W: M @ W
        if system.m == 2:
            return _diag_rhs_m2(system, M_cutoff)
        def f(t, W):
            Lam, Bbar, diag = reduction.diagonalize_system(system, t, M_cutoff)
            out = 1j * ((Lam - Bbar) @ W)
            if system.spec.rhs is not None:
                out += 1j * (diag.Hinv @ system.forcing(t))
            return out
        return f
    raise ValueError(f"unknown representation {representation!r}")


def initial_state(system: FrequencySystem, representation: str, M_cutoff: float) -> np.ndarray:
    V0 = system.initial_state()
    if representation == "direct":
        return V0
    return reduction.build_diagonalizer(system.roots, 0.0, M_cutoff).Hinv @ V0


def integrate_frequency(
    system: FrequencySystem,
    U0=None,
    t_span=None,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    n_out: int = DEFAULT_N_OUT,
    representation: str = "diagonalized",
    M_cutoff: float = reduction.M_CUTOFF,
) -> EnergyTrace:
    if rtol < 1e-13:
        raise ValueError(f"rtol {rtol} below the supported floor")
    if t_span is None:
        t_span = (0.0, system.spec.T)
    if U0 is None:
        U0 = initial_state(system, representation, M_cutoff)
    U0 = np.asarray(U0, dtype=complex)
    if not np.any(U0):
        raise ValueError("initial state must be nonzero")
    out_times = np.linspace(t_span[0], t_span[1], n_out)
    f = _make_rhs(system, representation, M_cutoff)
    hmax = STEP_CAP / system.bracket
    ys, rates, steps, rejected = _integrate_adaptive(
        f, t_span[0], t_span[1], U0, rtol, atol, hmax, out_times, system.xi
    )
    logE = np.log(np.sum(np.abs(ys) ** 2, axis=1))
    if not np.all(np.isfinite(logE)):
        raise StepFailure(f"non-finite energy at xi={system.xi}")
    return EnergyTrace(
        xi=system.xi, times=out_times, logE=logE, rate=rates, steps=steps,
        rejected=rejected, rtol=rtol, atol=atol, representation=representation,
    )


def sweep(spec, xi_list, mollifier=None, **kwargs) -> list:
    """Integrate every frequency; parallel across frequencies (HYPLAB_THREADS)
    with results assembled in the given fixed order."""

    def one(xi):
        return integrate_frequency(build_system(spec, float(xi), mollifier), **kwargs)

    workers = int(os.environ.get("HYPLAB_THREADS", "1") or "1")
    xi_list = list(xi_list)
    if workers <= 1:
        return [one(xi) for xi in xi_list]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, xi_list))


# -- weighted norms --------------------------------------------------------


def weighted_log_norm(trace: EnergyTrace, nu: float, kappa: float, omega, t: float, mode: str = "strong", T_star: float | None = None) -> float:
    """log of the weighted norm at time t, entirely in the log domain:
    strong: 0.5 logE + nu log<xi> - kappa t omega(<xi>);
    weak:   0.5 logE + nu log<xi> + kappa (T* - t) omega(<xi>)."""
    idx = int(np.argmin(np.abs(trace.times - t)))
    if abs(trace.times[idx] - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError(f"t={t} not on the trace grid")
    br = math.hypot(1.0, trace.xi)
    base = 0.5 * trace.logE[idx] + nu * math.log(br)
    w = float(omega(br))
    if mode == "strong":
        return base - kappa * t * w
    if mode == "weak":
        if T_star is None:
            raise ValueError("weak mode needs T_star")
        return base + kappa * (T_star - t) * w
    raise ValueError(f"unknown mode {mode!r}")


# -- loss fitting ----------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class FitReport:
    kappa_hat: float
    exponent_hat: float
    r2: float
    regime: _Regime
    slope_vs_logxi: float
    n_traces: int


def _omega_is_log_like(omega) -> bool:
    vals = [float(omega(2.0**j)) / (j * math.log(2.0) + 1.0) for j in (8, 14, 20)]
    return max(vals) <= 2.0 * min(vals)


def loss_fit(traces, omega, t_max: float | None = None) -> FitReport:
    """Fit growth = kappa * t * omega(<xi>) over all traces and output times."""
    if len(traces) < 8:
        raise InsufficientData(f"need >= 8 traces, got {len(traces)}")
    xs, ys = [], []
    peak = []
    rates = []
    for tr in traces:
        br = math.hypot(1.0, tr.xi)
        w = float(omega(br))
        mask = np.ones(len(tr.times), dtype=bool) if t_max is None else tr.times <= t_max
        g = tr.growth()[mask]
        xs.append(tr.times[mask] * w)
        ys.append(g)
        peak.append((math.log(br), float(np.max(g))))
        rates.append((math.log(br), late_rate(tr)))
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    denom = float(x @ x)
    kappa_hat = float(x @ y) / denom if denom > 0 else 0.0
    ss_res = float(np.sum((y - kappa_hat * x) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    lx = np.array([p[0] for p in peak])
    py = np.array([p[1] for p in peak])
    slope = float(np.polyfit(lx, py, 1)[0])
    # growth power p-hat: log-log fit of the late-time rate over the top 6
    # octaves, where the transient is over and the asymptotic rate is attained
    rates.sort()
    top = rates[-min(6, len(rates)):]
    rx = np.array([r[0] for r in top])
    ry = np.array([max(r[1], RATE_FLOOR) for r in top])
    pos = ry > 10.0 * RATE_FLOOR
    if np.count_nonzero(pos) >= 3:
        exponent_hat = float(np.polyfit(rx[pos], np.log(ry[pos]), 1)[0])
    else:
        exponent_hat = 0.0
    if slope <= TREND_TOL:
        regime = NoLoss
    elif kappa_hat > 0 and _omega_is_log_like(omega):
        regime = FiniteLoss
    elif kappa_hat > 0:
        regime = InfiniteLoss
    else:
        regime = NoLoss
    return FitReport(
        kappa_hat=kappa_hat, exponent_hat=exponent_hat, r2=r2, regime=regime,
        slope_vs_logxi=slope, n_traces=len(traces),
    )


def bounded_ratio_check(xi_values, ratios, n_octaves: int = 6, n_trend: int = 3):
    """The fixed "bounded" rule: max/min spread <= 10 over the top n_octaves
    entries plus no positive trend (slope of log ratio vs log xi <= 0.05)
    over the last n_trend. Ratios are floored at RATE_FLOOR first so
    conservation-level rates cannot fabricate a spread. Returns
    (passed, spread, trend_slope)."""
    order = np.argsort(np.asarray(xi_values, dtype=float))
    r = np.maximum(np.asarray(ratios, dtype=float)[order], RATE_FLOOR)
    top = r[-n_octaves:]
    spread = float(np.max(top) / np.min(top))
    tail = r[-n_trend:]
    lx = np.log(np.asarray(xi_values, dtype=float)[order][-n_trend:])
    trend = float(np.polyfit(lx, np.log(tail), 1)[0])
    return (spread <= SPREAD_LIMIT and trend <= TREND_TOL), spread, trend


def growth_rate(trace: EnergyTrace) -> float:
    """Peak of growth(t)/t over the trace (per unit time, 0.5 logE units)."""
    g = trace.growth()[1:]
    t = trace.times[1:]
    return float(np.max(g / t))


def late_rate(trace: EnergyTrace) -> float:
    """Growth rate over the second half of the trace; the mode-alignment
    transient cancels in the difference."""
    g = trace.growth()
    t = trace.times
    half = t >= 0.5 * (t[0] + t[-1])
    return float((g[-1] - g[half][0]) / (t[-1] - t[half][0]))


# -- Garding margin --------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class MarginReport:
    C_B: float
    kappa: float
    min_margin: float
    passed: bool
    rows: list  # (xi, t, rowbound, margin)
    weak_checks: dict | None = None


def garding_margin(spec, kappa: float, omega, t_grid, xi_grid, mode: str = "strong", T_star: float | None = None, delta0: float | None = None, M_cutoff: float = reduction.M_CUTOFF, mollifier=None) -> MarginReport:
    """C_B = sup rowsum(|Bbar|)/omega; margin = kappa omega - rowsum.
    Weak mode additionally enforces kappa T* < delta0 and T* C_B < 1."""
    rows = []
    C_B = 0.0
    min_margin = math.inf
    for xi in np.asarray(xi_grid, dtype=float):
        system = build_system(spec, float(xi), mollifier)
        w = float(omega(system.bracket))
        for t in np.asarray(t_grid, dtype=float):
            _, Bbar, _ = reduction.diagonalize_system(system, float(t), M_cutoff)
            rowbound = float(np.max(np.sum(np.abs(Bbar), axis=1)))
            margin = kappa * w - rowbound
            C_B = max(C_B, rowbound / w)
            min_margin = min(min_margin, margin)
            rows.append((float(xi), float(t), rowbound, margin))
    passed = min_margin >= 0.0
    weak = None
    if mode == "weak":
        if T_star is None or delta0 is None:
            raise ValueError("weak mode needs T_star and delta0")
        weak = {
            "kappa_T_star": kappa * T_star,
            "delta0": delta0,
            "kappa_T_star_ok": kappa * T_star < delta0,
            "T_star_C_B": T_star * C_B,
            "T_star_C_B_ok": T_star * C_B < 1.0,
        }
        passed = passed and weak["kappa_T_star_ok"] and weak["T_star_C_B_ok"]
    return MarginReport(C_B=C_B, kappa=kappa, min_margin=min_margin, passed=passed, rows=rows, weak_checks=weak)


# -- a-priori estimate -----------------------------------------------------


@dataclasses.dataclass(frozen=True)
class AprioriReport:
    mode: str
    C_fit: float
    passed: bool
    rows: list  # strong: (xi, log increase); weak: (slab, t0, t1, xi, log increase)
    spread: float
    slabs: list | None = None
    note: str = ""


def apriori_check(traces, omega, kappa: float, nu: float = 0.0, mode: str = "strong", T_star: float | None = None, delta0: float | None = None) -> AprioriReport:
    """Strong: max_t [weighted log norm(t) - weighted log norm(0)] <= log C
    with one fitted C, xi-stable. Weak: the same inequality slab by slab on
    [k T*, (k+1) T*] with the e^{kappa (slab end - t) omega} weight, slabs
    iterated until the trace range is covered."""
    if mode == "strong":
        rows = []
        for tr in traces:
            vals = [
                weighted_log_norm(tr, nu, kappa, omega, float(t), "strong")
                for t in tr.times
            ]
            rows.append((tr.xi, float(np.max(vals) - vals[0])))
        increases = np.array([r[1] for r in rows])
        C_fit = float(np.exp(np.max(np.maximum(increases, 0.0))))
        ok, spread, _ = bounded_ratio_check(
            [abs(r[0]) for r in rows], np.exp(increases)
        )
        return AprioriReport(mode="strong", C_fit=C_fit, passed=ok, rows=rows, spread=spread)
    if mode != "weak":
        raise ValueError(f"unknown mode {mode!r}")
    if T_star is None or delta0 is None:
        raise ValueError("weak mode needs T_star and delta0")
    if kappa * T_star >= delta0:
        return AprioriReport(
            mode="weak", C_fit=math.inf, passed=False, rows=[], spread=math.inf,
            slabs=[], note=f"configuration rejected: kappa T* = {kappa * T_star:.3g} >= delta0 = {delta0:.3g}",
        )
    t_end = float(min(tr.times[-1] for tr in traces))
    slabs = []
    rows = []
    t0 = 0.0
    k = 0
    while t0 < t_end - 1e-12:
        t1 = min(t0 + T_star, t_end)
        slab_incs = []
        for tr in traces:
            mask = (tr.times >= t0 - 1e-12) & (tr.times <= t1 + 1e-12)
            ts = tr.times[mask]
            vals = [
                weighted_log_norm(tr, nu, kappa, omega, float(t), "weak", T_star=t1)
                for t in ts
            ]
            inc = float(np.max(vals) - vals[0])
            rows.append((k, t0, t1, tr.xi, inc))
            slab_incs.append(inc)
        slabs.append((k, t0, t1, float(np.exp(max(max(slab_incs), 0.0)))))
        t0 = t1
        k += 1
    C_fit = float(max(s[3] for s in slabs))
    last = [r for r in rows if r[0] == len(slabs) - 1]
    ok, spread, _ = bounded_ratio_check(
        [abs(r[3]) for r in last], [math.exp(max(r[4], 0.0)) for r in last]
    )
    return AprioriReport(mode="weak", C_fit=C_fit, passed=ok, rows=rows, spread=spread, slabs=slabs)

"""Config-driven experiment runner: `hyplab run|validate|list-catalog`.

Configs are flat INI files (key = value under sections); every key is
schema-checked and unknown keys are rejected so a typo cannot silently fall
back to a default. All resolved values, defaults included, are written into
the run metadata, and output CSVs use round-trip float formatting with a
fixed row order, so a rerun of the same config is byte-identical.

Exit codes: 0 all checks passed, 1 a numerical check failed, 2 config error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, coeffs, energy, moduli, pdo, reduction, roots, weights

REGULARITY_CSV_HEADER = ("xi", "R1", "R2")
MODULUS_CSV_HEADER = ("s", "mu", "mu_over_s_log")
WEIGHTS_CSV_HEADER = ("xi", "M", "eta", "ratio")
EXAMPLE35_CSV_HEADER = ("xi", "M_closed", "M_brute", "rel_err")
EXPANSION_CSV_HEADER = ("n_terms", "mode", "residual")
CHI_CSV_HEADER = ("gamma", "xi", "chi")
EXACTNESS_CSV_HEADER = ("xi", "offdiag_over_bracket", "Tm_norm", "HHinv_residual")
RATES_CSV_HEADER = ("xi", "rate", "rate_over_omega")
MARGIN_CSV_HEADER = ("xi", "t", "rowbound", "margin")
APRIORI_CSV_HEADER = ("slab", "t0", "t1", "xi", "log_increase")


class ConfigError(ValueError):
    """Config rejected; the message names the offending section/key."""


def _parse_bool(v: str) -> bool:
    if v.lower() in ("true", "yes", "1"):
        return True
    if v.lower() in ("false", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


# schema: section -> key -> (parser, default); default None marks a key that
# stays unset unless the config provides it, _REQUIRED one that must appear
_REQUIRED = object()

SCHEMA = {
    "experiment": {
        "name": (str, _REQUIRED),
    },
    "problem": {
        "family": (str, None),
        "speeds": (str, None),  # comma-separated constant speeds, m >= 2
        "modulus": (str, None),
        "T": (float, 1.0),
        "nu": (float, 0.0),
    },
    "grids": {
        "xi_pow_min": (int, 4),
        "xi_pow_max": (int, 11),
        "xi_signs": (str, "+"),  # "+" or "+-"
        "t_min": (float, 0.05),
        "t_max": (float, 0.95),
        "t_points": (int, 7),
    },
    "solver": {
        "rtol": (float, energy.DEFAULT_RTOL),
        "atol": (float, energy.DEFAULT_ATOL),
        "n_out": (int, energy.DEFAULT_N_OUT),
        "M_cutoff": (float, reduction.M_CUTOFF),
        "representation": (str, "diagonalized"),
    },
    "weights": {
        "eta": (str, None),
        "K": (str, None),
        "p_max": (int, 200),
        "example35": (_parse_bool, False),
    },
    "pdo": {
        "N": (int, pdo.DEFAULT_N),
        "psi": (str, "log"),
        "lam": (float, 1.0),
        "n_terms_max": (int, 3),
    },
    "fit": {
        "mode": (str, "strong"),
        "kappa": (str, "auto"),  # "auto" = kappa_factor * fitted C_B
        "kappa_factor": (float, 2.0),
        "T_star": (str, "auto"),  # "auto" = 0.9 / C_B
        "delta0": (float, None),
        "loss_t_max": (float, None),
    },
    "check": {
        "expect": (str, None),
        "max_drift": (float, None),
        "max_final_slope": (float, None),
        "min_r2": (float, None),
        "exponent": (float, None),
        "exponent_tol": (float, 0.1),
        "max_spread": (float, 10.0),
        "max_rate_spread": (float, None),
        "increment": (float, 1.0),
        "increment_tol": (float, 0.2),
        "max_offdiag": (float, 1e-10),
        "max_identity_residual": (float, 1e-12),
        "max_rel_err": (float, 0.01),
    },
    "output": {
        "dir": (str, _REQUIRED),
        "seed": (int, 0),
    },
}

EXPERIMENTS = (
    "classify",
    "weights-check",
    "roots-check",
    "pdo-check",
    "diag-check",
    "solve",
    "loss-fit",
    "apriori",
)


def parse_config(path) -> dict:
    """Resolve the config at path against SCHEMA; raises ConfigError."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys are case-sensitive
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    cfg = {}
    for section, keys in SCHEMA.items():
        cfg[section] = {}
        for key, (typ, default) in keys.items():
            cfg[section][key] = None if default in (None, _REQUIRED) else default
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser[section].items():
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            typ, _default = SCHEMA[section][key]
            try:
                cfg[section][key] = typ(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for [{section}] {key}: {exc}") from exc
    for section, keys in SCHEMA.items():
        for key, (_typ, default) in keys.items():
            if default is _REQUIRED and cfg[section][key] is None:
                raise ConfigError(f"missing required key {key!r} in section [{section}]")
    name = cfg["experiment"]["name"]
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
    if cfg["grids"]["xi_signs"] not in ("+", "+-"):
        raise ConfigError("xi_signs must be '+' or '+-'")
    if cfg["solver"]["representation"] not in ("direct", "diagonalized"):
        raise ConfigError("representation must be 'direct' or 'diagonalized'")
    return cfg


# -- shared assembly -------------------------------------------------------


def _build_spec(cfg) -> coeffs.ProblemSpec:
    prob = cfg["problem"]
    if prob["speeds"] is not None:
        try:
            speeds = [float(v) for v in prob["speeds"].split(",")]
        except ValueError as exc:
            raise ConfigError(f"bad speeds list: {exc}") from exc
        spec = coeffs.speeds_spec(speeds, T=prob["T"], nu=prob["nu"])
    elif prob["family"] is not None:
        try:
            fam = coeffs.from_id(prob["family"])
        except ValueError as exc:
            raise ConfigError(f"bad family id: {exc}") from exc
        spec = coeffs.wave_spec(fam, T=prob["T"], nu=prob["nu"])
    else:
        raise ConfigError("section [problem] needs either 'family' or 'speeds'")
    if prob["modulus"] is not None:
        try:
            spec.modulus = moduli.from_id(prob["modulus"])
        except ValueError as exc:
            raise ConfigError(f"bad modulus id: {exc}") from exc
    return spec


def _xi_grid(cfg) -> np.ndarray:
    g = cfg["grids"]
    pows = 2.0 ** np.arange(g["xi_pow_min"], g["xi_pow_max"] + 1)
    if g["xi_signs"] == "+-":
        return np.concatenate([pows, -pows])
    return pows


def _t_grid(cfg) -> np.ndarray:
    g = cfg["grids"]
    return np.linspace(g["t_min"], g["t_max"], g["t_points"])


def _omega(spec) -> callable:
    mu = spec.modulus
    if mu is None:
        raise ConfigError("experiment needs a modulus (family-attached or explicit)")
    return lambda r: r * mu.mu(min(1.0, 1.0 / r))


def _psi(cfg):
    ident = cfg["pdo"]["psi"]
    if ident == "log":
        return weights.eta_log()
    try:
        return weights.from_id(ident if ident.startswith("eta:") else "eta:" + ident)
    except ValueError as exc:
        raise ConfigError(f"bad psi id: {exc}") from exc


# -- deterministic output --------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)  # shortest round-trip form; stable across runs
    if isinstance(v, (np.floating,)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _write_metadata(outdir: Path, cfg):
    lines = [f"version = {__version__}"]
    for section in sorted(cfg):
        for key in sorted(cfg[section]):
            lines.append(f"{section}.{key} = {_fmt(cfg[section][key])}")
    (outdir / "run_metadata.txt").write_text("\n".join(lines) + "\n")


class _Checks:
    """Collects named pass/fail outcomes for the summary line."""

    def __init__(self):
        self.items = []

    def add(self, name: str, ok: bool, detail: str = ""):
        self.items.append((name, bool(ok), detail))

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.items)

    def summary(self) -> str:
        parts = []
        for name, ok, detail in self.items:
            parts.append(f"{name}={'ok' if ok else 'FAIL'}" + (f"({detail})" if detail else ""))
        return " ".join(parts) if parts else "no-checks"


def _emit_md(outdir: Path, title: str, rows):
    """Markdown summary table: one row per fitted constant / outcome."""
    lines = [f"# {title}", "", "| quantity | value |", "| --- | --- |"]
    for name, value in rows:
        lines.append(f"| {name} | {_fmt(value)} |")
    (outdir / "summary.md").write_text("\n".join(lines) + "\n")


# -- experiment runners ----------------------------------------------------


def _run_classify(cfg, outdir: Path, checks: _Checks):
    ident = cfg["problem"]["modulus"]
    if ident is None:
        raise ConfigError("classify needs [problem] modulus")
    mu = moduli.from_id(ident)
    report = moduli.validate(mu)
    verdict = moduli.classify(mu).__name__
    s = 2.0 ** (-np.arange(2, 31, dtype=float))
    rows = [(float(x), float(mu.mu(x)), float(mu.mu(x) / (x * math.log(1.0 / x)))) for x in s]
    _write_csv(outdir / "modulus.csv", MODULUS_CSV_HEADER, rows)
    checks.add("valid", report.passed)
    expect = cfg["check"]["expect"]
    if expect is not None:
        checks.add("classification", verdict == expect, verdict)
    _emit_md(outdir, f"classify {ident}", [("classification", verdict), ("valid", report.passed)])


def _run_weights_check(cfg, outdir: Path, checks: _Checks):
    w = cfg["weights"]
    xi = np.logspace(2, 6, 33)
    md_rows = []
    probe = np.concatenate([np.logspace(-3, 2, 41), [0.0]])
    lam_err = max(
        abs(weights.lambert_w(float(x)) * math.exp(weights.lambert_w(float(x))) - float(x))
        / max(1.0, float(x))
        for x in probe
    )
    checks.add("lambert", lam_err <= weights.LAMBERT_TOL, f"{lam_err:.2e}")
    md_rows.append(("lambert_max_err", lam_err))
    if w["eta"] is not None and w["K"] is not None:
        try:
            eta = weights.from_id(w["eta"])
            K = weights.from_id(w["K"])
        except ValueError as exc:
            raise ConfigError(f"bad weight id: {exc}") from exc
        rep = weights.compatibility_check(K, eta, xi, w["p_max"])
        rows = []
        for x in xi:
            br = math.hypot(1.0, float(x))
            M = weights.associated_function(K, br, w["p_max"])
            e = eta.eta(br)
            rows.append((float(x), M, e, M / e))
        _write_csv(outdir / "weights.csv", WEIGHTS_CSV_HEADER, rows)
        checks.add("compat", rep.passed, f"delta0={rep.delta0:.3g}")
        md_rows += [("delta0", rep.delta0), ("C", rep.C)]
    if w["example35"]:
        Kpsq = weights.K_psq()
        rows = []
        worst = 0.0
        for x in xi:
            br = math.hypot(1.0, float(x))
            closed = weights.example35_M(float(x))
            brute = weights.associated_function(Kpsq, br, w["p_max"])
            rel = abs(closed - brute) / max(brute, 1e-300)
            worst = max(worst, rel)
            rows.append((float(x), closed, brute, rel))
        _write_csv(outdir / "example35.csv", EXAMPLE35_CSV_HEADER, rows)
        checks.add("closed_form", worst <= cfg["check"]["max_rel_err"], f"{worst:.3g}")
        md_rows.append(("example35_max_rel_err", worst))
    _emit_md(outdir, "weights-check", md_rows)


def _run_roots_check(cfg, outdir: Path, checks: _Checks):
    spec = _build_spec(cfg)
    t_grid = _t_grid(cfg)
    xi_grid = _xi_grid(cfg)
    table = roots.regularized_root_table(spec, t_grid, xi_grid)
    _write_csv(outdir / "roots.csv", roots.ROOT_TABLE_HEADER, table)
    rep = roots.regularity_report(spec, t_grid, xi_grid)
    _write_csv(outdir / "regularity.csv", REGULARITY_CSV_HEADER, rep.per_xi)
    xis = [abs(r[0]) for r in rep.per_xi]
    ok1, spread1, _ = energy.bounded_ratio_check(xis, [r[1] for r in rep.per_xi])
    ok2, spread2, _ = energy.bounded_ratio_check(xis, [r[2] for r in rep.per_xi])
    limit = cfg["check"]["max_spread"]
    checks.add("R1_spread", ok1 and spread1 <= limit, f"{spread1:.2f}")
    checks.add("R2_spread", ok2 and spread2 <= limit, f"{spread2:.2f}")
    _emit_md(outdir, "roots-check", [("R1", rep.R1), ("R2", rep.R2), ("R1_spread", spread1), ("R2_spread", spread2)])


def _run_pdo_check(cfg, outdir: Path, checks: _Checks):
    p = cfg["pdo"]
    psi = _psi(cfg)
    N = p["N"]
    op = pdo.operator_from_symbol(
        lambda x: 2.0 + np.sin(x), lambda l: np.hypot(1.0, l), N=N, order=1.0
    )
    slopes = []
    rows = []
    for n in range(1, p["n_terms_max"] + 1):
        rep = pdo.expansion_residual_report(op, psi, p["lam"], n)
        slopes.append(rep.slope)
        rows += [(n, mode, res) for mode, res in rep.rows]
    _write_csv(outdir / "expansion.csv", EXPANSION_CSV_HEADER, rows)
    inc_lo = cfg["check"]["increment"] - cfg["check"]["increment_tol"]
    inc_hi = cfg["check"]["increment"] + cfg["check"]["increment_tol"]
    for i in range(1, len(slopes)):
        inc = slopes[i] - slopes[i - 1]
        checks.add(f"increment_{i}to{i + 1}", inc_lo <= inc <= inc_hi, f"{inc:.2f}")
    chi_rows = []
    spread_ok = True
    worst_spread = 1.0
    for gamma in (1, 2):
        xs, vals = [], []
        for x in 2.0 ** np.arange(3, 12):
            c = pdo.chi_gamma(psi, p["lam"], gamma, float(x))
            br = math.hypot(1.0, x)
            # bound constant: chi_gamma against (lam d/dxi psi(<xi>))^gamma/gamma!
            scale = abs(p["lam"] * psi.derivative(1, br) * x / br) ** gamma / math.factorial(gamma)
            xs.append(float(x))
            vals.append(abs(c) / scale)
            chi_rows.append((gamma, float(x), c))
        ok, spread, _ = energy.bounded_ratio_check(xs, vals)
        spread_ok = spread_ok and ok
        worst_spread = max(worst_spread, spread)
    _write_csv(outdir / "chi.csv", CHI_CSV_HEADER, chi_rows)
    checks.add("chi_spread", spread_ok and worst_spread <= cfg["check"]["max_spread"], f"{worst_spread:.2f}")
    _emit_md(outdir, "pdo-check", [(f"slope_n{i + 1}", s) for i, s in enumerate(slopes)])


def _run_diag_check(cfg, outdir: Path, checks: _Checks):
    spec = _build_spec(cfg)
    t_grid = _t_grid(cfg)
    xi_grid = _xi_grid(cfg)
    M = cfg["solver"]["M_cutoff"]
    rep = reduction.diag_report(spec, t_grid, xi_grid, M_cutoff=M)
    _write_csv(outdir / "diag.csv", reduction.DIAG_REPORT_HEADER, rep.rows)
    rows = []
    worst_Tm = worst_id = 0.0
    for xi in xi_grid:
        if math.hypot(1.0, float(xi)) < 2.0 * M:
            continue
        system = reduction.build_system(spec, float(xi))
        d = reduction.build_diagonalizer(system.roots, float(t_grid[0]), M)
        Tm = np.linalg.matrix_power(d.T, spec.m)
        idres = float(np.max(np.abs(d.H @ d.Hinv - np.eye(spec.m))))
        tmn = float(np.max(np.abs(Tm)))
        worst_Tm = max(worst_Tm, tmn)
        worst_id = max(worst_id, idres)
        off = next(r[1] for r in rep.rows if r[0] == float(xi))
        rows.append((float(xi), off, tmn, idres))
    _write_csv(outdir / "exactness.csv", EXACTNESS_CSV_HEADER, rows)
    checks.add("offdiag", rep.sup_offdiag <= cfg["check"]["max_offdiag"], f"{rep.sup_offdiag:.2e}")
    checks.add("nilpotent", worst_Tm <= cfg["check"]["max_identity_residual"], f"{worst_Tm:.2e}")
    checks.add("inverse", worst_id <= cfg["check"]["max_identity_residual"], f"{worst_id:.2e}")
    checks.add("Bbar_spread", rep.spread <= cfg["check"]["max_spread"], f"{rep.spread:.2f}")
    _emit_md(outdir, "diag-check", [
        ("sup_offdiag", rep.sup_offdiag),
        ("sup_Bbar_over_omega", rep.sup_Bbar_over_omega),
        ("spread", rep.spread),
    ])


def _trace_rows(traces):
    rows = []
    for tr in traces:
        for t, logE in zip(tr.times, tr.logE):
            rows.append((tr.xi, float(t), float(logE), tr.steps))
    return rows


def _sweep(cfg, spec):
    s = cfg["solver"]
    return energy.sweep(
        spec, _xi_grid(cfg), rtol=s["rtol"], atol=s["atol"], n_out=s["n_out"],
        representation=s["representation"], M_cutoff=s["M_cutoff"],
    )


def _run_solve(cfg, outdir: Path, checks: _Checks):
    spec = _build_spec(cfg)
    traces = _sweep(cfg, spec)
    _write_csv(outdir / "trace.csv", energy.TRACE_CSV_HEADER, _trace_rows(traces))
    drift = max(float(np.max(np.abs(tr.logE - tr.logE[0]))) for tr in traces)
    if cfg["check"]["max_drift"] is not None:
        checks.add("drift", drift <= cfg["check"]["max_drift"], f"{drift:.2e}")
    _emit_md(outdir, "solve", [("max_drift", drift), ("n_traces", len(traces))])


def _run_loss_fit(cfg, outdir: Path, checks: _Checks):
    spec = _build_spec(cfg)
    om = _omega(spec)
    traces = _sweep(cfg, spec)
    _write_csv(outdir / "trace.csv", energy.TRACE_CSV_HEADER, _trace_rows(traces))
    rep = energy.loss_fit(traces, om, t_max=cfg["fit"]["loss_t_max"])
    family = cfg["problem"]["family"] or f"speeds:{cfg['problem']['speeds']}"
    mu = spec.modulus
    omega_id = f"omega[{mu.name}]"
    _write_csv(
        outdir / "fit.csv",
        energy.FIT_CSV_HEADER,
        [(family, omega_id, rep.kappa_hat, rep.exponent_hat, rep.r2, rep.regime.name)],
    )
    rate_rows = []
    for tr in traces:
        br = math.hypot(1.0, tr.xi)
        rate = energy.late_rate(tr)
        rate_rows.append((tr.xi, rate, rate / om(br)))
    _write_csv(outdir / "rates.csv", RATES_CSV_HEADER, rate_rows)
    chk = cfg["check"]
    if chk["expect"] is not None:
        checks.add("regime", rep.regime.name == chk["expect"], rep.regime.name)
    if chk["min_r2"] is not None:
        checks.add("r2", rep.r2 >= chk["min_r2"] and rep.kappa_hat > 0, f"{rep.r2:.3f}")
    if chk["max_final_slope"] is not None:
        lx = np.array([math.log(math.hypot(1.0, tr.xi)) for tr in traces])
        fy = np.array([tr.logE[-1] - tr.logE[0] for tr in traces])
        slope = float(np.polyfit(lx, fy, 1)[0])
        checks.add("final_slope", slope <= chk["max_final_slope"], f"{slope:.3f}")
    if chk["exponent"] is not None:
        gap = abs(rep.exponent_hat - chk["exponent"])
        checks.add("exponent", gap <= chk["exponent_tol"], f"{rep.exponent_hat:.3f}")
    if chk["max_rate_spread"] is not None:
        ok, spread, _ = energy.bounded_ratio_check(
            [abs(r[0]) for r in rate_rows], [r[2] for r in rate_rows]
        )
        checks.add("rate_spread", ok and spread <= chk["max_rate_spread"], f"{spread:.2f}")
    _emit_md(outdir, "loss-fit", [
        ("family", family), ("kappa_hat", rep.kappa_hat),
        ("exponent_hat", rep.exponent_hat), ("r2", rep.r2), ("regime", rep.regime.name),
    ])


def _run_apriori(cfg, outdir: Path, checks: _Checks):
    spec = _build_spec(cfg)
    om = _omega(spec)
    mode = cfg["fit"]["mode"]
    if mode not in ("strong", "weak"):
        raise ConfigError("fit mode must be 'strong' or 'weak'")
    t_grid = _t_grid(cfg)
    xi_grid = _xi_grid(cfg)
    base = energy.garding_margin(spec, 0.0, om, t_grid, xi_grid, M_cutoff=cfg["solver"]["M_cutoff"])
    if cfg["fit"]["kappa"] == "auto":
        kappa = cfg["fit"]["kappa_factor"] * base.C_B
    else:
        kappa = float(cfg["fit"]["kappa"])
    T_star = None
    delta0 = cfg["fit"]["delta0"]
    if mode == "weak":
        T_star = 0.9 / base.C_B if cfg["fit"]["T_star"] == "auto" else float(cfg["fit"]["T_star"])
        if delta0 is None:
            w = cfg["weights"]
            if w["eta"] is None or w["K"] is None:
                raise ConfigError("weak mode needs [fit] delta0 or [weights] eta and K")
            # certify the weight budget on the frequencies this run integrates
            comp = weights.compatibility_check(
                weights.from_id(w["K"]), weights.from_id(w["eta"]),
                np.abs(_xi_grid(cfg)), w["p_max"],
            )
            delta0 = comp.delta0
    margin = energy.garding_margin(
        spec, kappa, om, t_grid, xi_grid, mode=mode, T_star=T_star, delta0=delta0,
        M_cutoff=cfg["solver"]["M_cutoff"],
    )
    _write_csv(outdir / "margin.csv", MARGIN_CSV_HEADER, margin.rows)
    checks.add("margin", margin.passed, f"kappa={kappa:.3g} C_B={base.C_B:.3g}")
    traces = _sweep(cfg, spec)
    rep = energy.apriori_check(
        traces, om, kappa, nu=spec.nu, mode=mode, T_star=T_star, delta0=delta0
    )
    if mode == "strong":
        rows = [(0, 0.0, spec.T, xi, inc) for xi, inc in rep.rows]
    else:
        rows = rep.rows
    _write_csv(outdir / "apriori.csv", APRIORI_CSV_HEADER, rows)
    checks.add("apriori", rep.passed, f"C={rep.C_fit:.3g} spread={rep.spread:.2f}")
    md = [("mode", mode), ("C_B", base.C_B), ("kappa", kappa), ("C_fit", rep.C_fit)]
    if mode == "weak":
        md += [("T_star", T_star), ("delta0", delta0), ("n_slabs", len(rep.slabs or []))]
        checks.add("budget", kappa * T_star < delta0, f"kT*={kappa * T_star:.3g} d0={delta0:.3g}")
    _emit_md(outdir, "apriori", md)


_RUNNERS = {
    "classify": _run_classify,
    "weights-check": _run_weights_check,
    "roots-check": _run_roots_check,
    "pdo-check": _run_pdo_check,
    "diag-check": _run_diag_check,
    "solve": _run_solve,
    "loss-fit": _run_loss_fit,
    "apriori": _run_apriori,
}


def run_experiment(config_path) -> int:
    try:
        cfg = parse_config(config_path)
        outdir = Path(cfg["output"]["dir"])
        outdir.mkdir(parents=True, exist_ok=True)
        _write_metadata(outdir, cfg)
        checks = _Checks()
        _RUNNERS[cfg["experiment"]["name"]](cfg, outdir, checks)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2
    status = "PASS" if checks.passed else "FAIL"
    print(f"{status} {cfg['experiment']['name']}: {checks.summary()}")
    return 0 if checks.passed else 1


def list_catalog() -> int:
    print("experiments:", ", ".join(EXPERIMENTS))
    print("coefficient families:")
    for ident in (
        "coeff:constant:c=1",
        "coeff:smooth:c0=1,c1=0.2,nu=3",
        "coeff:sawtooth:mu=lipschitz,c=0.2",
        "coeff:sawtooth:mu=log-lip,c=0.1",
        "coeff:resonant:mu=log-lip,c=0.5",
        "coeff:resonant:mu=holder:alpha=0.5,c=0.25",
    ):
        print(f"  {ident}")
    print("moduli:", ", ".join(moduli.CATALOG_IDS))
    print("weight functions:", ", ".join(weights.ETA_IDS + ("eta:log",)))
    print("weight sequences:", ", ".join(weights.K_IDS))
    return 0


def validate_config(config_path) -> int:
    try:
        parse_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    print(f"ok {config_path}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="hyplab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run the experiment described by a config file")
    p_run.add_argument("config")
    sub.add_parser("list-catalog", help="print the built-in ids")
    p_val = sub.add_parser("validate", help="schema-check a config file")
    p_val.add_argument("config")
    args = parser.parse_args(argv)
    if args.command == "run":
        return run_experiment(args.config)
    if args.command == "list-catalog":
        return list_catalog()
    return validate_config(args.config)


if __name__ == "__main__":
    sys.exit(main())

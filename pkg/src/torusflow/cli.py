"""Command-line entry point: ``torusflow <experiment> --config <file> [--key value]...``.

Configs are flat ``key = value`` files; command-line ``--key value`` pairs
override them.  Each run writes ``report.json`` plus CSV series into
``output_dir``.  Exit status: 0 when every exercised invariant holds, 1 when
one fails or a numerical guard trips, 2 for an invalid configuration.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__, accel

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config parsing


def _bool(s) -> bool:
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _float_list(s) -> list:
    """Comma list, or ``lo..hi`` (ten geometric points) or ``lo..hi:n``."""
    if isinstance(s, (list, tuple)):
        return [float(x) for x in s]
    text = str(s).strip()
    if not text:
        return []
    if ".." in text:
        lo, rest = text.split("..", 1)
        hi, _, n = rest.partition(":")
        n = int(n) if n else 10
        if n < 2 or float(lo) <= 0 or float(hi) <= float(lo):
            raise ValueError(f"bad range {text!r}")
        return [float(x) for x in np.geomspace(float(lo), float(hi), n)]
    return [float(x) for x in text.split(",") if x.strip()]


def _positive(kind):
    def conv(s):
        v = kind(s)
        if not v > 0:
            raise ValueError(f"must be positive, got {s!r}")
        return v

    return conv


def _choice(*options):
    def conv(s):
        if s not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {s!r}")
        return s

    return conv


def _exponent(s):
    v = float(s)
    if not v > 1 or math.isinf(v):
        raise ValueError(f"exponent must be finite and > 1, got {s!r}")
    return v


pos_int = _positive(int)
pos_float = _positive(float)


def _nonneg_float(s):
    v = float(s)
    if v < 0:
        raise ValueError(f"must be nonnegative, got {s!r}")
    return v


COMMON_KEYS = {"seed": (int, 0), "output_dir": (str, "torusflow_out")}


@dataclass
class Experiment:
    name: str
    keys: dict
    fn: Callable


@dataclass
class ExperimentConfig:
    experiment: str
    parameters: dict
    seed: int
    output_dir: str

    def echo(self) -> dict:
        out = dict(self.parameters)
        out["seed"] = self.seed
        return out


def read_config_file(path) -> dict:
    raw = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            k, v = line.split("=", 1)
            raw[k.strip()] = v.strip()
    return raw


def build_config(experiment: str, raw: dict) -> ExperimentConfig:
    """Validate keys and convert values; raises :class:`ConfigError`."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {', '.join(sorted(EXPERIMENTS))}")
    spec = dict(COMMON_KEYS)
    spec.update(EXPERIMENTS[experiment].keys)
    unknown = sorted(set(raw) - set(spec))
    if unknown:
        raise ConfigError(f"unknown key(s) for {experiment}: {', '.join(unknown)}")
    params = {}
    for key, (conv, default) in spec.items():
        val = raw.get(key, default)
        try:
            params[key] = conv(val) if key in raw else (conv(default) if default is not None else None)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid value for {key}: {exc}") from None
    seed = params.pop("seed")
    out = params.pop("output_dir")
    return ExperimentConfig(experiment, params, seed, out)


# ---------------------------------------------------------------------------
# reports


@dataclass
class RunReport:
    config: ExperimentConfig
    payload: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)
    errors: list = field(default_factory=list)
    series: dict = field(default_factory=dict)  # name -> (columns, rows)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.errors and all(self.flags.values())

    def as_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "version": __version__,
            "experiment": self.config.experiment,
            "config": self.config.echo(),
            "payload": _clean(self.payload),
            "flags": {k: bool(v) for k, v in self.flags.items()},
            "passed": self.passed,
            "errors": self.errors,
            "series": sorted(f"{name}.csv" for name in self.series),
            "wall_time": self.wall_time,
        }


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def report_json(report: RunReport) -> str:
    return json.dumps(report.as_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if math.isfinite(v) else "nan"
    return str(v)


def emit_plot_data(report: RunReport, output_dir=None) -> list:
    """Write one CSV per series (header row, stable column order, LF endings)."""
    out = Path(output_dir or report.config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in sorted(report.series):
        cols, rows = report.series[name]
        path = out / f"{name}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
        paths.append(path)
    return paths


def run(config: ExperimentConfig) -> RunReport:
    """Execute the configured experiment and write its outputs."""
    report = RunReport(config)
    start = time.perf_counter()
    try:
        EXPERIMENTS[config.experiment].fn(config.parameters, config.seed, report)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        report.errors.append({"type": type(exc).__name__, "message": str(exc)})
    report.wall_time = time.perf_counter() - start
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    emit_plot_data(report, out)
    (out / "report.json").write_text(report_json(report), encoding="utf-8", newline="\n")
    return report


# ---------------------------------------------------------------------------
# experiments


def _rel_change(a: float, b: float) -> float:
    return abs(b - a) / abs(a) if a else float("inf")


def _heat(params, seed, rep: RunReport):
    from . import modesplit as ms

    N, K, n = params["N_space"], params["K_time"], params["n_trials"]
    limit = params["stability_limit"]

    def trials(N_, K_):
        A, cfg = ms.heat_config(N_, K_, params["gamma0"])
        rng = np.random.default_rng(seed)
        ratios, worst = [], 0.0
        for _ in range(n):
            F = ms.random_heat_forcing(rng, A, K_, params["forcing_decay"])
            sol = ms.solve_periodic_closed(A, F, cfg)
            ratios.append(ms.maximal_regularity_ratio(sol.u, F, A, params["p"]))
            worst = max(worst, sol.max_relative_residual)
        return ratios, worst

    runs = {(N, K): trials(N, K), (N, 2 * K): trials(N, 2 * K), (2 * N, K): trials(2 * N, K)}
    maxima = {key: max(r) for key, (r, _) in runs.items()}
    resid = max(w for _, w in runs.values())
    dk = _rel_change(maxima[(N, K)], maxima[(N, 2 * K)])
    dn = _rel_change(maxima[(N, K)], maxima[(2 * N, K)])
    rep.payload = {
        "max_ratio": {f"N{a}_K{b}": v for (a, b), v in maxima.items()},
        "relative_change_K_doubling": dk,
        "relative_change_N_doubling": dn,
        "max_mode_residual": resid,
        "gamma0": params["gamma0"],
        "k0": math.floor(params["gamma0"]),
    }
    rep.flags = {
        "mode_residual": resid <= 1e-9,
        "stable_under_K_doubling": dk < limit,
        "stable_under_N_doubling": dn < limit,
    }
    rep.series["heat_maxreg"] = (["trial", "K", "ratio"],
                                 [(i, k, r) for k in (K, 2 * K) for i, r in enumerate(runs[(N, k)][0])])
    rep.series["heat_maxreg_space"] = (["trial", "N", "ratio"],
                                       [(i, m, r) for m in (N, 2 * N) for i, r in enumerate(runs[(m, K)][0])])
    rep.series["maxreg_sweep"] = (["N", "K", "max_ratio"], [(a, b, v) for (a, b), v in maxima.items()])


def _stokes_tp(params, seed, rep: RunReport):
    from . import stokes as st

    N, K, mu, n = params["N_space"], params["K_time"], params["mu"], params["n_trials"]
    rows, ratios, worst_res, worst_div = [], {}, 0.0, 0.0
    last = None
    for KK in (K, 2 * K):
        rng = np.random.default_rng(seed)
        rs = []
        for i in range(n):
            F = st.random_forcing(N, KK, rng, mu, params["forcing_decay"])
            V, P = st.solve_tp_stokes(F)
            res = st.stokes_residual(V, P, F) / F.l2()
            worst_res = max(worst_res, res)
            worst_div = max(worst_div, V.divergence_error())
            r = st.maxreg_ratio(V, F)
            rs.append(r)
            rows.append((i, KK, r, res))
            if KK == K:
                last = V
        ratios[KK] = max(rs)
    change = _rel_change(ratios[K], ratios[2 * K])
    rep.payload = {
        "max_ratio": {f"K{k}": v for k, v in ratios.items()},
        "relative_change_K_doubling": change,
        "max_relative_residual": worst_res,
        "max_divergence_error": worst_div,
    }
    rep.flags = {
        "stokes_residual": worst_res <= 1e-10,
        "divergence_free": worst_div <= 1e-12,
        "stable_under_K_doubling": change < params["stability_limit"],
    }
    rep.series["stokes_tp"] = (["trial", "K", "ratio", "residual"], rows)
    rep.series["stokes_spectrum"] = (["shell", "energy"], _shell_spectrum(last))


def _shell_spectrum(V) -> list:
    from .stokes import wavenumbers

    n2 = np.sum(wavenumbers(V.N_space) ** 2, axis=-1)
    shell = np.rint(np.sqrt(n2)).astype(int)
    e = np.sum(np.abs(V.coeffs) ** 2, axis=(0, -1))
    return [(int(s), float(e[shell == s].sum())) for s in range(int(shell.max()) + 1)]


def _picard_once(params, seed, amplitude):
    from . import stokes as st

    N, K, mu = params["N_space"], params["K_time"], params["mu"]
    rng = np.random.default_rng(seed)
    Vs = st.random_solenoidal(N, K, params["n_modes"], amplitude, rng, mu)
    Ps = st.random_pressure(N, K, params["n_modes"], amplitude, rng)
    F = st.manufactured_forcing(Vs, Ps)
    V, P, rep = st.navier_stokes_picard(F, mu, params["tol"], params["max_iter"])
    strength = st.nonlinearity(Vs).l2() / Vs.l2() if amplitude > 0 else 0.0
    return rep, st.e_norm(V - Vs, P - Ps), strength


def _ns_picard(params, seed, rep: RunReport):
    amp = params["amplitude"]
    pic, err, strength = _picard_once(params, seed, amp)
    rep.payload = {"picard": pic.as_dict(), "recovery_error": err, "amplitude": amp,
                   "relative_convective_term": strength}
    rep.flags = {
        "converged": pic.converged and pic.n_iter <= params["max_iter"],
        "final_residual": pic.relative_residual < 1e-10 if amp > 0 else pic.final_residual < 1e-12,
    }
    if amp > 0:
        rep.flags["recovers_manufactured_solution"] = err < 1e-8
        # a draw whose convective term vanishes would make the contraction test vacuous
        rep.flags["convective_term_active"] = strength > 1e-8 * amp
    else:
        rep.flags["single_iteration"] = pic.n_iter == 1
    ratios = pic.ratios
    rep.series["picard"] = (["iteration", "E_norm", "diff_ratio"],
                            [(i + 1, e, ratios[i - 1] if i else float("nan")) for i, e in enumerate(pic.iterates)])
    sweep = sorted(params["sweep"])
    if sweep:
        rows = []
        for a in sweep:
            r, _, _ = _picard_once(params, seed, a)
            rows.append((a, r.ratios[0] if r.ratios else 0.0, r.n_iter, r.converged))
        rep.series["picard_sweep"] = (["amplitude", "contraction_ratio", "n_iter", "converged"], rows)
        contraction = [c for _, c, _, _ in rows]
        rep.payload["sweep"] = {"amplitudes": sweep, "contraction_ratios": contraction}
        rep.flags["contraction_monotone_in_amplitude"] = all(
            contraction[i] < contraction[i + 1] for i in range(len(contraction) - 1))


def _kernel_decay(params, seed, rep: RunReport):
    from . import freespace as fs

    radii = params["radii"]
    K, mu, p, method = params["K_time"], params["mu"], params["r"], params["method"]
    res = fs.gamma_perp_eval(np.outer(radii, fs._DIRECTION), K, mu, method,
                             delta=min(fs.DEFAULT_DELTA, min(radii)), gradient=params["derivative"])
    norms = [fs._time_norm(f, p) for f in res.values]
    fit = fs.decay_fit(radii, norms)
    lo, hi = params["exponent_range"]
    rep.payload = {"kernel": fit.as_dict(), "method": method, "fitted_exponent": fit.fitted_exponent,
                   "tail_warnings": res.as_dict()["tail_warnings"]}
    rep.flags = {
        "time_mean_zero": all(np.all(f.coeff(0) == 0) for f in res.values),
        "kernel_exponent": lo <= fit.fitted_exponent <= hi,
    }
    rep.series["kernel_decay"] = (["radius", "norm", "method"], [(r, v, method) for r, v in zip(radii, norms)])
    if params["derivative"]:
        gn = [fs._time_norm(f, p) for f in res.gradients]
        gfit = fs.decay_fit(radii, gn)
        rep.payload["gradient"] = gfit.as_dict()
        rep.flags["gradient_exponent"] = lo - 1.1 <= gfit.fitted_exponent <= hi - 0.9
        rep.series["kernel_decay_gradient"] = (["radius", "norm", "method"],
                                               [(r, v, method) for r, v in zip(radii, gn)])
    if params["steady"]:
        sr = params["steady_radii"]
        fits = fs.steady_decay(sr, params["support"], params["h"], mu)
        rep.payload["steady"] = {k: v.as_dict() for k, v in fits.items()}
        rep.flags["steady_u_exponent"] = abs(fits["u"].fitted_exponent + 1.0) <= 0.1
        rep.flags["steady_grad_exponent"] = abs(fits["grad_u"].fitted_exponent + 2.0) <= 0.2
        rep.flags["steady_p_exponent"] = abs(fits["p"].fitted_exponent + 2.0) <= 0.2
        rep.series["steady_decay"] = (["radius", "u", "grad_u", "p"],
                                      list(zip(sr, fits["u"].norms, fits["grad_u"].norms, fits["p"].norms)))


def _rbound(params, seed, rep: RunReport):
    from . import rbound as rb

    rng = np.random.default_rng(seed)
    p, n_max, n_trials = params["p"], params["n_max"], params["n_trials"]
    rows, worst_gap, lower_ok = [], 0.0, True
    for i in range(params["n_families"]):
        n_ops = int(rng.integers(1, params["max_ops"] + 1))
        d = int(rng.choice([2, 3]))
        ops = [rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)) for _ in range(n_ops)]
        fam = rb.OperatorFamily.from_list(ops, f"random{i}")
        pool = rb.random_unit_vectors(rng, (params["n_vectors"],), d)
        est = rb.estimate_rbound(fam, n_trials, n_max, p, seed + i, test_vectors=pool)
        brute = rb.brute_force_rbound(fam, n_max, pool, p)
        gap = abs(est.value - brute) / brute
        worst_gap = max(worst_gap, gap)
        full = rb.estimate_rbound(fam, n_trials, n_max, p, seed + i)
        lower_ok &= full.value >= fam.max_operator_norm() * (1 - 1e-12) - 2 * full.stderr
        rows.append((i, n_ops, d, est.value, brute, fam.max_operator_norm(), gap))
    rep.payload = {"max_relative_gap": worst_gap, "n_families": params["n_families"], "p": p}
    rep.flags = {"estimator_matches_brute_force": worst_gap <= 0.10, "dominates_operator_norm": bool(lower_ok)}
    rep.series["rbound"] = (["family", "n_ops", "dim", "estimate", "brute_force", "max_norm", "rel_gap"], rows)


def _transfer(params, seed, rep: RunReport):
    from . import rbound as rb

    rows, reports = [], {}
    for probe in rb.standard_corpus(params["band_limit"]):
        tr = rb.check_transference(probe, params["p"], params["n_repeats"], seed)
        reports[probe.label] = tr.as_dict()
        rep.flags[f"transference_{probe.label}"] = tr.satisfied
        rows.append((probe.label, tr.torus_norm, tr.line_norm, tr.tolerance, tr.margin, tr.satisfied))
    rep.payload = {"multipliers": reports, "p": params["p"]}
    rep.series["transfer"] = (["multiplier", "torus_norm", "line_norm", "tolerance", "margin", "satisfied"], rows)


def _test_velocity(y):
    return np.stack([np.sin(y[..., 1]) * np.cos(y[..., 2]), np.sin(y[..., 0] + y[..., 2]), np.cos(y[..., 0])], -1)


def _moving(params, seed, rep: RunReport):
    from . import moving as mv

    names = mv.BUILTIN_MOTIONS if params["motion"] == "all" else (params["motion"],)
    grid = mv.MotionGrid(params["n_grid"], params["n_time"])
    levels = [params["n_grid"] * 2**i for i in range(params["levels"] + 1)]
    rows = []
    rng = np.random.default_rng(seed)
    w = rng.normal(size=(grid.n_time, grid.n, grid.n, grid.n, 3))
    q = rng.normal(size=(grid.n_time, grid.n, grid.n, grid.n))
    for name in names:
        m = mv.builtin_motion(name, params["eps"])
        tc = mv.compute_coefficients(m, grid)
        # identities are checked on coefficients built from the numerically inverted map
        fd = mv.compute_coefficients(m, grid, method="inverse-fd")
        info = {
            "chain_rule_error": fd.chain_rule_error(),
            "inverse_identity_error": fd.inverse_identity_error(),
            "jacobian_error": fd.jacobian_error(),
            "coefficient_method_gap": float(max(np.abs(fd.A - tc.A).max(), np.abs(fd.a0 - tc.a0).max())),
            "max_abs_J_minus_1": float(np.abs(tc.J0).max()),
        }
        rep.flags[f"coefficient_methods_agree_{name}"] = info["coefficient_method_gap"] <= 1e-8
        rep.flags[f"chain_rule_{name}"] = info["chain_rule_error"] <= 1e-8
        rep.flags[f"inverse_identity_{name}"] = info["inverse_identity_error"] <= 1e-8
        rep.flags[f"jacobian_{name}"] = info["jacobian_error"] <= 1e-10
        if m.volume_preserving:
            rep.flags[f"volume_preserving_{name}"] = info["max_abs_J_minus_1"] <= 1e-10
        conv = mv.divergence_convergence(m, _test_velocity, levels)
        res = [r for _, _, r in conv["levels"]]
        info["divergence_residuals"] = res
        info["divergence_orders"] = conv["orders"]
        # motions whose coefficients make the identity exact on the grid stay at rounding level
        exact = max(res) <= 1e-9
        rep.flags[f"divergence_identity_{name}"] = exact or all(o >= 2.0 for o in conv["orders"])
        rows.extend((name, n, h, r) for n, h, r in conv["levels"])
        if name == "none":
            L = mv.assemble_L(tc, w, q)
            Nw = mv.assemble_N(tc, w)
            info["L_max"] = float(np.abs(L).max())
            info["N_minus_convective"] = float(np.abs(Nw - mv.convective(w, grid.h)).max())
            rep.flags["L_vanishes_without_motion"] = info["L_max"] <= 1e-12
            rep.flags["N_reduces_to_convective"] = info["N_minus_convective"] <= 1e-12
        sm = mv.smallness_report(m, params["epsilon0"], grid)
        info["smallness"] = sm.as_dict()
        rep.payload[name] = info
    rep.series["moving_domain"] = (["motion", "n", "h", "residual"], rows)


def _pair(s):
    vals = _float_list(s)
    if len(vals) != 2 or vals[0] > vals[1]:
        raise ValueError("expected lo,hi")
    return vals


EXPERIMENTS = {
    "heat-maxreg": Experiment("heat-maxreg", {
        "N_space": (pos_int, 8), "K_time": (pos_int, 16), "n_trials": (pos_int, 100),
        "gamma0": (_nonneg_float, 0.5), "p": (_exponent, 2.0), "forcing_decay": (_nonneg_float, 2.0),
        "stability_limit": (pos_float, 0.2),
    }, _heat),
    "stokes-tp": Experiment("stokes-tp", {
        "N_space": (pos_int, 8), "K_time": (pos_int, 4), "mu": (pos_float, 1.0), "n_trials": (pos_int, 50),
        "forcing_decay": (_nonneg_float, 2.0), "stability_limit": (pos_float, 0.2),
    }, _stokes_tp),
    "ns-picard": Experiment("ns-picard", {
        "N_space": (pos_int, 16), "K_time": (pos_int, 8), "mu": (pos_float, 1.0), "amplitude": (_nonneg_float, 1e-2),
        "tol": (pos_float, 1e-12), "max_iter": (pos_int, 20), "n_modes": (pos_int, 3),
        "sweep": (_float_list, "0.005,0.01,0.02,0.04"),
    }, _ns_picard),
    "kernel-decay": Experiment("kernel-decay", {
        "radii": (_float_list, "2..16"), "K_time": (pos_int, 8), "mu": (pos_float, 1.0), "r": (_exponent, 2.0),
        "method": (_choice("radial", "closed", "fft"), "radial"), "derivative": (_bool, True),
        "exponent_range": (_pair, "-3.3,-2.7"), "steady": (_bool, True), "steady_radii": (_float_list, "5..40:8"),
        "support": (pos_float, 1.0), "h": (pos_float, 0.125),
    }, _kernel_decay),
    "rbound": Experiment("rbound", {
        "n_families": (pos_int, 20), "max_ops": (pos_int, 3), "n_max": (pos_int, 4), "n_trials": (pos_int, 200),
        "n_vectors": (pos_int, 2), "p": (_positive(float), 2.0),
    }, _rbound),
    "transfer-check": Experiment("transfer-check", {
        "p": (_exponent, 2.0), "n_repeats": (pos_int, 4), "band_limit": (pos_int, 16),
    }, _transfer),
    "moving-domain-check": Experiment("moving-domain-check", {
        "motion": (_choice("all", "none", "translation", "shear", "breathing", "wave-shear"), "all"),
        "eps": (_nonneg_float, 0.1), "n_grid": (pos_int, 8), "n_time": (pos_int, 5), "levels": (pos_int, 3),
        "epsilon0": (pos_float, 0.5),
    }, _moving),
}


# ---------------------------------------------------------------------------
# command line


def _parse_overrides(rest: list) -> dict:
    out = {}
    i = 0
    while i < len(rest):
        tok = rest[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(rest):
                raise ConfigError(f"missing value for --{key}")
            val = rest[i + 1]
            i += 2
        out[key.replace("-", "_") if key.replace("-", "_") in _all_keys() else key] = val
    return out


def _all_keys() -> set:
    keys = set(COMMON_KEYS)
    for e in EXPERIMENTS.values():
        keys |= set(e.keys)
    return keys


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="torusflow", allow_abbrev=False,
                                     usage="torusflow <experiment> [--config FILE] [--key value ...]",
                                     description="Run a verification experiment and write report.json plus CSV series.",
                                     epilog="experiments: " + ", ".join(EXPERIMENTS))
    parser.add_argument("experiment")
    parser.add_argument("--config", help="flat key = value file")
    parser.add_argument("--version", action="version", version=f"torusflow {__version__} ({accel.BACKEND} kernels)")
    args, rest = parser.parse_known_args(argv)
    try:
        raw = read_config_file(args.config) if args.config else {}
        raw.update(_parse_overrides(rest))
        config = build_config(args.experiment, raw)
    except (ConfigError, OSError) as exc:
        print(f"torusflow: {exc}", file=sys.stderr)
        return 2
    report = run(config)
    status = "PASS" if report.passed else "FAIL"
    print(f"{config.experiment}: {status} ({report.wall_time:.2f} s) -> {os.path.join(config.output_dir, 'report.json')}")
    for name, ok in sorted(report.flags.items()):
        print(f"  {'ok  ' if ok else 'FAIL'} {name}")
    for err in report.errors:
        print(f"  error {err['type']}: {err['message']}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())

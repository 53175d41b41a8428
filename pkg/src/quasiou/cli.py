"""Command-line experiment runner.

Usage::

    quasiou --config exp.ini --out results/ [--seed N] [--threads N] [--format csv|json]

Writes ``config.resolved.ini``, ``report.json`` and the data series
(``data.csv`` in long format, or ``data.json``).  Exit status is 0 when
every check passes, 2 when a check misses its tolerance and 1 on error.
"""

import argparse
import sys
from pathlib import Path as _FsPath

import numpy as np

from . import __version__
from .analytics import (acf_short_lag_prediction, acf_tail_prediction, complementary_acf, empirical_acf,
                        fbm_stationary_variance, fit_power_law, noise_acf, stability_experiment,
                        stationary_moments)
from .config import load_config
from .exceptions import QouError
from .integrability import WeightedBivariateKernel, fubini_check
from .io import path_rows, write_json, write_long_csv
from .kernels import psi_transform
from .langevin import QouConfig, simulate_qou
from .noise import DriftNoise, FBMNoise

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


def _check(name, value, expected, tol, source, *, relative=False, kind=None):
    if expected is None:
        ok = bool(np.isfinite(value))
    elif relative:
        ok = abs(value - expected) <= tol * abs(expected)
    else:
        ok = abs(value - expected) <= tol
    out = {"name": name, "value": value, "expected": expected, "tolerance": tol,
           "relative": relative, "pass": bool(ok), "source": source}
    if kind:
        out["kind"] = kind
    return out


def _lags(cfg, window):
    return np.geomspace(window[0], window[1], cfg["windows"]["n_lags"])


def _cmd_moments(cfg):
    spec = cfg.noise()
    m = stationary_moments(spec, cfg.lam)
    checks = [_check("variance_finite", m.variance, None, 0, "estimator")]
    base = spec.base if isinstance(spec, DriftNoise) else spec
    if isinstance(base, FBMNoise):
        closed = fbm_stationary_variance(base.H, base.sigma, cfg.lam)
        checks.append(_check("variance_quadrature_vs_closed_form", m.variance, closed,
                             cfg["tolerances"]["moments"], "laplace-variance", relative=True))
    return {"mean": m.mean, "variance": m.variance}, [], checks


def _cmd_simulate(cfg, workers):
    spec = cfg.noise()
    sim = cfg["simulation"]
    qc = QouConfig(cfg.lam, burn_in=sim["burn_in"]) if sim["burn_in"] else QouConfig(cfg.lam)
    X = simulate_qou(spec, cfg.lam, cfg.grid(), cfg.seed, n_paths=cfg["experiment"]["n_paths"],
                     route=sim["route"], cfg=qc, trunc=sim["trunc"], tol=sim["tol"],
                     far_field=sim["far_field"], workers=workers, rule=sim["rule"])
    rows = path_rows(X)
    checks = [_check("all_values_finite", float(np.all(np.isfinite(X.values))), 1.0, 0.5, "estimator")]
    summary = {"n_paths": X.n_paths, "points": X.grid.count}
    if X.n_paths >= 2:
        try:
            m = stationary_moments(spec, cfg.lam)
        except QouError:
            m = None
        if m is not None:
            emp = empirical_acf(X, [0.0])
            se = float(emp.se[0])
            tol = cfg["tolerances"]["se_multiple"] * max(se, 1e-300)
            checks.append(_check("variance_X0", float(emp.values[0]), m.variance, tol, "laplace-variance"))
            summary["empirical_variance"] = float(emp.values[0])
            summary["variance_se"] = se
    return summary, rows, checks


def _cmd_acf(cfg, workers):
    spec = cfg.noise()
    lags = np.asarray(cfg["windows"]["lags"])
    theo = noise_acf(spec, cfg.lam, lags)
    rows = theo.rows("theoretical_acf") + theo.complementary.rows("theoretical_complementary")
    gap = float(np.max(np.abs(theo.values[0] - theo.values - theo.complementary.values))) if lags[0] == 0 else 0.0
    checks = [_check("complementary_consistency", gap, 0.0, 1e-8 * max(1.0, abs(theo.values[0])), "estimator")]
    summary = {"lags": lags, "acf": theo.values, "complementary": theo.complementary.values}
    if cfg["experiment"]["n_paths"] >= 2 and cfg["simulation"]["route"]:
        X = simulate_qou(spec, cfg.lam, cfg.grid(), cfg.seed, n_paths=cfg["experiment"]["n_paths"],
                         trunc=cfg["simulation"]["trunc"], tol=cfg["simulation"]["tol"], workers=workers,
                         rule=cfg["simulation"]["rule"])
        emp = empirical_acf(X, lags)
        rows += emp.rows("empirical_acf")
        k = cfg["tolerances"]["se_multiple"]
        for t, e, s, th in zip(lags, emp.values, emp.se, theo.values):
            checks.append(_check(f"empirical_acf_lag_{t:g}", float(e), float(th), k * max(float(s), 1e-300),
                                 "estimator"))
    return summary, rows, checks


def _cmd_kernel(cfg):
    kernel = cfg.kernel()
    t = cfg.grid().nonnegative().times
    closed = psi_transform(kernel, cfg.lam, t)
    quad = psi_transform(kernel, cfg.lam, t, method="quadrature")
    scale = np.maximum(1.0, np.abs(closed.values))
    err = float(np.max(np.abs(closed.values - quad.values) / scale))
    rows = ([("psi_closed_form", a, b, None) for a, b in zip(t, closed.values)]
            + [("psi_quadrature", a, b, None) for a, b in zip(t, quad.values)]
            + [("g_closed_form", a, b, None) for a, b in zip(t, closed.integral)])
    checks = [_check("closed_form_vs_quadrature", err, 0.0, cfg["tolerances"]["kernel"], "moving-average-kernel")]
    return {"max_relative_difference": err}, rows, checks


def _cmd_verify(cfg):
    spec = cfg.noise()
    tol = cfg["tolerances"]
    w = cfg["windows"]
    checks, rows, summary = [], [], {}
    tail = acf_tail_prediction(spec, cfg.lam)
    summary["tail_prediction"] = tail.to_dict()
    if tail.status == "ok":
        curve = noise_acf(spec, cfg.lam, _lags(cfg, w["tail"]))
        fit = fit_power_law(curve, w["tail"], signed=True)
        rows += curve.rows("theoretical_acf_tail")
        summary["tail_fit"] = fit.to_dict()
        checks.append(_check("tail_exponent", fit.exponent, tail.exponent, tol["exponent"], tail.source))
        checks.append(_check("tail_constant", fit.constant, tail.constant, tol["constant"], tail.source,
                             relative=True))
    short = acf_short_lag_prediction(spec, cfg.lam)
    summary["short_lag_prediction"] = short.to_dict()
    curve = noise_acf(spec, cfg.lam, _lags(cfg, w["short"])).complementary
    fit = fit_power_law(curve, w["short"])
    rows += curve.rows("theoretical_complementary_short")
    summary["short_lag_fit"] = fit.to_dict()
    checks.append(_check("short_lag_exponent", fit.exponent, short.exponent, tol["exponent"], short.source))
    if short.exponent == 1.0:
        checks.append(_check("short_lag_constant", fit.constant, short.constant, tol["constant"], short.source,
                             relative=True))
    return summary, rows, checks


def _cmd_stability(cfg):
    s = cfg["stability"]
    rep = stability_experiment(s["H"], cfg.lam, cfg.bump(), s["window"], n_lags=cfg["windows"]["n_lags"])
    rows = []
    for name, c in rep.curves.items():
        rows += c.rows(f"acf_{name}")
    tol = s["exponent"]
    checks = [_check(f"{k}_exponent", getattr(rep, k).exponent, rep.predicted[k], tol, "kernel-perturbation")
              for k in ("unperturbed", "perturbed", "ratio")]
    return rep.to_dict(), rows, checks


def _cmd_fubini(cfg):
    f = cfg["fubini"]
    kern = (WeightedBivariateKernel.unit_step() if f["kernel"] == "unit_step"
            else WeightedBivariateKernel.exp_triangle(f["x_hi"]))
    rep = fubini_check(kern, cfg.driver(), cfg.grid(), cfg.seed, cfg["experiment"]["n_paths"],
                       halvings=f["halvings"])
    rows = [("lhs", i, a, None) for i, a in enumerate(rep.lhs)] + \
           [("rhs", i, b, None) for i, b in enumerate(rep.rhs)] + \
           [("mean_gap", s, g, None) for s, g in zip(rep.steps, rep.mean_gaps)]
    if f["kernel"] == "unit_step":
        checks = [_check("max_gap", rep.max_gap, 0.0, 1e-12, "fubini-interchange")]
    else:
        slope_ok = rep.refinement_slope >= cfg["tolerances"]["slope"]
        checks = [{"name": "refinement_slope", "value": rep.refinement_slope,
                   "expected": f">= {cfg['tolerances']['slope']}", "tolerance": None, "relative": False,
                   "pass": bool(slope_ok), "source": "fubini-interchange"}]
    return rep.to_dict(), rows, checks


def run_experiment(cfg, out_dir, *, fmt=None, workers=None):
    """Run the configured command and write its artifacts.

    Returns
    -------
    (int, dict)
        Exit status and the report.
    """
    out = _FsPath(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fmt = fmt or cfg["experiment"]["format"]
    workers = workers or cfg["experiment"]["threads"]
    cmd = cfg.command
    (out / "config.resolved.ini").write_text(cfg.to_text())
    if cmd == "moments":
        summary, rows, checks = _cmd_moments(cfg)
    elif cmd == "simulate":
        summary, rows, checks = _cmd_simulate(cfg, workers)
    elif cmd == "acf":
        summary, rows, checks = _cmd_acf(cfg, workers)
    elif cmd == "kernel":
        summary, rows, checks = _cmd_kernel(cfg)
    elif cmd == "verify-asymptotics":
        summary, rows, checks = _cmd_verify(cfg)
    elif cmd == "stability":
        summary, rows, checks = _cmd_stability(cfg)
    else:
        summary, rows, checks = _cmd_fubini(cfg)
    if fmt == "csv":
        write_long_csv(out / "data.csv", rows)
    else:
        write_json(out / "data.json", [{"series_id": r[0], "t": r[1], "value": r[2], "se": r[3]} for r in rows])
    passed = all(c["pass"] for c in checks)
    report = {"command": cmd, "seed": cfg.seed, "version": __version__, "summary": summary,
              "checks": checks, "pass": passed}
    write_json(out / "report.json", report)
    return (EXIT_OK if passed else EXIT_FAIL), report


def build_parser():
    p = argparse.ArgumentParser(prog="quasiou", description="Stationary Langevin experiments with "
                                "fractional and pseudo-moving-average noise.")
    p.add_argument("--config", required=True, help="INI experiment configuration")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="override [experiment] seed")
    p.add_argument("--threads", type=int, help="worker threads for ensemble generation")
    p.add_argument("--format", choices=("csv", "json"), help="data file format")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = cfg.with_overrides(seed=args.seed, threads=args.threads, format=args.format)
        status, report = run_experiment(cfg, args.out)
    except (QouError, OSError) as exc:
        print(f"quasiou: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for c in report["checks"]:
        print(f"{'PASS' if c['pass'] else 'FAIL'} {c['name']}: {c['value']!r} (expected {c['expected']!r}, "
              f"source {c['source']})")
    return status


if __name__ == "__main__":
    sys.exit(main())

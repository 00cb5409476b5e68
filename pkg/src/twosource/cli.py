"""Command-line front end: exponent sweeps, simulations, Helstrom tables, PSF checks."""

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import chernoff, montecarlo, quantum_states as states
from .errors import TwoSourceError
from .psf import PsfModel, normalization_quadrature, overlap_delta, overlap_delta_quadrature
from .scenario import DetectionScenario, derived_params

COMMANDS = ("exponents", "simulate", "helstrom", "psf-check")

EXPONENT_COLUMNS = [
    "d", "xi_quantum", "xi_bspade", "xi_sliver", "xi_c_bspade", "xi_c_sliver", "xi_c_di_smalld",
]

DEFAULTS = {
    "psf": "gaussian",
    "sigma": 1.0,
    "sigma_y": None,
    "epsilon": 0.1,
    "d": None,
    "d_min": 0.0,
    "d_max": 6.0,
    "d_steps": 200,
    "priors": "0.5,0.5",
    "samples": "1",
    "trials": 100_000,
    "seed": 0,
    "rule": "simplified",
    "measurement": "bspade",
    "cutoff": 6,
    "L_max": 10,
    "out": None,
    "format": "csv",
    "include_di_exact": False,
    "workers": 1,
}


def _parser():
    p = argparse.ArgumentParser(prog="twosource", description=__doc__)
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON file with option values; flags override it")
    p.add_argument("--psf", choices=["gaussian", "rect", "circ"])
    p.add_argument("--sigma", type=float)
    p.add_argument("--sigma-y", dest="sigma_y", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--d", type=float, help="single separation (overrides the sweep)")
    p.add_argument("--d-min", dest="d_min", type=float)
    p.add_argument("--d-max", dest="d_max", type=float)
    p.add_argument("--d-steps", dest="d_steps", type=int)
    p.add_argument("--priors", help="p1,p2")
    p.add_argument("--samples", help="M, or a comma list of M values (simulate)")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--rule", choices=["lrt", "simplified"])
    p.add_argument("--measurement", choices=["bspade", "sliver", "di"])
    p.add_argument("--cutoff", type=int)
    p.add_argument("--L-max", dest="L_max", type=int)
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--include-di-exact", dest="include_di_exact", action="store_const", const=True)
    p.add_argument("--workers", type=int)
    return p


def load_config(argv):
    """Merge defaults, the optional JSON config and explicit flags (in that order)."""
    ns = _parser().parse_args(argv)
    cfg = dict(DEFAULTS)
    if ns.config:
        with open(ns.config, encoding="utf-8") as fh:
            file_cfg = json.load(fh)
        if not isinstance(file_cfg, dict):
            raise SystemExit("config file must hold a JSON object")
        file_cfg = {k.replace("-", "_"): v for k, v in file_cfg.items()}
        unknown = sorted(set(file_cfg) - set(DEFAULTS))
        if unknown:
            raise SystemExit(f"unknown config keys: {', '.join(unknown)}")
        cfg.update(file_cfg)
    for key in DEFAULTS:
        val = getattr(ns, key, None)
        if val is not None:
            cfg[key] = val
    cfg["command"] = ns.command
    return _validate(cfg)


def _validate(cfg):
    if isinstance(cfg["priors"], str):
        cfg["priors"] = [float(v) for v in cfg["priors"].split(",")]
    if isinstance(cfg["samples"], (int, float)):
        cfg["samples"] = [int(cfg["samples"])]
    elif isinstance(cfg["samples"], str):
        cfg["samples"] = [int(v) for v in cfg["samples"].split(",")]
    else:
        cfg["samples"] = [int(v) for v in cfg["samples"]]
    if len(cfg["priors"]) != 2:
        raise SystemExit("--priors needs two values")
    if cfg["d"] is None:
        if cfg["d_min"] > cfg["d_max"]:
            raise SystemExit("--d-min must not exceed --d-max")
        if cfg["d_steps"] < 1:
            raise SystemExit("--d-steps must be at least 1")
    if cfg["format"] not in ("csv", "json"):
        raise SystemExit("--format must be csv or json")
    return cfg


def d_grid(cfg):
    """Inclusive linear sweep; d_steps intervals (d_steps + 1 points), or the single --d."""
    if cfg["d"] is not None:
        return [float(cfg["d"])]
    if cfg["d_min"] == cfg["d_max"]:
        return [float(cfg["d_min"])]
    return [float(v) for v in np.linspace(cfg["d_min"], cfg["d_max"], cfg["d_steps"] + 1)]


def _single_d(cfg):
    """Separation for the single-point commands; 1.0 when --d is absent."""
    return 1.0 if cfg["d"] is None else float(cfg["d"])


def _model(cfg):
    return PsfModel(cfg["psf"], cfg["sigma"], cfg["sigma_y"] if cfg["psf"] == "rect" else None)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return "%.12g" % v
    return str(v)


def _ordered_map(fn, items, workers):
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _json_number(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    return _json_number(obj)


# --- commands -----------------------------------------------------------------

def cmd_exponents(cfg):
    model = _model(cfg)
    eps = cfg["epsilon"]
    columns = EXPONENT_COLUMNS + (["xi_c_di_exact"] if cfg["include_di_exact"] else []) + ["error"]

    def row(d):
        out = {"d": d}
        try:
            dp = derived_params(DetectionScenario(eps, d, model))
            out["xi_quantum"] = chernoff.quantum_chernoff_exact(dp).xi
            out["xi_bspade"] = chernoff.bspade_chernoff_exact(dp).xi
            out["xi_sliver"] = chernoff.sliver_chernoff_exact(dp).xi
            out["xi_c_bspade"] = chernoff.conditional_bspade(model, d)
            out["xi_c_sliver"] = chernoff.conditional_sliver(model, d)
            out["xi_c_di_smalld"] = chernoff.di_conditional_smalld(model, d)
            if cfg["include_di_exact"]:
                out["xi_c_di_exact"] = chernoff.di_conditional_exact(model, d).xi
            out["error"] = ""
        except (TwoSourceError, ValueError, ArithmeticError) as exc:
            out["error"] = f"{type(exc).__name__}: {exc}"
        return out

    rows = _ordered_map(row, d_grid(cfg), cfg["workers"])
    return {"columns": columns, "rows": rows}


def cmd_psf_check(cfg):
    model = _model(cfg)
    columns = ["d", "delta_closed", "delta_quadrature", "residual", "error"]

    def row(d):
        out = {"d": d, "delta_closed": float(overlap_delta(model, d))}
        try:
            q = overlap_delta_quadrature(model, d)
            out["delta_quadrature"] = q
            out["residual"] = abs(q - out["delta_closed"])
            out["error"] = ""
        except TwoSourceError as exc:
            out["error"] = f"{type(exc).__name__}: {exc}"
        return out

    rows = _ordered_map(row, d_grid(cfg), cfg["workers"])
    norm = normalization_quadrature(model)
    residuals = [r["residual"] for r in rows if "residual" in r]
    summary = {
        "psf": model.family.value,
        "normalization": norm,
        "normalization_residual": abs(norm - 1.0),
        "delta_at_zero": float(overlap_delta(model, 0.0)),
        "max_residual": max(residuals) if residuals else None,
    }
    return {"columns": columns, "rows": rows, "summary": summary}


def cmd_helstrom(cfg):
    model = _model(cfg)
    p1, p2 = cfg["priors"]
    eps = cfg["epsilon"]
    M = cfg["samples"][0]
    d = _single_d(cfg)
    dp = derived_params(DetectionScenario(eps, d, model, p1, p2, M))
    eta1, eta2 = states.build_eta(dp)
    xi_c = chernoff.conditional_bspade(model, d)
    columns = ["kind", "L", "pe_min", "rate", "local_rate", "error"]
    rows = []
    cache = {}
    prev = None
    for L in range(0, cfg["L_max"] + 1):
        r = {"kind": "conditional", "L": L}
        try:
            pe = states.conditional_helstrom(eta1, eta2, p1, p2, L)
            cache[L] = pe
            r["pe_min"] = pe
            r["rate"] = -math.log(pe) / L if L > 0 and pe > 0 else None
            r["local_rate"] = math.log(prev / pe) if prev and pe > 0 else None
            r["error"] = ""
            prev = pe
        except TwoSourceError as exc:
            r["error"] = f"{type(exc).__name__}: {exc}"
            prev = None
        rows.append(r)
    agg = {"kind": "aggregate", "L": M}
    try:
        L_ok = max(k for k in cache) if cache else 0
        pe, tail = states.unconditional_from_conditional(
            eps, M, lambda L: cache[L], p1, p2, L_max=min(L_ok, M), xi_c=xi_c
        )
        agg.update(pe_min=pe, rate=tail, error="")
    except (TwoSourceError, ValueError) as exc:
        agg["error"] = f"{type(exc).__name__}: {exc}"
    rows.append(agg)
    thermal = None
    if M <= 3:
        # exact thermal states, truncated at the cutoff
        rho1 = states.build_rho1(dp, cfg["cutoff"], max_deficit=None)
        rho2 = states.build_rho2(dp, cfg["cutoff"], max_deficit=None)
        thermal = states.helstrom_error(rho1, rho2, p1, p2, M)
    summary = {
        "d": d, "epsilon": eps, "M": M, "xi_c": xi_c,
        "aggregate_tail_bound": agg.get("rate"),
        "thermal_pe_min": thermal, "cutoff": cfg["cutoff"],
    }
    return {"columns": columns, "rows": rows, "summary": summary}


def cmd_simulate(cfg):
    t0 = time.perf_counter()
    model = _model(cfg)
    p1, p2 = cfg["priors"]
    d = _single_d(cfg)
    kind = cfg["measurement"]
    rule = "likelihood_ratio" if cfg["rule"] == "lrt" else "simplified"
    runs = []
    if kind == "di":
        for L in cfg["samples"]:
            a, b, pe = montecarlo.estimate_di_conditional_error(model, d, L, cfg["trials"], cfg["seed"], p1, p2)
            runs.append({"samples_M": L, "alpha_hat": a, "beta_hat": b, "pe_hat": pe})
        xi = chernoff.di_conditional_exact(model, d).xi
        rule = "likelihood_ratio"
    else:
        for M in cfg["samples"]:
            sc = DetectionScenario(cfg["epsilon"], d, model, p1, p2, M)
            est = montecarlo.estimate_error(
                sc, kind, montecarlo.SimulationConfig(cfg["trials"], cfg["seed"], M, rule, workers=cfg["workers"])
            )
            r = {
                "samples_M": M,
                "alpha_hat": est.alpha_hat,
                "beta_hat": est.beta_hat,
                "pe_hat": est.pe_hat,
                "ci_alpha": list(est.ci_alpha),
                "ci_beta": list(est.ci_beta),
                "analytic_alpha": est.analytic_alpha,
                "analytic_beta": est.analytic_beta,
                "beta_outside_ci": (
                    None if est.analytic_beta is None
                    else not (est.ci_beta[0] <= est.analytic_beta <= est.ci_beta[1])
                ),
            }
            runs.append(r)
        xi = est.extra["xi"]
    fit = None
    key = "pe_hat" if kind == "di" else "beta_hat"
    usable = [r for r in runs if r[key] > 0]
    if len(usable) >= 2:
        fit = montecarlo.fit_exponent(
            [r["samples_M"] for r in usable], [r[key] for r in usable], 0.5 if kind == "di" else 0.0
        )
    report = {
        "command": "simulate",
        "measurement": kind,
        "rule": rule,
        "psf": model.family.value,
        "epsilon": cfg["epsilon"],
        "d": d,
        "priors": [p1, p2],
        "trials": cfg["trials"],
        "seed": cfg["seed"],
        "exponent": xi,
        "exponent_units": "per detected photon" if kind == "di" else "per sample",
        "fitted_exponent": fit,
        "runs": runs,
        "wall_time_s": time.perf_counter() - t0,
    }
    return {"report": report}


HANDLERS = {
    "exponents": cmd_exponents,
    "simulate": cmd_simulate,
    "helstrom": cmd_helstrom,
    "psf-check": cmd_psf_check,
}


def render(result, fmt):
    if "report" in result:
        return json.dumps(_clean(result["report"]), indent=2, sort_keys=True) + "\n"
    if fmt == "json":
        payload = {"columns": result["columns"], "rows": result["rows"]}
        if "summary" in result:
            payload["summary"] = result["summary"]
        return json.dumps(_clean(payload), indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(result["columns"])
    for r in result["rows"]:
        w.writerow([_fmt(r.get(c)) for c in result["columns"]])
    return buf.getvalue()


def has_errors(result):
    return any(r.get("error") for r in result.get("rows", []))


def main(argv=None):
    cfg = load_config(sys.argv[1:] if argv is None else argv)
    try:
        result = HANDLERS[cfg["command"]](cfg)
    except TwoSourceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = render(result, cfg["format"])
    if cfg["out"]:
        with open(cfg["out"], "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if cfg["format"] == "csv" and "summary" in result:
        # CSV carries rows only; the summary goes to stderr
        print("summary: " + json.dumps(_clean(result["summary"]), sort_keys=True), file=sys.stderr)
    return 1 if has_errors(result) else 0


if __name__ == "__main__":
    sys.exit(main())

"""Acceptance criteria 1-8 at their stated tolerances and runtime limits.

Each check prints one PASS/FAIL line.  Run under pytest (lines appear in the
terminal summary) or directly: ``python3 tests/test_acceptance.py``.
"""

import math
import time
from functools import lru_cache

import mpmath
import numpy as np
import pytest

from twosource import chernoff as ch
from twosource import montecarlo as mc
from twosource import quantum_states as qs
from twosource.psf import PsfModel, overlap_delta
from twosource.scenario import (
    DetectionScenario,
    Hypothesis,
    MeasurementKind,
    derived_params,
    outcome_distribution,
)

GAUSS = PsfModel.gaussian()
MODELS = [PsfModel.gaussian(), PsfModel.rect(), PsfModel.circ()]
SEED = 2026


class Outcome:
    def __init__(self, number, checks, limit):
        self.number = number
        self.checks = checks  # list of (label, ok, detail)
        self.limit = limit
        self.elapsed = None

    @property
    def ok(self):
        return all(c[1] for c in self.checks) and self.elapsed < self.limit

    def check(self, label):
        return next(c for c in self.checks if c[0] == label)

    def line(self):
        parts = "; ".join(f"{lab} {'ok' if ok else 'FAILED'} ({det})" for lab, ok, det in self.checks)
        status = "PASS" if self.ok else "FAIL"
        return f"criterion {self.number}: {status} [{self.elapsed:.1f} s < {self.limit:g} s] {parts}"


def _timed(number, limit, fn):
    t0 = time.perf_counter()
    checks = fn()
    out = Outcome(number, checks, limit)
    out.elapsed = time.perf_counter() - t0
    return out


def _dp(eps, d, model=GAUSS):
    return derived_params(DetectionScenario(eps, d, model))


# --- 1. conditional exponents for the gaussian PSF -----------------------------------------

def _c1():
    errs = [abs(ch.conditional_bspade(GAUSS, d) - d * d / 16) for d in (0.1, 0.5, 1.0, 2.0)]
    with mpmath.workdps(40):
        ds = [mpmath.mpf(10) ** e for e in np.linspace(-2, -1, 9)]
        res = [abs(ch.conditional_sliver(GAUSS, d) - (d**2 / 16 - d**4 / 512)) for d in ds]
        x = np.array([float(mpmath.log(d)) for d in ds])
        y = np.array([float(mpmath.log(r)) for r in res])
    slope = float(np.polyfit(x, y, 1)[0])
    ratios = [ch.di_conditional_smalld(GAUSS, d) / (d**4 / 256) for d in (0.1, 0.5, 1.0, 2.0)]
    return [
        ("bspade=d^2/16", max(errs) <= 1e-12, f"max err {max(errs):.1e}"),
        ("sliver residual slope", slope >= 5.8, f"slope {slope:.2f}"),
        ("DI small-d ratio", all(0.999 <= r <= 1.001 for r in ratios), f"ratios in [{min(ratios):.6f}, {max(ratios):.6f}]"),
    ]


# --- 2. B-SPADE equals the quantum limit --------------------------------------------------

def _grid():
    for model in MODELS:
        for eps in (0.01, 0.1, 0.3):
            for d in np.linspace(0.0, 6.0, 20):
                yield model, eps, float(d)


def _c2():
    worst_q = worst_g = 0.0
    for model, eps, d in _grid():
        dp = _dp(eps, d, model)
        xq = ch.quantum_chernoff_exact(dp).xi
        worst_q = max(worst_q, abs(ch.bspade_chernoff_exact(dp).xi - xq))
        for kind, exact in ((MeasurementKind.BSPADE, xq), (MeasurementKind.SLIVER, ch.sliver_chernoff_exact(dp).xi)):
            p1 = outcome_distribution(kind, Hypothesis.H1, dp).as_tuple()
            p2 = outcome_distribution(kind, Hypothesis.H2, dp).as_tuple()
            worst_g = max(worst_g, abs(ch.generic_chernoff(p1, p2).xi - exact))
    return [
        ("|bspade-quantum|", worst_q < 1e-12, f"max {worst_q:.1e} on 180 points"),
        ("generic vs closed forms", worst_g < 1e-10, f"max {worst_g:.1e}"),
    ]


# --- 3. SLIVER bound and sub-Rayleigh near-optimality ------------------------------------------

def _c3():
    viol = 0
    for model, eps, d in _grid():
        dp = _dp(eps, d, model)
        viol += ch.sliver_chernoff_exact(dp).xi > ch.quantum_chernoff_exact(dp).xi
    gaps = []
    for d in np.linspace(0.01, 0.5, 50):
        xc = ch.conditional_bspade(GAUSS, d)
        gaps.append((xc - ch.conditional_sliver(GAUSS, d)) / xc)
    return [
        ("sliver<=quantum", viol == 0, f"{viol} violations on 180 points"),
        ("conditional gap", max(gaps) < 0.02, f"max relative gap {max(gaps):.4f} for d<=0.5"),
    ]


# --- 4. exact direct-imaging exponent ------------------------------------------------------

def _c4():
    devs = {}
    for d in (0.05, 0.1, 0.15, 0.2, 0.25, 0.3):
        devs[d] = abs(ch.di_conditional_exact(GAUSS, d).xi / (d**4 / 256) - 1)
    above = []
    for d in np.linspace(0.1, 2.0, 20):
        d = float(d)
        if not ch.di_conditional_exact(GAUSS, d).xi < ch.conditional_sliver(GAUSS, d):
            above.append(d)
    worst = max(devs, key=devs.get)
    return [
        ("within 2% of d^4/256", max(devs.values()) < 0.02, f"max deviation {devs[worst]:.4f} at d={worst}"),
        ("below sliver", not above, f"{len(above)} violations on (0, 2]"),
    ]


# --- 5. one-photon matrix oracles ------------------------------------------------------------

def _c5():
    worst = 0.0
    for model in MODELS:
        for d in (0.2, 0.8, 1.6, 3.0):
            e1, e2 = qs.build_eta(_dp(0.1, d, model))
            target = -math.log(float(overlap_delta(model, d / 2)) ** 2)
            worst = max(worst, abs(qs.conditional_quantum_chernoff(e1, e2).xi - target))
    d = math.sqrt(-32 * math.log(0.95))  # gaussian with delta(d/2) = 0.95
    dp = _dp(0.1, d)
    e1, e2 = qs.build_eta(dp)
    pe = [qs.conditional_helstrom(e1, e2, 0.5, 0.5, L) for L in range(0, 11)]
    closed = max(abs(pe[L] - qs.eta_helstrom_closed_form(dp, 0.5, 0.5, L)) for L in range(11))
    xi_c = -2 * math.log(0.95)
    local = math.log(pe[9] / pe[10]) / xi_c
    average = -math.log(pe[10]) / 10 / xi_c
    return [
        ("matrix QCB = -log delta(d/2)^2", worst < 1e-10, f"max err {worst:.1e}"),
        ("Helstrom slope at L=10", abs(local - 1) < 0.10,
         f"log(P9/P10)/xi_c = {local:.4f}; -log(P10)/10/xi_c = {average:.3f}; closed-form err {closed:.1e}"),
    ]


# --- 6. thermal-state construction oracle -----------------------------------------------------

def _c6():
    dp = _dp(0.1, 1.0)
    rho = qs.build_rho2(dp, 6, max_deficit=None).matrix
    mean, se, _ = qs.coherent_average_rho2(dp, 6, 100_000, mc.block_rng(SEED, 6))
    live = se > 0
    z = np.abs(mean.real[live] - rho[live]) / se[live]
    dead_err = float(np.max(np.abs(rho[~live]))) if np.any(~live) else 0.0
    dp0 = _dp(0.1, 0.0)
    tn = qs.trace_norm(qs.build_rho2(dp0, 6, max_deficit=None).matrix - qs.build_rho1(dp0, 6, max_deficit=None).matrix)
    return [
        ("MC within 3 SE", float(z.max()) <= 3.0 and dead_err == 0.0,
         f"max z {z.max():.2f} over {int(live.sum())} entries, structural zeros exact"),
        ("||rho2-rho1|| at d=0", tn < 1e-10, f"{tn:.1e}"),
    ]


# --- 7. simulation against analytics ----------------------------------------------------------

def _c7():
    checks = []
    alpha_ok = True
    inside = []
    slopes = {}
    for kind in (MeasurementKind.BSPADE, MeasurementKind.SLIVER):
        betas = []
        for M in (10, 50, 200):
            sc = DetectionScenario(0.1, 2.0, samples_M=M)
            est = mc.estimate_error(sc, kind, mc.SimulationConfig(100_000, SEED, M, "simplified"))
            alpha_ok &= est.alpha_hat == 0.0
            target = math.exp(-M * est.extra["xi"])
            inside.append(est.ci_beta[0] <= target <= est.ci_beta[1])
            betas.append(est.beta_hat)
        slopes[kind.value] = mc.fit_exponent([10, 50, 200], betas) / est.extra["xi"]
    checks.append(("alpha_hat=0", alpha_ok, "all runs"))
    checks.append(("beta in Wilson CI", all(inside), f"{sum(inside)}/6"))
    checks.append(("fitted slope", all(abs(r - 1) < 0.05 for r in slopes.values()),
                   ", ".join(f"{k} {v:.4f}" for k, v in slopes.items())))
    return checks


# --- 8. weak-source relation --------------------------------------------------------------

def _c8():
    rel = {}
    for eps in (0.01, 0.001):
        rel[eps] = []
        for d in np.linspace(0.1, 3.0, 30):
            exact = ch.bspade_chernoff_exact(_dp(eps, float(d))).xi
            approx = ch.conditional_to_unconditional(eps, ch.conditional_bspade(GAUSS, float(d)))
            rel[eps].append(abs(approx - exact) / exact)
    shrink = np.array(rel[0.01]) / np.array(rel[0.001])
    return [
        ("relative error at eps=0.01", max(rel[0.01]) < 0.005, f"max {max(rel[0.01]):.5f}"),
        ("proportional to eps", bool(np.all(np.abs(shrink / 10 - 1) < 0.05)),
         f"err(0.01)/err(0.001) in [{shrink.min():.3f}, {shrink.max():.3f}]"),
    ]


CRITERIA = {1: (_c1, 1.0), 2: (_c2, 5.0), 3: (_c3, 1.0), 4: (_c4, 60.0), 5: (_c5, 30.0), 6: (_c6, 60.0), 7: (_c7, 120.0), 8: (_c8, 1.0)}


@lru_cache(maxsize=None)
def evaluate(number):
    fn, limit = CRITERIA[number]
    return _timed(number, limit, fn)


def _report(number, log):
    out = evaluate(number)
    print(out.line())
    log(out.line())
    return out


@pytest.mark.acceptance
@pytest.mark.parametrize("number", [1, 2, 3, 5, 6, 7, 8])
def test_criterion(number, acceptance_log):
    out = _report(number, acceptance_log)
    assert out.ok, out.line()


@pytest.mark.acceptance
def test_criterion_4_ordering_and_runtime(acceptance_log):
    out = _report(4, acceptance_log)
    assert out.check("below sliver")[1]
    assert out.elapsed < out.limit


@pytest.mark.acceptance
@pytest.mark.xfail(
    strict=True,
    reason="d^4/256 is only the leading term; the exact exponent is d^4/256 (1 - d^2/4 + ...), "
    "about 2.2% low at d = 0.3 (checked at 40 digits)",
)
def test_criterion_4_quartic_within_two_percent(acceptance_log):
    out = _report(4, acceptance_log)
    assert out.check("within 2% of d^4/256")[1]


if __name__ == "__main__":
    for k in sorted(CRITERIA):
        print(evaluate(k).line(), flush=True)

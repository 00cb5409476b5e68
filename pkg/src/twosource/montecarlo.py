"""Sampling of receiver outcomes and photon positions; decision rules and error rates.

Random streams: trials are grouped into fixed-size blocks and block ``b`` of
stream ``k`` draws from ``SeedSequence(seed, spawn_key=(k, b))``, so the
result depends only on (seed, trials, block size), never on how blocks are
distributed over workers or in which order they run.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.stats import binomtest

from .chernoff import bspade_chernoff_exact, sliver_chernoff_exact
from .errors import RejectionCapError, UndefinedLikelihoodError
from .psf import Family, intensity
from .scenario import Hypothesis, MeasurementKind, Outcome, derived_params, outcome_distribution
from .special import jinc, sinc

__all__ = [
    "DecisionRule",
    "SimulationConfig",
    "ErrorEstimate",
    "block_rng",
    "sample_outcome",
    "sample_counts",
    "sample_di_photon",
    "di_log_likelihood_ratio",
    "likelihood_ratio_decide",
    "simplified_decide",
    "analytic_beta",
    "estimate_error",
    "wilson_interval",
    "estimate_di_conditional_error",
    "fit_exponent",
]

BLOCK_SIZE = 4096
REJECTION_CAP = 1_000_000

# streams
_H1, _H2 = 1, 2


class DecisionRule(str, Enum):
    LIKELIHOOD_RATIO = "likelihood_ratio"
    SIMPLIFIED = "simplified"


@dataclass(frozen=True)
class SimulationConfig:
    trials: int
    seed: int = 0
    samples_M: int = 1
    rule: DecisionRule = DecisionRule.SIMPLIFIED
    block_size: int = BLOCK_SIZE
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "rule", DecisionRule(self.rule))
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.samples_M < 1:
            raise ValueError("samples_M must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.block_size < 1 or self.workers < 1:
            raise ValueError("block_size and workers must be positive")


@dataclass(frozen=True)
class ErrorEstimate:
    alpha_hat: float
    beta_hat: float
    pe_hat: float
    ci_alpha: tuple
    ci_beta: tuple
    trials: int
    alpha_errors: int
    beta_errors: int
    analytic_alpha: float | None = None
    analytic_beta: float | None = None
    extra: dict = field(default_factory=dict)


def block_rng(seed, *key):
    """Generator for the stream identified by integer ``key`` (e.g. stream, block)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))))


def wilson_interval(k, n, confidence=0.95):
    ci = binomtest(int(k), int(n)).proportion_ci(confidence_level=confidence, method="wilson")
    return (float(ci.low), float(ci.high))


# --- discrete receivers -----------------------------------------------------------

def sample_outcome(dist, rng, size=None):
    """Categorical draw(s) of Outcome indices from an OutcomeDistribution."""
    p = np.clip(np.asarray(dist.as_tuple(), dtype=float), 0.0, None)
    return rng.choice(4, size=size, p=p / p.sum())


def sample_counts(dist, M, n, rng):
    """Outcome counts of n independent runs of M samples, shape (n, 4)."""
    p = np.clip(np.asarray(dist.as_tuple(), dtype=float), 0.0, None)
    return rng.multinomial(M, p / p.sum(), size=n)


def _log_lr_counts(counts, dist1, dist2):
    """Summed log Lambda2/Lambda1 per row; +-inf where an outcome is impossible under one side."""
    l1 = np.asarray(dist1.as_tuple(), dtype=float)
    l2 = np.asarray(dist2.as_tuple(), dtype=float)
    counts = np.atleast_2d(counts)
    seen = counts > 0
    if np.any(seen[:, (l1 == 0) & (l2 == 0)]):
        raise UndefinedLikelihoodError("an observed outcome has zero probability under both hypotheses")
    force_h2 = np.any(seen[:, (l1 == 0) & (l2 > 0)], axis=1)
    force_h1 = np.any(seen[:, (l2 == 0) & (l1 > 0)], axis=1)
    if np.any(force_h1 & force_h2):
        raise UndefinedLikelihoodError("observations are impossible under both hypotheses")
    both = (l1 > 0) & (l2 > 0)
    llr = counts[:, both] @ (np.log(l2[both]) - np.log(l1[both]))
    return np.where(force_h2, np.inf, np.where(force_h1, -np.inf, llr))


def _lrt_from_llr(llr, p1, p2):
    """True where H2 is chosen; ties go to H1."""
    if p2 == 0.0:
        return np.zeros(np.shape(llr), dtype=bool)
    if p1 == 0.0:
        return np.ones(np.shape(llr), dtype=bool)
    return llr > math.log(p1 / p2)


def likelihood_ratio_decide(outcomes, dist1, dist2, p1=0.5, p2=0.5):
    """Likelihood-ratio test on a sequence of Outcome indices."""
    counts = np.bincount(np.asarray(outcomes, dtype=int), minlength=4)[None, :]
    h2 = _lrt_from_llr(_log_lr_counts(counts, dist1, dist2), p1, p2)[0]
    return Hypothesis.H2 if h2 else Hypothesis.H1


def simplified_decide(outcomes):
    """H2 iff the second port ever fired."""
    o = np.asarray(outcomes, dtype=int)
    fired = np.isin(o, (Outcome.OFF_ON, Outcome.ON_ON))
    return Hypothesis.H2 if np.any(fired) else Hypothesis.H1


def _simplified_counts(counts):
    counts = np.atleast_2d(counts)
    return (counts[:, Outcome.OFF_ON] + counts[:, Outcome.ON_ON]) > 0


def analytic_beta(dp, kind, M):
    """Miss probability of the simplified rule: P2(second port silent)^M."""
    d2 = outcome_distribution(kind, Hypothesis.H2, dp)
    return math.exp(M * math.log(d2.p_off_off + d2.p_on_off))


def _run_block(block, n, dist1, dist2, config, p1, p2):
    out = []
    for stream, dist in ((_H1, dist1), (_H2, dist2)):
        counts = sample_counts(dist, config.samples_M, n, block_rng(config.seed, stream, block))
        if config.rule is DecisionRule.SIMPLIFIED:
            h2 = _simplified_counts(counts)
        else:
            h2 = _lrt_from_llr(_log_lr_counts(counts, dist1, dist2), p1, p2)
        out.append(int(h2.sum()) if stream == _H1 else int((~h2).sum()))
    return out


def _block_sizes(trials, block_size):
    full, rest = divmod(trials, block_size)
    return [block_size] * full + ([rest] if rest else [])


def estimate_error(scenario, kind, config, blocks=None):
    """Empirical false-alarm and miss rates with 95% Wilson intervals.

    ``blocks`` restricts the run to a subset of block indices (partial
    results from disjoint block sets add up exactly); by default all
    blocks run, spread over ``config.workers`` threads.
    """
    kind = MeasurementKind(kind)
    dp = derived_params(scenario)
    dist1 = outcome_distribution(kind, Hypothesis.H1, dp)
    dist2 = outcome_distribution(kind, Hypothesis.H2, dp)
    p1, p2 = scenario.p1, scenario.p2
    sizes = _block_sizes(config.trials, config.block_size)
    ids = range(len(sizes)) if blocks is None else blocks

    def job(b):
        return _run_block(b, sizes[b], dist1, dist2, config, p1, p2)

    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            results = list(pool.map(job, ids))
    else:
        results = [job(b) for b in ids]
    n = sum(sizes[b] for b in ids)
    a_err = sum(r[0] for r in results)
    b_err = sum(r[1] for r in results)

    analytic_alpha = analytic_b = None
    # without a second-port click the likelihood ratio is below 1, so the
    # LRT reduces to the simplified rule whenever p1 >= p2
    if config.rule is DecisionRule.SIMPLIFIED or p1 >= p2:
        analytic_alpha = 0.0
        analytic_b = analytic_beta(dp, kind, config.samples_M)
    xi = (bspade_chernoff_exact if kind is MeasurementKind.BSPADE else sliver_chernoff_exact)(dp).xi
    alpha_hat, beta_hat = a_err / n, b_err / n
    return ErrorEstimate(
        alpha_hat=alpha_hat,
        beta_hat=beta_hat,
        pe_hat=p1 * alpha_hat + p2 * beta_hat,
        ci_alpha=wilson_interval(a_err, n),
        ci_beta=wilson_interval(b_err, n),
        trials=n,
        alpha_errors=a_err,
        beta_errors=b_err,
        analytic_alpha=analytic_alpha,
        analytic_beta=analytic_b,
        extra={"xi": xi, "blocks": len(list(ids))},
    )


def fit_exponent(samples, errors, prefactor_power=0.0):
    """Least-squares decay rate of log(error) + prefactor_power*log(n) against n."""
    n = np.asarray(samples, dtype=float)
    y = np.log(np.asarray(errors, dtype=float)) + prefactor_power * np.log(n)
    slope, _ = np.polyfit(n, y, 1)
    return -float(slope)


# --- direct imaging ---------------------------------------------------------------

def _circ_envelope_constant():
    # sup_r jinc(r)^2 (1 + r^2)^(3/2) / 2 against the envelope
    # 1 / (2 pi (1 + r^2)^(3/2)); the target is jinc^2 / (4 pi)
    r = np.linspace(0.0, 400.0, 400_001)
    return float(np.max(jinc(r) ** 2 * (1.0 + r * r) ** 1.5) / 2.0) * 1.02


_CIRC_C = None


def _rejection(propose, ratio, bound, n, rng, cap):
    """Collect n accepted proposals; ratio(x) = target/envelope must stay below bound."""
    out = []
    got = 0
    tried = 0
    while got < n:
        m = max(2 * (n - got), 64)
        cand = propose(m, rng)
        rho = ratio(cand)
        if np.any(rho > bound):
            raise RejectionCapError(f"envelope bound {bound} violated (ratio {rho.max()})")
        keep = rng.random(m) * bound < rho
        out.append(cand[keep])
        got += int(keep.sum())
        tried += m
        if tried > cap * max(n, 1):
            raise RejectionCapError(f"more than {cap} proposals per accepted draw")
    return np.concatenate(out)[:n]


def _sample_sinc2(n, rng, cap):
    # sinc(u)^2 (1 + u^2) <= 2 since sinc^2 <= min(1, 1/u^2); Cauchy envelope
    return _rejection(
        lambda m, g: g.standard_cauchy(m),
        lambda u: np.square(sinc(u)) * (1.0 + u * u),
        2.0,
        n,
        rng,
        cap,
    )


def _sample_jinc2(n, rng, cap):
    global _CIRC_C
    if _CIRC_C is None:
        _CIRC_C = _circ_envelope_constant()

    def propose(m, g):
        u = g.random(m)
        r = np.sqrt(1.0 / np.square(1.0 - u) - 1.0)
        return r

    r = _rejection(propose, lambda r: jinc(r) ** 2 * (1.0 + r * r) ** 1.5 / 2.0, _CIRC_C, n, rng, cap)
    phi = rng.uniform(0.0, 2.0 * math.pi, n)
    return r * np.cos(phi), r * np.sin(phi)


def sample_di_photon(model, d, rng, size=None, cap=REJECTION_CAP):
    """Photon positions under the two-source hypothesis (d = 0 gives one source).

    Each photon picks a source at +-d/2 with probability 1/2, then a
    position from that source's intensity.  Returns (x, y).
    """
    n = 1 if size is None else int(size)
    sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    if model.family is Family.GAUSSIAN:
        x = rng.normal(0.0, model.sigma, n)
        y = rng.normal(0.0, model.sigma, n)
    elif model.family is Family.RECT:
        x = model.sigma * _sample_sinc2(n, rng, cap)
        y = model.sigma_y * _sample_sinc2(n, rng, cap)
    else:
        x, y = _sample_jinc2(n, rng, cap)
        x, y = model.sigma * x, model.sigma * y
    x = x + sign * 0.5 * d
    if size is None:
        return float(x[0]), float(y[0])
    return x, y


def di_log_likelihood_ratio(model, d, x, y):
    """log Upsilon(x, y; d) - log Upsilon(x, y; 0), +inf where Upsilon(.; 0) = 0."""
    with np.errstate(divide="ignore", invalid="ignore"):
        l0 = np.log(intensity(model, x, y))
        ld = np.log(0.5 * (intensity(model, x - 0.5 * d, y) + intensity(model, x + 0.5 * d, y)))
        return np.where(np.isneginf(l0), np.inf, ld - l0)


def estimate_di_conditional_error(model, d, L, trials, seed=0, p1=0.5, p2=0.5, block_size=BLOCK_SIZE):
    """LRT error rates given L detected photons, by sampling positions.

    Returns (alpha_hat, beta_hat, pe_hat).
    """
    sizes = _block_sizes(trials, block_size)
    errs = [0, 0]
    for b, n in enumerate(sizes):
        for idx, (stream, dd) in enumerate(((_H1, 0.0), (_H2, d))):
            rng = block_rng(seed, stream, L, b)
            x, y = sample_di_photon(model, dd, rng, size=n * L)
            llr = di_log_likelihood_ratio(model, d, x, y).reshape(n, L).sum(axis=1)
            h2 = _lrt_from_llr(llr, p1, p2)
            errs[idx] += int(h2.sum()) if idx == 0 else int((~h2).sum())
    a, b_ = errs[0] / trials, errs[1] / trials
    return a, b_, p1 * a + p2 * b_

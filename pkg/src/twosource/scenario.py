"""Problem instances, the overlap-derived parameters, and per-sample outcome laws."""

import math
from dataclasses import dataclass, field
from enum import Enum

from .errors import DegenerateOverlapError
from .psf import PsfModel, overlap_deficit, overlap_delta

__all__ = [
    "Hypothesis",
    "MeasurementKind",
    "Outcome",
    "DetectionScenario",
    "DerivedParams",
    "OutcomeDistribution",
    "derived_params",
    "params_from_overlaps",
    "outcome_distribution",
    "weak_outcome_distribution",
]


class Hypothesis(Enum):
    H1 = 1  # one source of brightness epsilon
    H2 = 2  # two sources of brightness epsilon/2 at +-d/2


class MeasurementKind(str, Enum):
    BSPADE = "bspade"
    SLIVER = "sliver"
    DIRECT_IMAGING = "direct_imaging"


class Outcome(int, Enum):
    """On/off patterns of the two detectors; index order of OutcomeDistribution."""

    OFF_OFF = 0
    ON_OFF = 1
    OFF_ON = 2
    ON_ON = 3


@dataclass(frozen=True)
class DetectionScenario:
    epsilon: float
    d: float
    psf: PsfModel = field(default_factory=PsfModel.gaussian)
    p1: float = 0.5
    p2: float = 0.5
    samples_M: int = 1

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon!r}")
        if not self.d >= 0.0:
            raise ValueError(f"separation must be nonnegative, got {self.d!r}")
        if not (0.0 <= self.p1 <= 1.0 and 0.0 <= self.p2 <= 1.0):
            raise ValueError("priors must lie in [0, 1]")
        if abs(self.p1 + self.p2 - 1.0) > 1e-12:
            raise ValueError(f"priors must sum to 1, got {self.p1} + {self.p2}")
        if int(self.samples_M) != self.samples_M or self.samples_M < 1:
            raise ValueError(f"samples_M must be a positive integer, got {self.samples_M!r}")


@dataclass(frozen=True)
class DerivedParams:
    epsilon: float
    delta_d: float
    delta_half: float
    eps_plus: float
    eps_minus: float
    mu: float
    lambda_plus: float
    lambda_minus: float
    one_minus_mu2: float  # 1 - mu^2, kept separately for small-d accuracy


def params_from_overlaps(epsilon, delta_d, delta_half, deficit_d=None, deficit_half=None):
    """Build DerivedParams from delta(d) and delta(d/2).

    ``deficit_d`` = 1 - delta(d) and ``deficit_half`` = 1 - delta(d/2) may be
    supplied when known more accurately than the subtraction would give.
    """
    if deficit_d is None:
        deficit_d = 1.0 - delta_d
    if deficit_half is None:
        deficit_half = 1.0 - delta_half
    if delta_d <= -1.0:
        raise DegenerateOverlapError(f"delta(d) = {delta_d} makes mu undefined")
    lam_m = 0.5 * deficit_d
    lam_p = 1.0 - lam_m
    mu = delta_half * math.sqrt(2.0 / (1.0 + delta_d))
    # 1 - mu^2 = (1 + delta - 2 delta_h^2) / (1 + delta), with
    # 1 - delta_h^2 = D_h (2 - D_h)
    one_minus_mu2 = (2.0 * deficit_half * (2.0 - deficit_half) - deficit_d) / (1.0 + delta_d)
    return DerivedParams(
        epsilon=float(epsilon),
        delta_d=float(delta_d),
        delta_half=float(delta_half),
        eps_plus=lam_p * epsilon,
        eps_minus=lam_m * epsilon,
        mu=float(mu),
        lambda_plus=lam_p,
        lambda_minus=lam_m,
        one_minus_mu2=min(max(one_minus_mu2, 0.0), 1.0),
    )


def derived_params(scenario):
    """eps+-, mu and lambda+- for a scenario."""
    psf, d = scenario.psf, scenario.d
    return params_from_overlaps(
        scenario.epsilon,
        float(overlap_delta(psf, d)),
        float(overlap_delta(psf, 0.5 * d)),
        overlap_deficit(psf, d),
        overlap_deficit(psf, 0.5 * d),
    )


@dataclass(frozen=True)
class OutcomeDistribution:
    """Single-sample probabilities; first slot is the PSF-mode / symmetric port."""

    p_off_off: float
    p_on_off: float
    p_off_on: float
    p_on_on: float

    def as_tuple(self):
        return (self.p_off_off, self.p_on_off, self.p_off_on, self.p_on_on)

    def __getitem__(self, outcome):
        return self.as_tuple()[int(outcome)]


def _kind(kind):
    kind = MeasurementKind(kind)
    if kind is MeasurementKind.DIRECT_IMAGING:
        raise ValueError("direct imaging has a continuous outcome space; use the chernoff.di_* functions")
    return kind


def outcome_distribution(kind, hypothesis, dp):
    """Probabilities of the four on/off patterns for one temporal mode."""
    kind = _kind(kind)
    eps = dp.epsilon
    if Hypothesis(hypothesis) is Hypothesis.H1:
        return OutcomeDistribution(1.0 / (1.0 + eps), eps / (1.0 + eps), 0.0, 0.0)

    ep, em, mu2, omm = dp.eps_plus, dp.eps_minus, dp.mu**2, dp.one_minus_mu2
    a = (1.0 + ep) * (1.0 + em)
    if kind is MeasurementKind.SLIVER:
        return OutcomeDistribution(1.0 / a, ep / a, em / a, ep * em / a)

    off_off = 1.0 / a
    on_off = mu2 * ep / (a * (1.0 + ep * omm))
    # P(first port off) - P(all off), as one fraction to avoid cancellation
    off_on = (ep * omm + em * (1.0 + ep)) / ((1.0 + mu2 * ep) * a)
    on_on = 1.0 - off_off - on_off - off_on
    return OutcomeDistribution(off_off, on_off, off_on, max(on_on, 0.0))


def weak_outcome_distribution(kind, hypothesis, dp):
    """Port probabilities for a single detected photon, as (port1, port2)."""
    kind = _kind(kind)
    if Hypothesis(hypothesis) is Hypothesis.H1:
        return (1.0, 0.0)
    if kind is MeasurementKind.BSPADE:
        q = dp.delta_half**2
        return (q, 1.0 - q)
    return (0.5 * (1.0 + dp.delta_d), 0.5 * (1.0 - dp.delta_d))

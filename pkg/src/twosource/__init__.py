"""Error exponents and error rates for one-vs-two point-source discrimination."""

from .psf import Family, PsfModel, overlap_delta, overlap_delta_quadrature, psf_amplitude
from .scenario import (
    DerivedParams,
    DetectionScenario,
    Hypothesis,
    MeasurementKind,
    Outcome,
    OutcomeDistribution,
    derived_params,
    outcome_distribution,
    weak_outcome_distribution,
)

__all__ = [
    "Family",
    "PsfModel",
    "overlap_delta",
    "overlap_delta_quadrature",
    "psf_amplitude",
    "DerivedParams",
    "DetectionScenario",
    "Hypothesis",
    "MeasurementKind",
    "Outcome",
    "OutcomeDistribution",
    "derived_params",
    "outcome_distribution",
    "weak_outcome_distribution",
]

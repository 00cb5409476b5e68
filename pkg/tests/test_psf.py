import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from twosource.psf import (
    Family,
    PsfModel,
    intensity,
    normalization_quadrature,
    overlap_deficit,
    overlap_delta,
    overlap_delta_quadrature,
    psf_amplitude,
)
from twosource.special import bessel_j1

MODELS = [PsfModel.gaussian(), PsfModel.rect(), PsfModel.circ()]


def test_model_validation():
    with pytest.raises(ValueError):
        PsfModel.gaussian(0.0)
    with pytest.raises(ValueError):
        PsfModel.rect(1.0, -2.0)
    with pytest.raises(ValueError):
        PsfModel("airy")
    assert PsfModel.rect(2.0).sigma_y == 2.0
    assert PsfModel("circ").family is Family.CIRC


def test_amplitude_examples():
    assert psf_amplitude(PsfModel.gaussian(), 0.0, 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)
    assert abs(psf_amplitude(PsfModel.rect(), math.pi, 0.0)) < 1e-16
    assert psf_amplitude(PsfModel.circ(), 0.0, 0.0) == pytest.approx(1 / (2 * math.sqrt(math.pi)), rel=1e-15)


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.family.value)
@given(x=st.floats(-20, 20), y=st.floats(-20, 20))
@settings(max_examples=50)
def test_amplitude_even(model, x, y):
    v = psf_amplitude(model, x, y)
    assert psf_amplitude(model, -x, y) == pytest.approx(v, abs=1e-15)
    assert psf_amplitude(model, x, -y) == pytest.approx(v, abs=1e-15)


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.family.value)
def test_normalization(model):
    assert normalization_quadrature(model) == pytest.approx(1.0, abs=1e-8)


def test_anisotropic_rect_normalization():
    assert normalization_quadrature(PsfModel.rect(1.0, 2.5)) == pytest.approx(1.0, abs=1e-8)


def test_overlap_examples():
    g = PsfModel.gaussian()
    assert overlap_delta(g, 0.0) == 1.0
    assert overlap_delta(g, 2.0) == pytest.approx(math.exp(-0.5), rel=1e-15)
    root = brentq(bessel_j1, 3.0, 4.5, xtol=1e-15)
    assert root == pytest.approx(3.8317060, abs=1e-7)
    assert abs(overlap_delta(PsfModel.circ(), root)) < 1e-15


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.family.value)
@given(d=st.floats(-30, 30))
def test_overlap_even_bounded(model, d):
    v = overlap_delta(model, d)
    assert v == overlap_delta(model, -d)
    assert -1.0 <= v <= 1.0


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.family.value)
def test_overlap_at_zero_is_one(model):
    assert overlap_delta(model, 0.0) == 1.0
    assert overlap_delta_quadrature(model, 0.0) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("d", [1.0, 0.37, 4.0])
def test_gaussian_quadrature_oracle(d):
    assert overlap_delta_quadrature(PsfModel.gaussian(), d) == pytest.approx(math.exp(-d * d / 8), abs=1e-12)


def test_rect_quadrature_at_half_pi():
    assert overlap_delta_quadrature(PsfModel.rect(), math.pi / 2) == pytest.approx(2 / math.pi, abs=1e-8)


@pytest.mark.parametrize("d", np.linspace(0.0, 10.0, 21))
def test_rect_quadrature_grid(d):
    m = PsfModel.rect()
    assert abs(overlap_delta_quadrature(m, d) - overlap_delta(m, d)) <= 1e-8


@pytest.mark.parametrize("d", np.linspace(0.0, 10.0, 21))
def test_gaussian_quadrature_grid(d):
    m = PsfModel.gaussian()
    assert abs(overlap_delta_quadrature(m, d) - overlap_delta(m, d)) <= 1e-8


@pytest.mark.slow
@pytest.mark.parametrize("d", [0.5, 2.0, 3.8317, 5.5, 7.0156, 10.0])
def test_circ_quadrature_grid(d):
    m = PsfModel.circ()
    assert abs(overlap_delta_quadrature(m, d) - overlap_delta(m, d)) <= 1e-8


def test_scaled_models_use_their_length():
    assert overlap_delta(PsfModel.gaussian(2.0), 4.0) == pytest.approx(math.exp(-0.5))
    assert overlap_delta_quadrature(PsfModel.rect(2.0, 0.5), 1.0) == pytest.approx(math.sin(0.5) / 0.5, abs=1e-8)


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.family.value)
@pytest.mark.parametrize("d", [1e-8, 1e-4, 0.03, 0.5, 0.999, 1.7, 6.0])
def test_deficit_matches_high_precision(model, d):
    with mpmath.workdps(50):
        ref = float(1 - overlap_delta(model, mpmath.mpf(d)))
    assert overlap_deficit(model, d) == pytest.approx(ref, rel=1e-13)


def test_mpmath_overlap_agrees_with_float():
    for m in MODELS:
        with mpmath.workdps(30):
            v = overlap_delta(m, mpmath.mpf("1.3"))
        assert float(v) == pytest.approx(float(overlap_delta(m, 1.3)), rel=1e-14)


def test_intensity_is_square():
    m = PsfModel.circ(1.5)
    x, y = np.meshgrid(np.linspace(-3, 3, 7), np.linspace(-2, 2, 5))
    np.testing.assert_allclose(intensity(m, x, y), psf_amplitude(m, x, y) ** 2)

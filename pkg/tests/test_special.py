import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from twosource.special import bessel_j1, jinc, sinc


def j1_series(x, terms=200):
    # power series J1(x) = sum (-1)^k (x/2)^(2k+1) / (k! (k+1)!), summed in mpmath
    x = mpmath.mpf(x)
    with mpmath.workdps(60):
        total = mpmath.mpf(0)
        for k in range(terms):
            term = (-1) ** k * (x / 2) ** (2 * k + 1) / (mpmath.factorial(k) * mpmath.factorial(k + 1))
            total += term
            if k > 5 and abs(term) < mpmath.mpf(10) ** -40:
                break
        return float(total)


@pytest.mark.parametrize("x", [0.0, 0.5, 1.0, 2.5, 3.8317, 4.99, 5.0, 5.01, 7.3, 12.0, 25.0, 49.9])
def test_j1_matches_power_series(x):
    assert bessel_j1(x) == pytest.approx(j1_series(x), rel=1e-10, abs=1e-15)


def test_j1_reference_value():
    assert bessel_j1(1.0) == pytest.approx(0.4400505857, abs=1e-10)


def test_j1_first_root():
    assert abs(bessel_j1(3.8317060)) < 1e-7


def test_j1_dense_grid_against_mpmath():
    x = np.linspace(-50, 50, 2001)
    ref = np.array([float(mpmath.besselj(1, v)) for v in x])
    assert np.max(np.abs(bessel_j1(x) - ref)) < 1e-14


@given(st.floats(min_value=-50, max_value=50, allow_nan=False))
def test_j1_is_odd(x):
    assert bessel_j1(-x) == -bessel_j1(x)


def test_removable_singularities():
    assert sinc(0.0) == 1.0
    assert jinc(0.0) == 1.0
    np.testing.assert_array_equal(sinc(np.zeros(3)), 1.0)


@pytest.mark.parametrize("x", [1e-9, 3e-5, 9.9e-5, 1e-4, 1.1e-4, 1e-2])
def test_small_argument_branch(x):
    with mpmath.workdps(40):
        s_ref = float(mpmath.sin(x) / x)
        j_ref = float(2 * mpmath.besselj(1, x) / x)
    assert sinc(x) == pytest.approx(s_ref, rel=1e-15)
    assert jinc(x) == pytest.approx(j_ref, rel=1e-15)


def test_scalar_in_scalar_out():
    assert isinstance(sinc(0.3), float)
    assert isinstance(jinc(0.3), float)
    assert isinstance(bessel_j1(0.3), float)
    assert sinc(np.array([0.3])).shape == (1,)

"""Amplitude point-spread functions and their displacement overlap.

Three families are supported, all real and even in x and y:

* ``gaussian``: exp(-(x^2 + y^2) / 4 sigma^2) / (sqrt(2 pi) sigma)
* ``rect``: sinc(x / sigma_x) sinc(y / sigma_y) / (pi sqrt(sigma_x sigma_y))
* ``circ``: jinc(r / sigma_c) / (2 sqrt(pi) sigma_c)

``overlap_delta`` gives the closed-form overlap; ``overlap_delta_quadrature``
evaluates the defining integral numerically and is used to check it.
"""

import math
from dataclasses import dataclass
from enum import Enum

import mpmath
import numpy as np

from . import quadrature
from .special import jinc, sinc

__all__ = [
    "Family",
    "PsfModel",
    "psf_amplitude",
    "intensity",
    "overlap_delta",
    "overlap_deficit",
    "overlap_delta_quadrature",
    "normalization_quadrature",
]


class Family(str, Enum):
    GAUSSIAN = "gaussian"
    RECT = "rect"
    CIRC = "circ"


@dataclass(frozen=True)
class PsfModel:
    """PSF family plus its characteristic length(s).

    ``sigma`` is sigma for gaussian, sigma_x for rect and sigma_c for circ;
    ``sigma_y`` is only used by rect and defaults to ``sigma``.
    """

    family: Family
    sigma: float = 1.0
    sigma_y: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive, got {self.sigma!r}")
        if self.sigma_y is None:
            object.__setattr__(self, "sigma_y", float(self.sigma))
        elif not (self.sigma_y > 0 and math.isfinite(self.sigma_y)):
            raise ValueError(f"sigma_y must be positive, got {self.sigma_y!r}")

    @classmethod
    def gaussian(cls, sigma=1.0):
        return cls(Family.GAUSSIAN, sigma)

    @classmethod
    def rect(cls, sigma_x=1.0, sigma_y=None):
        return cls(Family.RECT, sigma_x, sigma_y)

    @classmethod
    def circ(cls, sigma_c=1.0):
        return cls(Family.CIRC, sigma_c)

    @property
    def separable(self):
        return self.family is not Family.CIRC

    def amplitude_x(self, x):
        """x factor of a separable PSF, normalized to unit L2 norm."""
        s = self.sigma
        if self.family is Family.GAUSSIAN:
            return np.exp(-np.square(x) / (4 * s * s)) / (2 * math.pi * s * s) ** 0.25
        if self.family is Family.RECT:
            return sinc(np.asarray(x) / s) / math.sqrt(math.pi * s)
        raise TypeError("circ PSF is not separable")

    def amplitude_y(self, y):
        s = self.sigma if self.family is Family.GAUSSIAN else self.sigma_y
        if self.family is Family.GAUSSIAN:
            return np.exp(-np.square(y) / (4 * s * s)) / (2 * math.pi * s * s) ** 0.25
        if self.family is Family.RECT:
            return sinc(np.asarray(y) / s) / math.sqrt(math.pi * s)
        raise TypeError("circ PSF is not separable")


def psf_amplitude(model, x, y):
    """psi(x, y) for the model; broadcasts over array inputs."""
    if model.family is Family.CIRC:
        r = np.hypot(x, y)
        return jinc(r / model.sigma) / (2 * math.sqrt(math.pi) * model.sigma)
    return model.amplitude_x(x) * model.amplitude_y(y)


def intensity(model, x, y):
    """|psi(x, y)|^2, the single-photon position density."""
    return np.square(psf_amplitude(model, x, y))


def overlap_delta(model, d):
    """Closed-form overlap delta(d) for a displacement d along x.

    An ``mpmath.mpf`` separation is evaluated in mpmath at the current
    working precision.
    """
    if isinstance(d, mpmath.mpf):
        return _overlap_delta_mp(model, d)
    if model.family is Family.GAUSSIAN:
        return np.exp(-np.square(d) / (8 * model.sigma**2))
    if model.family is Family.RECT:
        return sinc(np.asarray(d) / model.sigma)
    return jinc(np.asarray(d) / model.sigma)


def overlap_deficit(model, d):
    """1 - delta(d) without cancellation at small d."""
    if isinstance(d, mpmath.mpf):
        return 1 - _overlap_delta_mp(model, d)
    d = float(d)
    if model.family is Family.GAUSSIAN:
        return -math.expm1(-d * d / (8 * model.sigma**2))
    a = d / model.sigma
    if abs(a) >= 1.0:
        return 1.0 - float(overlap_delta(model, d))
    z = a * a
    total, term = 0.0, 1.0
    for k in range(1, 13):
        if model.family is Family.RECT:
            # 1 - sinc(a) = sum_{k>=1} (-1)^(k+1) a^(2k) / (2k+1)!
            term *= z / ((2 * k) * (2 * k + 1))
        else:
            # 1 - jinc(a) = sum_{k>=1} (-1)^(k+1) (a/2)^(2k) / (k! (k+1)!)
            term *= z / (4 * k * (k + 1))
        total += term if k % 2 else -term
    return total


def _overlap_delta_mp(model, d):
    a = d / model.sigma
    if model.family is Family.GAUSSIAN:
        return mpmath.exp(-a * a / 8)
    if a == 0:
        return mpmath.mpf(1)
    if model.family is Family.RECT:
        return mpmath.sin(a) / a
    return 2 * mpmath.besselj(1, a) / a


# --- numerical overlap -------------------------------------------------------

GAUSS_HALF_WIDTH = 8.0  # in sigma; excluded intensity mass ~1e-15
HEAVY_TAIL_RADIUS = 2000.0  # in sigma, for sinc^2 / jinc^2 tails


def overlap_delta_quadrature(model, d, *, tol=1e-11, radius=HEAVY_TAIL_RADIUS, n_theta=None):
    """Numerically evaluate the overlap integral of psi with its x-shifted copy.

    Gaussian and rect PSFs factor into x and y parts, so only 1-D integrals
    are needed.  The sinc and jinc tails fall off like 1/r^2, so the
    truncated integral is corrected with the analytic non-oscillatory tail
    and the truncation radius is averaged over one oscillation period (a
    linear taper), which leaves an O(radius^-3) residual.
    """
    d = float(d)
    if model.family is Family.GAUSSIAN:
        s = model.sigma
        lo = min(0.0, d) - GAUSS_HALF_WIDTH * s
        hi = max(0.0, d) + GAUSS_HALF_WIDTH * s
        ix = quadrature.integrate(
            lambda x: model.amplitude_x(x) * model.amplitude_x(x - d),
            np.linspace(lo, hi, 9), atol=tol, rtol=tol,
        ).value
        iy = quadrature.integrate(
            lambda y: model.amplitude_y(y) ** 2,
            np.linspace(-GAUSS_HALF_WIDTH * s, GAUSS_HALF_WIDTH * s, 9), atol=tol, rtol=tol,
        ).value
        return ix * iy
    if model.family is Family.RECT:
        ix = _sinc_overlap(d / model.sigma, radius, tol)
        iy = _sinc_overlap(0.0, radius, tol)
        return ix * iy
    return _jinc_overlap(d / model.sigma, radius, tol, n_theta)


def normalization_quadrature(model, *, tol=1e-11):
    """Numerical integral of |psi|^2 over the plane."""
    return overlap_delta_quadrature(model, 0.0, tol=tol)


def _taper(r, r0):
    return np.clip((r0 + math.pi - r) / math.pi, 0.0, 1.0)


def _sinc_overlap(a, r0, tol):
    """(1/pi) * integral of sinc(u) sinc(u - a) du over the real line."""
    a = abs(a)
    r0 = max(r0, 4 * a + 10.0)
    r1 = r0 + math.pi

    def f(u):
        return sinc(u) * sinc(u - a) * _taper(np.abs(u - 0.5 * a), r0)

    # center the window on a/2 so both tails are symmetric
    c = 0.5 * a
    edges = c + np.arange(-r1, r1 + 1e-9, 0.5 * math.pi)
    edges[0], edges[-1] = c - r1, c + r1
    inner = quadrature.integrate(f, edges, atol=tol, rtol=tol).value

    # sin(u) sin(u - a) = (cos a - cos(2u - a)) / 2 exactly; the cos a part
    # integrates in closed form beyond |u - c| = R
    def tail(R):
        lo, hi = R + c, R - c  # right tail starts at c+R, left at c-R
        # int_{c+R}^inf du/(u(u-a)) + int_{-inf}^{c-R} du/(u(u-a))
        if a == 0.0:
            return math.cos(a) * 0.5 * 2.0 / R
        right = math.log1p(a / (lo - a)) / a
        left = math.log1p(a / hi) / a
        return 0.5 * math.cos(a) * (right + left)

    tail_avg = quadrature.integrate(
        np.vectorize(tail), [r0, r1], atol=tol * 1e-2, rtol=tol
    ).value / math.pi
    return (inner + tail_avg) / math.pi


def _jinc_overlap(a, r0, tol, n_theta):
    """Overlap of unit-sigma circ PSFs displaced by a, in polar coordinates.

    The angular integral is a periodic trapezoid rule (spectrally accurate);
    the radial one is adaptive Gauss-Kronrod with the linear taper.
    """
    a = abs(a)
    r0 = max(r0, 4 * a + 10.0)
    r1 = r0 + math.pi
    if n_theta is None:
        n_theta = 64 + 8 * int(math.ceil(a))
    # even integrand in theta: trapezoid over [0, pi] with halved endpoints
    theta = np.linspace(0.0, math.pi, n_theta + 1)
    wt = np.full(n_theta + 1, math.pi / n_theta)
    wt[[0, -1]] *= 0.5
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    h = 0.5 * a
    norm = 1.0 / (4 * math.pi)

    def f(r):
        x = r[:, None] * cos_t[None, :]
        y = r[:, None] * sin_t[None, :]
        v = jinc(np.hypot(x - h, y)) * jinc(np.hypot(x + h, y))
        return 2.0 * norm * r * (v @ wt) * _taper(r, r0)

    edges = np.concatenate([np.arange(0.0, r1, 0.5 * math.pi), [r1]])
    inner = quadrature.integrate(f, edges, atol=tol, rtol=tol).value

    # non-oscillatory tail: (1/pi^2) r^-3 cos(a cos theta) integrated over
    # r dr dtheta beyond R gives (1/pi^2) C(a) / R, C(a) = int cos(a cos t) dt
    c_a = 2.0 * float(np.cos(a * cos_t) @ wt)
    tail_avg = c_a / math.pi**2 * math.log(r1 / r0) / math.pi
    return inner + tail_avg

"""Chernoff exponents for one-vs-two source discrimination.

Exponents are in nats per sample (temporal mode); the ``conditional_*`` and
``di_conditional_*`` functions are per detected photon.
"""

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import optimize

from . import quadrature
from .psf import Family, intensity, overlap_deficit, overlap_delta
from .special import bessel_j1, jinc, sinc

__all__ = [
    "ExponentResult",
    "minimize_scalar",
    "qs_thermal",
    "qs_bspade",
    "quantum_chernoff_exact",
    "bspade_chernoff_exact",
    "sliver_chernoff_exact",
    "conditional_bspade",
    "conditional_sliver",
    "conditional_to_unconditional",
    "generic_chernoff",
    "di_conditional_exact",
    "di_conditional_smalld",
    "kappa_integral",
    "kappa_truncated",
    "upsilon_d2",
]



@dataclass(frozen=True)
class ExponentResult:
    xi: float
    s_star: float
    q_min: float


def minimize_scalar(f, lo, hi, tol=1e-8, max_iter=200):
    """Bounded Brent search on [lo, hi] with the endpoints always compared.

    Returns (argmin, min).  Boundary minima are returned exactly at the
    boundary, since ``f(lo)`` and ``f(hi)`` are evaluated as well.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    if tol <= 0:
        raise ValueError("tol must be positive")
    res = optimize.minimize_scalar(
        f, bounds=(lo, hi), method="bounded", options={"xatol": tol, "maxiter": max_iter}
    )
    cands = [(float(res.fun), float(res.x)), (f(lo), lo), (f(hi), hi)]
    f_min, x_min = min(cands, key=lambda t: t[0])
    return x_min, f_min


# --- exact thermal-state exponents ------------------------------------------

def _coefficients(dp):
    ep, em, eps = dp.eps_plus, dp.eps_minus, dp.epsilon
    a = (1.0 + ep) * (1.0 + em)
    b = ep * dp.mu**2 / (1.0 + ep)
    p = (1.0 + eps) / a
    q = eps * (1.0 + ep) / (ep * (1.0 + eps))
    return a, b, p, q


def qs_thermal(s, dp):
    """tr(rho1^s rho2^(1-s)) for the thermal one- and two-source states."""
    a, b, p, q = _coefficients(dp)
    return 1.0 / (a * p**s * (1.0 - b * q**s))


def qs_bspade(s, dp):
    """Classical Chernoff sum of the B-SPADE outcome laws."""
    a, _, p, _ = _coefficients(dp)
    ep = dp.eps_plus
    b_t = dp.mu**2 * ep / (1.0 + ep * dp.one_minus_mu2)
    # b~ q~^s written as b~^(1-s) eps^s so that mu = 0 stays finite
    return (1.0 + b_t ** (1.0 - s) * dp.epsilon**s) / (a * p**s)


def quantum_chernoff_exact(dp):
    """Quantum Chernoff exponent; the minimum over s sits at s = 0."""
    xi = math.log1p(dp.eps_minus) + math.log1p(dp.eps_plus * dp.one_minus_mu2)
    return ExponentResult(xi, 0.0, math.exp(-xi))


def bspade_chernoff_exact(dp):
    """B-SPADE exponent by minimizing its Chernoff sum over s."""
    if dp.eps_minus == 0.0 and dp.one_minus_mu2 == 0.0:
        return ExponentResult(0.0, 0.0, 1.0)
    a, _, p, _ = _coefficients(dp)
    ep = dp.eps_plus
    b_t = dp.mu**2 * ep / (1.0 + ep * dp.one_minus_mu2)
    log_a = math.log1p(ep) + math.log1p(dp.eps_minus)
    log_p = math.log1p(dp.epsilon) - log_a

    def log_q(s):
        return math.log1p(b_t ** (1.0 - s) * dp.epsilon**s) - log_a - s * log_p

    s_star, lq = minimize_scalar(log_q, 0.0, 1.0)
    return ExponentResult(-lq, s_star, math.exp(lq))


def sliver_chernoff_exact(dp):
    xi = math.log1p(dp.eps_minus)
    return ExponentResult(xi, 0.0, math.exp(-xi))


# --- weak-source (conditional) exponents ---------------------------------------

def conditional_bspade(model, d):
    """-2 log |delta(d/2)|, per detected photon; +inf when delta(d/2) = 0.

    B-SPADE sends a photon to the PSF port with probability delta(d/2)^2, so
    a negative overlap (rect/circ beyond the first zero) enters through its
    magnitude.
    """
    if isinstance(d, mpmath.mpf):
        return -2 * mpmath.log(abs(overlap_delta(model, d / 2)))
    half = 0.5 * float(d)
    dh = float(overlap_delta(model, half))
    if dh == 0.0:
        return math.inf
    if dh > 0.0:
        return -2.0 * math.log1p(-overlap_deficit(model, half))
    return -2.0 * math.log(-dh)


def conditional_sliver(model, d):
    """-log((1 + delta(d)) / 2), per detected photon."""
    if isinstance(d, mpmath.mpf):
        return -mpmath.log((1 + overlap_delta(model, d)) / 2)
    return -math.log1p(-0.5 * overlap_deficit(model, float(d)))


def conditional_to_unconditional(epsilon, xi_c):
    """Per-sample exponent from a per-photon one: -log(1 - eps + eps e^-xi_c)."""
    if math.isinf(xi_c):
        return -math.log1p(-epsilon)
    return -math.log1p(epsilon * math.expm1(-xi_c))


def generic_chernoff(dist1, dist2, weights=None, tol=1e-8):
    """Chernoff exponent of two outcome laws on a common support.

    ``dist1`` and ``dist2`` hold probabilities (or density values, with
    ``weights`` the quadrature weights of the points).  Points where either
    law vanishes contribute nothing for any s, including the endpoints.
    """
    p1 = np.asarray(dist1, dtype=float)
    p2 = np.asarray(dist2, dtype=float)
    w = np.ones_like(p1) if weights is None else np.asarray(weights, dtype=float)
    both = (p1 > 0) & (p2 > 0) & (w > 0)
    if not np.any(both):
        return ExponentResult(math.inf, 0.0, 0.0)
    l1, l2, lw = np.log(p1[both]), np.log(p2[both]), np.log(w[both])

    def log_q(s):
        v = s * l1 + (1.0 - s) * l2 + lw
        m = v.max()
        return m + math.log(np.exp(v - m).sum())

    s_star, lq = minimize_scalar(log_q, 0.0, 1.0, tol=tol)
    return ExponentResult(max(-lq, 0.0), s_star, math.exp(lq))


# --- direct imaging ----------------------------------------------------------

DI_GAUSS_HALF_WIDTH = 12.0  # sigma
DI_RECT_RADIUS = 2000.0  # sigma_x
DI_CIRC_RADIUS = 200
_LOG_TINY = math.log(1e-300)


def _chernoff_gap(s, log_u0, log_ud):
    """s*Ud + (1-s)*U0 - U0^(1-s) Ud^s, computed without cancellation.

    ``s`` must broadcast against the log-densities.  Where U0 underflows
    (below 1e-300) only s*Ud is kept, i.e. the Chernoff sum is restricted
    to the support of U0.
    """
    u0 = np.exp(log_u0)
    ud = np.exp(log_ud)
    with np.errstate(invalid="ignore", over="ignore"):
        t = log_ud - log_u0
        direct = s * (ud - u0) - (np.exp((1.0 - s) * log_u0 + s * log_ud) - u0)
        near = s * np.expm1(t) - np.expm1(s * t)
        # h(s, t) = sum_{n>=2} (s - s^n) t^n / n!
        term = 0.5 * t * t
        series = (s - s * s) * term
        for n in range(3, 10):
            term = term * t / n
            series = series + (s - s**n) * term
    out = np.where(np.abs(t) < 1e-3, u0 * series, np.where(np.abs(t) <= 1.0, u0 * near, direct))
    return np.where(log_u0 < _LOG_TINY, s * ud, out)


def _log_intensity_1d(model, u):
    """log of the unit-normalized x intensity at u (in units of sigma)."""
    if model.family is Family.GAUSSIAN:
        return -0.5 * u * u - 0.5 * math.log(2 * math.pi)
    with np.errstate(divide="ignore"):
        return 2.0 * np.log(np.abs(sinc(u))) - math.log(math.pi)


def _log_mixture(la, lb):
    return np.logaddexp(la, lb) - math.log(2.0)


def _log_sin2(u):
    with np.errstate(divide="ignore"):
        return 2.0 * np.log(np.abs(np.sin(u)))


_DESIGN_S = np.array([0.25, 0.5, 0.75])


class _DiRule:
    """Fixed quadrature rule for 1 - Q_s, with log-densities cached on its nodes.

    Each piece is a 1-D integral over x whose integrand at node x is
    wr(x) * sum_j wa_j * gap(s, l0[x, j], ld[x, j]).  The mesh is refined
    adaptively once for a batch of s values and then reused for every s.
    """

    def __init__(self):
        self.w, self.l0, self.ld = [], [], []

    def add(self, logs, wr, wa, edges, tol):
        wa = np.asarray(wa, dtype=float)

        def f(x):
            l0, ld = logs(x)
            l0 = np.broadcast_to(l0, ld.shape)
            vals = np.stack([_chernoff_gap(s, l0, ld) @ wa for s in _DESIGN_S])
            return vals * wr(x)

        _, (a, b) = quadrature.integrate(f, edges, atol=tol * 1e-3, rtol=tol, return_panels=True)
        x, w = quadrature.panel_nodes(a, b)
        l0, ld = logs(x)
        l0 = np.broadcast_to(l0, ld.shape)
        self.w.append(((w * wr(x))[:, None] * wa[None, :]).ravel())
        self.l0.append(np.ascontiguousarray(l0).ravel())
        self.ld.append(np.ascontiguousarray(ld).ravel())
        return self

    def finish(self):
        self.w = np.concatenate(self.w)
        self.l0 = np.concatenate(self.l0)
        self.ld = np.concatenate(self.ld)
        return self

    def gap(self, s):
        return float(self.w @ _chernoff_gap(float(s), self.l0, self.ld))


def _di_rule(model, d, tol):
    h = 0.5 * d / model.sigma
    rule = _DiRule()
    if model.family is Family.GAUSSIAN:
        # separable: the common y factor integrates out
        def logs(u):
            l0 = _log_intensity_1d(model, u)
            ld = _log_mixture(_log_intensity_1d(model, u - h), _log_intensity_1d(model, u + h))
            return l0[:, None], ld[:, None]

        half = DI_GAUSS_HALF_WIDTH + h
        return rule.add(logs, np.ones_like, [1.0], np.linspace(-half, half, 33), tol).finish()

    if model.family is Family.RECT:
        # sinc^2 has cusps at its zeros and 1/u^2 tails.  The integrand is
        # even, so integrate u >= 0 twice; the taper averages the cutoff over
        # one period and the far tail G(u)/u^2 (G pi-periodic) is added back
        # through its period mean.
        r0 = DI_RECT_RADIUS
        r1 = r0 + math.pi

        def logs(u):
            l0 = _log_intensity_1d(model, u)
            ld = _log_mixture(_log_intensity_1d(model, u - h), _log_intensity_1d(model, u + h))
            return l0[:, None], ld[:, None]

        def logs_far(chi):
            l0 = _log_sin2(chi) - math.log(math.pi)
            ld = _log_mixture(_log_sin2(chi - h), _log_sin2(chi + h)) - math.log(math.pi)
            return l0[:, None], ld[:, None]

        edges = np.concatenate([np.arange(0.0, r1, math.pi), [r1]])
        rule.add(logs, lambda u: np.clip((r1 - u) / math.pi, 0.0, 1.0), [2.0], edges, tol)
        far = 2.0 * math.log(r1 / r0) / math.pi**2
        rule.add(logs_far, lambda chi: np.full_like(chi, far), [1.0], [0.0, 0.5 * math.pi, math.pi], tol)
        return rule.finish()

    # circ: polar coordinates about the origin; the H1 density is radial so
    # its zero rings are radial breakpoints and the angular integrand stays
    # smooth (periodic trapezoid over [0, pi], doubled by symmetry)
    n_theta = 48 + 16 * int(math.ceil(h))
    theta = np.linspace(0.0, math.pi, n_theta + 1)
    wt = np.full(n_theta + 1, math.pi / n_theta)
    wt[[0, -1]] *= 0.5
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    log_norm = -math.log(4 * math.pi)
    r0 = DI_CIRC_RADIUS
    r1 = r0 + math.pi

    def log_jinc2(rho):
        with np.errstate(divide="ignore"):
            return 2.0 * np.log(np.abs(jinc(rho)))

    def logs(r):
        x = r[:, None] * cos_t
        y = r[:, None] * sin_t
        l0 = (log_jinc2(r) + log_norm)[:, None]
        ld = _log_mixture(log_jinc2(np.hypot(x - h, y)), log_jinc2(np.hypot(x + h, y))) + log_norm
        return l0, ld

    # far field: r^3 * density -> (2/pi^2) cos^2(chi -+ h cos(theta)), chi the
    # radial phase, so the radial integrand tends to G/r^2
    c = math.log(2.0 / math.pi**2)

    def logs_far(chi):
        l0 = _log_sin2(chi)[:, None] + c
        ld = _log_mixture(_log_sin2(chi[:, None] - h * cos_t), _log_sin2(chi[:, None] + h * cos_t)) + c
        return l0, ld

    edges = np.unique(np.concatenate([[0.0], _j1_zeros_upto(r1), [r1]]))
    rule.add(logs, lambda r: 2.0 * r * np.clip((r1 - r) / math.pi, 0.0, 1.0), wt, edges, tol)
    far = 2.0 * math.log(r1 / r0) / math.pi**2
    rule.add(logs_far, lambda chi: np.full_like(chi, far), wt, np.linspace(0.0, math.pi, 9), tol)
    return rule.finish()


def _j1_zeros_upto(r_max):
    zeros = []
    k = 1
    while True:
        # McMahon estimate brackets the k-th zero within +-0.5
        guess = (k + 0.25) * math.pi - 3.0 / (8.0 * (k + 0.25) * math.pi)
        if guess - 0.5 > r_max:
            break
        z = optimize.brentq(bessel_j1, guess - 0.5, guess + 0.5, xtol=1e-14)
        if z < r_max:
            zeros.append(z)
        k += 1
    return np.array(zeros)


def di_chernoff_gap(model, d, s, tol=1e-10):
    """1 - Q_s for direct imaging; ``s`` may be a scalar or a sequence."""
    rule = _di_rule(model, float(d), tol)
    if np.ndim(s) == 0:
        return rule.gap(s)
    return np.array([rule.gap(v) for v in s])


def di_conditional_exact(model, d, s_tol=1e-8, tol=1e-10):
    """Direct-imaging exponent per detected photon, by quadrature.

    Maximizes 1 - Q_s over s with bounded Brent search (endpoints
    included); the minimizing s is reported, not assumed.
    """
    d = abs(float(d))
    if d == 0.0:
        return ExponentResult(0.0, 0.5, 1.0)
    rule = _di_rule(model, d, tol)
    s_star, neg_gap = minimize_scalar(lambda s: -rule.gap(s), 0.0, 1.0, tol=s_tol)
    gap = -neg_gap
    return ExponentResult(-math.log1p(-gap), s_star, 1.0 - gap)


def upsilon_d2(model, x, y, h=None, order=4):
    """Second d-derivative at d = 0 of the two-source DI density.

    Gaussian uses the analytic value (one quarter of the second x-derivative
    of the intensity); otherwise central differences in d with step h.
    ``order`` 2 or 4 selects the difference stencil.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if h is None and model.family is Family.GAUSSIAN:
        s2 = model.sigma**2
        return 0.25 * intensity(model, x, y) * (x * x / s2 - 1.0) / s2
    if h is None:
        h = 1e-3 * model.sigma

    def ups(dd):
        return 0.5 * (intensity(model, x - 0.5 * dd, y) + intensity(model, x + 0.5 * dd, y))

    u0 = ups(0.0)
    if order == 2:
        return 2.0 * (ups(h) - u0) / h**2
    if order == 4:
        # Upsilon is even in d, so f(-h) = f(h)
        return (-2.0 * ups(2 * h) + 32.0 * ups(h) - 30.0 * u0) / (12.0 * h**2)
    raise ValueError("order must be 2 or 4")


def kappa_integral(model, tol=1e-12):
    """Integral of (d^2 Upsilon/dd^2 at 0)^2 / Upsilon(., 0) over the plane.

    Finite only for the gaussian PSF (1 / (8 sigma^4)).  The sinc^2 and
    jinc^2 intensities vanish quadratically on lines/rings where the
    second derivative does not, so the integrand grows like 1/dist^2 there
    and the integral diverges; +inf is returned (see ``kappa_truncated``).
    """
    if model.family is not Family.GAUSSIAN:
        return math.inf
    s = model.sigma
    half = DI_GAUSS_HALF_WIDTH * s

    # separable: the y factor of Upsilon'' is the y marginal, which integrates to 1
    def f(x):
        ups0 = model.amplitude_x(x) ** 2
        d2 = 0.25 * ups0 * (x * x / s**2 - 1.0) / s**2
        return d2 * d2 / ups0

    return quadrature.integrate(f, np.linspace(-half, half, 17), atol=tol, rtol=tol).value


def kappa_truncated(model, floor, radius=60.0, h=None):
    """Kappa integral restricted to {Upsilon(., 0) > floor * max Upsilon}.

    Uses finite differences for Upsilon''.  For rect/circ the result grows
    like floor^(-1/2) as the floor goes to zero.
    """
    s = model.sigma
    if model.family is Family.CIRC:
        n_theta = 64
        theta = np.linspace(0.0, 2 * math.pi, n_theta, endpoint=False)
        peak = 1.0 / (4 * math.pi * s * s)

        def f(r):
            x = r[:, None] * np.cos(theta)
            y = r[:, None] * np.sin(theta)
            u0 = intensity(model, x, y)
            d2 = upsilon_d2(model, x, y, h=h if h is not None else 1e-3 * s)
            v = np.where(u0 > floor * peak, d2 * d2 / np.where(u0 > 0, u0, 1.0), 0.0)
            return r * v.sum(axis=1) * (2 * math.pi / n_theta)

        zeros = _j1_zeros_upto(radius / s) * s
        edges = np.unique(np.concatenate([[0.0], zeros, [radius * s]]))
        return quadrature.integrate(f, _refine_near(edges, s, floor), atol=1e-10, rtol=1e-6, max_panels=2_000_000).value

    peak = 1.0 / (math.pi * s)
    step = h if h is not None else 1e-3 * s

    def fx(x):
        u0 = model.amplitude_x(x) ** 2
        d2 = _upsilon_d2_1d(model, x, step)
        return np.where(u0 > floor * peak, d2 * d2 / np.where(u0 > 0, u0, 1.0), 0.0)

    zeros = np.arange(math.pi, radius, math.pi) * s
    edges = np.unique(np.concatenate([-zeros, [-radius * s, 0.0, radius * s], zeros]))
    return quadrature.integrate(fx, _refine_near(edges, s, floor), atol=1e-10, rtol=1e-6, max_panels=2_000_000).value


def _refine_near(edges, scale, floor):
    # resolve the cut-out |u - u_k| ~ sqrt(floor) around each zero
    w = math.sqrt(floor) * scale * 4.0
    extra = np.concatenate([edges - w, edges + w])
    pts = np.unique(np.concatenate([edges, extra]))
    return pts[(pts >= edges[0]) & (pts <= edges[-1])]


def _upsilon_d2_1d(model, x, h):
    def ups(dd):
        return 0.5 * (model.amplitude_x(x - 0.5 * dd) ** 2 + model.amplitude_x(x + 0.5 * dd) ** 2)

    return (-2.0 * ups(2 * h) + 32.0 * ups(h) - 30.0 * ups(0.0)) / (12.0 * h**2)


def di_conditional_smalld(model, d):
    """Small-separation DI exponent d^4 K / 32 (per detected photon)."""
    d = float(d)
    if d == 0.0:
        return 0.0
    k = kappa_integral(model)
    return d**4 * k / 32.0

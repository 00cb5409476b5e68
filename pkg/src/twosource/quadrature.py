"""Vectorized adaptive Gauss-Kronrod (10/21 point) quadrature.

The integrand is evaluated on all active panels in one call, so ``f`` must
accept a 1-D array of abscissae.  It may return an array whose last axis
matches the abscissae; leading axes are treated as a batch of integrands
sharing one panel mesh (the mesh is refined until every member converges).
"""

import numpy as np

from .errors import QuadratureError

__all__ = ["gk21", "integrate", "panel_nodes", "QuadResult"]

_XGK = np.array([
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208250161778,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG = np.array([
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

# full 21-point rule on [-1, 1]
NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(21)
GAUSS_WEIGHTS[1:10:2] = _WG
GAUSS_WEIGHTS[19:10:-2] = _WG


class QuadResult(tuple):
    """(value, abserr, n_panels); unpacks like a tuple."""

    __slots__ = ()

    def __new__(cls, value, abserr, n_panels):
        return super().__new__(cls, (value, abserr, n_panels))

    value = property(lambda self: self[0])
    abserr = property(lambda self: self[1])
    n_panels = property(lambda self: self[2])


def gk21(f, a, b):
    """Apply the 21-point rule to panels [a_i, b_i].

    Returns (kronrod, gauss) estimates with shape batch + (n_panels,).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = (mid[:, None] + half[:, None] * NODES[None, :]).ravel()
    y = np.asarray(f(x), dtype=float)
    y = y.reshape(y.shape[:-1] + (a.size, 21))
    k = (y @ KRONROD_WEIGHTS) * half
    g = (y @ GAUSS_WEIGHTS) * half
    return k, g


def panel_nodes(a, b):
    """Kronrod nodes and weights of the composite rule on panels [a_i, b_i]."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = (mid[:, None] + half[:, None] * NODES[None, :]).ravel()
    w = (half[:, None] * KRONROD_WEIGHTS[None, :]).ravel()
    return x, w


def integrate(f, breakpoints, *, atol=1e-12, rtol=1e-12, max_iter=60, max_panels=200_000, return_panels=False):
    """Integrate f over [breakpoints[0], breakpoints[-1]].

    Interior breakpoints seed the initial panels.  Panels whose
    |Kronrod - Gauss| exceeds their share of the tolerance are bisected until
    the summed error estimate falls below max(atol, rtol*|I|).  Raises
    QuadratureError when max_iter or max_panels is hit first.

    With ``return_panels`` the final panel edges (a, b) are returned too, so
    the converged mesh can be reused for related integrands.
    """
    edges = np.asarray(breakpoints, dtype=float)
    if edges.ndim != 1 or edges.size < 2:
        raise ValueError("need at least two breakpoints")
    a, b = edges[:-1], edges[1:]
    done_val = 0.0
    done_err = 0.0
    done_a, done_b = [], []
    span = abs(edges[-1] - edges[0])
    if span == 0.0:
        return QuadResult(0.0, 0.0, 0)

    for _ in range(max_iter):
        k, g = gk21(f, a, b)
        err = np.abs(k - g)
        total = done_val + k.sum(axis=-1)
        total_err = done_err + err.sum(axis=-1)
        target = np.maximum(atol, rtol * np.abs(total))
        if np.all(total_err <= target):
            res = QuadResult(_unbatch(total), _unbatch(total_err), a.size + sum(x.size for x in done_a))
            if return_panels:
                return res, (np.concatenate(done_a + [a]), np.concatenate(done_b + [b]))
            return res

        # panels within their length-proportional share are retired
        share = np.min(target[..., None] * (b - a) / span, axis=tuple(range(err.ndim - 1)))
        worst = np.max(err, axis=tuple(range(err.ndim - 1))) if err.ndim > 1 else err
        keep = worst <= 0.5 * share
        done_val = done_val + k[..., keep].sum(axis=-1)
        done_err = done_err + err[..., keep].sum(axis=-1)
        done_a.append(a[keep])
        done_b.append(b[keep])
        split = ~keep
        mid = 0.5 * (a[split] + b[split])
        a = np.concatenate([a[split], mid])
        b = np.concatenate([mid, b[split]])
        if a.size > max_panels:
            break

    raise QuadratureError(
        "adaptive Gauss-Kronrod did not converge "
        f"(estimate {_unbatch(total)!r}, error {_unbatch(total_err)!r}, target {_unbatch(target)!r})",
        estimate=_unbatch(total),
        abserr=_unbatch(total_err),
    )


def _unbatch(v):
    v = np.asarray(v)
    return float(v) if v.ndim == 0 else v

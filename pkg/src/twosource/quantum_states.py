"""Truncated Fock-space states for the one- and two-source hypotheses.

Three-mode computations use the orthonormal modes (phi1, phi2, phi3): the
PSF mode, the symmetric complement and the antisymmetric mode.  Index
order of a three-mode matrix is (n1, n2, n3) in C order, each mode cut at
``cutoff`` photons.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.special import comb, gammaln, logsumexp
from scipy.stats import gamma

from .chernoff import ExponentResult, minimize_scalar
from .errors import CutoffTooSmallError, DimensionCapError, InvariantViolationError

__all__ = [
    "FockDensityMatrix",
    "thermal_state",
    "beamsplitter_number_vacuum",
    "build_rho1",
    "build_rho2",
    "build_eta",
    "trace_norm",
    "psd_power",
    "chernoff_trace",
    "quantum_chernoff_matrix",
    "conditional_quantum_chernoff",
    "helstrom_error",
    "conditional_helstrom",
    "eta_helstrom_closed_form",
    "unconditional_from_conditional",
    "weak_source_states",
    "coherent_average_rho2",
]

DEFAULT_MAX_DEFICIT = 1e-10
DENSE_DIM_CAP = 4096
TUPLE_CAP = 4_000_000
EIG_TOL = 1e-10


@dataclass(frozen=True)
class FockDensityMatrix:
    matrix: np.ndarray
    mode_dims: tuple
    deficit: float = 0.0

    @property
    def dim(self):
        return self.matrix.shape[0]

    def trace(self):
        return float(np.trace(self.matrix).real)

    def check(self, tol=1e-10):
        """Raise InvariantViolationError unless Hermitian, PSD and trace 1 - deficit."""
        a = self.matrix
        herm = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
        if herm > 1e-12:
            raise InvariantViolationError(f"not Hermitian (max |A - A^H| = {herm:.3g})")
        w_min = float(np.linalg.eigvalsh(a).min())
        if w_min < -tol:
            raise InvariantViolationError(f"not PSD (min eigenvalue {w_min:.3g})")
        if abs(self.trace() - (1.0 - self.deficit)) > tol:
            raise InvariantViolationError(f"trace {self.trace()!r} != 1 - {self.deficit!r}")
        return self


def _thermal_probs(eps, n_max):
    n = np.arange(n_max + 1)
    if eps == 0.0:
        return (n == 0).astype(float)
    return np.exp(n * math.log(eps) - (n + 1) * math.log1p(eps))


def _check_deficit(deficit, max_deficit, what):
    if max_deficit is not None and deficit > max_deficit:
        raise CutoffTooSmallError(
            f"{what}: truncation deficit {deficit:.3g} exceeds {max_deficit:.3g}; raise the cutoff"
        )


def thermal_state(epsilon, cutoff, max_deficit=DEFAULT_MAX_DEFICIT):
    """Single-mode thermal state with mean photon number ``epsilon``."""
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    if cutoff < 1:
        raise ValueError("cutoff must be at least 1")
    deficit = (epsilon / (1.0 + epsilon)) ** (cutoff + 1)
    _check_deficit(deficit, max_deficit, "thermal_state")
    return FockDensityMatrix(np.diag(_thermal_probs(epsilon, cutoff)), (cutoff + 1,), deficit)


def beamsplitter_number_vacuum(n, mu, one_minus_mu2=None):
    """Amplitudes on |k, n-k>, k = 0..n, of the splitter output for |n, 0> input.

    ``one_minus_mu2`` overrides 1 - mu^2 when it is known more accurately.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if abs(mu) > 1.0:
        raise ValueError("|mu| must not exceed 1")
    t2 = 1.0 - mu * mu if one_minus_mu2 is None else one_minus_mu2
    k = np.arange(n + 1)
    binom = np.sqrt(comb(n, k))
    return binom * np.power(float(mu), k) * np.power(max(t2, 0.0), 0.5 * (n - k))


def build_rho1(dp, cutoff, max_deficit=DEFAULT_MAX_DEFICIT):
    """rho_th(eps) on phi1, vacuum on phi2 and phi3."""
    c = cutoff + 1
    th = thermal_state(dp.epsilon, cutoff, max_deficit=None)
    _check_deficit(th.deficit, max_deficit, "build_rho1")
    rho = np.zeros((c, c, c, c, c, c))
    rho[:, 0, 0, :, 0, 0] = th.matrix
    return FockDensityMatrix(rho.reshape(c**3, c**3), (c, c, c), th.deficit)


def _rho2_blocks(dp, cutoff):
    """Block labels (N, n3), weights and unit vectors of the rank-one blocks of rho2.

    Photons in phi1+phi2 come from a thermal(eps+) field split by the
    beamsplitter, so rho2 is rank one within each (N = n1 + n2, n3) sector.
    Components outside the per-mode cutoff are projected away, so the
    returned weights already include that truncation.
    """
    c = cutoff + 1
    p_plus = _thermal_probs(dp.eps_plus, 2 * cutoff)
    p_minus = _thermal_probs(dp.eps_minus, cutoff)
    blocks = []
    for n_tot in range(2 * cutoff + 1):
        amp = beamsplitter_number_vacuum(n_tot, dp.mu, dp.one_minus_mu2)
        k = np.arange(n_tot + 1)
        keep = (k <= cutoff) & (n_tot - k <= cutoff)
        vec12 = np.zeros((c, c))
        vec12[k[keep], n_tot - k[keep]] = amp[keep]
        norm2 = float(np.sum(amp[keep] ** 2))
        if norm2 == 0.0:
            continue
        for n3 in range(c):
            w = p_plus[n_tot] * p_minus[n3] * norm2
            if w == 0.0:
                continue
            vec = np.zeros((c, c, c))
            vec[:, :, n3] = vec12 / math.sqrt(norm2)
            blocks.append(((n_tot, n3), w, vec.ravel()))
    return blocks


def build_rho2(dp, cutoff, max_deficit=DEFAULT_MAX_DEFICIT):
    """Two-source state: split thermal(eps+) on phi1/phi2, thermal(eps-) on phi3."""
    c = cutoff + 1
    rho = np.zeros((c**3, c**3))
    for _, w, v in _rho2_blocks(dp, cutoff):
        idx = np.flatnonzero(v)
        rho[np.ix_(idx, idx)] += w * np.outer(v[idx], v[idx])
    deficit = max(1.0 - float(np.trace(rho)), 0.0)
    _check_deficit(deficit, max_deficit, "build_rho2")
    return FockDensityMatrix(rho, (c, c, c), deficit)


def build_eta(dp):
    """One-photon states in the (phi1, phi2, phi3) basis."""
    eta1 = np.zeros((3, 3))
    eta1[0, 0] = 1.0
    s = np.array([dp.mu, math.sqrt(dp.one_minus_mu2), 0.0])
    eta2 = dp.lambda_plus * np.outer(s, s)
    eta2[2, 2] = dp.lambda_minus
    return FockDensityMatrix(eta1, (3,)), FockDensityMatrix(eta2, (3,))


def weak_source_states(dp):
    """Zero/one-photon truncations (1 - eps)|vac><vac| + eps eta on (vac, phi1, phi2, phi3)."""
    e1, e2 = build_eta(dp)
    out = []
    for eta in (e1, e2):
        rho = np.zeros((4, 4))
        rho[0, 0] = 1.0 - dp.epsilon
        rho[1:, 1:] = dp.epsilon * eta.matrix
        out.append(FockDensityMatrix(rho, (4,)))
    return tuple(out)


def _as_array(a):
    return a.matrix if isinstance(a, FockDensityMatrix) else np.asarray(a)


def trace_norm(a):
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    a = _as_array(a)
    if a.size == 0:
        return 0.0
    return float(np.abs(np.linalg.eigvalsh(a)).sum())


def _clamped_eigh(a, tol=EIG_TOL):
    w, v = np.linalg.eigh(_as_array(a))
    if w.min(initial=0.0) < -tol:
        raise InvariantViolationError(f"matrix is not PSD (eigenvalue {w.min():.3g})")
    return np.where(w < tol, 0.0, w), v


def psd_power(a, s, tol=EIG_TOL):
    """a^s for PSD a; s = 0 gives the support projector (0^0 = 0)."""
    w, v = _clamped_eigh(a, tol)
    ws = np.zeros_like(w)
    pos = w > 0
    ws[pos] = w[pos] ** s
    return (v * ws) @ v.conj().T


def chernoff_trace(rho1, rho2, s, tol=EIG_TOL):
    """tr(rho1^s rho2^(1-s)) with the support-projector convention."""
    w1, v1 = _clamped_eigh(rho1, tol)
    w2, v2 = _clamped_eigh(rho2, tol)
    return _chernoff_trace_eig(w1, v1, w2, v2, s)


def _chernoff_trace_eig(w1, v1, w2, v2, s):
    def pw(w, e):
        out = np.zeros_like(w)
        pos = w > 0
        out[pos] = w[pos] ** e
        return out

    overlap = np.abs(v1.conj().T @ v2) ** 2
    return float(pw(w1, s) @ overlap @ pw(w2, 1.0 - s))


def quantum_chernoff_matrix(rho1, rho2, tol=1e-8):
    """Quantum Chernoff exponent -log min_s tr(rho1^s rho2^(1-s)) by eigendecomposition."""
    w1, v1 = _clamped_eigh(rho1)
    w2, v2 = _clamped_eigh(rho2)
    s_star, q = minimize_scalar(lambda s: _chernoff_trace_eig(w1, v1, w2, v2, s), 0.0, 1.0, tol=tol)
    return ExponentResult(max(-math.log(q), 0.0), s_star, q)


def conditional_quantum_chernoff(eta1, eta2, tol=1e-8):
    return quantum_chernoff_matrix(eta1, eta2, tol=tol)


# --- Helstrom error ------------------------------------------------------------

def _kron_power(a, m):
    out = a
    for _ in range(m - 1):
        out = np.kron(out, a)
    return out


def _block_labels(a, b, tol=0.0):
    """Connected components of the joint sparsity graph of two matrices."""
    mask = (np.abs(a) > tol) | (np.abs(b) > tol)
    n, labels = connected_components(csr_matrix(mask), directed=False)
    return n, labels


def _rank_one_factors(a, b):
    """Per-block (w1, w2, g) with block_a = w1 u u^H, block_b = w2 v v^H, g = <u|v>.

    Returns None when some block has rank above one.
    """
    n, labels = _block_labels(a, b)
    w1s, w2s, gs = [], [], []
    for k in range(n):
        idx = np.flatnonzero(labels == k)
        ws, vs = [], []
        for m in (a, b):
            w, v = np.linalg.eigh(m[np.ix_(idx, idx)])
            # relative threshold: tiny blocks (high photon numbers) must keep their weight
            nz = np.flatnonzero(w > 1e-12 * max(w.max(), 0.0))
            if w.min() < -EIG_TOL:
                raise InvariantViolationError(f"matrix is not PSD (eigenvalue {w.min():.3g})")
            if nz.size > 1:
                return None
            if nz.size == 0:
                ws.append(0.0)
                vs.append(np.zeros(idx.size))
            else:
                ws.append(float(w[nz[0]]))
                vs.append(v[:, nz[0]])
        if ws[0] == 0.0 and ws[1] == 0.0:
            continue
        w1s.append(ws[0])
        w2s.append(ws[1])
        gs.append(abs(np.vdot(vs[0], vs[1])) ** 2)
    return np.array(w1s), np.array(w2s), np.array(gs)


def _outer_power(x, m):
    out = x
    for _ in range(m - 1):
        out = np.multiply.outer(out, x)
    return out.ravel()


def _helstrom_rank_one(factors, p1, p2, m):
    w1, w2, g2 = factors
    if w1.size**m > TUPLE_CAP:
        raise DimensionCapError(f"{w1.size}^{m} block tuples exceed the cap of {TUPLE_CAP}")
    a = p2 * _outer_power(w2, m)
    b = p1 * _outer_power(w1, m)
    g = _outer_power(g2, m)
    disc = np.sqrt(np.maximum((a - b) ** 2 + 4.0 * a * b * (1.0 - g), 0.0))
    denom = a + b + disc
    contrib = np.where(denom > 0, 2.0 * a * b * g / np.where(denom > 0, denom, 1.0), 0.0)
    # 1/2 (1 - ||X||_1) = 1/2 (1 - sum(a + b)) + sum of the per-block minima
    missing = 1.0 - p1 * w1.sum() ** m - p2 * w2.sum() ** m
    return 0.5 * missing + float(np.sort(contrib).sum())


def helstrom_error(rho1, rho2, p1=0.5, p2=0.5, M=1, dim_cap=DENSE_DIM_CAP, method="auto"):
    """Minimum error probability 1/2 (1 - ||p2 rho2^M - p1 rho1^M||_1).

    ``method="dense"`` forms the tensor powers explicitly (dimension capped
    by ``dim_cap``).  ``method="blocks"`` uses the joint block structure:
    when both states are rank at most one on every common block, the trace
    norm reduces to a closed form per tuple of blocks, which is exact.
    ``"auto"`` picks dense when it fits, else blocks.
    """
    a = _as_array(rho1)
    b = _as_array(rho2)
    if M < 1:
        raise ValueError("M must be at least 1")
    dim = a.shape[0] ** M
    if method == "auto":
        method = "dense" if dim <= dim_cap else "blocks"
    if method == "dense":
        if dim > dim_cap:
            raise DimensionCapError(f"dimension {a.shape[0]}^{M} = {dim} exceeds the cap of {dim_cap}")
        x = p2 * _kron_power(b, M) - p1 * _kron_power(a, M)
        return 0.5 * (1.0 - trace_norm(x))
    if method == "blocks":
        factors = _rank_one_factors(a, b)
        if factors is None:
            raise DimensionCapError(
                f"dimension {dim} exceeds the dense cap of {dim_cap} and the states are not "
                "rank one per block"
            )
        return _helstrom_rank_one(factors, p1, p2, M)
    raise ValueError(f"unknown method {method!r}")


def conditional_helstrom(eta1, eta2, p1=0.5, p2=0.5, L=1, dim_cap=3**12, method="auto"):
    """Helstrom error given L detected photons (L = 0 gives min(p1, p2))."""
    if L == 0:
        return min(p1, p2)
    a = _as_array(eta1)
    if a.shape[0] ** L > dim_cap:
        raise DimensionCapError(f"dimension {a.shape[0]}^{L} exceeds the cap of {dim_cap}")
    return helstrom_error(eta1, eta2, p1, p2, L, method=method)


def eta_helstrom_closed_form(dp, p1, p2, L):
    """Analytic conditional Helstrom error for the one-photon pair."""
    lp = dp.lambda_plus**L
    overlap = dp.mu ** (2 * L)
    norm = p2 * (1.0 - lp) + math.sqrt((p2 * lp + p1) ** 2 - 4.0 * p1 * p2 * lp * overlap)
    return 0.5 * (1.0 - norm)


def unconditional_from_conditional(epsilon, M, cond, p1=0.5, p2=0.5, L_max=None, xi_c=None):
    """Average conditional errors over a Binomial(M, epsilon) photon count.

    ``cond(L)`` is evaluated for L <= L_max.  Beyond that the Chernoff bound
    max(p1, p2) exp(-L xi_c) stands in; its total weight is returned as
    ``tail_bound`` (zero when every L was computed).  Returns (pe, tail_bound).
    """
    if L_max is None:
        L_max = M
    L = np.arange(M + 1)
    log_pmf = (
        gammaln(M + 1) - gammaln(L + 1) - gammaln(M - L + 1)
        + L * math.log(epsilon) + (M - L) * math.log1p(-epsilon)
    ) if 0.0 < epsilon < 1.0 else None
    if log_pmf is None:
        pmf = (L == (M if epsilon >= 1.0 else 0)).astype(float)
    else:
        pmf = np.exp(log_pmf)
    pe = 0.0
    tail = 0.0
    for ell in range(M + 1):
        if pmf[ell] == 0.0:
            continue
        if ell <= L_max:
            pe += pmf[ell] * cond(ell)
        else:
            if xi_c is None:
                raise ValueError("xi_c is required when L_max < M")
            tail += pmf[ell] * max(p1, p2) * math.exp(-ell * xi_c)
    return pe, tail


# --- sampling oracle for rho2 ----------------------------------------------------

def _coherent_coeffs(alpha, cutoff):
    n = np.arange(cutoff + 1)
    alpha = np.asarray(alpha)
    mag = np.exp(-0.5 * np.abs(alpha)[:, None] ** 2 - 0.5 * gammaln(n + 1))
    return mag * np.power(alpha[:, None], n)


def coherent_average_rho2(dp, cutoff, n_draws, rng, method="importance", batch=10_000):
    """Monte Carlo average of coherent-state projectors over the source amplitudes.

    The field in (phi1, phi2, phi3) is the coherent state
    (mu A+, sqrt(1-mu^2) A+, A-) with A+- = sqrt(lambda+-) (A1 +- A2) and
    A1, A2 independent circular Gaussians with E|A|^2 = eps/2.

    ``method="plain"`` averages the projectors over direct draws of (A1, A2).
    ``method="importance"`` uses that A+ and A- are independent circular
    Gaussians: their phases are averaged exactly (entries with different
    (n1 + n2, n3) vanish), and |A+-|^2 are drawn from a defensive mixture
    of Gamma laws covering every photon number up to the cutoff, with
    likelihood-ratio weights.  This keeps each entry's estimator light-tailed
    so that its sample standard error is trustworthy.

    Returns (mean, se_real, se_imag) over the truncated three-mode basis.
    """
    if method == "plain":
        return _coherent_average_plain(dp, cutoff, n_draws, rng, batch)
    if method != "importance":
        raise ValueError(f"unknown method {method!r}")
    c = cutoff + 1
    dim = c**3
    n1, n2, n3 = np.indices((c, c, c)).reshape(3, -1)
    same = ((n1 + n2)[:, None] == (n1 + n2)[None, :]) & (n3[:, None] == n3[None, :])
    s1 = np.zeros((dim, dim))
    s2 = np.zeros((dim, dim))
    done = 0
    t = math.sqrt(dp.one_minus_mu2)
    while done < n_draws:
        n = min(batch, n_draws - done)
        y_plus, w_plus = _defensive_gamma_draws(dp.eps_plus, 2 * cutoff, n, rng)
        y_minus, w_minus = _defensive_gamma_draws(dp.eps_minus, cutoff, n, rng)
        r_plus = np.sqrt(y_plus)
        c1 = _coherent_coeffs(dp.mu * r_plus, cutoff).real
        c2 = _coherent_coeffs(t * r_plus, cutoff).real
        c3 = _coherent_coeffs(np.sqrt(y_minus), cutoff).real
        v = np.einsum("ni,nj,nk->nijk", c1, c2, c3).reshape(n, dim)
        wv = v * (w_plus * w_minus)[:, None]
        s1 += wv.T @ v
        s2 += (wv * v).T @ (wv * v)
        done += n
    mean = s1 / n_draws
    var = np.maximum(s2 / n_draws - mean**2, 0.0)
    mean = np.where(same, mean, 0.0)
    se = np.where(same, np.sqrt(var / n_draws), 0.0)
    return mean.astype(complex), se, np.zeros_like(se)


def _defensive_gamma_draws(theta, n_max, n, rng):
    """|A|^2 draws for A ~ CN(0, theta), importance-sampled.

    The proposal is an equal mixture over k = 0..n_max of Gamma(k + 1, rate
    1 + 1/theta), the shapes of y^k e^(-y) times the exponential density.
    Returns (draws, weights) with E_q[w f] = E_p[f].
    """
    if theta == 0.0:
        return np.zeros(n), np.ones(n)
    rate = 1.0 + 1.0 / theta
    k = rng.integers(0, n_max + 1, size=n)
    y = rng.gamma(k + 1.0, 1.0 / rate)
    shapes = np.arange(n_max + 1) + 1.0
    log_q = logsumexp(gamma.logpdf(y[:, None], shapes[None, :], scale=1.0 / rate), axis=1) - math.log(n_max + 1)
    log_p = -y / theta - math.log(theta)
    return y, np.exp(log_p - log_q)


def _coherent_average_plain(dp, cutoff, n_draws, rng, batch):
    c = cutoff + 1
    dim = c**3
    s1 = np.zeros((dim, dim), dtype=complex)
    s_abs2 = np.zeros((dim, dim))
    s_sq = np.zeros((dim, dim), dtype=complex)
    done = 0
    scale = math.sqrt(dp.epsilon / 4.0)  # per real component of CN(0, eps/2)
    while done < n_draws:
        n = min(batch, n_draws - done)
        z = rng.standard_normal((n, 4)) * scale
        a1 = z[:, 0] + 1j * z[:, 1]
        a2 = z[:, 2] + 1j * z[:, 3]
        a_plus = math.sqrt(dp.lambda_plus) * (a1 + a2)
        a_minus = math.sqrt(dp.lambda_minus) * (a1 - a2)
        c1 = _coherent_coeffs(dp.mu * a_plus, cutoff)
        c2 = _coherent_coeffs(math.sqrt(dp.one_minus_mu2) * a_plus, cutoff)
        c3 = _coherent_coeffs(a_minus, cutoff)
        v = np.einsum("ni,nj,nk->nijk", c1, c2, c3).reshape(n, dim)
        # entry (i, j) of the projector is v_i conj(v_j)
        s1 += v.T @ v.conj()
        r = np.abs(v) ** 2
        s_abs2 += r.T @ r
        w = v * v
        s_sq += w.T @ w.conj()
        done += n
    mean = s1 / n_draws
    e_abs2 = s_abs2 / n_draws
    e_sq = s_sq / n_draws
    var_re = np.maximum(0.5 * (e_abs2 + e_sq.real) - mean.real**2, 0.0)
    var_im = np.maximum(0.5 * (e_abs2 - e_sq.real) - mean.imag**2, 0.0)
    return mean, np.sqrt(var_re / n_draws), np.sqrt(var_im / n_draws)

"""Observables shared by all formalisms: photocounts, coherence degrees,
squeezing of one and two modes, and phase-space reconstruction.

Quadratures are X(theta) = a e^{-i theta} + a^+ e^{i theta}, so [X1, X2] = 2i
and a coherent state has unit variance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_hermite

from .fock_core import DensityTensor, MomentSet, chain_bounds
from .numkernel import DomainError, PrecisionError, laguerre, log_factorial


class UnsupportedOrderingError(ValueError):
    """Requested an ordering parameter for which the Fock sum does not converge."""


# --- photon statistics ------------------------------------------------------

def gamma2(mean: float, second_factorial: float) -> float:
    """<k(k-1)>/<k>^2 - 1."""
    if not mean > 0:
        raise DomainError("mean photon number must be positive")
    return second_factorial / mean ** 2 - 1.0


def interbeam_g2(cross: float, mean_a: float, mean_b: float) -> float:
    """<n m>/(<n><m>) - 1."""
    if not (mean_a > 0 and mean_b > 0):
        raise DomainError("both mean photon numbers must be positive")
    return cross / (mean_a * mean_b) - 1.0


def photocount_from_intensity_moments(moments, nmax: int, cond_limit: float = 1e10) -> np.ndarray:
    """p(n) = sum_k (-1)^k <W^{n+k}>/(n! k!) for n = 0..nmax.

    ``moments[j]`` is <W^j> (moments[0] = 1). The alternating sum is only
    usable when it does not cancel; the ratio of the absolute sum to the
    result is checked against ``cond_limit``.
    """
    mom = np.asarray(moments, dtype=float)
    if mom.ndim != 1 or mom.size < nmax + 2:
        raise DomainError("need at least nmax + 2 intensity moments")
    out = np.empty(nmax + 1)
    for n in range(nmax + 1):
        k = np.arange(mom.size - n)
        with np.errstate(divide="ignore"):
            logt = np.log(np.abs(mom[n:])) - log_factorial(n) - log_factorial(k)
        terms = np.where(k % 2 == 0, 1.0, -1.0) * np.sign(mom[n:]) * np.exp(logt)
        total = math.fsum(terms)
        tail = abs(terms[-1])
        absum = np.abs(terms).sum()
        if tail > 1e-14 * max(absum, 1e-300) and tail > 1e-16:
            raise PrecisionError(f"intensity series for p({n}) has not converged")
        if absum > cond_limit * max(abs(total), 1e-300) and absum > 1e-13:
            raise PrecisionError(f"alternating sum for p({n}) cancels by {absum / max(abs(total), 1e-300):.1e}")
        out[n] = total
    return out


# --- squeezing -------------------------------------------------------------

@dataclass(frozen=True)
class SqueezingReport:
    d2: complex            # <(Delta a)^2>
    dn: float              # <Delta a^+ Delta a>
    var_plus: float
    var_minus: float
    theta_plus: float
    theta_minus: float
    covariance: float      # <{DX1, DX2}>
    standard: bool
    principal: bool

    def variance(self, theta):
        th = np.asarray(theta, dtype=float)
        return 2 * np.real(np.exp(-2j * th) * self.d2) + 2 * self.dn + 1

    def from_extremes(self, theta):
        """Same variance rebuilt from the two extremes (ellipse form)."""
        th = np.asarray(theta, dtype=float)
        return (self.var_plus * np.cos(th - self.theta_plus) ** 2
                + self.var_minus * np.sin(th - self.theta_plus) ** 2)

    @property
    def uncertainty_gap(self) -> float:
        """var1 var2 - cov^2/4 - 1, nonnegative for physical states."""
        v1, v2 = self.variance(0.0), self.variance(math.pi / 2)
        return float(v1 * v2 - self.covariance ** 2 / 4 - 1)


def principal_squeezing(d2: complex, dn: float) -> SqueezingReport:
    """Single-mode quadrature statistics from the central moments."""
    d2 = complex(d2)
    dn = float(np.real(dn))
    r = abs(d2)
    th_p = 0.5 * math.atan2(d2.imag, d2.real)
    th_m = th_p + 0.5 * math.pi
    standard = min(dn + d2.real, dn - d2.real) < 0
    return SqueezingReport(d2, dn, 2 * r + 2 * dn + 1, -2 * r + 2 * dn + 1, th_p, th_m,
                           4 * d2.imag, standard, dn < r)


def central_moments(ms: MomentSet) -> dict:
    """Annihilation-form central moments from a MomentSet.

    Keys: ``L`` and ``S`` map to (<(Da)^2>, <Da^+ Da>); ``P`` is
    <Da_L Da_S>, ``Q`` is <Da_L^+ Da_S>.
    """
    aL, aS = np.conj(ms.a_L), np.conj(ms.a_S)           # <a_L>, <a_S>
    return {
        "L": (np.conj(ms.a_L2) - aL ** 2, ms.mean_n - abs(aL) ** 2),
        "S": (np.conj(ms.a_S2) - aS ** 2, ms.mean_m - abs(aS) ** 2),
        "P": np.conj(ms.a_L_a_S) - aL * aS,
        "Q": ms.a_Ldag_a_S - np.conj(aL) * aS,
    }


@dataclass(frozen=True)
class TwoModeReport:
    first: SqueezingReport
    second: SqueezingReport
    cross: dict            # "11", "22", "12", "21": <DX_k i DX_l j>
    var1: float
    var2: float
    covariance: float
    var_plus: float
    var_minus: float
    squeezed_1: bool
    squeezed_2: bool
    principal: bool


def two_mode_quadratures(first: tuple, second: tuple, P: complex, Q: complex) -> TwoModeReport:
    """Statistics of X_kl = X_k + X_l.

    ``first``/``second`` are (<(Da)^2>, <Da^+Da>) per mode, ``P`` = <Da_k Da_l>
    and ``Q`` = <Da_k^+ Da_l>. The coherent-state level is 2.
    """
    a = principal_squeezing(*first)
    b = principal_squeezing(*second)
    P, Q = complex(P), complex(Q)
    cross = {"11": 2 * (P + Q).real, "22": 2 * (-P + Q).real,
             "12": 2 * (P + Q).imag, "21": 2 * (P - Q).imag}
    var1 = float(a.variance(0.0) + b.variance(0.0) + 2 * cross["11"])
    var2 = float(a.variance(math.pi / 2) + b.variance(math.pi / 2) + 2 * cross["22"])
    cov = a.covariance + b.covariance + 2 * cross["12"] + 2 * cross["21"]
    D2 = a.d2 + b.d2 + 2 * P
    N = a.dn + b.dn + 2 * Q.real
    vp = 2 * abs(D2) + 2 * N + 2
    vm = -2 * abs(D2) + 2 * N + 2
    return TwoModeReport(a, b, cross, var1, var2, cov, vp, vm, var1 < 2, var2 < 2, vm < 2)


# --- ordering conversions ------------------------------------------------------

def ordering_shift_char(c_value: complex, beta_abs2: float, s1: float, s2: float) -> complex:
    """Characteristic function at ordering s2 from its value at s1.

    ``beta_abs2`` is sum_k |beta_k|^2 at the evaluation point.
    """
    for s in (s1, s2):
        if not -1.0 <= s <= 1.0:
            raise DomainError("ordering parameters must lie in [-1, 1]")
    return complex(c_value) * math.exp(0.5 * (s2 - s1) * float(beta_abs2))


def _gh_nodes(order: int):
    u, w = roots_hermite(order)
    uu, vv = np.meshgrid(u, u, indexing="ij")
    ww = np.outer(w, w) * np.exp(uu ** 2 + vv ** 2)   # strip the Hermite weight
    return uu + 1j * vv, ww


def _conversion_kernel(alpha: np.ndarray, m: int, n: int, s1: float, s2: float) -> np.ndarray:
    d = s1 - s2
    lag = laguerre(m, n - m, 2 * np.abs(alpha) ** 2 / d)
    return math.factorial(m) * (-d / 2) ** m * alpha ** (n - m) * lag


def moment_order_conversion(w_func, m: int, n: int, s1: float, s2: float, *,
                            center: complex = 0j, width: float = 1.0, order: int = 48,
                            tol: float = 1e-8) -> complex:
    """<a^{+m} a^n> in ordering s1 from a single-mode quasidistribution at s2 < s1.

    ``w_func`` maps complex points to W^{(s2)} values (normalized to
    integrate to 1 against d^2 alpha / pi). The integral uses a tensor
    Gauss-Hermite rule centred at ``center`` with scale ``width``; it is
    repeated at doubled order and must agree to ``tol`` (relative).
    """
    if not s2 < s1:
        raise DomainError("conversion needs s2 < s1")
    if m < 0 or n < 0:
        raise DomainError("moment orders must be >= 0")
    if m > n:                                   # conjugate pair keeps the kernel polynomial
        return np.conj(moment_order_conversion(w_func, n, m, s1, s2, center=center,
                                               width=width, order=order, tol=tol))
    vals = []
    for q in (order, 2 * order):
        z, w = _gh_nodes(q)
        alpha = center + width * z
        f = _conversion_kernel(alpha, m, n, s1, s2) * np.asarray(w_func(alpha))
        vals.append(complex(np.sum(w * f) * width ** 2 / math.pi))
    scale = max(abs(vals[1]), 1e-300)
    if abs(vals[0] - vals[1]) > tol * max(scale, 1.0):
        raise PrecisionError(f"quadrature did not converge: {vals[0]} vs {vals[1]}")
    return vals[1]


# --- phase-space reconstruction from a density tensor --------------------------------

def _log_pow(count, logv):
    """count * logv with the convention 0 * (-inf) = 0."""
    count, logv = np.broadcast_arrays(np.asarray(count, dtype=float), np.asarray(logv, dtype=float))
    out = np.zeros(count.shape)
    nz = count != 0
    out[nz] = count[nz] * logv[nz]
    return out


def t_matrix_elements(alpha, s: float, nmax: int, kmax: int) -> dict:
    """<n| T^(s)(alpha) |n+k> for n = 0..nmax and |k| <= kmax; shape (points, nmax+1).

    The factor ((s+1)/(s-1))^n L_n^k(4|alpha|^2/(1-s^2)) is expanded so that
    s -> -1 stays finite.
    """
    if s >= 0:
        raise UnsupportedOrderingError("Fock-sum reconstruction needs s < 0")
    if s < -1:
        raise DomainError("s must be >= -1")
    a = np.atleast_1d(np.asarray(alpha, dtype=complex))
    a2 = np.abs(a) ** 2
    q = (s + 1) / (s - 1)                            # in (-1, 0]
    y = 4 * a2 / (1 - s) ** 2
    pre = np.log(2 / (1 - s)) - 2 * a2 / (1 - s)
    with np.errstate(divide="ignore"):
        ly = np.log(y)                               # -inf at alpha = 0
        lq = math.log(abs(q)) if q else -math.inf
    out = {}
    for k in range(kmax + 1):
        col = np.zeros((a.size, nmax + 1), dtype=complex)
        for i in range(nmax + 1):
            j = np.arange(i + 1)
            lc = (log_factorial(i + k) - log_factorial(i - j) - log_factorial(k + j)
                  - log_factorial(j))
            lt = lc[None, :] + _log_pow(i - j, lq)[None, :] + _log_pow(j[None, :], ly[:, None])
            sign = np.where((i - j) % 2 == 1, -1.0, 1.0) if q < 0 else np.ones(i + 1)
            norm = 0.5 * (log_factorial(i) - log_factorial(i + k)) + k * np.log(2 / (1 - s)) + pre
            top = lt.max(axis=1, keepdims=True)
            top = np.where(np.isfinite(top), top, 0.0)
            part = (sign[None, :] * np.exp(lt - top)).sum(axis=1)
            col[:, i] = part * np.exp(top[:, 0] + norm) * np.conj(a) ** k
        out[k] = col
        if k:
            # hermiticity: <n|T|n-k> = conj(<n-k|T|n>)
            neg = np.zeros_like(col)
            neg[:, k:] = np.conj(col[:, : nmax + 1 - k])
            out[-k] = neg
    return out


def q_function_grid(rho: DensityTensor, alphas_l, alphas_s, s: float = -1.0) -> np.ndarray:
    """W^(s) on the outer grid alphas_l x alphas_s (s < 0), real part.

    Off-diagonal sums stop at the tensor's stored nu_max, mu_max; that is the
    truncation radius of the reconstruction.
    """
    al = np.atleast_1d(np.asarray(alphas_l, dtype=complex))
    as_ = np.atleast_1d(np.asarray(alphas_s, dtype=complex))
    K = rho.cutoff_K
    tl = t_matrix_elements(al, s, K + rho.nu_max, rho.nu_max)
    ts = t_matrix_elements(as_, s, K + rho.mu_max, rho.mu_max)
    out = np.zeros((al.size, as_.size), dtype=complex)
    for nu in range(-rho.nu_max, rho.nu_max + 1):
        # contract the Stokes side first so only one large product per nu remains
        acc = np.zeros((K + 1, as_.size), dtype=complex)
        for mu in range(-rho.mu_max, rho.mu_max + 1):
            R = np.zeros((K + 1, K + 1), dtype=complex)   # R[n, m]
            for Kc in range(K + 1):
                v = rho.chains.get((Kc, nu, mu))
                if v is None:
                    continue
                m = np.arange(Kc + 1)
                R[Kc - m, m] = v
            if R.any():
                acc += np.conj(R) @ ts[mu][:, : K + 1].T
        if acc.any():
            out += tl[nu][:, : K + 1] @ acc
    return out.real


def q_function_from_rho(rho: DensityTensor, alpha_l: complex, alpha_s: complex,
                        s: float = -1.0) -> float:
    """Two-mode W^(s) (the Q function at s = -1) at one phase-space point."""
    return float(q_function_grid(rho, [alpha_l], [alpha_s], s)[0, 0])


def single_mode_q(elements: dict, alphas, s: float = -1.0) -> np.ndarray:
    """Single-mode W^(s) from reduced elements {mu: array of <m|rho|m+mu>}."""
    a = np.atleast_1d(np.asarray(alphas, dtype=complex))
    size = max(len(v) for v in elements.values())
    kmax = max(abs(k) for k in elements)
    t = t_matrix_elements(a, s, size - 1, kmax)
    out = np.zeros(a.size, dtype=complex)
    for mu, v in elements.items():
        v = np.asarray(v, dtype=complex)
        out += t[mu][:, : len(v)] @ np.conj(v)
    return out.real

"""Closed-form evolution of the two-mode density matrix with pump depletion.

Inside a chain the equations are bidiagonal, so each element is a sum over
upstream sources of (product of couplings) x (inverse Laplace transform of
prod_p 1/(s + f_p)). The transform is done by partial fractions. Twice the
decay rate is an integer, so repeated poles are found by integer equality;
a downward parabola takes any value at most twice, so double poles are the
worst case and give (a + b*tau) exp(-f tau) terms.

Partial fractions cancel badly when many rates are close compared to
1/tau. Every kernel carries a rounding bound; kernels whose bound is not
negligible next to the requested absolute tolerance are recomputed. The
default recomputation uses that every kernel is nonnegative (a convolution
of decaying exponentials) and the chain propagator is a semigroup: a
centred power series at tau/2^s followed by s squarings of a nonnegative
matrix keeps elementwise relative accuracy. ``refine="mpmath"`` instead
re-evaluates the partial-fraction sum at raised precision.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np

from .fock_core import DensityTensor, chain_bounds
from .numkernel import ConditioningWarning, DomainError, log_factorial

EPS = np.finfo(float).eps
COND_THRESHOLD = 1e12


def f_stokes(n: int, m: int, nu: int, mu: int, x: int) -> Fraction:
    """Decay rate of chain element (n+x, m-x), as an exact half-integer."""
    return Fraction((n + x) * (m - x + 1) + (n + x + nu) * (m - x + mu + 1), 2)


def g_antistokes(n: int, m: int, nu: int, mu: int, x: int) -> Fraction:
    """Decay rate of anti-Stokes chain element (n-x, m+x)."""
    return Fraction((m + x) * (n - x + 1) + (m + x + mu) * (n - x + nu + 1), 2)


def split_lambda(n: int, m: int, nu: int, mu: int, shift: int = 1) -> int:
    """Integer part of the parabola vertex; ``shift=0`` gives the alternative definition."""
    return math.floor(Fraction(m - n + shift, 2) + Fraction(mu - nu, 4))


@dataclass(frozen=True)
class ChainSpectrum:
    """Rates of one chain in flow order (sources before targets).

    ``f2`` holds twice the decay rates as exact integers. ``log_coupling[k]``
    is the log of the coupling feeding position k from position k-1.
    ``offset`` and ``reverse`` map flow positions back to m.
    """

    f2: np.ndarray
    log_coupling: np.ndarray
    multiplicities: np.ndarray
    offset: int
    reverse: bool
    terms: tuple  # (i, j, q, logmag, sign, shift, double)

    @property
    def l_max(self) -> int:
        return len(self.f2) - 1

    @property
    def f_values(self) -> np.ndarray:
        return self.f2 / 2.0


def _partial_fraction_terms(f2: np.ndarray, logc: np.ndarray) -> tuple:
    L = len(f2)
    f = f2 / 2.0
    eq = f2[None, :] == f2[:, None]           # [q, p]
    diff = f[None, :] - f[:, None]             # f_p - f_q
    safe = np.where(eq, 1.0, diff)
    logabs = np.where(eq, 0.0, np.log(np.abs(safe)))
    neg = ((diff < 0) & ~eq).astype(np.int64)
    inv = np.where(eq, 0.0, 1.0 / safe)
    zero = np.zeros((L, 1))
    c_log = np.concatenate([zero, np.cumsum(logabs, axis=1)], axis=1)  # [q, j+1]
    c_neg = np.concatenate([zero.astype(np.int64), np.cumsum(neg, axis=1)], axis=1)
    c_inv = np.concatenate([zero, np.cumsum(inv, axis=1)], axis=1)
    partner = np.full(L, -1)
    for q in range(L):
        hit = np.flatnonzero(eq[q] & (np.arange(L) != q))
        if hit.size:
            partner[q] = hit[0]
    cw = np.concatenate([[0.0], np.cumsum(logc[1:])])  # cw[j] - cw[i] = log prod couplings i+1..j

    I, J, Q = np.meshgrid(np.arange(L), np.arange(L), np.arange(L), indexing="ij")
    inside = (I <= Q) & (Q <= J)
    pq = partner[Q]
    pair_in = (pq >= I) & (pq <= J)
    keep = inside & ~(pair_in & (pq < Q))
    i, j, q = I[keep], J[keep], Q[keep]
    dbl = pair_in[keep]
    logmag = (cw[j] - cw[i]) - (c_log[q, j + 1] - c_log[q, i])
    sign = np.where((c_neg[q, j + 1] - c_neg[q, i]) % 2 == 1, -1.0, 1.0)
    shift = c_inv[q, j + 1] - c_inv[q, i]
    return i, j, q, logmag, sign, shift, dbl


@lru_cache(maxsize=8192)
def chain_spectrum(K: int, nu: int, mu: int, direction: str = "stokes") -> ChainSpectrum:
    lo, hi = chain_bounds(K, nu, mu)
    m = np.arange(lo, hi + 1, dtype=np.int64)
    n = K - m
    if direction == "stokes":
        f2 = n * (m + 1) + (n + nu) * (m + mu + 1)
        c2 = (n + 1) * (n + nu + 1) * m * (m + mu)  # feeds m from m-1
        reverse = False
    elif direction == "antistokes":
        f2 = (n + 1) * m + (n + nu + 1) * (m + mu)
        c2 = n * (n + nu) * (m + 1) * (m + mu + 1)  # feeds m from m+1
        f2, c2, reverse = f2[::-1].copy(), c2[::-1].copy(), True
    else:
        raise DomainError(f"unknown direction {direction!r}")
    logc = 0.5 * np.log(np.where(c2 > 0, c2, 1).astype(float))
    if len(logc) == 0:
        empty = np.zeros(0, dtype=np.int64)
        return ChainSpectrum(f2, logc, empty, lo, reverse,
                             (empty, empty, empty, np.zeros(0), np.zeros(0), np.zeros(0),
                              np.zeros(0, dtype=bool)))
    logc[0] = 0.0
    vals, counts = np.unique(f2, return_counts=True)
    mult = counts[np.searchsorted(vals, f2)]
    if np.any(mult > 2):
        raise AssertionError("a chain rate appeared more than twice")
    return ChainSpectrum(f2, logc, mult, lo, reverse, _partial_fraction_terms(f2, logc))


def _kernel_mp(spec: ChainSpectrum, i: int, j: int, tau: float, dps: int) -> float:
    """Same partial-fraction sum as the float path, at ``dps`` digits."""
    with mpmath.workdps(dps):
        f = [mpmath.mpf(int(v)) / 2 for v in spec.f2[i:j + 1]]
        w = mpmath.mpf(1)
        for k in range(i + 1, j + 1):
            w *= mpmath.sqrt(mpmath.mpf(int(round(math.exp(2 * spec.log_coupling[k])))))
        t = mpmath.mpf(tau)
        total = mpmath.mpf(0)
        seen = set()
        for a, fq in enumerate(f):
            key = int(spec.f2[i + a])
            if key in seen:
                continue
            seen.add(key)
            h = mpmath.mpf(1)
            s = mpmath.mpf(0)
            dbl = False
            for b, fp in enumerate(f):
                if b == a:
                    continue
                if int(spec.f2[i + b]) == key:
                    dbl = True
                    continue
                h /= fp - fq
                s += 1 / (fp - fq)
            term = h * mpmath.exp(-fq * t)
            total += term * (t - s) if dbl else term
        return float(w * total)


def semigroup_propagator(spec: ChainSpectrum, tau: float) -> tuple[np.ndarray, int]:
    """Kernel matrix from a short-time series plus repeated squaring.

    Returns the matrix and the number of squarings used.
    """
    L = len(spec.f2)
    f = spec.f_values
    lo, hi = float(f.min()), float(f.max())
    half = 0.5 * (hi - lo)
    ctr = 0.5 * (hi + lo)
    s = 0 if tau * half <= 0.5 else int(math.ceil(math.log2(tau * half / 0.5)))
    tp = tau / 2.0 ** s
    M = np.diag(tp * (ctr - f))
    if L > 1:
        M[np.arange(1, L), np.arange(L - 1)] = tp * np.exp(spec.log_coupling[1:])
    term = np.eye(L)
    out = np.eye(L)
    # element (j, i) first appears at order j - i; 20 more orders at |tp*half| <= 0.5
    for k in range(1, L + 20):
        term = term @ M / k
        out += term
    out *= math.exp(-ctr * tp)
    for _ in range(s):
        out = out @ out
    return out, s


def propagator(spec: ChainSpectrum, tau: float):
    """Float kernel matrix G[j, i] and its rounding-size matrix B[j, i]."""
    L = len(spec.f2)
    i, j, q, logmag, sign, shift, dbl = spec.terms
    fq = spec.f2[q] / 2.0
    logt = logmag - fq * tau
    over = logt > 700.0
    mag = np.exp(np.minimum(logt, 700.0))
    t = sign * mag * np.where(dbl, tau - shift, 1.0)
    size = mag * np.where(dbl, np.abs(tau) + np.abs(shift), 1.0)
    flat = j * L + i
    G = np.bincount(flat, weights=t, minlength=L * L).reshape(L, L)
    B = np.bincount(flat, weights=size, minlength=L * L).reshape(L, L)
    bad = np.zeros(L * L, dtype=bool)
    bad[flat[over]] = True
    return G, B, bad.reshape(L, L)


def _kernel_bounds(spec: ChainSpectrum, i: int, j: int, tau: float) -> float:
    """Lower bound on the kernel: tau^l/l! exp(-f_max tau) times the couplings."""
    l = j - i
    fmax = spec.f2[i:j + 1].max() / 2.0
    logw = spec.log_coupling[i + 1:j + 1].sum()
    return logw + l * math.log(tau) - log_factorial(l) - fmax * tau


def evolve_chain(spec: ChainSpectrum, v0: np.ndarray, tau: float, atol: float = 1e-14,
                 refine: str = "semigroup"):
    """Propagate one chain vector (full length K+1, indexed by m).

    Returns the new vector, the per-element condition estimate, the number
    of kernels recomputed at higher precision, and a per-element bound on
    the rounding error left in the result.
    """
    lo = spec.offset
    L = len(spec.f2)
    seg = v0[lo:lo + L]
    if spec.reverse:
        seg = seg[::-1]
    if tau == 0.0 or L == 0:
        return v0.copy(), np.ones(len(v0)), 0, np.zeros(len(v0))
    G, B, bad = propagator(spec, tau)
    amp = np.abs(seg)
    err = EPS * (L + 2) * B * amp[None, :]
    # a row sums L kernels, so each may use 1/L of the budget
    redo = np.argwhere(np.tril(bad | (err > atol / L)) & (amp[None, :] > 0))
    cond_mat = B.copy()
    if len(redo) and refine == "semigroup":
        S, nsq = semigroup_propagator(spec, tau)
        jj, ii = redo[:, 0], redo[:, 1]
        G[jj, ii] = S[jj, ii]
        # products of nonnegative matrices: error grows with the squarings only
        cond_mat[jj, ii] = np.abs(S[jj, ii]) * (1.0 + nsq + 20.0 / (L + 2))
    elif refine == "mpmath":
        for jj, ii in redo:
            jj, ii = int(jj), int(ii)
            low = _kernel_bounds(spec, ii, jj, tau)
            big = math.log(max(B[jj, ii], 1e-300))
            dps = 20 + max(0, int((big - low) / math.log(10)) + 1)
            G[jj, ii] = _kernel_mp(spec, ii, jj, tau, dps)
            cond_mat[jj, ii] = abs(G[jj, ii])
    elif len(redo):
        raise DomainError(f"unknown refinement {refine!r}")
    out_seg = G @ seg
    size = cond_mat @ amp
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where(size > 0, size / np.abs(out_seg), 1.0)
    if spec.reverse:
        out_seg, cond = out_seg[::-1], cond[::-1]
    out = np.zeros_like(v0)
    out[lo:lo + L] = out_seg
    cond_full = np.ones(len(v0))
    cond_full[lo:lo + L] = cond
    noise = np.zeros(len(v0))
    noise[lo:lo + L] = (EPS * (L + 2) * size)[::-1] if spec.reverse else EPS * (L + 2) * size
    return out, cond_full, len(redo), noise


def _evolve(rho: DensityTensor, dtau: float, direction: str, atol: float,
            threads: int | None, cond_threshold: float, refine: str) -> DensityTensor:
    if not dtau >= 0 or not math.isfinite(dtau):
        raise DomainError("dtau must be finite and >= 0")
    keys = sorted(rho.chains)

    def work(key):
        return evolve_chain(chain_spectrum(*key, direction), rho.chains[key], float(dtau), atol,
                            refine)

    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(work, keys))
    else:
        results = [work(k) for k in keys]
    chains = {k: r[0] for k, r in zip(keys, results)}
    worst = max((float(np.max(r[1])) for r in results), default=1.0)
    flagged = [(k, int(np.sum(r[1] > cond_threshold))) for k, r in zip(keys, results)
               if np.any(r[1] > cond_threshold)]
    refined = sum(r[2] for r in results)
    # only cancellation that is visible above the absolute tolerance is worth a warning
    loud = sum(int(np.sum((r[1] > cond_threshold) & (r[3] > atol))) for r in results)
    if loud:
        warnings.warn(f"{loud} elements exceed condition "
                      f"{cond_threshold:g}; cross-check them with the oracle",
                      ConditioningWarning, stacklevel=3)
    return rho.with_chains(chains, rho.time + dtau, direction=direction,
                           max_condition=worst, flagged=flagged, refined=refined)


def evolve_stokes(rho: DensityTensor, dtau: float, *, atol: float = 1e-14,
                  threads: int | None = None,
                  cond_threshold: float = COND_THRESHOLD,
                  refine: str = "semigroup") -> DensityTensor:
    """Exact Stokes evolution of every chain by ``dtau``."""
    return _evolve(rho, dtau, "stokes", atol, threads, cond_threshold, refine)


def evolve_antistokes(rho: DensityTensor, dtau: float, *, atol: float = 1e-14,
                      threads: int | None = None,
                      cond_threshold: float = COND_THRESHOLD,
                      refine: str = "semigroup") -> DensityTensor:
    """Exact anti-Stokes evolution; here m labels the anti-Stokes mode."""
    return _evolve(rho, dtau, "antistokes", atol, threads, cond_threshold, refine)


def steady_state(rho: DensityTensor) -> DensityTensor:
    """Long-time limit of the Stokes evolution.

    Only the zero-rate element of each diagonal chain survives, i.e. the
    entry with no pump photons, and it collects the whole chain's mass.
    Off-diagonal chains have strictly positive rates and vanish.
    """
    chains = {}
    for (K, nu, mu), v in rho.chains.items():
        out = np.zeros_like(v)
        if nu == 0 and mu == 0:
            out[K] = v.sum()
        chains[(K, nu, mu)] = out
    return rho.with_chains(chains, math.inf, direction="stokes")


def mixture_expand(kernel_family, weights_laser, weights_stokes) -> DensityTensor:
    """Weighted sum of number-state solutions.

    ``kernel_family(n0, m0)`` returns the evolved tensor started from
    |n0> x |m0>; the weights are the initial diagonal distributions.
    """
    total = None
    for n0, wl in enumerate(weights_laser):
        if wl == 0:
            continue
        for m0, ws in enumerate(weights_stokes):
            if ws == 0:
                continue
            part = kernel_family(n0, m0)
            w = wl * ws
            if total is None:
                total = {k: w * v for k, v in part.chains.items()}
                base = part
            else:
                for k, v in part.chains.items():
                    total[k] = total[k] + w * v
    if total is None:
        raise DomainError("all mixture weights are zero")
    return base.with_chains(total, base.time, mixture=True)


def split_kernel(f: list, tau: float, lam: int) -> float:
    """Kernel for rates ``f[0..l]`` via the two-group convolution form.

    Rates up to position ``lam`` and rates after it must each be distinct;
    a coincidence across the groups turns into a tau*exp term.
    """
    A = [Fraction(x) for x in f[:lam + 1]]
    Bg = [Fraction(x) for x in f[lam + 1:]]
    if len(set(A)) != len(A) or len(set(Bg)) != len(Bg):
        raise DomainError("each group must have distinct rates")

    def weights(group):
        out = []
        for q, fq in enumerate(group):
            w = Fraction(1)
            for p, fp in enumerate(group):
                if p != q:
                    w /= fp - fq
            out.append(w)
        return out

    wa = weights(A)
    if not Bg:
        return float(sum(float(w) * math.exp(-float(a) * tau) for w, a in zip(wa, A)))
    wb = weights(Bg)
    total = 0.0
    for a, x in zip(wa, A):
        for b, y in zip(wb, Bg):
            if x == y:
                conv = tau * math.exp(-float(x) * tau)
            else:
                conv = (math.exp(-float(x) * tau) - math.exp(-float(y) * tau)) / float(y - x)
            total += float(a * b) * conv
    return total

"""Two-mode density matrices stored as chains of conserved total photon number.

An element ``rho_{n,m}(nu,mu) = <n,m| rho |n+nu, m+mu>`` lives in chain
``(K, nu, mu)`` with ``K = n + m``. The master equations only couple
neighbours inside one chain, so chains evolve independently.

Chain vectors are stored with length ``K + 1`` and indexed by ``m``;
entries that would need a negative photon number are kept at zero.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import logsumexp

from .numkernel import DomainError, TruncationError, log_factorial

DEFAULT_TAIL_TOL = 1e-10


def _displaced_thermal(xi: complex, nbar: float, nu: int, n: np.ndarray) -> np.ndarray:
    """<n| rho |n+nu> for a coherent amplitude ``xi`` on top of chaotic noise ``nbar``.

    The Laguerre form of the element is expanded into its positive series
    so that nbar -> 0 (pure coherent light) needs no special casing.
    """
    n = np.asarray(n, dtype=np.int64)
    out = np.zeros(n.shape, dtype=complex)
    k = abs(nu)
    lo = np.where(nu >= 0, n, n + nu)  # the smaller of the two Fock labels
    hi = lo + k
    ok = lo >= 0
    a2 = abs(xi) ** 2
    if k > 0 and a2 == 0.0:
        return out
    if nbar == 0.0 and a2 == 0.0:
        out[ok & (lo == 0) & (k == 0)] = 1.0
        return out
    lf = log_factorial
    phase = np.exp(1j * np.angle(xi) * k)
    if nu >= 0:
        phase = np.conj(phase)  # <n|rho|n+k> carries conj(xi)^k
    base = -a2 / (1 + nbar) - np.log1p(nbar) + (0.5 * k * np.log(a2) if k else 0.0)
    for idx in np.flatnonzero(ok):
        s, big = int(lo.flat[idx]), int(hi.flat[idx])
        j = np.arange(s + 1)
        # binom(s+k, s-j) nbar^(s-j) (a2/(1+nbar))^j / j!
        terms = lf(s + k) - lf(s - j) - lf(k + j) - lf(j)
        if nbar > 0:
            terms = terms + (s - j) * np.log(nbar) - s * np.log1p(nbar)
        else:
            terms = np.where(j == s, terms, -np.inf)
        if a2 > 0:
            terms = terms + j * np.log(a2) - j * np.log1p(nbar)
        else:
            terms = np.where(j == 0, terms, -np.inf)
        logv = base + 0.5 * (lf(s) - lf(big)) - k * np.log1p(nbar) + logsumexp(terms)
        out.flat[idx] = np.exp(logv) * phase
    return out


@dataclass(frozen=True)
class ModeState:
    """Single-mode initial state.

    ``kind`` is one of number, coherent, chaotic, coherent_plus_chaotic, raw.
    For raw states ``elements`` maps nu to an array of <n|rho|n+nu> over n.
    """

    kind: str
    cutoff: int
    n0: int = 0
    xi: complex = 0j
    mean_ch: float = 0.0
    elements: dict | None = field(default=None, compare=False)

    @classmethod
    def number(cls, n0: int) -> "ModeState":
        if n0 < 0:
            raise DomainError("photon number must be >= 0")
        return cls("number", cutoff=int(n0), n0=int(n0))

    @classmethod
    def coherent(cls, xi: complex, tail_tol: float = DEFAULT_TAIL_TOL) -> "ModeState":
        return cls.coherent_plus_chaotic(xi, 0.0, tail_tol, kind="coherent")

    @classmethod
    def chaotic(cls, mean: float, tail_tol: float = DEFAULT_TAIL_TOL) -> "ModeState":
        return cls.coherent_plus_chaotic(0j, mean, tail_tol, kind="chaotic")

    @classmethod
    def coherent_plus_chaotic(cls, xi: complex, mean_ch: float,
                              tail_tol: float = DEFAULT_TAIL_TOL,
                              kind: str = "coherent_plus_chaotic") -> "ModeState":
        if mean_ch < 0:
            raise DomainError("chaotic mean must be >= 0")
        probe = cls(kind, cutoff=0, xi=complex(xi), mean_ch=float(mean_ch))
        return replace(probe, cutoff=probe._cutoff_for(tail_tol))

    @classmethod
    def raw(cls, elements: dict, cutoff: int | None = None) -> "ModeState":
        els = {int(k): np.asarray(v, dtype=complex) for k, v in elements.items()}
        if 0 not in els:
            raise DomainError("raw state needs the diagonal (nu = 0) entries")
        # fill missing negative offsets from hermiticity
        for nu in list(els):
            if nu > 0 and -nu not in els:
                v = els[nu]
                neg = np.zeros(len(v) + nu, dtype=complex)
                neg[nu:] = np.conj(v)
                els[-nu] = neg
        if cutoff is None:
            cutoff = len(els[0]) - 1
        return cls("raw", cutoff=int(cutoff), elements=els)

    def _cutoff_for(self, tail_tol: float) -> int:
        mean = abs(self.xi) ** 2 + self.mean_ch
        sd = np.sqrt(mean + self.mean_ch ** 2 + 2 * abs(self.xi) ** 2 * self.mean_ch)
        top = int(mean + 40 * sd + 60)
        p = self.element(0, np.arange(top + 1)).real
        tail = np.cumsum(p[::-1])[::-1]  # tail[N] = sum_{n >= N} p_n
        over = np.flatnonzero(tail[1:] < tail_tol)
        return int(over[0]) if over.size else top

    def element(self, nu: int, n) -> np.ndarray:
        """<n| rho |n+nu> for each entry of ``n`` (zero where n+nu < 0)."""
        n = np.atleast_1d(np.asarray(n, dtype=np.int64))
        if self.kind == "number":
            return np.where((n == self.n0) & (nu == 0), 1.0 + 0j, 0j)
        if self.kind == "raw":
            out = np.zeros(n.shape, dtype=complex)
            v = self.elements.get(int(nu))
            if v is None:
                return out
            ok = (n >= 0) & (n + nu >= 0) & (n < len(v))
            out[ok] = v[n[ok]]
            return out
        return _displaced_thermal(self.xi, self.mean_ch, int(nu), n)

    def diagonal(self, size: int | None = None) -> np.ndarray:
        size = self.cutoff + 1 if size is None else size
        return self.element(0, np.arange(size)).real

    def trace(self) -> float:
        return float(self.diagonal().sum())


@dataclass(frozen=True)
class MomentSet:
    """Scalar observables at one time.

    Amplitude entries follow the creation-operator convention:
    ``a_L = <a_L^+>``, ``a_L2 = <a_L^+2>``, ``a_L_a_S = <a_L^+ a_S^+>`` and
    ``a_Ldag_a_S = <a_L^+ a_S>``.
    """

    mean_n: float
    mean_n2: float
    mean_m: float
    mean_m2: float
    cross_nm: float
    a_L: complex
    a_L2: complex
    a_S: complex
    a_S2: complex
    a_L_a_S: complex
    a_Ldag_a_S: complex
    time: float = 0.0
    trace: float = 1.0


def chain_bounds(K: int, nu: int, mu: int) -> tuple[int, int]:
    """Inclusive range of m with all four photon labels nonnegative."""
    return max(0, -mu), min(K, K + nu)


@dataclass(frozen=True)
class DensityTensor:
    chains: dict
    cutoff_K: int
    nu_max: int = 2
    mu_max: int = 2
    time: float = 0.0
    tail_tol: float = DEFAULT_TAIL_TOL
    info: dict = field(default_factory=dict, compare=False)

    def element(self, n: int, m: int, nu: int, mu: int) -> complex:
        K = n + m
        v = self.chains.get((K, nu, mu))
        if v is None or n < 0 or m < 0 or n + nu < 0 or m + mu < 0:
            return 0j
        return complex(v[m])

    def trace(self) -> float:
        return float(sum(self.chains[(K, 0, 0)].real.sum() for K in range(self.cutoff_K + 1)))

    def with_chains(self, chains: dict, time: float, **info) -> "DensityTensor":
        return replace(self, chains=chains, time=time, info=dict(info))

    def items(self):
        """Yield (K, n, m, nu, mu, value) for every stored element."""
        for (K, nu, mu), v in sorted(self.chains.items()):
            lo, hi = chain_bounds(K, nu, mu)
            for m in range(lo, hi + 1):
                yield K, K - m, m, nu, mu, complex(v[m])

    def to_text(self) -> str:
        buf = io.StringIO()
        buf.write(f"# cutoff_K={self.cutoff_K} nu_max={self.nu_max} "
                  f"mu_max={self.mu_max} time={self.time!r}\n")
        buf.write("K,n,m,nu,mu,re,im\n")
        for K, n, m, nu, mu, z in self.items():
            buf.write(f"{K},{n},{m},{nu},{mu},{z.real!r},{z.imag!r}\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "DensityTensor":
        lines = text.splitlines()
        head = dict(kv.split("=") for kv in lines[0].lstrip("# ").split())
        cutoff = int(head["cutoff_K"])
        nmax, mmax = int(head["nu_max"]), int(head["mu_max"])
        chains = {(K, nu, mu): np.zeros(K + 1, dtype=complex)
                  for K in range(cutoff + 1)
                  for nu in range(-nmax, nmax + 1) for mu in range(-mmax, mmax + 1)}
        for row in lines[2:]:
            if not row.strip():
                continue
            K, n, m, nu, mu, re, im = row.split(",")
            chains[(int(K), int(nu), int(mu))][int(m)] = complex(float(re), float(im))
        return cls(chains, cutoff, nmax, mmax, float(head["time"]))


def build_product_state(laser: ModeState, stokes: ModeState, cutoff_K: int,
                        nu_max: int = 2, mu_max: int = 2,
                        tail_tol: float = DEFAULT_TAIL_TOL) -> DensityTensor:
    """Factorized initial tensor rho_L(nu) rho_S(mu) truncated at n + m <= cutoff_K."""
    for name, st in (("laser", laser), ("scattered", stokes)):
        if abs(st.trace() - 1.0) > max(tail_tol, 1e-12) * 10:
            raise TruncationError(f"{name} state is not normalized at its cutoff",
                                  tail_mass=1.0 - st.trace())
    idx = np.arange(cutoff_K + 1)
    lasers = {nu: laser.element(nu, idx) for nu in range(-nu_max, nu_max + 1)}
    scats = {mu: stokes.element(mu, idx) for mu in range(-mu_max, mu_max + 1)}
    chains = {}
    for K in range(cutoff_K + 1):
        m = np.arange(K + 1)
        for nu, pl in lasers.items():
            for mu, ps in scats.items():
                v = pl[K - m] * ps[m]
                lo, hi = chain_bounds(K, nu, mu)
                v[:lo] = 0
                v[hi + 1:] = 0
                chains[(K, nu, mu)] = v
    rho = DensityTensor(chains, cutoff_K, nu_max, mu_max, 0.0, tail_tol)
    tail = 1.0 - rho.trace()
    if tail > tail_tol:
        raise TruncationError(f"cutoff_K={cutoff_K} leaves tail mass {tail:.3e} > {tail_tol:g}",
                              tail_mass=tail)
    return rho


def hermitian_partner(n: int, m: int, nu: int, mu: int) -> tuple[int, int, int, int]:
    """Index of the element whose conjugate equals rho_{n,m}(nu,mu)."""
    if n + nu < 0 or m + mu < 0:
        raise DomainError("partner index would be negative")
    return n + nu, m + mu, -nu, -mu


def hermiticity_error(rho: DensityTensor) -> float:
    worst = 0.0
    for K, n, m, nu, mu, z in rho.items():
        pn, pm, pnu, pmu = hermitian_partner(n, m, nu, mu)
        if pn + pm > rho.cutoff_K:
            continue
        worst = max(worst, abs(np.conj(z) - rho.element(pn, pm, pnu, pmu)))
    return worst


def stokes_marginal(rho: DensityTensor, mu: int = 0) -> np.ndarray:
    """Scattered-mode elements <m|rho_S|m+mu>, pump traced out (pump-diagonal terms only)."""
    out = np.zeros(rho.cutoff_K + 1, dtype=complex)
    for K in range(rho.cutoff_K + 1):
        v = rho.chains.get((K, 0, mu))
        if v is not None:
            out[:K + 1] += v
    return out


def laser_marginal(rho: DensityTensor, nu: int = 0) -> np.ndarray:
    """Pump-mode elements <n|rho_L|n+nu>, scattered mode traced out."""
    out = np.zeros(rho.cutoff_K + 1, dtype=complex)
    for K in range(rho.cutoff_K + 1):
        v = rho.chains.get((K, nu, 0))
        if v is not None:
            out[:K + 1] += v[::-1]  # index by n = K - m
    return out


def extract_moments(rho: DensityTensor) -> MomentSet:
    acc = dict(mean_n=0.0, mean_n2=0.0, mean_m=0.0, mean_m2=0.0, cross_nm=0.0,
               a_L=0j, a_L2=0j, a_S=0j, a_S2=0j, a_L_a_S=0j, a_Ldag_a_S=0j)
    trace = 0.0
    ch = rho.chains
    for K in range(rho.cutoff_K + 1):
        m = np.arange(K + 1, dtype=float)
        n = K - m
        v = ch[(K, 0, 0)]
        trace += v.real.sum()
        acc["mean_n"] += (n * v.real).sum()
        acc["mean_n2"] += (n * n * v.real).sum()
        acc["mean_m"] += (m * v.real).sum()
        acc["mean_m2"] += (m * m * v.real).sum()
        acc["cross_nm"] += (n * m * v.real).sum()
        if (K, 1, 0) in ch:
            acc["a_L"] += (np.sqrt(n + 1) * ch[(K, 1, 0)]).sum()
        if (K, 2, 0) in ch:
            acc["a_L2"] += (np.sqrt((n + 1) * (n + 2)) * ch[(K, 2, 0)]).sum()
        if (K, 0, 1) in ch:
            acc["a_S"] += (np.sqrt(m + 1) * ch[(K, 0, 1)]).sum()
        if (K, 0, 2) in ch:
            acc["a_S2"] += (np.sqrt((m + 1) * (m + 2)) * ch[(K, 0, 2)]).sum()
        if (K, 1, 1) in ch:
            acc["a_L_a_S"] += (np.sqrt((n + 1) * (m + 1)) * ch[(K, 1, 1)]).sum()
        if (K, 1, -1) in ch:
            acc["a_Ldag_a_S"] += (np.sqrt((n + 1) * m) * ch[(K, 1, -1)]).sum()
    return MomentSet(**{k: (complex(v) if isinstance(v, complex) else float(v))
                        for k, v in acc.items()}, time=rho.time, trace=float(trace))

"""Brute-force integrators for the chain equations.

Two unrelated mechanisms are offered so that neither can vouch for the
closed-form solver on its own: a fixed-step classical Runge-Kutta stepper
and a Taylor-series matrix exponential with scaling and squaring.

A chain ``v`` obeys ``dv_k/dtau = diagonal[k] v_k + subdiagonal[k] v_src(k)``
where ``src(k) = k - 1`` for Stokes chains and ``k + 1`` for anti-Stokes
chains. Several chains can be stacked into one generator as long as the
couplings across a seam are zero.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fock_core import DensityTensor, chain_bounds
from .numkernel import DomainError


class StabilityError(ValueError):
    """RK4 step too large for the fastest decay rate."""


@dataclass(frozen=True)
class ChainGenerator:
    diagonal: np.ndarray
    subdiagonal: np.ndarray
    direction: str = "stokes"

    def apply(self, v: np.ndarray) -> np.ndarray:
        out = self.diagonal.reshape((-1,) + (1,) * (v.ndim - 1)) * v
        c = self.subdiagonal.reshape(out.shape[:1] + (1,) * (v.ndim - 1))
        if self.direction == "stokes":
            out[1:] += c[1:] * v[:-1]
        else:
            out[:-1] += c[:-1] * v[1:]
        return out

    def dense(self) -> np.ndarray:
        L = len(self.diagonal)
        A = np.diag(self.diagonal.astype(float))
        k = np.arange(L)
        if self.direction == "stokes":
            A[k[1:], k[1:] - 1] = self.subdiagonal[1:]
        else:
            A[k[:-1], k[:-1] + 1] = self.subdiagonal[:-1]
        return A

    @property
    def max_rate(self) -> float:
        return float(np.max(np.abs(self.diagonal), initial=0.0))


def stokes_generator(K: int, nu: int, mu: int) -> ChainGenerator:
    """Generator on the full length-(K+1) chain indexed by m; invalid slots are inert."""
    m = np.arange(K + 1, dtype=float)
    n = K - m
    lo, hi = chain_bounds(K, nu, mu)
    ok = (m >= lo) & (m <= hi)
    d = -0.5 * (n * (m + 1) + (n + nu) * (m + mu + 1))
    c = np.sqrt(np.clip((n + 1) * (n + nu + 1) * m * (m + mu), 0, None))
    src_ok = np.zeros_like(ok)
    src_ok[1:] = ok[:-1]
    return ChainGenerator(np.where(ok, d, 0.0), np.where(ok & src_ok, c, 0.0), "stokes")


def antistokes_generator(K: int, nu: int, mu: int) -> ChainGenerator:
    """Anti-Stokes chain: element (n, m) is fed by (n-1, m+1)."""
    m = np.arange(K + 1, dtype=float)
    n = K - m
    lo, hi = chain_bounds(K, nu, mu)
    ok = (m >= lo) & (m <= hi)
    d = -0.5 * ((n + 1) * m + (n + nu + 1) * (m + mu))
    c = np.sqrt(np.clip(n * (n + nu) * (m + 1) * (m + mu + 1), 0, None))
    src_ok = np.zeros_like(ok)
    src_ok[:-1] = ok[1:]
    return ChainGenerator(np.where(ok, d, 0.0), np.where(ok & src_ok, c, 0.0), "antistokes")


def stack_generators(gens: list[ChainGenerator]) -> ChainGenerator:
    """Concatenate chains of one direction into a single block generator."""
    direction = gens[0].direction
    subs = []
    for g in gens:
        s = g.subdiagonal.copy()
        # cut the coupling that would reach across the seam
        if direction == "stokes":
            s[0] = 0.0
        else:
            s[-1] = 0.0
        subs.append(s)
    return ChainGenerator(np.concatenate([g.diagonal for g in gens]),
                          np.concatenate(subs), direction)


def default_step(gen: ChainGenerator) -> float:
    rate = gen.max_rate
    return 1e-3 if rate == 0 else min(1e-3, 0.1 / rate)


def integrate_chain(gen: ChainGenerator, v0, dtau: float, h: float | None = None) -> np.ndarray:
    """Classical RK4 with fixed step ``h``; a shorter final step closes the interval."""
    if dtau < 0:
        raise DomainError("dtau must be >= 0")
    h = default_step(gen) if h is None else h
    if h <= 0:
        raise DomainError("step must be positive")
    if h * gen.max_rate > 0.5:
        raise StabilityError(f"h*max|f| = {h * gen.max_rate:.3g} exceeds 0.5")
    v = np.array(v0, dtype=complex)
    nfull = int(np.floor(dtau / h + 1e-9))
    rest = dtau - nfull * h
    f = gen.apply
    for step in [h] * nfull + ([rest] if rest > 1e-15 else []):
        k1 = f(v)
        k2 = f(v + 0.5 * step * k1)
        k3 = f(v + 0.5 * step * k2)
        k4 = f(v + step * k3)
        v = v + step / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return v


def _expm_taylor(A: np.ndarray) -> np.ndarray:
    norm = np.abs(A).sum(axis=0).max() if A.size else 0.0
    s = max(0, int(np.ceil(np.log2(norm / 0.5))) if norm > 0.5 else 0)
    B = A / 2.0 ** s
    E = np.eye(len(A))
    term = np.eye(len(A))
    for k in range(1, 30):
        term = term @ B / k
        E = E + term
        if np.abs(term).max() < 1e-18 * np.abs(E).max():
            break
    for _ in range(s):
        E = E @ E
    return E


def expm_chain(gen: ChainGenerator, v0, dtau: float) -> np.ndarray:
    """exp(dtau * A) v0 for a chain of length <= 200."""
    if len(gen.diagonal) > 200:
        raise DomainError("expm_chain is limited to chains of length 200")
    if dtau < 0:
        raise DomainError("dtau must be >= 0")
    return _expm_taylor(dtau * gen.dense()) @ np.asarray(v0, dtype=complex)


def evolve_tensor(rho: DensityTensor, taus, method: str = "rk4", direction: str = "stokes",
                  h: float | None = None) -> list[DensityTensor]:
    """Oracle evolution of a whole tensor to each time in the increasing list ``taus``.

    The RK4 route stacks every chain into one block system and steps it
    through the grid once; the expm route handles chains one by one.
    """
    taus = [float(t) for t in taus]
    if any(b < a for a, b in zip(taus, taus[1:])) or (taus and taus[0] < 0):
        raise DomainError("taus must be nonnegative and increasing")
    make = stokes_generator if direction == "stokes" else antistokes_generator
    keys = sorted(rho.chains)
    gens = [make(*k) for k in keys]
    out_chains = [dict() for _ in taus]
    if method == "rk4":
        big = stack_generators(gens)
        v = np.concatenate([rho.chains[k] for k in keys])
        step = h if h is not None else default_step(big)
        now = 0.0
        sizes = np.cumsum([0] + [len(g.diagonal) for g in gens])
        for i, t in enumerate(taus):
            v = integrate_chain(big, v, t - now, step)
            now = t
            for j, k in enumerate(keys):
                out_chains[i][k] = v[sizes[j]:sizes[j + 1]].copy()
    elif method == "expm":
        for k, g in zip(keys, gens):
            for i, t in enumerate(taus):
                out_chains[i][k] = expm_chain(g, rho.chains[k], t)
    else:
        raise DomainError(f"unknown oracle method {method!r}")
    return [rho.with_chains(c, rho.time + t, oracle=method) for c, t in zip(out_chains, taus)]

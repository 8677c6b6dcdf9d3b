"""Undepleted-pump approximation of Stokes scattering.

The pump photon number n is treated as a constant of motion, so each pump
Fock component amplifies the Stokes mode with gain exp(n dtau). Observables
are then pump averages of exponential weights. Off-diagonal pump offsets
nu enter only through the pump matrix element (the n ~ n + nu shortcut),
so accuracy degrades with |nu|.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.special import logsumexp, stirling2

from .fock_core import MomentSet, ModeState, build_product_state, extract_moments
from .numkernel import DomainError, TruncationError, kummer_poly, laguerre, log_factorial

_NAN = complex(np.nan, np.nan)


def _lbinom(a, b):
    return log_factorial(a) - log_factorial(b) - log_factorial(np.asarray(a) - np.asarray(b))


def _check(dtau):
    if not (math.isfinite(dtau) and dtau >= 0):
        raise DomainError("dtau must be finite and >= 0")


# --- density matrix -----------------------------------------------------------

def _rho_row(laser: ModeState, stokes: ModeState, nu: int, mu: int, n: np.ndarray, m: int,
             dtau: float) -> np.ndarray:
    """Binomial-sum element for a vector of pump labels ``n`` at fixed Stokes label ``m``."""
    n = np.atleast_1d(np.asarray(n, dtype=np.int64))
    out = np.zeros(n.shape, dtype=complex)
    if m < 0 or m + mu < 0:
        return out
    l = np.arange(m + 1)
    rs = stokes.element(mu, m - l)
    keep = rs != 0
    if not keep.any():
        return out
    l, rs = l[keep], rs[keep]
    pump = laser.element(nu, n)
    x = n * dtau
    with np.errstate(divide="ignore"):
        ly = np.log(np.expm1(x))                      # -inf at n dtau = 0
    gain = l[None, :] * np.where(np.isfinite(ly), ly, 0.0)[:, None]
    gain = np.where((l[None, :] > 0) & ~np.isfinite(ly)[:, None], -np.inf, gain)
    logw = (0.5 * (_lbinom(m, l) + _lbinom(m + mu, l)))[None, :] + gain \
        - (x * (m + 1 + mu / 2.0))[:, None] + np.log(np.abs(rs))[None, :]
    top = np.max(logw, axis=1, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    s = np.sum(np.exp(logw - top) * np.exp(1j * np.angle(rs))[None, :], axis=1)
    out[:] = pump * s * np.exp(top[:, 0])
    return out


def rho_approx(laser: ModeState, stokes: ModeState, nu: int, mu: int, n: int, m: int,
               dtau: float) -> complex:
    """Undepleted-pump element <n,m| rho |n+nu, m+mu> after a scaled time ``dtau``.

    Sum over l of sqrt(binom(m,l) binom(m+mu,l)) (e^{n dtau}-1)^l
    e^{-n(m+1+mu/2) dtau} rho^L_n(nu) rho^S_{m-l}(mu), evaluated in log space.
    """
    _check(dtau)
    if mu < 0:
        raise DomainError("mu must be >= 0; use hermiticity for negative offsets")
    return complex(_rho_row(laser, stokes, int(nu), int(mu), np.array([n]), int(m), dtau)[0])


def stokes_distribution(laser: ModeState, stokes: ModeState, dtau: float,
                        mmax: int, nmax: int | None = None) -> np.ndarray:
    """Stokes photon-number distribution p(m), m = 0..mmax, pump traced out."""
    _check(dtau)
    n = np.arange((laser.cutoff if nmax is None else nmax) + 1)
    return np.array([_rho_row(laser, stokes, 0, 0, n, m, dtau).real.sum()
                     for m in range(mmax + 1)])


def number_pump_coherent_stokes(n0: int, alpha_s: complex, dtau: float, m,
                                form: str = "hypergeometric") -> np.ndarray:
    """p(m) for a pump in Fock state n0 and a coherent Stokes seed.

    ``form="hypergeometric"`` uses 1F1(-m; 1; -|alpha|^2/(e^{n0 dtau}-1)),
    ``form="laguerre"`` the coherent-plus-chaotic Laguerre form.
    """
    _check(dtau)
    m = np.atleast_1d(np.asarray(m, dtype=np.int64))
    a = abs(alpha_s) ** 2
    x = n0 * dtau
    if x == 0.0:                                     # no gain: Poisson seed
        return np.exp(m * np.log(a) - a - log_factorial(m)) if a > 0 else (m == 0).astype(float)
    y = math.expm1(x)
    if a == 0.0:
        return np.exp(m * math.log(y) - (m + 1) * math.log1p(y))
    out = np.empty(m.shape)
    if form == "hypergeometric":
        for i, mi in enumerate(m):
            f = kummer_poly(int(mi), 1.0, -a / y)
            logf = math.log(f) if math.isfinite(f) else float(mpmath.log(mpmath.hyp1f1(-int(mi), 1, -a / y)))
            out[i] = math.exp(-a - x + mi * math.log(-math.expm1(-x)) + logf)
    elif form == "laguerre":
        mc, mch = a * math.exp(x), y
        z = mc / (mch * (1 + mch))
        for i, mi in enumerate(m):
            L = laguerre(int(mi), 0.0, -z)
            if math.isfinite(L):
                logL = math.log(L)
            else:                                    # positive series, summed in logs
                j = np.arange(mi + 1)
                logL = logsumexp(_lbinom(mi, j) - log_factorial(j) + j * math.log(z))
            out[i] = math.exp(mi * math.log(mch) - (mi + 1) * math.log1p(mch)
                              - mc / (1 + mch) + logL)
    else:
        raise DomainError(f"unknown form {form!r}")
    return out


def bose_einstein(mean: float, m) -> np.ndarray:
    m = np.asarray(m)
    if mean == 0:
        return (m == 0).astype(float)
    return np.exp(m * math.log(mean) - (m + 1) * math.log1p(mean))


# --- pump-averaged moments ---------------------------------------------------------

_EXTEND_LIMIT = 200_000


def _pump_sums(laser: ModeState, dtau: float, tol: float = 1e-14) -> dict:
    """log of sum rho_n e^{k n dtau} (k = 1, 2), log of sum n rho_n e^{n dtau}, and <n>, <n^2>.

    Coherent and number pumps use closed forms. Other states are summed up to
    their cutoff and extended while the exponentially weighted tail still matters.
    """
    if laser.kind == "number":
        n0 = laser.n0
        return dict(l1=n0 * dtau, l2=2 * n0 * dtau,
                    ln=(math.log(n0) + n0 * dtau) if n0 else -math.inf,
                    n1=float(n0), n2=float(n0) ** 2)
    if laser.kind == "coherent":
        X = abs(laser.xi) ** 2
        return dict(l1=X * math.expm1(dtau), l2=X * math.expm1(2 * dtau),
                    ln=(math.log(X) + X * math.expm1(dtau) + dtau) if X else -math.inf,
                    n1=X, n2=X * X + X)
    top = laser.cutoff
    while True:
        n = np.arange(top + 1)
        with np.errstate(divide="ignore"):
            lp = np.log(np.clip(laser.element(0, n).real, 0.0, None))
        w2 = lp + 2 * n * dtau
        tail = w2[-1] - logsumexp(w2)
        if tail < math.log(tol) or top >= _EXTEND_LIMIT:
            break
        top *= 2
    if tail >= math.log(tol):
        raise TruncationError("pump sum with weight e^{2 n dtau} does not converge",
                              tail_mass=math.exp(tail))
    with np.errstate(divide="ignore"):
        ln_ = np.log(n.astype(float))
    p = np.exp(lp)
    return dict(l1=logsumexp(lp + n * dtau), l2=logsumexp(w2),
                ln=logsumexp(lp + ln_ + n * dtau),
                n1=float((n * p).sum()), n2=float((n * n * p).sum()))


def stokes_moments_nodep(laser: ModeState, mean_m: float, mean_m2: float,
                         dtau: float) -> MomentSet:
    """<m>, <m^2>, <nm> at dtau from the initial Stokes moments; pump moments stay constant.

    Amplitude fields are not defined in this approximation and are NaN.
    """
    _check(dtau)
    s = _pump_sums(laser, dtau)
    e1, e2, en = math.exp(s["l1"]), math.exp(s["l2"]), math.exp(s["ln"])
    m1 = (mean_m + 1) * e1 - 1
    m2 = (mean_m2 + 3 * mean_m + 2) * e2 - 3 * (mean_m + 1) * e1 + 1
    nm = (mean_m + 1) * en - s["n1"]
    return MomentSet(mean_n=s["n1"], mean_n2=s["n2"], mean_m=m1, mean_m2=m2, cross_nm=nm,
                     a_L=_NAN, a_L2=_NAN, a_S=_NAN, a_S2=_NAN, a_L_a_S=_NAN,
                     a_Ldag_a_S=_NAN, time=dtau)


# --- coherent plus chaotic superposition --------------------------------------------

@dataclass(frozen=True)
class SuperpositionParams:
    """Coherent part mean ``m_c`` plus chaotic part mean ``m_ch``."""

    m_c: float
    m_ch: float

    def __post_init__(self):
        if not (self.m_c >= 0 and self.m_ch >= 0):
            raise DomainError("superposition means must be >= 0")

    @property
    def mean(self) -> float:
        return self.m_c + self.m_ch

    @classmethod
    def from_number_pump(cls, n0: int, alpha_s: complex, dtau: float) -> "SuperpositionParams":
        _check(dtau)
        return cls(abs(alpha_s) ** 2 * math.exp(n0 * dtau), math.expm1(n0 * dtau))


def _factorial_moment(p: SuperpositionParams, r: int) -> float:
    if r == 0:
        return 1.0
    if p.m_ch > 0 and p.m_c < 1e8 * p.m_ch:
        return math.factorial(r) * p.m_ch ** r * laguerre(r, 0.0, -p.m_c / p.m_ch)
    # Laguerre expansion with m_ch^r absorbed: regular as m_ch -> 0
    return sum(math.factorial(r) * math.comb(r, j) / math.factorial(j) * p.m_c ** j * p.m_ch ** (r - j)
               for j in range(r + 1))


def _recursion_poly(r: int) -> np.ndarray:
    """Ordinary moment <m^r> as coefficients c[i, j] of m_c^i m_ch^j.

    <m^{k+1}> = m_ch(m_ch+1) d/dm_ch + m_c(2 m_ch+1) d/dm_c + (m_c + m_ch), applied to <m^k>.
    """
    c = np.zeros((r + 2, r + 2))
    c[0, 0] = 1.0
    for _ in range(r):
        new = np.zeros_like(c)
        i, j = np.nonzero(c)
        for a, b in zip(i, j):
            v = c[a, b]
            if b:
                new[a, b + 1] += b * v          # m_ch^2 d/dm_ch
                new[a, b] += b * v              # m_ch d/dm_ch
            if a:
                new[a, b + 1] += 2 * a * v      # 2 m_c m_ch d/dm_c
                new[a, b] += a * v              # m_c d/dm_c
            new[a + 1, b] += v
            new[a, b + 1] += v
        c = new
    return c


def superposition_moments(p: SuperpositionParams, r: int, kind: str = "factorial") -> float:
    """Moments of a coherent-plus-chaotic field.

    ``kind="factorial"``: <m(m-1)...(m-r+1)> = r! m_ch^r L_r(-m_c/m_ch).
    ``kind="ordinary"``: <m^r> from the derivative recursion in (m_c, m_ch).
    """
    if not (0 <= r <= 10 and int(r) == r):
        raise DomainError("moment order must be an integer in 0..10")
    if kind == "factorial":
        return float(_factorial_moment(p, int(r)))
    if kind == "ordinary":
        c = _recursion_poly(int(r))
        i, j = np.indices(c.shape)
        return float(np.sum(c * p.m_c ** i * p.m_ch ** j))
    raise DomainError(f"unknown moment kind {kind!r}")


def ordinary_from_factorial(p: SuperpositionParams, r: int) -> float:
    """<m^r> = sum_k S(r,k) <m^(k)>, with Stirling numbers of the second kind."""
    return float(sum(stirling2(r, k, exact=True) * _factorial_moment(p, k) for k in range(r + 1)))


def superposition_gamma2(p: SuperpositionParams) -> float:
    if not p.mean > 0:
        raise DomainError("gamma2 needs a positive mean")
    return 1.0 - (p.m_c / p.mean) ** 2


# --- closed forms for coherent inputs ------------------------------------------------

def coherent_nodep_moments(X: float, xs: float, dtau) -> tuple:
    """(<m>, <m^2>, <nm>) for coherent pump |alpha_L|^2 = X and Stokes |alpha_S|^2 = xs."""
    dtau = np.asarray(dtau, dtype=float)
    e1 = np.exp(X * np.expm1(dtau))
    e2 = np.exp(X * np.expm1(2 * dtau))
    m1 = (xs + 1) * e1 - 1
    m2 = (xs * xs + 4 * xs + 2) * e2 - 3 * (xs + 1) * e1 + 1
    nm = X * (xs + 1) * e1 * np.exp(dtau) - X
    return m1, m2, nm


def coherent_parametric_moments(X: float, xs: float, dtau) -> tuple:
    """Same observables with linearized gain exp(X dtau); <nm> = <m><n>."""
    dtau = np.asarray(dtau, dtype=float)
    e1 = np.exp(X * dtau)
    m1 = (xs + 1) * e1 - 1
    m2 = (xs * xs + 4 * xs + 2) * e1 ** 2 - 3 * (xs + 1) * e1 + 1
    return m1, m2, m1 * X


def series_nodep(X: float, xs: float, dtau) -> dict:
    """Second-order short-time series of the undepleted-pump observables."""
    t = np.asarray(dtau, dtype=float)
    out = dict(
        mean_m=xs + X * (1 + xs) * t + X * (X + 1) * (1 + xs) * t ** 2 / 2,
        mean_m2=xs * (1 + xs) + X * (1 + 5 * xs + 2 * xs ** 2) * t
        + X * (X + 1) * (5 + 13 * xs + 4 * xs ** 2) * t ** 2 / 2)
    if xs > 0:
        out["gamma2_S"] = 2 * X / xs * t - (X * (3 + xs) - xs ** 2 - 5 * xs - 2) * X / xs ** 2 * t ** 2
        out["g2_LS"] = (1 + 1 / xs) * t - (1 + xs) * (2 * X - xs) / xs ** 2 * t ** 2 / 2
    else:
        out["gamma2_S"] = 1 + 2 / X + 2 * t + (2 + 5 * X / 6) * t ** 2
        out["g2_LS"] = 1 / X + t / 2 + (X + 3) * t ** 2 / 12
    return out


def series_parametric(X: float, xs: float, dtau) -> dict:
    t = np.asarray(dtau, dtype=float)
    out = dict(
        mean_m=xs + X * (1 + xs) * t + X ** 2 * (1 + xs) * t ** 2 / 2,
        mean_m2=xs * (1 + xs) + X * (1 + 5 * xs + 2 * xs ** 2) * t
        + X ** 2 * (5 + 13 * xs + 4 * xs ** 2) * t ** 2 / 2)
    if xs > 0:
        out["gamma2_S"] = 2 * X / xs * t - (3 + xs) * X ** 2 / xs ** 2 * t ** 2
    else:
        out["gamma2_S"] = np.ones_like(t)
    out["g2_LS"] = np.zeros_like(t)
    return out


def _gammas(m1, m2, nm, X):
    m1, m2, nm = (np.asarray(v, dtype=float) for v in (m1, m2, nm))
    with np.errstate(divide="ignore", invalid="ignore"):
        return (m2 - m1) / m1 ** 2 - 1, nm / (m1 * X) - 1


def compare_formalisms(alpha_l: complex, alpha_s: complex, dtaus, *, exact: bool = False,
                       cutoff_k: int | None = None, threads: int | None = None) -> dict:
    """Stokes observables of four treatments side by side on a grid of scaled times.

    Keys are ``"<method>.<observable>"`` with methods ``nodep`` (closed form),
    ``nodep_series``, ``parametric`` (linearized gain), ``parametric_series``,
    ``short_time`` and, when ``exact=True``, ``exact``. Observables are
    mean_m, mean_m2, cross_nm (where defined), gamma2_S and g2_LS.
    """
    from . import short_time
    from .exact_solver import evolve_stokes

    taus = np.atleast_1d(np.asarray(dtaus, dtype=float))
    if np.any(taus < 0):
        raise DomainError("dtau must be >= 0")
    X, xs = abs(alpha_l) ** 2, abs(alpha_s) ** 2
    if X <= 0:
        raise DomainError("the pump must be populated")
    table = {"tau": taus}

    def put(method, m1, m2, nm):
        g, gls = _gammas(m1, m2, nm, X)
        table.update({f"{method}.mean_m": np.asarray(m1, float), f"{method}.mean_m2": np.asarray(m2, float),
                      f"{method}.cross_nm": np.asarray(nm, float), f"{method}.gamma2_S": g,
                      f"{method}.g2_LS": gls})

    put("nodep", *coherent_nodep_moments(X, xs, taus))
    put("parametric", *coherent_parametric_moments(X, xs, taus))
    for name, ser in (("nodep_series", series_nodep), ("parametric_series", series_parametric)):
        for k, v in ser(X, xs, taus).items():
            table[f"{name}.{k}"] = np.broadcast_to(np.asarray(v, float), taus.shape).copy()

    init = short_time.InitialMoments.coherent(alpha_l, alpha_s)
    st = [short_time.photon_moments_short(init, float(t)) for t in taus]
    m1 = np.array([s.mean_m for s in st])
    m2 = np.array([s.mean_m2 for s in st])
    nm = np.array([s.cross_nm for s in st])
    n1 = np.array([s.mean_n for s in st])
    with np.errstate(divide="ignore", invalid="ignore"):
        table.update({"short_time.mean_m": m1, "short_time.mean_m2": m2,
                      "short_time.cross_nm": nm,
                      "short_time.gamma2_S": (m2 - m1) / m1 ** 2 - 1,
                      "short_time.g2_LS": nm / (m1 * n1) - 1})

    if exact:
        laser, stokes = ModeState.coherent(alpha_l), ModeState.coherent(alpha_s)
        K = cutoff_k or laser.cutoff + stokes.cutoff + 40
        rho = build_product_state(laser, stokes, K, nu_max=0, mu_max=0)
        order = np.argsort(taus)
        vals = np.empty((len(taus), 4))
        now = 0.0
        for i in order:
            rho = evolve_stokes(rho, taus[i] - now, threads=threads)
            now = taus[i]
            ms = extract_moments(rho)
            vals[i] = ms.mean_m, ms.mean_m2, ms.cross_nm, ms.mean_n
        with np.errstate(divide="ignore", invalid="ignore"):
            table.update({"exact.mean_m": vals[:, 0], "exact.mean_m2": vals[:, 1],
                          "exact.cross_nm": vals[:, 2], "exact.mean_n": vals[:, 3],
                          "exact.gamma2_S": (vals[:, 1] - vals[:, 0]) / vals[:, 0] ** 2 - 1,
                          "exact.g2_LS": vals[:, 2] / (vals[:, 0] * vals[:, 3]) - 1})
    return table

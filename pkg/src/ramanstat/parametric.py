"""Undepleted-pump (linearized) Stokes/anti-Stokes model.

With the pump replaced by a fixed classical amplitude the two scattered
modes follow an Ornstein-Uhlenbeck process, so every state that starts
Gaussian stays Gaussian. The state is carried by the noise coefficients

    B_k  = <{Da_k^+, Da_k}>/2 - s/2         (real, depends on ordering s)
    C_k  = <(Da_k)^2>
    D    = <{Da_S, Da_A}>/2
    Dbar = -<{Da_S^+, Da_A}>/2
    xi_k = <a_k>

All amplitudes are reported in the frame rotating with the frequency
mismatch, i.e. alpha_k -> exp(-i dOmega dt) alpha_k has been applied.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import gammaln

from .numkernel import DomainError
from .qpd_observables import TwoModeReport, two_mode_quadratures


@dataclass(frozen=True)
class ParametricConfig:
    kappa_s: float
    kappa_a: float
    delta_omega: float = 0.0
    n_v: float = 0.0
    s: float = 1.0
    kappa_sa: complex | None = None    # default sqrt(kS kA) exp(2i pump_phase)
    pump_phase: float = 0.0

    def __post_init__(self):
        if self.kappa_s < 0 or self.kappa_a < 0:
            raise DomainError("gain and damping constants must be nonnegative")
        if self.n_v < 0:
            raise DomainError("mean phonon number must be nonnegative")
        if not -1.0 <= self.s <= 1.0:
            raise DomainError("ordering parameter must lie in [-1, 1]")
        prod = self.kappa_s * self.kappa_a
        if self.kappa_sa is None:
            object.__setattr__(self, "kappa_sa",
                               complex(math.sqrt(prod) * np.exp(2j * self.pump_phase)))
        else:
            object.__setattr__(self, "kappa_sa", complex(self.kappa_sa))
            if abs(abs(self.kappa_sa) ** 2 - prod) > 1e-9 * max(1.0, prod):
                raise DomainError("|kappa_sa|^2 must equal kappa_s * kappa_a")


@dataclass(frozen=True)
class NoiseCoefficients:
    B_S: float
    B_A: float
    C_S: complex = 0j
    C_A: complex = 0j
    D_SA: complex = 0j
    Dbar_SA: complex = 0j
    xi_S: complex = 0j
    xi_A: complex = 0j
    time: float = 0.0
    s: float = 1.0

    def reorder(self, s_new: float) -> "NoiseCoefficients":
        """Same state described with ordering parameter ``s_new``."""
        shift = 0.5 * (self.s - s_new)
        return replace(self, B_S=self.B_S + shift, B_A=self.B_A + shift, s=s_new)


@dataclass(frozen=True)
class GeneratingSpec:
    """<exp(-lam W)> = prod_k (1 + lam r_k)^(-p) exp(-lam A_k / (1 + lam r_k)).

    ``p`` is 1/2 when every mode contributes two roots and 1 when the roots
    come in degenerate pairs that have been merged (phase-insensitive fields).
    """
    roots: np.ndarray
    amplitudes: np.ndarray
    mode_count: int

    @property
    def power(self) -> float:
        return 0.5 if len(self.roots) == 2 * self.mode_count else 1.0


def initial_gaussian(xi=(0j, 0j), r=(0.0, 0.0), phi=(0.0, 0.0), n_ch=(0.0, 0.0),
                     s: float = 1.0) -> NoiseCoefficients:
    """Independent squeezed + chaotic + coherent inputs, (Stokes, anti-Stokes)."""
    if min(r) < 0 or min(n_ch) < 0:
        raise DomainError("squeeze parameters and chaotic means must be nonnegative")
    B = [math.cosh(rk) ** 2 + nk - 0.5 * (s + 1) for rk, nk in zip(r, n_ch)]
    C = [0.5 * np.exp(1j * pk) * math.sinh(2 * rk) for rk, pk in zip(r, phi)]
    return NoiseCoefficients(B[0], B[1], complex(C[0]), complex(C[1]),
                             xi_S=complex(xi[0]), xi_A=complex(xi[1]), s=s)


# --- propagation ------------------------------------------------------------

def _exprel(z: complex) -> complex:
    """(e^z - 1)/z, accurate near z = 0."""
    if abs(z) < 1e-3:
        return 1 + z / 2 + z * z / 6 + z ** 3 / 24 + z ** 4 / 120 + z ** 5 / 720
    return (np.exp(z) - 1) / z


def _exponents(cfg: ParametricConfig) -> tuple[complex, complex]:
    a = 0.5 * (cfg.kappa_s - cfg.kappa_a)
    c = cfg.delta_omega ** 2 - 0.5j * (cfg.kappa_s + cfg.kappa_a) * cfg.delta_omega
    root = np.sqrt(complex(a * a - 4 * c))
    p1, p2 = 0.5 * (a + root), 0.5 * (a - root)
    # the smaller root loses digits to cancellation; recover it from the product
    if abs(p1) >= abs(p2) and p1 != 0:
        p2 = c / p1
    elif p2 != 0:
        p1 = c / p2
    return complex(p1), complex(p2)


def uv_functions(cfg: ParametricConfig, dt: float) -> tuple[complex, complex, complex, complex]:
    """Propagator entries: xi_S(t) = U_S xi_S + V_S xi_A*, xi_A(t) = U_A xi_A + V_A xi_S*."""
    if dt < 0:
        raise DomainError("elapsed time must be nonnegative")
    p1, p2 = _exponents(cfg)
    q1 = np.exp(p2 * dt) * dt * _exprel((p1 - p2) * dt)
    q2 = np.exp(p2 * dt) + p1 * q1
    ks, ka, dw, k = cfg.kappa_s, cfg.kappa_a, cfg.delta_omega, cfg.kappa_sa
    V_S = 0.5 * k * q1
    V_A = -0.5 * k * np.conj(q1)
    U_S = q2 + (0.5 * ka + 1j * dw) * q1
    U_A = np.conj(q2) - (0.5 * ks - 1j * dw) * np.conj(q1)
    return complex(U_S), complex(V_S), complex(U_A), complex(V_A)


def evolve_noise(cfg: ParametricConfig, init: NoiseCoefficients, dt: float) -> NoiseCoefficients:
    """Advance the Gaussian coefficients by ``dt`` from independent modes."""
    if init.D_SA != 0 or init.Dbar_SA != 0:
        raise DomainError("initial Stokes and anti-Stokes modes must be uncorrelated")
    init = init.reorder(cfg.s) if init.s != cfg.s else init
    U_S, V_S, U_A, V_A = uv_functions(cfg, dt)
    s, nv = cfg.s, cfg.n_v
    gs = init.B_S + nv + 0.5 * (1 + s)       # = B_S^(1) + n_V + 1
    ga = init.B_A - nv - 0.5 * (1 - s)       # = B_A^(1) - n_V
    C_S, C_A = init.C_S, init.C_A
    return NoiseCoefficients(
        B_S=gs * abs(U_S) ** 2 + ga * abs(V_S) ** 2 - nv - 0.5 * (1 + s),
        B_A=ga * abs(U_A) ** 2 + gs * abs(V_A) ** 2 + nv + 0.5 * (1 - s),
        C_S=C_S * U_S ** 2 + np.conj(C_A) * V_S ** 2,
        C_A=C_A * U_A ** 2 + np.conj(C_S) * V_A ** 2,
        D_SA=gs * U_S * V_A + ga * V_S * U_A,
        Dbar_SA=-(np.conj(C_S) * np.conj(U_S) * V_A + C_A * U_A * np.conj(V_S)),
        xi_S=U_S * init.xi_S + V_S * np.conj(init.xi_A),
        xi_A=U_A * init.xi_A + V_A * np.conj(init.xi_S),
        time=init.time + dt, s=s)


def char_fn(co: NoiseCoefficients, beta_s, beta_a):
    """s-ordered characteristic function of the Gaussian state."""
    bs, ba = np.asarray(beta_s, dtype=complex), np.asarray(beta_a, dtype=complex)
    expo = 0j
    for B, C, xi, b in ((co.B_S, co.C_S, co.xi_S, bs), (co.B_A, co.C_A, co.xi_A, ba)):
        expo = expo - B * abs(b) ** 2 + 2 * np.real(0.5 * np.conj(C) * b * b) \
            + 2j * np.imag(b * np.conj(xi))
    expo = expo + 2 * np.real(co.D_SA * np.conj(bs) * np.conj(ba) + co.Dbar_SA * bs * np.conj(ba))
    return np.exp(expo)


# --- phase-space covariance -------------------------------------------------

def real_covariance(co: NoiseCoefficients) -> np.ndarray:
    """Covariance of (Re a_S, Im a_S, Re a_A, Im a_A) under the s-ordered QPD.

    May be indefinite; that is exactly when the QPD fails to exist.
    """
    # second moments <z_i z_j> and <z_i z_j^*> of the centred amplitudes
    zz = np.array([[co.C_S, co.D_SA], [co.D_SA, co.C_A]], dtype=complex)
    zc = np.array([[co.B_S, -np.conj(co.Dbar_SA)], [-co.Dbar_SA, co.B_A]], dtype=complex)
    out = np.empty((4, 4))
    for i in range(2):
        for j in range(2):
            p, q = zz[i, j], zc[i, j]
            out[2 * i, 2 * j] = 0.5 * (p + q).real
            out[2 * i, 2 * j + 1] = 0.5 * (p - q).imag
            out[2 * i + 1, 2 * j] = 0.5 * (p + q).imag
            out[2 * i + 1, 2 * j + 1] = 0.5 * (q - p).real
    return 0.5 * (out + out.T)


def _k_functions(co: NoiseCoefficients):
    K_S = co.B_S ** 2 - abs(co.C_S) ** 2
    K_A = co.B_A ** 2 - abs(co.C_A) ** 2
    K_p = abs(co.D_SA) ** 2 + abs(co.Dbar_SA) ** 2
    K_m = abs(co.D_SA) ** 2 - abs(co.Dbar_SA) ** 2
    return K_S, K_A, K_p, K_m


def _L_squared(co: NoiseCoefficients, variant: str = "derived") -> float:
    """Sixteen times the determinant of the real covariance."""
    K_S, K_A, K_p, K_m = _k_functions(co)
    BS, BA, CS, CA, D, Db = co.B_S, co.B_A, co.C_S, co.C_A, co.D_SA, co.Dbar_SA
    cs = np.conj(CS) if variant == "printed" else CS
    br = (CS * CA * np.conj(D) ** 2 + CS * np.conj(CA) * Db ** 2
          + 2 * BS * np.conj(CA) * D * Db + 2 * BA * cs * np.conj(D) * Db)
    return float(K_S * K_A - 2 * BS * BA * K_p - 2 * br.real + K_m ** 2)


def _e_coefficients(co: NoiseCoefficients, variant: str = "derived"):
    K_S, K_A, K_p, K_m = _k_functions(co)
    BS, BA, CS, CA, D, Db = co.B_S, co.B_A, co.C_S, co.C_A, co.D_SA, co.Dbar_SA
    cj = np.conj
    sg = 1.0 if variant == "printed" else -1.0
    E1 = BS * K_A - BA * K_p + sg * 2 * (cj(CA) * D * Db).real
    E2 = BA * K_S - BS * K_p + sg * 2 * (CS * cj(D) * Db).real
    E3 = CS * K_A + 2 * BA * D * cj(Db) + cj(CA) * D ** 2 + CA * cj(Db) ** 2
    E4 = CA * K_S + 2 * BS * D * Db + CS * Db ** 2 + cj(CS) * D ** 2
    E5 = D * (BS * BA - K_m) + BS * CA * cj(Db) + BA * CS * Db + CS * CA * cj(D)
    E6 = -Db * (BS * BA + K_m) - BS * CA * cj(D) - BA * cj(CS) * D - cj(CS) * CA * cj(Db)
    return E1, E2, E3, E4, E5, E6


@dataclass(frozen=True)
class ExistenceReport:
    K_A: float
    L: float           # signed: -sqrt(|L^2|) when L^2 < 0
    L_bar: float
    re_CA_plus_BA: float
    exists: bool
    s_max: float       # QPD exists for every s < s_max
    s: float


def _s_max(co: NoiseCoefficients) -> float:
    # B grows by (1-s)/2 per unit decrease of s, i.e. each real variance by (s0-s)/4
    lam_min = float(np.linalg.eigvalsh(real_covariance(co)).min())
    return co.s + 4.0 * lam_min


def existence_functions(co: NoiseCoefficients, variant: str = "derived") -> ExistenceReport:
    K_S, K_A, K_p, K_m = _k_functions(co)
    L2 = _L_squared(co, variant)
    L = math.copysign(math.sqrt(abs(L2)), L2)
    diff = co.Dbar_SA - co.D_SA
    if K_A > 0:
        sk = math.sqrt(K_A)
        L_bar = sk * (co.C_S.real + co.B_S) + (
            (np.conj(co.C_A) * diff ** 2).real - co.B_A * abs(diff) ** 2) / sk
    else:
        L_bar = -math.inf
    if co.C_S == 0 and co.C_A == 0 and co.Dbar_SA == 0:
        L_bar = co.B_S * co.B_A - abs(co.D_SA) ** 2
    ra = co.C_A.real + co.B_A
    exists = bool(K_A > 0 and L > 0 and L_bar > 0 and ra > 0)
    return ExistenceReport(float(K_A), float(L), float(L_bar), float(ra), exists, _s_max(co), co.s)


def qpd_existence(cfg: ParametricConfig, init: NoiseCoefficients, dt: float,
                  variant: str = "derived") -> ExistenceReport:
    return existence_functions(evolve_noise(cfg, init, dt), variant)


def qpd_eval(co: NoiseCoefficients, alpha_s, alpha_a, variant: str = "derived"):
    """s-parametrized quasidistribution, normalized to 1 over d^2a_S d^2a_A / pi^2."""
    rep = existence_functions(co, variant)
    if not rep.exists:
        raise DomainError(f"no regular QPD at s={co.s}: {rep}")
    E1, E2, E3, E4, E5, E6 = _e_coefficients(co, variant)
    L2 = _L_squared(co, variant)
    ds = np.asarray(alpha_s, dtype=complex) - co.xi_S
    da = np.asarray(alpha_a, dtype=complex) - co.xi_A
    cs, ca = np.conj(ds), np.conj(da)
    cplx = 0.5 * E3 * cs ** 2 + 0.5 * E4 * ca ** 2 + E5 * cs * ca + E6 * ds * ca
    expo = (-E1 * abs(ds) ** 2 - E2 * abs(da) ** 2 + 2 * cplx.real) / L2
    return np.exp(expo) / math.sqrt(L2)


# --- photon counting --------------------------------------------------------

def poly_coefficients(co: NoiseCoefficients, variant: str = "derived") -> tuple[np.ndarray, np.ndarray]:
    """(a_0..a_3, b_0..b_4) of the generating-function polynomials.

    The polynomials are in y = 1/lam + (1-s)/2 and built from normal-order
    coefficients, so they do not depend on ``co.s``. With them
    L1(y) = det(y + 2 Sigma) and L2(y) = -mu^T adj(y + 2 Sigma) mu for the
    real normal-order covariance Sigma and mean mu.
    """
    n = co.reorder(1.0)
    cj = np.conj
    printed = variant == "printed"

    def half(BS, BA, CS, CA, D, Db, xS, xA, K_S, K_A, K_p, K_m):
        Dm = D if printed else cj(D)       # D enters the a_j conjugated
        # one of the two [S <-> A] halves; Dbar_AS = conj(Dbar_SA)
        DbAS = cj(Db)
        a0 = (-BS * K_A + BA * K_p + 2 * (CA * Dm * DbAS).real) * abs(xS) ** 2
        cp = ((BA * Dm * Db + 0.5 * (cj(CS) * K_A + CA * Dm ** 2 + cj(CA) * Db ** 2)) * xS ** 2
              + 0.5 * (BS * BA * Dm + 2 * BS * cj(CA) * Db + cj(CS) * cj(CA) * cj(Dm) - Dm * K_m) * xS * xA
              - 0.5 * (BS * BA * Db + 2 * BS * CA * Dm + cj(CS) * CA * DbAS + Db * K_m) * xS * cj(xA))
        a0 += 2 * cp.real
        a1 = (-2 * BS * BA - K_A + K_p) * abs(xS) ** 2
        a1 += 2 * ((BA * cj(CS) + Dm * Db) * xS ** 2 + (BS * Dm + cj(CS) * DbAS) * xS * xA
                   - (BS * Db + cj(CS) * cj(Dm)) * xS * cj(xA)).real
        a2 = -(BS + 2 * BA) * abs(xS) ** 2 + (cj(CS) * xS ** 2 + Dm * xS * xA - Db * xS * cj(xA)).real
        if printed:
            b0 = (0.5 * K_S * K_A - BS * BA * K_p - 4 * BS * (cj(CA) * cj(D) * DbAS).real
                  + 0.5 * K_m ** 2 - (CA * (CS * D ** 2 + cj(CS) * DbAS ** 2)).real)
            b1 = 2 * BS * (K_A - K_p) - 4 * (CS * D * Db).real
        else:
            b0 = (0.5 * K_S * K_A - BS * BA * K_p - 4 * BS * (cj(CA) * D * Db).real
                  + 0.5 * K_m ** 2 - (CA * (CS * cj(D) ** 2 + cj(CS) * DbAS ** 2)).real)
            b1 = 2 * BS * (K_A - K_p) - 4 * (CS * cj(D) * Db).real
        b2 = 2 * BS * BA + K_S - K_p
        return a0, a1, a2, b0, b1, b2

    K_S, K_A, K_p, K_m = _k_functions(n)
    fwd = half(n.B_S, n.B_A, n.C_S, n.C_A, n.D_SA, n.Dbar_SA, n.xi_S, n.xi_A, K_S, K_A, K_p, K_m)
    bwd = half(n.B_A, n.B_S, n.C_A, n.C_S, n.D_SA, np.conj(n.Dbar_SA), n.xi_A, n.xi_S,
               K_A, K_S, K_p, K_m)
    a = np.array([fwd[0] + bwd[0], fwd[1] + bwd[1], fwd[2] + bwd[2],
                  -abs(n.xi_S) ** 2 - abs(n.xi_A) ** 2], dtype=float)
    b = np.array([fwd[3] + bwd[3], fwd[4] + bwd[4], fwd[5] + bwd[5],
                  2 * (n.B_S + n.B_A), 1.0], dtype=float)
    return a, b


def generating_fn(co: NoiseCoefficients, lam: float, route: str = "polynomial",
                  variant: str = "derived") -> float:
    """<exp(-lam W)> in the ordering of ``co`` with W = |a_S|^2 + |a_A|^2.

    ``route="polynomial"`` uses the closed polynomial pair; ``"covariance"``
    evaluates the Gaussian integral from the real covariance matrix.
    """
    if lam < 0:
        raise DomainError("lam must be nonnegative")
    if lam == 0:
        return 1.0
    if route == "covariance":
        sig = real_covariance(co)
        mu = np.array([co.xi_S.real, co.xi_S.imag, co.xi_A.real, co.xi_A.imag])
        M = np.eye(4) + 2 * lam * sig
        return float(np.linalg.det(M) ** -0.5 * np.exp(-lam * mu @ np.linalg.solve(M, mu)))
    if route != "polynomial":
        raise DomainError(f"unknown route {route!r}")
    a, b = poly_coefficients(co, variant)
    y = 1.0 / lam + 0.5 * (1 - co.s)
    L1 = np.polyval(b[::-1], y)
    L2 = np.polyval(a[::-1], y)
    return float(lam ** -2 * L1 ** -0.5 * np.exp(L2 / L1))


@dataclass(frozen=True)
class FactorizedGF:
    spec: GeneratingSpec
    factored: bool          # False when roots were complex or repeated
    a: np.ndarray
    b: np.ndarray


def generating_spec(co: NoiseCoefficients, *, rtol: float = 1e-9) -> FactorizedGF:
    """Normal-order roots and amplitudes of the two-mode generating function.

    Roots are minus the zeros of the quartic in 1/lam; amplitudes follow
    from partial fractions of the cubic over the quartic. Coherent+chaotic
    inputs (no phase-sensitive noise) collapse to a twofold spec.
    """
    n = co.reorder(1.0)
    a, b = poly_coefficients(n)
    if n.C_S == 0 and n.C_A == 0 and n.Dbar_SA == 0:
        dB = n.B_S - n.B_A
        w = math.sqrt(dB ** 2 + 4 * abs(n.D_SA) ** 2)
        roots = 0.5 * np.array([n.B_S + n.B_A - w, n.B_S + n.B_A + w])
        cross = 2 * (n.D_SA * np.conj(n.xi_S * n.xi_A)).real
        mean = 0.5 * (abs(n.xi_S) ** 2 + abs(n.xi_A) ** 2)
        if w > 0:
            core = (0.5 * dB * (abs(n.xi_A) ** 2 - abs(n.xi_S) ** 2) - cross) / w
        else:
            core = 0.5 * (abs(n.xi_A) ** 2 - abs(n.xi_S) ** 2)
        amps = np.array([mean + core, mean - core])
        return FactorizedGF(GeneratingSpec(roots, amps, 2), True, a, b)
    z = np.roots(b[::-1])                 # zeros in y, which equal minus the roots
    scale = max(1.0, float(np.max(np.abs(z))))
    ok = np.all(np.abs(z.imag) <= rtol * scale)
    r = np.sort(-z.real)
    if ok:
        gaps = np.diff(r)
        ok = bool(np.all(gaps > 1e-7 * scale))
    if not ok:
        return FactorizedGF(GeneratingSpec(r, np.full(4, np.nan), 2), False, a, b)
    amps = np.empty(4)
    for k in range(4):
        others = np.delete(r, k)
        amps[k] = -np.polyval(a[::-1], -r[k]) / np.prod(others - r[k])
    return FactorizedGF(GeneratingSpec(r, amps, 2), True, a, b)


def single_mode_spec(co: NoiseCoefficients, mode: str = "S") -> GeneratingSpec:
    """Roots B -/+ |C| and amplitudes of one scattered mode (normal order)."""
    n = co.reorder(1.0)
    B, C, xi = (n.B_S, n.C_S, n.xi_S) if mode == "S" else (n.B_A, n.C_A, n.xi_A)
    if C == 0:
        return GeneratingSpec(np.array([B]), np.array([abs(xi) ** 2]), 1)
    proj = 0.25 * 2 * (np.conj(C) * xi * xi).real / abs(C)
    return GeneratingSpec(np.array([B - abs(C), B + abs(C)]),
                          np.array([0.5 * abs(xi) ** 2 - proj, 0.5 * abs(xi) ** 2 + proj]), 1)


def _factor_series(root: float, amp: float, p: float, nmax: int, shift: float) -> np.ndarray:
    """Coefficients c_n of (1 - r w)^(-p) exp(A w / (1 - r w)) after w -> w/(1+shift*r)...

    With shift = 1 these are the photocount weights q^n L_n^(p-1)(-A/(r(1+r)))
    without the common prefactor; with shift = 0 they are r^n L_n^(p-1)(-A/r).
    The Laguerre polynomial is expanded termwise so that r -> 0 is regular.
    """
    a = p - 1.0
    den = 1.0 + shift * root
    if den <= 0:
        raise DomainError("generating function is singular inside the unit interval")
    out = np.zeros(nmax + 1)
    for n in range(nmax + 1):
        j = np.arange(n + 1)
        logb = gammaln(n + a + 1) - gammaln(n - j + 1) - gammaln(j + a + 1) - gammaln(j + 1)
        with np.errstate(divide="ignore"):
            la = np.where(j > 0, j * np.log(amp) if amp > 0 else -np.inf, 0.0)
            lr = np.where(n - j > 0, (n - j) * np.log(abs(root)) if root != 0 else -np.inf, 0.0)
        sign = np.where((n - j) % 2 == 1, np.sign(root), 1.0)
        t = sign * np.exp(logb + la + lr - (n + j) * math.log(den))
        out[n] = math.fsum(t)
    return out


def photocount_pn(spec: GeneratingSpec, nmax: int) -> np.ndarray:
    """p(0..nmax) of the total count W for a factorized normal-order spec."""
    if np.any(~np.isfinite(spec.amplitudes)):
        raise DomainError("spec has no factorized form")
    p = spec.power
    total = np.zeros(nmax + 1)
    total[0] = 1.0
    logpre = 0.0
    for r, A in zip(spec.roots, spec.amplitudes):
        c = _factor_series(float(r), float(A), p, nmax, 1.0)
        total = np.convolve(total, c)[: nmax + 1]
        logpre += -p * math.log1p(r) - A / (1 + r)
    return total * math.exp(logpre)


def factorial_moments(spec: GeneratingSpec, k: int) -> float:
    """<W^k> in normal order, i.e. the k-th factorial moment of the count."""
    if not 0 <= k <= 10:
        raise DomainError("factorial moments are provided up to order 10")
    if np.any(~np.isfinite(spec.amplitudes)):
        raise DomainError("spec has no factorized form")
    total = np.zeros(k + 1)
    total[0] = 1.0
    for r, A in zip(spec.roots, spec.amplitudes):
        total = np.convolve(total, _factor_series(float(r), float(A), spec.power, k, 0.0))[: k + 1]
    return float(math.factorial(k) * total[k])


def mean_photons(co: NoiseCoefficients, mode: str = "S") -> float:
    n = co.reorder(1.0)
    return float(abs(n.xi_S) ** 2 + n.B_S) if mode == "S" else float(abs(n.xi_A) ** 2 + n.B_A)


def gamma2_coherent(co: NoiseCoefficients, mode: str = "S") -> float:
    """Normalized second factorial moment for a phase-insensitive mode."""
    n = co.reorder(1.0)
    B, xi = (n.B_S, n.xi_S) if mode == "S" else (n.B_A, n.xi_A)
    x = abs(xi) ** 2
    return B / (x + B) * (x / (x + B) + 1)


# --- squeezing --------------------------------------------------------------

def squeezing_report(co: NoiseCoefficients) -> TwoModeReport:
    """Quadrature statistics of the Stokes (first) and anti-Stokes (second) modes."""
    half = 0.5 * co.s - 0.5                 # B^(s) + s/2 - 1/2 = <Da^+ Da>
    return two_mode_quadratures((co.C_S, co.B_S + half), (co.C_A, co.B_A + half),
                                co.D_SA, -co.Dbar_SA)


# --- closed forms at exact resonance ----------------------------------------
# Resonant (dOmega = 0) reductions for phase-insensitive starts. They are
# kept separate from the general route so each can check the other.

def coherent_resonant_noise(cfg: ParametricConfig, dt: float) -> tuple[float, float, float]:
    """(B_S, B_A, |D|) in ordering cfg.s for coherent inputs, kappa_s != kappa_a."""
    ks, ka, nv = cfg.kappa_s, cfg.kappa_a, cfg.n_v
    dk = ks - ka
    if dk == 0:
        raise DomainError("use the equal-constant forms when kappa_s == kappa_a")
    fm = math.expm1(0.5 * dk * dt)
    fp = fm + 2.0
    off = 0.5 * (1 - cfg.s)
    B_S = ks / dk * fm * (ks / dk * fp - 2 * ka / dk + nv * fp) + off
    B_A = ka / dk * fm * (ks / dk * fm + nv * fp) + off
    D = math.sqrt(ks * ka) / dk * fm * (ks / dk * fm + nv * fp + 1)
    return B_S, B_A, abs(D)


def lbar_coherent_resonant(cfg: ParametricConfig, dt: float, s: float | None = None) -> float:
    """B_S B_A - |D|^2 for coherent inputs at resonance, any kappa_s, kappa_a."""
    s = cfg.s if s is None else s
    if cfg.kappa_s == cfg.kappa_a:
        k, nv = cfg.kappa_s, cfg.n_v
        return 0.25 * ((1 - s) ** 2 + 2 * (1 - s) * (1 + 2 * nv) * k * dt - s * (k * dt) ** 2)
    B_S, B_A, D = coherent_resonant_noise(replace(cfg, s=s), dt)
    return B_S * B_A - D * D


def s_bound_equal_constants(kdt: float, n_v: float) -> float:
    """Largest ordering with a regular QPD, coherent inputs, kappa_s == kappa_a."""
    return 0.5 + 0.5 * (kdt + 1) ** 2 + (2 * n_v - math.sqrt((1 + 2 * n_v + 0.5 * kdt) ** 2 + 1)) * kdt


def lbar_chaotic_equal(kdt: float, n_v: float, n_s: float, n_a: float, s: float) -> float:
    """B_S B_A - |D|^2 for chaotic inputs with means n_s, n_a and kappa_s == kappa_a."""
    h = 0.5 * (1 - s)
    return (-(0.5 * kdt) ** 2 * s * (n_a + n_s + 1)
            + kdt * (n_a * (n_v + 0.5 * (1 + s)) + n_s * (n_v + h) + (n_v + 0.5) * (1 - s))
            + n_a * (n_s + h) + n_s * h + h * h)


def s_bound_chaotic_equal(kdt: float, n_v: float, n_s: float, n_a: float) -> float:
    """Largest s <= 1 below which lbar_chaotic_equal stays positive."""
    # quadratic c2 s^2 + c1 s + c0 read off from three evaluations
    f = [lbar_chaotic_equal(kdt, n_v, n_s, n_a, x) for x in (-1.0, 0.0, 1.0)]
    c0 = f[1]
    c2 = 0.5 * (f[0] + f[2]) - f[1]
    c1 = 0.5 * (f[2] - f[0])
    roots = np.roots([c2, c1, c0]) if abs(c2) > 1e-300 else np.array([-c0 / c1])
    real = sorted(r.real for r in np.atleast_1d(roots) if abs(r.imag) < 1e-12 and r.real > -1)
    for r in real:
        if lbar_chaotic_equal(kdt, n_v, n_s, n_a, r - 1e-9) > 0:
            return float(min(r, 1.0))
    return 1.0


def p_function_time_limit(kappa: float, n_v: float, n_s: float, n_a: float) -> float:
    """Longest elapsed time with a regular P-function, chaotic inputs, equal constants."""
    inner = (n_a ** 2 * (n_s + (n_v + 1) ** 2)
             + n_a * n_s * (n_s + n_v ** 2 + (n_v + 1) ** 2) + n_s ** 2 * n_v ** 2)
    return 2 / kappa / (n_a + n_s + 1) * (math.sqrt(inner) + n_a * (n_v + 1) + n_s * n_v)

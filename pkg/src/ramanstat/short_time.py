"""Short-time Taylor expansions of moments and quadrature statistics.

All functions evaluate fixed polynomials in dtau (Horner form) whose
coefficients are built from the initial moments of the two modes. The
pump is labelled L, the scattered (Stokes) mode S; ``n`` and ``m`` are
their photon numbers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock_core import ModeState, MomentSet
from .numkernel import DomainError


def horner(coeffs, x):
    """sum_k coeffs[k] x^k."""
    out = 0.0 * x
    for c in reversed(coeffs):
        out = out * x + c
    return out


def _touchard(x: float) -> tuple:
    # Poisson moments <n>, <n^2>, <n^3>, <n^4>
    return (x, x * x + x, x ** 3 + 3 * x * x + x, x ** 4 + 6 * x ** 3 + 7 * x * x + x)


@dataclass(frozen=True)
class InitialMoments:
    """Moments of the factorized initial state.

    ``n`` and ``m`` hold <n^k>, <m^k> for k = 1..4. ``amp_L[(p, q)]`` is
    <a_L^+p a_L^q> (normally ordered), likewise ``amp_S``.
    """

    n: tuple
    m: tuple
    amp_L: dict
    amp_S: dict

    @classmethod
    def coherent(cls, alpha_L: complex, alpha_S: complex, order: int = 5) -> "InitialMoments":
        def amps(a):
            return {(p, q): np.conj(a) ** p * a ** q
                    for p in range(order + 1) for q in range(order + 1) if p + q <= order}
        return cls(_touchard(abs(alpha_L) ** 2), _touchard(abs(alpha_S) ** 2),
                   amps(complex(alpha_L)), amps(complex(alpha_S)))

    @classmethod
    def from_states(cls, laser: ModeState, stokes: ModeState, order: int = 5) -> "InitialMoments":
        def mode(st):
            size = st.cutoff + order + 2
            k = np.arange(size, dtype=float)
            p = st.diagonal(size)
            powers = tuple(float((k ** j * p).sum()) for j in range(1, 5))
            amps = {}
            for a in range(order + 1):
                for b in range(order + 1 - a):
                    # <a^+a a^b> = sum_k rho_k(a-b) sqrt(k! (k+a-b)!)/(k-b)!
                    kk = np.arange(b, size)
                    el = st.element(a - b, kk)
                    lw = 0.5 * (_lf(kk) + _lf(kk + a - b)) - _lf(kk - b)
                    amps[(a, b)] = complex((el * np.exp(lw)).sum())
            return powers, amps
        nL, aL = mode(laser)
        nS, aS = mode(stokes)
        return cls(nL, nS, aL, aS)


def _lf(k):
    from .numkernel import log_factorial
    return log_factorial(np.asarray(k))


# --- photon-number moments ------------------------------------------------

def mean_n_coeffs(I: InitialMoments) -> list:
    n1, n2, n3, n4 = I.n
    m1, m2, m3, m4 = I.m
    return [n1, -n1 * (m1 + 1), -(n2 * (m1 + 1) - n1 * (m2 + 3 * m1 + 2)) / 2]


def mean_n2_coeffs(I: InitialMoments) -> list:
    n1, n2, n3, n4 = I.n
    m1, m2, m3, m4 = I.m
    return [n2, -(2 * n2 - n1) * (m1 + 1),
            -(2 * n3 * (m1 + 1) - n2 * (4 * m2 + 13 * m1 + 9) + 3 * n1 * (m2 + 3 * m1 + 2)) / 2]


def mean_m_coeffs(I: InitialMoments) -> list:
    n1, n2, n3, n4 = I.n
    m1, m2, m3, m4 = I.m
    return [m1, n1 * (m1 + 1),
            -(m2 * n1 + m1 * (3 * n1 - n2) + 2 * n1 - n2) / 2,
            (m3 * n1 + m2 * (7 * n1 - 4 * n2) + m1 * (14 * n1 - 12 * n2 + n3)
             + 8 * n1 - 8 * n2 + n3) / 6]


def mean_m2_coeffs(I: InitialMoments) -> list:
    n1, n2, n3, n4 = I.n
    m1, m2, m3, m4 = I.m
    return [m2, n1 * (2 * m2 + 3 * m1 + 1),
            -(2 * m3 * n1 + m2 * (9 * n1 - 4 * n2) + m1 * (13 * n1 - 9 * n2)
              + 6 * n1 - 5 * n2) / 2,
            (2 * m4 * n1 + m3 * (21 * n1 - 14 * n2) + m2 * (73 * n1 - 72 * n2 + 8 * n3)
             + m1 * (102 * n1 - 118 * n2 + 21 * n3) + 48 * n1 - 60 * n2 + 13 * n3) / 6]


def cross_nm_coeffs(I: InitialMoments, variant: str = "derived") -> list:
    """<n m> through dtau^3.

    The cubic coefficient in the literature form does not satisfy the
    equation of motion; ``variant="printed"`` keeps it for comparison,
    the default is the coefficient obtained from the adjoint generator.
    """
    n1, n2, n3, n4 = I.n
    m1, m2, m3, m4 = I.m
    c = [n1 * m1,
         n2 * (m1 + 1) - n1 * (m2 + 2 * m1 + 1),
         (n3 * (m1 + 1) - n2 * (4 * m2 + 11 * m1 + 7)
          + n1 * (m3 + 6 * m2 + 11 * m1 + 6)) / 2]
    if variant == "printed":
        c.append(-(3 * n4 * (2 * m1 + m2 + 1) - n3 * (3 * m1 + 4 * m2 - 1)
                   - n2 * (68 * m1 + 43 * m2 + 11 * m3 + 36)
                   + n1 * (66 * m1 + 47 * m2 + 14 * m3 + m4 + 32)) / 6)
    elif variant == "derived":
        c.append((n4 * (1 + m1) - n3 * (21 + 32 * m1 + 11 * m2)
                  + n2 * (68 + 124 * m1 + 67 * m2 + 11 * m3)
                  - n1 * (48 + 94 * m1 + 59 * m2 + 14 * m3 + m4)) / 6)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return c


# --- amplitude moments (creation-operator convention) -------------------

def amp_S_coeffs(I: InitialMoments) -> list:
    L, S = I.amp_L, I.amp_S
    return [S[1, 0], L[1, 1] * S[1, 0] / 2,
            (L[2, 2] * S[1, 0] - 2 * L[1, 1] * S[2, 1] - 3 * L[1, 1] * S[1, 0]) / 8]


def amp_L_coeffs(I: InitialMoments) -> list:
    L, S = I.amp_L, I.amp_S
    return [L[1, 0], -L[1, 0] * (S[1, 1] + 1) / 2,
            (L[1, 0] * S[2, 2] - 2 * L[2, 1] * (S[1, 1] + 1) + L[1, 0] * (3 * S[1, 1] + 1)) / 8]


def amp_S2_coeffs(I: InitialMoments) -> list:
    L, S = I.amp_L, I.amp_S
    return [S[2, 0], L[1, 1] * S[2, 0],
            (L[2, 2] * S[2, 0] - L[1, 1] * S[3, 1] - 2 * L[1, 1] * S[2, 0]) / 2]


def amp_L2_coeffs(I: InitialMoments) -> list:
    L, S = I.amp_L, I.amp_S
    return [L[2, 0], -L[2, 0] * (S[1, 1] + 1),
            (L[2, 0] * S[2, 2] - L[3, 1] * (S[1, 1] + 1) + L[2, 0] * (3 * S[1, 1] + 1)) / 2]


def amp_LS_coeffs(I: InitialMoments) -> list:
    """<a_L^+ a_S^+>."""
    L, S = I.amp_L, I.amp_S
    return [L[1, 0] * S[1, 0],
            (L[2, 1] * S[1, 0] - L[1, 0] * S[2, 1] - 2 * L[1, 0] * S[1, 0]) / 2,
            (L[3, 2] * S[1, 0] - 11 * L[2, 1] * S[1, 0] - 6 * L[2, 1] * S[2, 1]
             + 5 * L[1, 0] * S[2, 1] + L[1, 0] * S[3, 2] + 4 * L[1, 0] * S[1, 0]) / 8]


def amp_LdagS_coeffs(I: InitialMoments, variant: str = "derived") -> list:
    """<a_L a_S^+>.

    The literature coefficients (``variant="printed"``) differ from the
    adjoint-generator result in both orders; see tests for the numbers.
    """
    L, S = I.amp_L, I.amp_S
    c0 = L[0, 1] * S[1, 0]
    if variant == "printed":
        return [c0,
                (L[1, 2] * S[1, 0] - L[0, 1] * S[2, 1] - 2 * L[0, 1] * S[1, 0]) / 2,
                (L[2, 3] * S[1, 0] - 11 * L[1, 2] * S[1, 0] - 6 * L[1, 2] * S[2, 1]
                 + 9 * L[0, 1] * S[2, 1] + L[0, 1] * S[3, 2] + 12 * L[0, 1] * S[1, 0]) / 8]
    if variant != "derived":
        raise ValueError(f"unknown variant {variant!r}")
    return [c0,
            (L[1, 2] * S[1, 0] - L[0, 1] * S[2, 1] - L[0, 1] * S[1, 0]) / 2,
            (L[2, 3] * S[1, 0] - 9 * L[1, 2] * S[1, 0] - 6 * L[1, 2] * S[2, 1]
             + 3 * L[0, 1] * S[2, 1] + L[0, 1] * S[3, 2] + L[0, 1] * S[1, 0]) / 8]


# --- public operations ----------------------------------------------------

def _check_dtau(dtau):
    if np.any(np.asarray(dtau) < 0):
        raise DomainError("dtau must be nonnegative")


def photon_moments_short(init: InitialMoments, dtau: float,
                         variant: str = "derived") -> MomentSet:
    """Photon-number moments; <n>, <n^2> to dtau^2, <m>, <m^2>, <nm> to dtau^3.

    Amplitude fields are filled from :func:`amplitude_moments_short`.
    """
    _check_dtau(dtau)
    amp = amplitude_moments_short(init, dtau, variant=variant)
    return MomentSet(
        mean_n=horner(mean_n_coeffs(init), dtau),
        mean_n2=horner(mean_n2_coeffs(init), dtau),
        mean_m=horner(mean_m_coeffs(init), dtau),
        mean_m2=horner(mean_m2_coeffs(init), dtau),
        cross_nm=horner(cross_nm_coeffs(init, variant), dtau),
        a_L=amp.a_L, a_L2=amp.a_L2, a_S=amp.a_S, a_S2=amp.a_S2,
        a_L_a_S=amp.a_L_a_S, a_Ldag_a_S=amp.a_Ldag_a_S, time=dtau)


def amplitude_moments_short(init: InitialMoments, dtau: float,
                            variant: str = "derived") -> MomentSet:
    """Amplitude moments to dtau^2; number moments use the same series."""
    _check_dtau(dtau)
    ld = horner(amp_LdagS_coeffs(init, variant), dtau)   # <a_L a_S^+>
    return MomentSet(
        mean_n=horner(mean_n_coeffs(init), dtau),
        mean_n2=horner(mean_n2_coeffs(init), dtau),
        mean_m=horner(mean_m_coeffs(init), dtau),
        mean_m2=horner(mean_m2_coeffs(init), dtau),
        cross_nm=horner(cross_nm_coeffs(init, variant), dtau),
        a_L=horner(amp_L_coeffs(init), dtau),
        a_L2=horner(amp_L2_coeffs(init), dtau),
        a_S=horner(amp_S_coeffs(init), dtau),
        a_S2=horner(amp_S2_coeffs(init), dtau),
        a_L_a_S=horner(amp_LS_coeffs(init), dtau),
        a_Ldag_a_S=np.conj(ld), time=dtau)


def gamma2_laser_coeffs(init: InitialMoments) -> list:
    # Obtained by dividing the <n>, <n^2> series; the linear term cancels.
    n1, n2, n3, _ = init.n
    m1, m2, _, _ = init.m
    if n1 == 0:
        raise DomainError("pump mean photon number is zero")
    g0 = (n2 - n1) / n1 ** 2 - 1
    g2 = ((n2 * n2 - n3 * n1) * (1 + m1) + n1 * (n2 - n1) * (1 + m1 - m1 * m1 + m2)) / n1 ** 3
    return [g0, 0.0, g2]


def gamma2_stokes_coeffs(init: InitialMoments) -> list:
    n1, n2, n3, _ = init.n
    m1, m2, m3, _ = init.m
    if m1 > 0:
        g0 = (m2 - m1) / m1 ** 2 - 1
        g1 = -2 * (m2 - 2 * m1 * m1 - m1) * n1 / m1 ** 3
        g2 = -(m3 * m1 ** 2 * n1 - m2 ** 2 * m1 * n1 + m2 * m1 ** 2 * (n1 ** 2 + 2 * n1 - n2)
               - m2 * m1 * (2 * n1 ** 2 + 2 * n1 - n2) - 3 * m2 * n1 ** 2
               + m1 ** 3 * (7 * n1 ** 2 + 8 * n1 - 5 * n2)
               + m1 ** 2 * (10 * n1 ** 2 + 4 * n1 - 3 * n2) + 3 * m1 * n1 ** 2) / m1 ** 4
        return [g0, g1, g2]
    # spontaneous start: only the first order survives the 0/0 limit
    if n1 == 0:
        raise DomainError("both mean photon numbers are zero")
    gL0 = (n2 - n1) / n1 ** 2 - 1
    return [2 * gL0 + 1, (6 * n3 - 6 * n2 ** 2 / n1 - 8 * n2 + 8 * n1) / n1 ** 2 / 3]


def gamma2_short(init: InitialMoments, dtau: float, mode: str = "stokes") -> float:
    """Normalized second factorial moment <k(k-1)>/<k>^2 - 1 of one mode."""
    _check_dtau(dtau)
    if mode == "laser":
        return horner(gamma2_laser_coeffs(init), dtau)
    if mode == "stokes":
        return horner(gamma2_stokes_coeffs(init), dtau)
    raise ValueError(f"mode must be 'laser' or 'stokes', got {mode!r}")


def interbeam_g2_coeffs(init: InitialMoments, variant: str = "derived") -> list:
    n1, n2, n3, n4 = init.n
    m1, m2, m3, _ = init.m
    if n1 == 0:
        raise DomainError("pump mean photon number is zero")
    if m1 > 0:
        c1 = (n2 * (m1 + 1) + n1 * (m1 ** 2 - m1 - m2 - 1) - n1 ** 2 * (m1 + 1)) / (n1 * m1)
        br = (n3 * m1 * (m1 + 1) + n2 * m1 * (3 * m1 ** 2 - 6 * m1 - 4 * m2 - 5)
              - n2 * n1 * (3 * m1 ** 2 + 5 * m1 + 2)
              + n1 * m1 * (2 * m1 ** 3 - 3 * m1 ** 2 + m1 * (5 - 3 * m2) + 4 * m2 + m3 + 4)
              - n1 ** 2 * (2 * m1 ** 3 - 3 * m1 ** 2 - 3 * m1 * (m2 + 2) - 2 * (m2 + 1))
              + 2 * n1 ** 3 * (m1 ** 2 + 2 * m1 + 1))
        # literature prints the trailing factor as n1; n1^-1 is what the series gives
        scale = n1 if variant == "printed" else 1.0 / n1
        return [0.0, c1, br * scale / m1 ** 2 / 2]
    c0 = (n2 - n1) / n1 ** 2 - 1
    c1 = (n3 - n2 ** 2 / n1 - 2 * n2 + 2 * n1) / n1 ** 2 / 2
    c2 = -(6 * n4 * n1 ** 2 + 5 * n3 * n2 * n1 - 12 * n3 * n1 ** 2 - 3 * n2 ** 3
           - 22 * n2 ** 2 * n1 + 26 * n2 * n1 ** 2) / n1 ** 4 / 12
    if variant == "derived":
        # consistent with the corrected cubic term of <nm>
        c2 += 2 * (n4 - 5 * n3 + 8 * n2 - 4 * n1) / (3 * n1 ** 2)
    elif variant != "printed":
        raise ValueError(f"unknown variant {variant!r}")
    return [c0, c1, c2]


def interbeam_g2_short(init: InitialMoments, dtau: float, variant: str = "derived") -> float:
    """<nm>/(<n><m>) - 1 to dtau^2."""
    _check_dtau(dtau)
    return horner(interbeam_g2_coeffs(init, variant), dtau)


# --- quadratures for coherent inputs -------------------------------------
#
# For coherent inputs the central moments to dtau^2 are, with u = <a_L>,
# v = <a_S>, x = |u|^2, y = |v|^2, t = dtau and B = 4x - 2y - 3:
#   <(Da_L)^2> = u^2 y t^2/4            <Da_L^+ Da_L> = x y t^2/4
#   <(Da_S)^2> = -x v^2 t^2/4           <Da_S^+ Da_S> = x t + x(2x - 3y - 2) t^2/4
#   <Da_L Da_S> = -u v (t + B t^2/4)/2  <Da_L^+ Da_S> = -x conj(u) v t^2/4
# Everything below is these moments pushed through the quadrature
# definitions. The literature expressions for the cross terms and two-mode
# quantities carry an extra first-order term in <Da_L^+ Da_S>; they are
# available with ``variant="printed"``.


@dataclass(frozen=True)
class QuadratureShort:
    """Second-order quadrature statistics for coherent inputs.

    Angles follow X(theta) = a e^{-i theta} + a^+ e^{i theta}; quadrature 1 is
    theta = 0 and quadrature 2 is theta = pi/2. ``phi_L``/``phi_S`` are the
    phases of <a^+>, i.e. minus the phases of the coherent amplitudes.
    """

    dtau: float
    nL: float
    nS: float
    phi_L: float
    phi_S: float
    var_S_minus: float
    var_S_plus: float
    var_L_minus: float
    var_L_plus: float
    cov_S: float
    cov_L: float
    uncertainty_S: float
    uncertainty_L: float
    cross: dict          # "11", "22", "12", "21": <DX_L i DX_S j>
    two_mode_cov: float
    two_mode_var1: float
    two_mode_var2: float
    two_mode_minus: float
    two_mode_plus: float

    def var_S(self, theta):
        t, x, y = self.dtau, self.nL, self.nS
        c2 = np.cos(np.asarray(theta) + self.phi_S) ** 2
        return 1 + 2 * x * t + x * (x - (1 + c2) * y - 1) * t * t

    def var_L(self, theta):
        t = self.dtau
        return 1 + 0.5 * (np.cos(2 * np.asarray(theta) + 2 * self.phi_L) + 1) * self.nL * self.nS * t * t


def quadrature_short(alpha_L: complex, alpha_S: complex, dtau: float,
                     variant: str = "derived") -> QuadratureShort:
    """Quadrature variances, covariances and cross terms to dtau^2.

    ``alpha_L``/``alpha_S`` are coherent amplitudes (a|alpha> = alpha|alpha>).
    Single-mode results are the same in both variants except the pump
    uncertainty side, which the literature doubles.
    """
    _check_dtau(dtau)
    if variant not in ("derived", "printed"):
        raise ValueError(f"unknown variant {variant!r}")
    printed = variant == "printed"
    t = float(dtau)
    t2 = t * t
    u, v = complex(alpha_L), complex(alpha_S)
    rL, rS = abs(u), abs(v)
    x, y = rL * rL, rS * rS
    pL = -float(np.angle(u)) if rL > 0 else 0.0
    pS = -float(np.angle(v)) if rS > 0 else 0.0
    r = rL * rS
    A = 4 * x - 6 * y - 11
    B = 4 * x - 2 * y - 3
    sig, dlt = pL + pS, pL - pS

    s_minus = 1 + 2 * x * t + x * (x - 2 * y - 1) * t2
    s_plus = 1 + 2 * x * t + x * (x - y - 1) * t2
    l_minus = 1.0
    l_plus = 1 + x * y * t2
    cov_S = x * y * math.sin(2 * pS) * t2
    cov_L = -x * y * math.sin(2 * pL) * t2
    unc_S = 4 * x * t + x * (6 * x - 3 * y - 2) * t2
    unc_L = (2.0 if printed else 1.0) * x * y * t2

    if printed:
        # n_L, n_S in the brackets read as |alpha_L|^2, |alpha_S|^2
        cross = {
            "11": -r * (2 * math.cos(pL) * math.cos(pS) * t
                        + (math.cos(dlt) * A + math.cos(sig) * B) * t2 / 4),
            "22": -r * (2 * math.sin(pL) * math.sin(pS) * t
                        + (math.cos(dlt) * A - math.cos(sig) * B) * t2 / 4),
            "12": r * (2 * math.cos(pL) * math.sin(pS) * t
                       + (math.sin(pS - pL) * A + math.sin(sig) * B) * t2 / 4),
            "21": r * (2 * math.sin(pL) * math.cos(pS) * t
                       + (math.sin(dlt) * A + math.sin(sig) * B) * t2 / 4),
        }
        tm_cov = (4 * r * math.sin(sig) * t
                  + (4 * x * y * math.cos(0.5 * (pS + pL)) * math.sin(0.5 * (pS - pL))
                     + r * math.sin(sig) * B) * t2)

        def tm_var(sg):
            return (2 + 2 * (x - r * (math.cos(dlt) + sg * math.cos(sig))) * t
                    + (2 * x * (x - y - 1) + sg * x * y * (math.cos(2 * pL) - math.cos(2 * pS))
                       - r * (math.cos(dlt) * A + sg * math.cos(sig) * B)) * t2 / 2)

        base = (2 + 2 * (x - r * math.cos(dlt)) * t
                + (x * (x - y - 1) - r * math.cos(dlt) * (2 * x - 3 * y - 5.5)) * t2)
    else:
        lin = t + B * t2 / 4
        cross = {
            "11": -r * math.cos(sig) * lin - 0.5 * x * r * math.cos(dlt) * t2,
            "22": r * math.cos(sig) * lin - 0.5 * x * r * math.cos(dlt) * t2,
            "12": r * math.sin(sig) * lin - 0.5 * x * r * math.sin(dlt) * t2,
            "21": r * math.sin(sig) * lin + 0.5 * x * r * math.sin(dlt) * t2,
        }
        tm_cov = (4 * r * math.sin(sig) * t
                  + (2 * x * y * math.cos(pS + pL) * math.sin(pS - pL) + r * math.sin(sig) * B) * t2)

        def tm_var(sg):
            return (2 + 2 * (x - sg * r * math.cos(sig)) * t
                    + (x * (x - y - 1) + sg * 0.5 * x * y * (math.cos(2 * pL) - math.cos(2 * pS))
                       - sg * 0.5 * r * B * math.cos(sig) - x * r * math.cos(dlt)) * t2)

        base = 2 + 2 * x * t + (x * (x - y - 1) - x * r * math.cos(dlt)) * t2
    swing = abs(2 * u * v * t + (x * v ** 2 - y * u ** 2 + u * v * B) * t2 / 2)
    return QuadratureShort(t, x, y, pL, pS, s_minus, s_plus, l_minus, l_plus, cov_S, cov_L,
                           unc_S, unc_L, cross, tm_cov, tm_var(1.0), tm_var(-1.0),
                           base - swing, base + swing)

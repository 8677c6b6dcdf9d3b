import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import falling_to_ordinary, geometric_pmf, hyp1f1_exact, laguerre_series, poisson_pmf
from ramanstat.fock_core import ModeState
from ramanstat.numkernel import DomainError
from ramanstat.no_depletion import (SuperpositionParams, bose_einstein, compare_formalisms,
                                    coherent_nodep_moments, coherent_parametric_moments,
                                    number_pump_coherent_stokes, ordinary_from_factorial,
                                    rho_approx, series_nodep, series_parametric,
                                    stokes_distribution, stokes_moments_nodep,
                                    superposition_gamma2, superposition_moments)


# --- density matrix --------------------------------------------------------------

def test_rho_at_zero_time_is_product():
    # [TRIVIAL] only l = 0 survives
    laser, stokes = ModeState.coherent(1.2 + 0.3j), ModeState.coherent(0.5j)
    for nu, mu, n, m in [(0, 0, 1, 0), (1, 2, 2, 1), (-1, 0, 3, 2)]:
        ref = laser.element(nu, [n])[0] * stokes.element(mu, [m])[0]
        assert rho_approx(laser, stokes, nu, mu, n, m, 0.0) == pytest.approx(ref, abs=1e-15)


def test_rho_validation():
    st_ = ModeState.number(1)
    with pytest.raises(DomainError):
        rho_approx(st_, st_, 0, -1, 1, 1, 0.1)
    with pytest.raises(DomainError):
        rho_approx(st_, st_, 0, 0, 1, 1, -0.1)
    with pytest.raises(DomainError):
        rho_approx(st_, st_, 0, 0, 1, 1, math.nan)
    assert rho_approx(st_, st_, 0, 0, 1, -1, 0.1) == 0


def test_number_pump_vacuum_stokes_is_bose_einstein():
    # [PAPER] m_ch^m / (1+m_ch)^{1+m}, m_ch = e^{n0 dtau} - 1
    n0, dtau = 5, 0.2
    mch = math.expm1(n0 * dtau)
    got = [rho_approx(ModeState.number(n0), ModeState.number(0), 0, 0, n0, m, dtau).real
           for m in range(25)]
    assert np.allclose(got, geometric_pmf(mch, np.arange(25)), rtol=1e-12, atol=0)
    assert np.allclose(bose_einstein(mch, np.arange(25)), geometric_pmf(mch, np.arange(25)), rtol=1e-13)
    assert bose_einstein(0.0, [0, 1]).tolist() == [1.0, 0.0]


def test_number_pump_coherent_stokes_forms_agree():
    # [PAPER] 1F1 form equals the Laguerre form for m <= 40
    for n0, a, dtau in [(3, 0.7, 0.1), (10, 2.0, 0.05), (1, 5.0, 1.0), (40, 0.3, 0.02)]:
        m = np.arange(41)
        h = number_pump_coherent_stokes(n0, a, dtau, m, form="hypergeometric")
        lag = number_pump_coherent_stokes(n0, a, dtau, m, form="laguerre")
        assert np.allclose(h, lag, rtol=1e-10, atol=0)


def test_number_pump_coherent_stokes_matches_mpmath():
    # [DERIVED] 1F1 evaluated by mpmath, Laguerre by a 50-digit series
    n0, a, dtau = 4, 1.3, 0.15
    x = n0 * dtau
    y = math.expm1(x)
    for mi in (0, 3, 12, 30):
        ref = math.exp(-a ** 2 - x) * (-math.expm1(-x)) ** mi * hyp1f1_exact(mi, 1.0, -a ** 2 / y)
        assert number_pump_coherent_stokes(n0, a, dtau, [mi])[0] == pytest.approx(ref, rel=1e-11)
        mc = a ** 2 * math.exp(x)
        ref2 = y ** mi / (1 + y) ** (mi + 1) * math.exp(-mc / (1 + y)) * laguerre_series(mi, 0, -mc / (y * (1 + y)))
        assert number_pump_coherent_stokes(n0, a, dtau, [mi], form="laguerre")[0] == pytest.approx(ref2, rel=1e-11)


def test_number_pump_coherent_stokes_limits():
    m = np.arange(20)
    # [TRIVIAL] no gain: Poisson seed
    assert np.allclose(number_pump_coherent_stokes(0, 1.5, 0.3, m), poisson_pmf(2.25, m), rtol=1e-13)
    assert np.allclose(number_pump_coherent_stokes(3, 1.5, 0.0, m), poisson_pmf(2.25, m), rtol=1e-13)
    assert number_pump_coherent_stokes(0, 0.0, 0.3, [0, 1]).tolist() == [1.0, 0.0]
    # vacuum seed reduces to Bose-Einstein
    assert np.allclose(number_pump_coherent_stokes(3, 0.0, 0.2, m), geometric_pmf(math.expm1(0.6), m), rtol=1e-13)
    with pytest.raises(DomainError):
        number_pump_coherent_stokes(3, 1.0, 0.2, m, form="bogus")


def test_rho_approx_number_pump_matches_closed_form():
    n0, a, dtau = 6, 0.9 + 0.2j, 0.1
    ref = number_pump_coherent_stokes(n0, a, dtau, np.arange(30))
    got = [rho_approx(ModeState.number(n0), ModeState.coherent(a), 0, 0, n0, m, dtau).real for m in range(30)]
    assert np.allclose(got, ref, rtol=1e-11, atol=1e-300)


@given(n0=st.integers(1, 30), dtau=st.floats(0.001, 0.1), a=st.floats(0, 1.5))
def test_distribution_normalized(n0, dtau, a):
    # diagonal sums to 1 for n dtau <= 3
    m = np.arange(int(40 * math.exp(n0 * dtau) * (1 + a * a)) + 60)
    p = number_pump_coherent_stokes(n0, a, dtau, m)
    assert abs(p.sum() - 1) < 1e-8


def test_stokes_distribution_coherent_pump_normalized():
    laser = ModeState.coherent(math.sqrt(5.0))
    p = stokes_distribution(laser, ModeState.coherent(0.5), 0.1, 120)
    assert abs(p.sum() - 1) < 1e-8
    # first moment agrees with the pump-averaged closed form
    m1 = coherent_nodep_moments(5.0, 0.25, 0.1)[0]
    assert p @ np.arange(121) == pytest.approx(m1, rel=1e-9)


# --- moments -------------------------------------------------------------------------

def test_coherent_pump_mean_closed_form():
    # [PAPER] vacuum Stokes, |alpha_L|^2 = 2: e^{2(e^dtau - 1)} - 1
    laser = ModeState.coherent(math.sqrt(2))
    for dtau in (0.01, 0.1, 0.5):
        ms = stokes_moments_nodep(laser, 0.0, 0.0, dtau)
        assert ms.mean_m == pytest.approx(math.exp(2 * math.expm1(dtau)) - 1, rel=1e-13)
        m1, m2, nm = coherent_nodep_moments(2.0, 0.0, dtau)
        assert (ms.mean_m, ms.mean_m2, ms.cross_nm) == pytest.approx((m1, m2, nm), rel=1e-12)


def test_number_pump_mean_closed_form():
    # [PAPER] (<m>+1) e^{n0 dtau} - 1, mean square with 3<m>+2
    ms = stokes_moments_nodep(ModeState.number(4), 0.5, 0.75, 0.1)
    e = math.exp(0.4)
    assert ms.mean_m == pytest.approx(1.5 * e - 1, rel=1e-14)
    assert ms.mean_m2 == pytest.approx((0.75 + 1.5 + 2) * e * e - 4.5 * e + 1, rel=1e-14)


def test_pump_moments_time_independent():
    # [PAPER]
    for laser in (ModeState.coherent(1.5), ModeState.number(3), ModeState.chaotic(0.8)):
        a = stokes_moments_nodep(laser, 0.0, 0.0, 0.0)
        b = stokes_moments_nodep(laser, 0.0, 0.0, 0.3)
        assert (a.mean_n, a.mean_n2) == pytest.approx((b.mean_n, b.mean_n2), rel=1e-14)
        assert math.isnan(b.a_L.real)


def test_generic_pump_sum_matches_closed_forms():
    # a coherent pump stored as a raw diagonal goes through the generic summation
    X = 3.0
    diag = poisson_pmf(X, np.arange(60))
    raw = ModeState.raw({0: diag})
    for dtau in (0.05, 0.2):
        a = stokes_moments_nodep(raw, 0.2, 0.24, dtau)
        b = stokes_moments_nodep(ModeState.coherent(math.sqrt(X)), 0.2, 0.24, dtau)
        for f in ("mean_m", "mean_m2", "cross_nm", "mean_n"):
            assert getattr(a, f) == pytest.approx(getattr(b, f), rel=1e-10), f


def test_chaotic_pump_mean_matches_direct_sum():
    # [DERIVED] sum over the geometric law, e^{n dtau} averaged directly
    N, dtau = 0.6, 0.1
    n = np.arange(600)
    avg = np.sum(geometric_pmf(N, n) * np.exp(n * dtau))
    ms = stokes_moments_nodep(ModeState.chaotic(N), 0.0, 0.0, dtau)
    assert ms.mean_m == pytest.approx(avg - 1, rel=1e-12)


# --- coherent plus chaotic --------------------------------------------------------------

def test_superposition_examples():
    p = SuperpositionParams(1.3, 0.4)
    # [PAPER] r = 1 gives the total mean
    assert superposition_moments(p, 1) == pytest.approx(1.7)
    assert superposition_moments(p, 1, "ordinary") == pytest.approx(1.7)
    assert superposition_moments(p, 0) == 1
    # [PAPER] pure coherent part: gamma = 0; [TRIVIAL] pure chaotic: gamma = 1
    assert superposition_gamma2(SuperpositionParams(2.0, 0.0)) == 0
    assert superposition_gamma2(SuperpositionParams(0.0, 2.0)) == 1
    with pytest.raises(DomainError):
        SuperpositionParams(-1, 0)
    with pytest.raises(DomainError):
        superposition_gamma2(SuperpositionParams(0, 0))
    with pytest.raises(DomainError):
        superposition_moments(p, 11)
    with pytest.raises(DomainError):
        superposition_moments(p, 2, "central")


def test_gamma2_from_factorial_moments():
    p = SuperpositionParams(1.3, 0.4)
    f1, f2 = superposition_moments(p, 1), superposition_moments(p, 2)
    assert superposition_gamma2(p) == pytest.approx(f2 / f1 ** 2 - 1, rel=1e-13)


def test_factorial_moments_match_distribution():
    # [DERIVED] <m(m-1)...(m-r+1)> summed against the Laguerre-geometric law
    n0, a, dtau = 3, 0.8, 0.15
    p = SuperpositionParams.from_number_pump(n0, a, dtau)
    assert p.m_c == pytest.approx(0.64 * math.exp(0.45)) and p.m_ch == pytest.approx(math.expm1(0.45))
    m = np.arange(400)
    pm = number_pump_coherent_stokes(n0, a, dtau, m)
    for r in range(6):
        fall = np.prod([m - j for j in range(r)], axis=0) if r else np.ones_like(m)
        assert superposition_moments(p, r) == pytest.approx(pm @ fall, rel=1e-10)


@pytest.mark.parametrize("mc,mch", [(1.3, 0.4), (0.0, 2.0), (2.0, 0.0), (5.0, 1e-9)])
def test_recursion_matches_stirling_transform(mc, mch):
    p = SuperpositionParams(mc, mch)
    fact = [superposition_moments(p, k) for k in range(6)]
    for r in range(6):
        rec = superposition_moments(p, r, "ordinary")
        # [DERIVED] Stirling numbers built by exact rational recurrence
        ref = falling_to_ordinary(fact, r)
        assert rec == pytest.approx(ref, rel=1e-10)
        assert ordinary_from_factorial(p, r) == pytest.approx(ref, rel=1e-12)


def test_small_chaotic_part_is_regular():
    a = superposition_moments(SuperpositionParams(2.0, 1e-12), 4)
    assert a == pytest.approx(16.0, rel=1e-9)


# --- formalism comparison -----------------------------------------------------------------

def test_parametric_closed_forms():
    m1, m2, nm = coherent_parametric_moments(100.0, 0.0, 0.01)
    assert m1 == pytest.approx(math.e - 1)
    assert nm == pytest.approx(100 * (math.e - 1))


@pytest.mark.parametrize("X", [25.0, 100.0])
@pytest.mark.parametrize("xs", [0.0, 1.0, 4.0])
def test_series_consistency_limit(X, xs):
    # the (X+1) vs X replacement is the whole difference between the series
    for dtau in (0.005, 0.01, 0.02):
        a = series_nodep(X, xs, dtau)["mean_m"]
        b = series_parametric(X, xs, dtau)["mean_m"]
        assert abs(a - b) / b <= 2 / X


def test_series_match_closed_forms_to_second_order():
    X, xs = 10.0, 0.5
    for closed, ser in ((coherent_nodep_moments, series_nodep),
                        (coherent_parametric_moments, series_parametric)):
        errs = []
        for t in (0.004, 0.002, 0.001):
            c = closed(X, xs, t)
            s = ser(X, xs, t)
            errs.append(max(abs(c[0] - s["mean_m"]), abs(c[1] - s["mean_m2"])))
        assert 4 < errs[0] / errs[1] < 16 and 4 < errs[1] / errs[2] < 16


def test_compare_formalisms_examples():
    X = 100.0
    taus = [0.0, 0.002, 0.005]
    tab = compare_formalisms(math.sqrt(X), 0.0, taus)
    # [PAPER] parametric gamma is identically 1 for a vacuum seed
    assert np.allclose(tab["parametric_series.gamma2_S"], 1.0)
    assert np.allclose(tab["parametric.gamma2_S"][1:], 1.0)
    # [PAPER] nodep series for a vacuum seed
    t = np.array(taus)
    assert np.allclose(tab["nodep_series.gamma2_S"], 1 + 2 / X + 2 * t + (2 + 5 * X / 6) * t ** 2)
    # [PAPER] g_LS at dtau = 0 is 1/X
    assert tab["nodep_series.g2_LS"][0] == pytest.approx(1 / X)
    assert np.isnan(tab["parametric.g2_LS"][0])          # 0/0 with an empty Stokes mode
    assert np.allclose(tab["parametric.g2_LS"][1:], 0.0)
    keys = {k.split(".")[0] for k in tab if k != "tau"}
    assert keys == {"nodep", "nodep_series", "parametric", "parametric_series", "short_time"}
    with pytest.raises(DomainError):
        compare_formalisms(0.0, 0.0, taus)
    with pytest.raises(DomainError):
        compare_formalisms(1.0, 0.0, [-0.1])


def test_nodep_vs_parametric_mean_gap():
    # closed forms: relative gap bounded by 2/X at X = 100, dtau = 0.01
    X = 100.0
    for xs in (0.0, 1.0):
        a = coherent_nodep_moments(X, xs, 0.01)[0]
        b = coherent_parametric_moments(X, xs, 0.01)[0]
        assert abs(a - b) / b <= 2 / X


def test_compare_formalisms_with_exact():
    tab = compare_formalisms(math.sqrt(2), math.sqrt(0.2), [0.0, 0.01, 0.05], exact=True)
    # conservation in the exact column
    assert np.allclose(tab["exact.mean_n"] + tab["exact.mean_m"], 2.2, atol=1e-9)
    # everything starts from the same seed
    for meth in ("exact", "nodep", "parametric", "short_time"):
        assert tab[f"{meth}.mean_m"][0] == pytest.approx(0.2, abs=1e-9)
    # short-time series tracks the exact solver closely at small dtau
    assert abs(tab["short_time.mean_m"][1] - tab["exact.mean_m"][1]) < 1e-6

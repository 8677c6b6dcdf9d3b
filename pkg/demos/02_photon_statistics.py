"""Stokes light turns from chaotic to Poissonian while the pump turns super-Poissonian.

gamma2 = <:(dn)^2:>/<n>^2 is 0 for coherent light, 1 for chaotic light and
negative for sub-Poissonian light. g2_LS < 0 signals anticorrelation between
the beams, which the exact solver shows and the linearized model cannot.
"""
import math

from ramanstat.exact_solver import evolve_stokes
from ramanstat.fock_core import ModeState, build_product_state, extract_moments
from ramanstat.qpd_observables import gamma2, interbeam_g2

rho0 = build_product_state(ModeState.coherent(math.sqrt(2)), ModeState.number(0), 30, 0, 0)
print(f"{'tau':>5} {'gamma2_S':>9} {'gamma2_L':>9} {'g2_LS':>9}")
for tau in (0.05, 0.25, 0.5, 1.0, 2.0, 4.0):
    e = extract_moments(evolve_stokes(rho0, tau))
    gs = gamma2(e.mean_m, e.mean_m2 - e.mean_m)
    gl = gamma2(e.mean_n, e.mean_n2 - e.mean_n)
    print(f"{tau:5.2f} {gs:9.4f} {gl:9.4f} {interbeam_g2(e.cross_nm, e.mean_n, e.mean_m):9.4f}")

"""Pump depletion seen by four formalisms.

A coherent pump with two photons on average scatters into an empty Stokes
mode. The exact solver conserves <n> + <m> and drives the Stokes field to a
copy of the pump distribution. The undepleted-pump and linearized models
grow without bound, and agree with the exact curve only while dtau is small.
"""
import math

import numpy as np

from ramanstat.exact_solver import evolve_stokes
from ramanstat.fock_core import ModeState, build_product_state, extract_moments, stokes_marginal
from ramanstat.no_depletion import coherent_nodep_moments, coherent_parametric_moments
from ramanstat.short_time import InitialMoments, photon_moments_short

laser, stokes = ModeState.coherent(math.sqrt(2)), ModeState.number(0)
rho0 = build_product_state(laser, stokes, 30, 0, 0)
init = InitialMoments.from_states(laser, stokes)

print(f"{'tau':>5} {'exact <m>':>10} {'<n>+<m>':>9} {'short':>8} {'no-depl':>8} {'linear':>8}")
for tau in (0.0, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0):
    ms = extract_moments(evolve_stokes(rho0, tau))
    short = photon_moments_short(init, tau).mean_m
    nd = float(coherent_nodep_moments(2.0, 0.0, tau)[0])
    lin = float(coherent_parametric_moments(2.0, 0.0, tau)[0])
    print(f"{tau:5.2f} {ms.mean_m:10.6f} {ms.mean_n + ms.mean_m:9.6f} {short:8.4f} {nd:8.4f} {lin:8.4f}")

# Long times: every pump photon has been converted.
late = stokes_marginal(evolve_stokes(rho0, 50.0)).real
k = np.arange(len(late))
poisson = np.exp(k * math.log(2.0) - 2.0 - np.array([math.lgamma(i + 1) for i in k]))
print("\nStokes distribution at tau = 50 vs Poisson(2):")
for i in range(6):
    print(f"  p({i}) = {late[i]:.8f}   Poisson {poisson[i]:.8f}")

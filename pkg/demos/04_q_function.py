"""Reconstruct the Husimi Q function of the Stokes mode from the exact density matrix.

Stokes coherences up to offset 16 are kept so the reconstruction is complete on
the [-4, 4] grid. The Stokes marginal shows the coherent seed spreading into
a broad phase-insensitive blob as spontaneous gain takes over.
"""
import math

import numpy as np

from ramanstat.exact_solver import evolve_stokes
from ramanstat.fock_core import ModeState, build_product_state, stokes_marginal
from ramanstat.qpd_observables import single_mode_q

rho0 = build_product_state(ModeState.coherent(math.sqrt(2)), ModeState.coherent(math.sqrt(0.2)),
                           30, 0, 16)
ax = np.linspace(-4, 4, 33)
grid = (ax[None, :] + 1j * ax[:, None]).ravel()
shades = " .:-=+*#%@"
for tau in (0.0, 0.5, 2.0):
    rho = evolve_stokes(rho0, tau)
    els = {mu: stokes_marginal(rho, mu) for mu in range(-16, 17)}
    q = single_mode_q(els, grid).real.reshape(33, 33)
    h = ax[1] - ax[0]
    print(f"tau = {tau}: integral {q.sum() * h * h / math.pi:.5f}, min {q.min():.2e}")
    top = q.max()
    for row in q[::-2]:
        print("   " + "".join(shades[min(9, int(9.99 * v / top))] if v > 0 else " " for v in row))

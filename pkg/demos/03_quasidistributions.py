"""When does a regular s-ordered quasidistribution exist?

In the linearized Stokes/anti-Stokes model with coherent inputs, the
Glauber-Sudarshan P function (s = 1) is singular for every t > 0, while the
Wigner function (s = 0) always exists. The border s_max moves with time.
Then photocount distributions are computed from the generating function.
"""
import numpy as np

from ramanstat.parametric import (ParametricConfig, evolve_noise, existence_functions,
                                  generating_spec, initial_gaussian, photocount_pn,
                                  single_mode_spec)

cfg = ParametricConfig(kappa_s=1.0, kappa_a=0.5, delta_omega=0.2, n_v=0.1)
init = initial_gaussian(xi=(1.0, 0.5j))
print(f"{'t':>5} {'Lbar(P)':>10} {'Lbar(W)':>9} {'s_max':>7}")
for t in (0.1, 0.5, 1.0, 2.0):
    co = evolve_noise(cfg, init, t)
    p, w = existence_functions(co), existence_functions(co.reorder(0.0))
    print(f"{t:5.1f} {p.L_bar:10.4f} {w.L_bar:9.4f} {p.s_max:7.3f}")

co = evolve_noise(cfg, init, 1.0)
ps = photocount_pn(single_mode_spec(co, "S"), 200)
pt = photocount_pn(generating_spec(co).spec, 80)
n = np.arange(201)
print(f"\nStokes counts: sum {ps.sum():.12f}, mean {ps @ n:.4f}, Fano {(ps @ n**2 - (ps @ n)**2) / (ps @ n):.4f}")
print("joint S+A counts, first 8:", np.array2string(pt[:8], precision=4))

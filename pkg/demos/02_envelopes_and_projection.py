"""The limiting density, its quasiconvex envelope, and the projection that
computes it.

The envelope replaces min-over-wells by the distance to the convex hull Q of
the spontaneous strains; on symmetric matrices that is a projection onto a
box-constrained traceless eigenvalue set, solved by bisection on the trace
multiplier.
"""

import numpy as np

from gamma_elastica import (
    LimitParams,
    fqc,
    hull_membership,
    project_Q,
    qce_numeric_upper,
    u_of_n,
    v_limit,
    vqce,
)
from gamma_elastica.limits import v_limit_batch, v_limit_grad_batch

params = LimitParams(mu=1.0, lam=2.0)
e1 = np.array([1.0, 0.0, 0.0])

# 1. along the uniaxial ray t U(e1) nothing relaxes: f = fqc = 1.5 mu (t-1)^2
print("uniaxial ray t U(e1):")
for t in (1.0, 1.25, 1.5, 2.0):
    E = t * u_of_n(e1)
    print(f"  t = {t:<5g} V = {v_limit(params, E):.6f}   "
          f"Vqce = {vqce(params, E):.6f}   1.5 mu (t-1)^2 = {1.5 * (t - 1) ** 2:.6f}")

# 2. away from the ray the envelope drops strictly below the density
E = np.diag([1.0, 1.0, -1.0])
print(f"\nstrict relaxation at diag(1, 1, -1): V = {v_limit(params, E):.4f} "
      f"vs Vqce = {vqce(params, E):.6f}")

# 3. the projection behind the envelope, with its optimality certificate
proj = project_Q(E)
print(f"projection onto Q: distance = {proj.distance:.6f}, "
      f"trace multiplier = {proj.multiplier:.6f}, "
      f"projected eigenvalues = {np.round(np.linalg.eigvalsh(proj.projected), 6)}")

# 4. membership in the zero set of the envelope
for M in (u_of_n(e1), 1.5 * u_of_n(e1), np.zeros((3, 3))):
    flags = hull_membership(params, M)
    print(f"  {np.round(np.diag(M), 3)}: member of {{Vqce = 0}} -> "
          f"{flags['member_of_Vqce_zero']}")

# 5. a finite element upper envelope cannot undercut the closed form, and is
#    tight where lamination happens
E = 1.5 * u_of_n(e1)
dens = lambda Es: v_limit_batch(params, Es)
dgrad = lambda Es: v_limit_grad_batch(params, Es)
up = qce_numeric_upper(dens, E, 4, density_grad=dgrad)
print(f"\nnumeric upper envelope at 1.5 U(e1): {up:.8f} "
      f"vs closed form {vqce(params, E):.8f} (= fqc: {fqc(params, E):.8f})")

"""Where the nematic energy vanishes and how it grows away from there.

Runnable top to bottom; prints everything it claims.
"""

import numpy as np

from gamma_elastica import (
    GpFunction,
    NematicModel,
    dist_to_wells,
    nematic_stretch,
    rescaled_density,
    v_limit,
)

rng = np.random.default_rng(7)
model = NematicModel()      # mu = 3, W_vol(t) = t^2 - 1 - 2 log t
eps = 0.1


def random_rotation():
    A = rng.standard_normal((3, 3))
    Q, R = np.linalg.qr(A)
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0.0:
        Q[:, 0] *= -1.0
    return Q


# 1. the zero set: any rotation of any director stretch is stress free
print(f"energy on the wells at eps = {eps}:")
for _ in range(3):
    n = rng.standard_normal(3)
    n /= np.linalg.norm(n)
    F = random_rotation() @ nematic_stretch(n, eps)
    print(f"  director {np.round(n, 3)}:  W_eps = {model.energy(F, eps):.3e}")

# 2. distance to the wells comes with a witness pair (R, U)
F = np.eye(3) + 0.3 * rng.standard_normal((3, 3))
dist, (R, U) = dist_to_wells(F, model.wells(eps))
print(f"\ndist(F, wells) = {dist:.6f}, witness residual "
      f"{abs(np.linalg.norm(F - R @ U) - dist):.2e}")

# 3. the rescaled density W_eps(I + eps E)/eps^2 approaches the limit V(E)
E = np.array([[0.4, 0.1, 0.0], [0.1, -0.2, 0.1], [0.0, 0.1, 0.3]])
target = v_limit(model.limit_params(), E)
print(f"\nV(E) = {target:.6f} and the rescaled energies:")
for e in (0.2, 0.1, 0.05, 0.025, 0.0125):
    v = rescaled_density(model, e, E)
    print(f"  eps = {e:<7g} V_eps = {v:.6f}   |V_eps - V| = {abs(v - target):.2e}")

# 4. growth floor: the energy dominates a multiple of g_{3/2}(dist) even for
#    deformations far from (or on the wrong side of) the wells
g = GpFunction(model.p)
print("\nW_eps / g_p(dist) on rough samples (inf energies pass trivially):")
for amp in (0.5, 2.0, 10.0, 40.0):
    A = amp * rng.standard_normal((3, 3)) / 3.0
    if np.linalg.det(A) < 0.0:
        A[:, 0] *= -1.0
    d, _ = dist_to_wells(A, model.wells(eps))
    w = model.energy(A, eps)
    ratio = "inf" if np.isinf(w) else f"{w / g(d):.3f}"
    print(f"  |F| ~ {amp:<5g} dist = {d:8.3f}  ratio = {ratio}")

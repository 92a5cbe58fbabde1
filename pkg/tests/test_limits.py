"""Small-strain limit densities, the spectral-box projection, and the
closed-form envelope."""

import numpy as np
import pytest

from gamma_elastica.limits import (
    LimitParams,
    f_limit,
    fqc,
    min_dist2_to_un,
    project_Q,
    qce_numeric_upper,
    u_of_n,
    v_limit,
    v_limit_batch,
    v_limit_grad,
    v_limit_grad_batch,
    vqce,
)
from gamma_elastica.matkernel import symmetrize

from oracles import (
    box_simplex_kkt_residual,
    grid_project_box_traceless,
    sphere_min_dist2_un,
)


def random_symmetric(rng, count, scale=1.0):
    A = rng.standard_normal((count, 3, 3))
    return scale * 0.5 * (A + np.swapaxes(A, -1, -2))


def test_u_of_n_shape_and_spectrum():
    rng = np.random.default_rng(0)
    for _ in range(5):
        n = rng.standard_normal(3)
        n /= np.linalg.norm(n)
        U = u_of_n(n)
        assert abs(np.trace(U)) <= 1e-14
        lam = np.linalg.eigvalsh(U)
        assert np.allclose(lam, [-0.5, -0.5, 1.0], atol=1e-12)
        assert abs(np.sum(U * U) - 1.5) <= 1e-12


def test_min_dist2_spectral_identity():
    # min over n of |E - U_n|^2 = |E|^2 - 3 lam_max(E) + tr E + 3/2
    rng = np.random.default_rng(1)
    for E in random_symmetric(rng, 100, scale=2.0):
        lam_max = np.linalg.eigvalsh(E)[-1]
        ref = np.sum(E * E) - 3.0 * lam_max + np.trace(E) + 1.5
        assert abs(min_dist2_to_un(E) - ref) <= 1e-12 * (1.0 + abs(ref))


def test_min_dist2_matches_sphere_search():
    rng = np.random.default_rng(2)
    for E in random_symmetric(rng, 10, scale=2.0):
        assert abs(min_dist2_to_un(E) - sphere_min_dist2_un(E)) <= 1e-9


def test_v_limit_reference_values():
    p32 = LimitParams(mu=3.0, lam=2.0)
    assert abs(v_limit(p32, np.eye(3)) - 22.5) <= 1e-12
    # V(0) = mu |U_n|^2 = 1.5 mu
    assert abs(v_limit(p32, np.zeros((3, 3))) - 4.5) <= 1e-12
    p12 = LimitParams(mu=1.0, lam=2.0)
    assert abs(v_limit(p12, np.diag([1.0, 1.0, -1.0])) - 3.5) <= 1e-12
    # zero exactly on the strain set
    n = np.array([0.0, 1.0, 0.0])
    assert v_limit(p12, u_of_n(n)) <= 1e-14


def test_v_limit_batch_and_grad():
    params = LimitParams(mu=3.0, lam=2.0)
    rng = np.random.default_rng(3)
    E = random_symmetric(rng, 20)
    vals = v_limit_batch(params, E)
    h = 1e-6
    for k in range(20):
        assert abs(vals[k] - v_limit(params, E[k])) <= 1e-12 * (1.0 + abs(vals[k]))
    for E1 in E[:5]:
        G = v_limit_grad(params, E1)
        for _ in range(4):
            D = random_symmetric(rng, 1)[0]
            gd = float(np.sum(G * D))
            num = (v_limit(params, E1 + h * D) - v_limit(params, E1 - h * D)) / (2 * h)
            assert abs(gd - num) <= 1e-5 * (1.0 + abs(num))
    Gb = v_limit_grad_batch(params, E[:5])
    for k in range(5):
        assert np.allclose(Gb[k], v_limit_grad(params, E[k]), atol=1e-12)


def test_f_limit_depends_on_symmetric_part():
    params = LimitParams(mu=3.0, lam=2.0)
    rng = np.random.default_rng(4)
    F = rng.standard_normal((3, 3))
    assert abs(f_limit(params, F) - v_limit(params, symmetrize(F))) <= 1e-14


def test_project_Q_kkt_and_idempotence():
    rng = np.random.default_rng(5)
    for E in random_symmetric(rng, 50, scale=1.5):
        proj = project_Q(E)
        e = np.linalg.eigvalsh(E)
        x = np.linalg.eigvalsh(proj.projected)
        assert box_simplex_kkt_residual(e, x, proj.multiplier) <= 1e-10
        assert abs(np.linalg.norm(E - proj.projected) - proj.distance) <= 1e-12
        again = project_Q(proj.projected)
        assert again.distance <= 1e-12
        assert np.allclose(again.projected, proj.projected, atol=1e-12)


def test_project_Q_members_are_fixed():
    rng = np.random.default_rng(6)
    for _ in range(10):
        lam = np.sort(rng.uniform(-0.5, 1.0, 3))
        lam[2] = -(lam[0] + lam[1])
        if lam[2] < -0.5 or lam[2] > 1.0:
            continue
        Q = np.linalg.qr(rng.standard_normal((3, 3)))[0]
        if np.linalg.det(Q) < 0:
            Q[:, 0] *= -1
        E = Q @ np.diag(lam) @ Q.T
        proj = project_Q(E)
        assert proj.distance <= 1e-12


def test_project_Q_matches_grid_oracle():
    rng = np.random.default_rng(7)
    for E in random_symmetric(rng, 100, scale=1.2):
        proj = project_Q(E)
        e = np.linalg.eigvalsh(E)
        ref, _ = grid_project_box_traceless(e)
        assert proj.distance <= ref + 1e-12
        assert abs(proj.distance - ref) <= 1e-3


def test_vqce_below_v_and_zero_set():
    params = LimitParams(mu=3.0, lam=2.0)
    rng = np.random.default_rng(8)
    for E in random_symmetric(rng, 200, scale=1.5):
        lo = vqce(params, E)
        assert lo <= v_limit(params, E) + 1e-10
        lam = np.linalg.eigvalsh(E)
        inside = (abs(np.trace(E)) <= 1e-8 and lam[0] >= -0.5 - 1e-8
                  and lam[-1] <= 1.0 + 1e-8)
        assert (lo <= 1e-8) == inside or lo <= 1e-6


def test_fqc_reference_values():
    p12 = LimitParams(mu=1.0, lam=2.0)
    assert abs(fqc(p12, np.eye(3)) - 12.0) <= 1e-9
    assert abs(fqc(p12, np.diag([1.0, 1.0, -1.0])) - 2.375) <= 1e-9
    p32 = LimitParams(mu=3.0, lam=2.0)
    F = 1.5 * u_of_n(np.array([1.0, 0.0, 0.0]))
    assert abs(fqc(p32, F) - 0.375 * 3.0) <= 1e-9


def test_fqc_is_vqce_of_symmetric_part():
    params = LimitParams(mu=3.0, lam=2.0)
    rng = np.random.default_rng(9)
    for _ in range(30):
        F = rng.standard_normal((3, 3))
        assert fqc(params, F) == vqce(params, symmetrize(F))


def test_fqc_below_f_everywhere_sampled():
    params = LimitParams(mu=3.0, lam=2.0)
    rng = np.random.default_rng(10)
    for _ in range(200):
        F = 1.5 * rng.standard_normal((3, 3))
        assert fqc(params, F) <= f_limit(params, F) + 1e-10


def test_fqc_along_uniaxial_ray():
    # fqc(t U_n) = 1.5 mu (t - 1)^2 for t >= 1: only the top eigenvalue
    # leaves the box and the trace term stays zero
    params = LimitParams(mu=3.0, lam=2.0)
    n = np.array([0.0, 0.0, 1.0])
    U = u_of_n(n)
    for t in (1.0, 1.2, 1.5, 2.0, 3.0):
        ref = 1.5 * params.mu * (t - 1.0) ** 2
        assert abs(fqc(params, t * U) - ref) <= 1e-9 * (1.0 + ref)


def test_qce_numeric_upper_convex_density_is_tight():
    # for a convex density the zero field is optimal
    E = np.diag([0.3, -0.1, 0.4])

    def density(A):
        return np.sum(A * A, axis=(-2, -1))

    def density_grad(A):
        return 2.0 * A

    up = qce_numeric_upper(density, E, 3, density_grad=density_grad)
    assert abs(up - density(E)) <= 1e-8


def test_qce_numeric_upper_bounds_vqce():
    params = LimitParams(mu=1.0, lam=2.0)
    dens = lambda A: v_limit_batch(params, A)
    dgrad = lambda A: v_limit_grad_batch(params, A)
    rng = np.random.default_rng(11)
    for E in random_symmetric(rng, 3, scale=1.2):
        up = qce_numeric_upper(dens, E, 4, density_grad=dgrad)
        assert up >= vqce(params, E) - 1e-6
        assert up <= v_limit(params, E) + 1e-9


def test_limit_params_validation():
    with pytest.raises(Exception):
        LimitParams(mu=-1.0, lam=2.0)

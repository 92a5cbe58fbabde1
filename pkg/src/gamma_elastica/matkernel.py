"""Dense d x d matrix kernel (d = 2 or 3) for multiwell elasticity.

Symmetric eigendecomposition, singular values, and Frobenius distances to
SO(d) and to well sets of the form {R U : R in SO(d), U in a member list or
a director-parametrized family}.  Everything operates on plain numpy arrays;
the d x d matrices are tiny, so the contract routines favour determinism and
exactness over throughput.  Batched helpers (suffix ``_batch``) back the hot
scan paths and are cross-checked against the scalar routes in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "IterationLimit",
    "SpectralDecomp",
    "symmetrize",
    "eig_sym",
    "singular_values",
    "dist_to_SO",
    "dist_to_sval_orbit",
    "dist_to_wells",
    "rotation_trace_max",
    "procrustes_distance",
    "fibonacci_sphere",
    "sphere_minimize",
]

JACOBI_SWEEP_CAP = 50

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class IterationLimit(RuntimeError):
    """Jacobi sweep cap exceeded (should not happen for finite symmetric input)."""


@dataclass(frozen=True)
class SpectralDecomp:
    """Eigenvalues (ascending) with matching orthonormal eigenvector columns.

    ``sweeps`` records how many Jacobi sweeps were executed; near-diagonal
    inputs finish in at most two.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sweeps: int = 0

    def reconstruct(self):
        Q = self.eigenvectors
        return (Q * self.eigenvalues) @ Q.T


def symmetrize(F):
    """0.5 (F + F^T).  Accepts stacked input of shape (..., d, d)."""
    F = np.asarray(F, dtype=float)
    return 0.5 * (F + np.swapaxes(F, -1, -2))


def eig_sym(E, sweep_cap=JACOBI_SWEEP_CAP):
    """Diagonalize a symmetric 2x2 or 3x3 matrix by cyclic Jacobi rotations.

    PARAMETERS
    ----------
    E : (d, d) array_like, symmetric, d in {2, 3}
    sweep_cap : int
        Maximum number of full sweeps before IterationLimit is raised.

    RETURNS
    -------
    SpectralDecomp with ascending eigenvalues and orthonormal columns.
    Eigenvector signs are canonical: the largest-magnitude component of each
    column is positive (first such index on ties), so repeated calls and
    permuted inputs give reproducible frames.
    """
    A = np.array(E, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("eig_sym expects a square matrix")
    d = A.shape[0]
    if d not in (2, 3):
        raise ValueError("eig_sym handles d = 2 or 3 only")
    scale = float(np.max(np.abs(A)))
    if not math.isfinite(scale):
        raise ValueError("eig_sym expects finite entries")
    if scale > 0.0 and float(np.max(np.abs(A - A.T))) > 1e-8 * max(scale, 1.0):
        raise ValueError("eig_sym expects a symmetric matrix")
    A = symmetrize(A)
    V = np.eye(d)
    if scale == 0.0:
        return SpectralDecomp(np.zeros(d), V, 0)

    pairs = [(p, q) for p in range(d - 1) for q in range(p + 1, d)]
    sweeps = 0
    converged = False
    for _ in range(sweep_cap):
        off = math.sqrt(sum(A[p, q] * A[p, q] for p, q in pairs))
        if off <= 1e-15 * scale:
            converged = True
            break
        sweeps += 1
        for p, q in pairs:
            apq = A[p, q]
            if abs(apq) <= 1e-18 * scale:
                continue
            # exact 2x2 rotation annihilating A[p, q]
            theta = 0.5 * (A[q, q] - A[p, p]) / apq
            t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
            c = 1.0 / math.sqrt(t * t + 1.0)
            s = t * c
            J = np.eye(d)
            J[p, p] = c
            J[q, q] = c
            J[p, q] = s
            J[q, p] = -s
            A = J.T @ A @ J
            V = V @ J
    else:
        converged = math.sqrt(sum(A[p, q] * A[p, q] for p, q in pairs)) <= 1e-15 * scale
    if not converged:
        raise IterationLimit(f"Jacobi did not converge within {sweep_cap} sweeps")

    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    w = w[order]
    V = V[:, order]
    for j in range(d):
        col = V[:, j]
        k = int(np.argmax(np.abs(col)))
        if col[k] < 0.0:
            V[:, j] = -col
    return SpectralDecomp(w, V, sweeps)


def singular_values(F):
    """Ascending singular values of F; lambda_i^2 are the eigenvalues of F^T F."""
    F = np.asarray(F, dtype=float)
    dec = eig_sym(F.T @ F)
    return np.sqrt(np.maximum(dec.eigenvalues, 0.0))


def _svals_batch(F):
    # descending per LAPACK convention; flipped to ascending
    return np.linalg.svd(F, compute_uv=False)[..., ::-1]


def dist_to_SO(F):
    """Frobenius distance from F to SO(d).

    det F > 0: sqrt(sum (lambda_i - 1)^2) over singular values.
    det F <= 0: the optimal rotation flips the smallest singular value, so the
    squared distance gains 4 * lambda_min.
    """
    F = np.asarray(F, dtype=float)
    s = singular_values(F)
    d2 = float(np.sum((s - 1.0) ** 2))
    if np.linalg.det(F) <= 0.0:
        d2 += 4.0 * float(s[0])
    return math.sqrt(max(d2, 0.0))


def dist_to_SO_batch(F):
    F = np.asarray(F, dtype=float)
    s = _svals_batch(F)
    d2 = np.sum((s - 1.0) ** 2, axis=-1)
    d2 = np.where(np.linalg.det(F) <= 0.0, d2 + 4.0 * s[..., 0], d2)
    return np.sqrt(np.maximum(d2, 0.0))


def dist_to_sval_orbit(F, target):
    """Distance from F to {G : det G > 0, singular values of G = target}.

    ``target`` is ascending and strictly positive.  For det F > 0 the optimal
    matching pairs ascending with ascending; for det F <= 0 one sign must
    flip and it is cheapest on the smallest pair.  Accepts stacked F.
    """
    F = np.asarray(F, dtype=float)
    target = np.asarray(target, dtype=float)
    assert np.all(target > 0.0) and np.all(np.diff(target) >= 0.0)
    s = _svals_batch(F)
    d2 = np.sum((s - target) ** 2, axis=-1)
    d2 = np.where(np.linalg.det(F) <= 0.0, d2 + 4.0 * s[..., 0] * target[..., 0], d2)
    return np.sqrt(np.maximum(d2, 0.0))


def rotation_trace_max(A):
    """max over R in SO(d) of tr(A R), with a maximizing rotation.

    Classic constrained Procrustes: with A = U S V^T the maximum is
    sum(S) when det(U) det(V) > 0 and sum(S) - 2 S_min otherwise.
    """
    A = np.asarray(A, dtype=float)
    U, s, Vt = np.linalg.svd(A)
    d = A.shape[0]
    sgn = 1.0 if np.linalg.det(U) * np.linalg.det(Vt) > 0.0 else -1.0
    diag = np.ones(d)
    diag[-1] = sgn
    R = (Vt.T * diag) @ U.T
    value = float(np.sum(s[:-1]) + sgn * s[-1])
    return value, R


def procrustes_distance(F, U):
    """min over R in SO(d) of ||F - R U||_F together with the minimizing R."""
    F = np.asarray(F, dtype=float)
    U = np.asarray(U, dtype=float)
    tmax, R = rotation_trace_max(U @ F.T)
    d2 = float(np.sum(F * F) + np.sum(U * U)) - 2.0 * tmax
    return math.sqrt(max(d2, 0.0)), R


def fibonacci_sphere(count=2562):
    """Deterministic near-uniform lattice of ``count`` points on S^2."""
    assert count >= 16
    i = np.arange(count)
    z = 1.0 - (2.0 * i + 1.0) / count
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    ang = GOLDEN_ANGLE * i
    return np.stack([r * np.cos(ang), r * np.sin(ang), z], axis=1)


def _tangent_basis(n):
    k = int(np.argmin(np.abs(n)))
    e = np.zeros(3)
    e[k] = 1.0
    t1 = np.cross(n, e)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(n, t1)
    return t1, t2


def _golden_section(f, lo, hi, steps):
    a, b = lo, hi
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(steps):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INVPHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INVPHI * (b - a)
            f2 = f(x2)
    if f1 <= f2:
        return x1, f1
    return x2, f2


def sphere_minimize(f, lattice=2562, steps=20, rounds=24, tol=1e-14):
    """Minimize a batched function f((m,3) unit vectors) -> (m,) over S^2.

    Stage one evaluates a Fibonacci lattice; stage two refines around the best
    node by alternating golden-section line searches in a local tangent chart
    of the sphere (re-centred every round, bracket width adapted to the last
    accepted move).  Returns (direction, value).
    """
    nodes = fibonacci_sphere(lattice)
    vals = np.asarray(f(nodes), dtype=float)
    k = int(np.argmin(vals))
    n0 = nodes[k].copy()
    best = float(vals[k])
    width = 2.0 * math.sqrt(4.0 * math.pi / lattice)

    def at(n_c, t1, t2, a, b):
        v = n_c + a * t1 + b * t2
        return v / np.linalg.norm(v)

    w = width
    for _ in range(rounds):
        t1, t2 = _tangent_basis(n0)

        def f_a(a):
            return float(f(at(n0, t1, t2, a, 0.0)[None, :])[0])

        a_star, _ = _golden_section(f_a, -w, w, steps)

        def f_b(b):
            return float(f(at(n0, t1, t2, a_star, b)[None, :])[0])

        b_star, val = _golden_section(f_b, -w, w, steps)
        moved = math.hypot(a_star, b_star)
        n_new = at(n0, t1, t2, a_star, b_star)
        if val < best:
            improvement = best - val
            n0, best = n_new, val
        else:
            improvement = 0.0
        if improvement <= tol * (1.0 + abs(best)) and moved <= 0.25 * w:
            w *= 0.25
        else:
            w = min(width, max(4.0 * moved, 0.35 * w))
        if w < 1e-9:
            break
    return n0, best


def _nematic_node_dist2(F, eps, nodes):
    """Squared distance ||F - R L_{n,eps}^{1/2}||^2 minimized over R, per node n."""
    F = np.asarray(F, dtype=float)
    a = 1.0 + eps
    b = a ** -0.5
    fn = nodes @ F.T                                   # (m, 3) rows F n
    M = b * F.T[None, :, :] + (a - b) * nodes[:, :, None] * fn[:, None, :]
    s = np.linalg.svd(M, compute_uv=False)             # descending
    if np.linalg.det(F) > 0.0:
        tr = s.sum(axis=1)
    else:
        tr = s[:, 0] + s[:, 1] - s[:, 2]
    d2 = np.sum(F * F) + (a * a + 2.0 * b * b) - 2.0 * tr
    return np.maximum(d2, 0.0)


def dist_to_wells(F, wells):
    """Distance from F to the well set {R U : R in SO(d), U in wells}.

    PARAMETERS
    ----------
    F : (d, d) array_like
    wells : EpsilonWells (see gamma_elastica.wells)

    RETURNS
    -------
    (distance, (R, U)) where the witness pair attains the minimum within
    1e-8.  Finite families take the best member under the Procrustes-exact
    inner minimum (ties keep the first member).  The nematic family scans a
    Fibonacci lattice of directors (>= 2562 nodes) and then refines by local
    golden-section on the sphere.
    """
    F = np.asarray(F, dtype=float)
    if wells.kind == "finite":
        best = None
        for U in wells.members:
            dist, R = procrustes_distance(F, U)
            if best is None or dist < best[0]:
                best = (dist, (R, U))
        if best is None:
            raise ValueError("empty well family")
        return best

    assert wells.kind == "nematic"
    if F.shape != (3, 3):
        raise ValueError("nematic wells live in d = 3")

    def node_vals(nodes):
        return _nematic_node_dist2(F, wells.eps, nodes)

    n_star, _ = sphere_minimize(node_vals, lattice=wells.lattice)
    U = wells.stretch(n_star)
    dist, R = procrustes_distance(F, U)
    return dist, (R, U)

"""Small-strain limit density, its quasiconvex envelope, and the spectral
projection behind the envelope's closed form.

For the nematic family the rescaled energies V_eps converge to

    V(E) = mu * min_n |E - U_n|^2 + (lambda/2) (tr E)^2,
    lambda = W_vol''(1) - (2/3) mu,

and the inner minimum has the closed form

    min_n |E - U_n|^2 = |E|^2 - 3 lambda_max(E) + tr E + 3/2,

since tr(E U_n) = (3 n.E n - tr E)/2 is maximal at the top eigenvector.
The envelope of f(F) = V(sym F) replaces the well set {U_n} by its convex
spectral hull Q = {symmetric, traceless, eigenvalues in [-1/2, 1]}:

    fqc(F) = mu * dist^2(sym F, Q) + (lambda/2) (tr F)^2 = vqce(sym F).

``qce_numeric_upper`` bounds the quasiconvex envelope of an arbitrary density
from above by relaxing over P1 perturbation fields on the unit box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .matkernel import eig_sym, symmetrize
from .wells import u_of_n

__all__ = [
    "LimitParams",
    "QProjection",
    "u_of_n",
    "min_dist2_to_un",
    "v_limit",
    "v_limit_grad",
    "f_limit",
    "project_Q",
    "fqc",
    "vqce",
    "qce_numeric_upper",
]

Q_EVAL_LO = -0.5
Q_EVAL_HI = 1.0
_BISECT_CAP = 200
_BISECT_TOL = 1e-12


@dataclass(frozen=True)
class LimitParams:
    """Moduli (mu, lambda) of the limit density.

    lambda < 0 is accepted for plain evaluation but flagged; hull membership
    queries reject it (the zero set of the envelope is only characterized for
    lambda >= 0).
    """

    mu: float
    lam: float

    def __post_init__(self):
        if self.mu <= 0.0:
            raise ConfigError("mu must be positive")

    @property
    def lambda_nonneg(self):
        return self.lam >= 0.0

    @classmethod
    def from_model(cls, model):
        return cls(mu=model.mu, lam=model.vol.second_deriv_at_one() - 2.0 * model.mu / 3.0)


def min_dist2_to_un(E):
    """min over unit directors n of |E - U_n|_F^2, in closed form."""
    E = np.asarray(E, dtype=float)
    dec = eig_sym(E)
    lmax = float(dec.eigenvalues[-1])
    tr = float(np.trace(E))
    val = float(np.sum(E * E)) - 3.0 * lmax + tr + 1.5
    return max(val, 0.0)


def min_dist2_to_un_batch(E):
    E = np.asarray(E, dtype=float)
    lmax = np.linalg.eigvalsh(E)[..., -1]
    tr = np.trace(E, axis1=-2, axis2=-1)
    val = np.sum(E * E, axis=(-2, -1)) - 3.0 * lmax + tr + 1.5
    return np.maximum(val, 0.0)


def v_limit(params, E):
    """Limit density V(E) = mu * min_n |E - U_n|^2 + (lam/2) tr^2 E."""
    E = symmetrize(E)
    tr = float(np.trace(E))
    return params.mu * min_dist2_to_un(E) + 0.5 * params.lam * tr * tr


def v_limit_batch(params, E):
    E = symmetrize(E)
    tr = np.trace(E, axis1=-2, axis2=-1)
    return params.mu * min_dist2_to_un_batch(E) + 0.5 * params.lam * tr * tr


def v_limit_grad(params, E):
    """dV/dE; uses the top eigenvector of E (unique a.e.)."""
    E = symmetrize(E)
    dec = eig_sym(E)
    n = dec.eigenvectors[:, -1]
    tr = float(np.trace(E))
    return params.mu * (2.0 * E - 3.0 * np.outer(n, n) + np.eye(3)) + params.lam * tr * np.eye(3)


def v_limit_grad_batch(params, E):
    E = symmetrize(E)
    w, Q = np.linalg.eigh(E)
    n = Q[..., :, -1]
    tr = np.trace(E, axis1=-2, axis2=-1)
    eye = np.eye(E.shape[-1])
    nn = np.einsum("...i,...j->...ij", n, n)
    return params.mu * (2.0 * E - 3.0 * nn + eye) + params.lam * tr[..., None, None] * eye


def f_limit(params, F):
    """f(F) = V(sym F), the density of the linearized functional."""
    return v_limit(params, symmetrize(F))


def _project_box_traceless(e, tol=_BISECT_TOL, cap=_BISECT_CAP):
    """Project eigenvalues onto {x in [-1/2, 1]^d : sum x = 0} by bisecting the
    shift tau in x_i = clip(e_i - tau).  The residual sum is monotone in tau."""
    e = np.asarray(e, dtype=float)
    lo = float(np.min(e)) - 1.0            # all entries clip high: sum = d > 0
    hi = float(np.max(e)) + 0.5            # all entries clip low:  sum < 0

    def s(tau):
        return float(np.sum(np.clip(e - tau, Q_EVAL_LO, Q_EVAL_HI)))

    tau = 0.5 * (lo + hi)
    for _ in range(cap):
        tau = 0.5 * (lo + hi)
        val = s(tau)
        if abs(val) <= tol:
            break
        if val > 0.0:
            lo = tau
        else:
            hi = tau
    else:
        raise RuntimeError("eigenvalue projection bisection did not settle")
    return np.clip(e - tau, Q_EVAL_LO, Q_EVAL_HI), tau


def _project_box_traceless_batch(e, iters=120):
    e = np.asarray(e, dtype=float)
    lo = e.min(axis=-1) - 1.0
    hi = e.max(axis=-1) + 0.5
    for _ in range(iters):
        tau = 0.5 * (lo + hi)
        val = np.sum(np.clip(e - tau[..., None], Q_EVAL_LO, Q_EVAL_HI), axis=-1)
        pos = val > 0.0
        lo = np.where(pos, tau, lo)
        hi = np.where(pos, hi, tau)
    tau = 0.5 * (lo + hi)
    return np.clip(e - tau[..., None], Q_EVAL_LO, Q_EVAL_HI), tau


@dataclass(frozen=True)
class QProjection:
    """Nearest point of Q (symmetric, traceless, eigenvalues in [-1/2, 1])."""

    projected: np.ndarray
    distance: float
    multiplier: float


def project_Q(E):
    """Frobenius projection of a symmetric 3x3 matrix onto Q.

    Q is conjugation invariant and its eigenvalue set is convex and
    permutation invariant, so the projection keeps the eigenframe of E and
    projects the eigenvalues onto {x in [-1/2, 1]^3 : sum x = 0}; that is
    validated against a dense eigenvalue-grid oracle in the tests.
    """
    E = np.asarray(E, dtype=float)
    dec = eig_sym(E)
    x, tau = _project_box_traceless(dec.eigenvalues)
    dist = float(np.linalg.norm(dec.eigenvalues - x))
    Q = dec.eigenvectors
    return QProjection((Q * x) @ Q.T, dist, tau)


def vqce(params, E):
    """Envelope value on symmetric arguments: mu dist^2(E, Q) + (lam/2) tr^2 E."""
    E = np.asarray(E, dtype=float)
    proj = project_Q(E)
    tr = float(np.trace(E))
    return params.mu * proj.distance ** 2 + 0.5 * params.lam * tr * tr


def fqc(params, F):
    """Quasiconvex envelope of f; equals vqce(sym F) by construction."""
    return vqce(params, symmetrize(F))


def fqc_value_grad_batch(params, G):
    """Envelope values and gradients on a stack of displacement gradients.

    grad = 2 mu (sym G - P_Q(sym G)) + lam (tr G) I, using that the squared
    distance to a convex set is C^1 with gradient twice the residual.
    """
    G = np.asarray(G, dtype=float)
    E = symmetrize(G)
    w, Q = np.linalg.eigh(E)
    x, _ = _project_box_traceless_batch(w)
    dist2 = np.sum((w - x) ** 2, axis=-1)
    tr = np.trace(G, axis1=-2, axis2=-1)
    vals = params.mu * dist2 + 0.5 * params.lam * tr * tr
    P = np.einsum("...ij,...j,...kj->...ik", Q, x, Q)
    eye = np.eye(G.shape[-1])
    grads = 2.0 * params.mu * (E - P) + params.lam * tr[..., None, None] * eye
    return vals, grads


def _fd_density_grad(density, E, h=1e-6):
    """Central-difference gradient of a density on symmetric stacks."""
    E = np.asarray(E, dtype=float)
    d = E.shape[-1]
    grad = np.zeros_like(E)
    for i in range(d):
        for j in range(i, d):
            B = np.zeros((d, d))
            B[i, j] = 1.0
            B[j, i] = 1.0
            if i == j:
                B[i, i] = 1.0
            plus = density(E + h * B)
            minus = density(E - h * B)
            D = (np.asarray(plus) - np.asarray(minus)) / (2.0 * h)
            if i == j:
                grad[..., i, i] = D
            else:
                grad[..., i, j] = 0.5 * D
                grad[..., j, i] = 0.5 * D
    return grad


def qce_numeric_upper(density, E, grid_n, density_grad=None, starts=5, seed=7,
                      tol=1e-9, max_iter=400):
    """Upper estimate of the quasiconvex envelope of ``density`` at E.

    Minimizes the cell average of density(E + sym grad(phi)) over P1 fields
    phi vanishing on the boundary of the unit box, discretized with grid_n
    vertices per axis (grid_n >= 2), from ``starts`` seeded initial fields
    (the first is phi = 0, so the estimate never exceeds density(E)).  Any
    discrete field is an admissible competitor, so the result is an upper
    bound for the true envelope up to round-off.

    ``density`` maps stacks (..., d, d) of symmetric matrices to values; pass
    ``density_grad`` for the analytic gradient, else central differences are
    used per symmetric component.
    """
    from .mesh import BoxMesh
    from .optim import lbfgs

    E = np.asarray(E, dtype=float)
    d = E.shape[0]
    assert grid_n >= 2
    mesh = BoxMesh.build(d, grid_n - 1)
    free = ~mesh.boundary_mask("all")
    free_idx = np.where(np.repeat(free, d))[0]
    nv = mesh.vertices.shape[0]
    if density_grad is None:
        density_grad = lambda A: _fd_density_grad(density, A)

    def fun(x):
        phi = np.zeros((nv, d))
        phi.reshape(-1)[free_idx] = x
        G = mesh.gradients(phi)
        Earg = E[None, :, :] + symmetrize(G)
        vals = np.asarray(density(Earg), dtype=float)
        if not np.all(np.isfinite(vals)):
            return math.inf, np.zeros_like(x)
        value = float(np.dot(mesh.volumes, vals))
        gr = density_grad(Earg)
        full = mesh.scatter_grad(mesh.volumes[:, None, None] * symmetrize(gr))
        return value, full.reshape(-1)[free_idx]

    if free_idx.size == 0:
        return float(np.asarray(density(E[None]))[0])

    rng = np.random.default_rng(seed)
    amp = 0.05 * (1.0 + float(np.linalg.norm(E))) / max(grid_n - 1, 1)
    best = math.inf
    for k in range(starts):
        x0 = np.zeros(free_idx.size) if k == 0 else amp * rng.standard_normal(free_idx.size)
        res = lbfgs(fun, x0, tol=tol, max_iter=max_iter)
        if res.value < best:
            best = res.value
    return best

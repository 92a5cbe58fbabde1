"""Finite-strain multiwell energy densities.

Two model families share one interface (``energy``, ``energy_batch``,
``energy_and_grad_batch``, ``wells``, ``p``, ``dim``):

* NematicModel: the compressible trace-form energy of a nematic elastomer
  with spontaneous stretches along a director n,

      W_eps(F) = mu/2 * [ (det F)^(-2/3) * ((1+eps) l1^2 + (1+eps) l2^2
                  + (1+eps)^(-2) l3^2) - 3 ] + W_vol(det F),

  with l1 <= l2 <= l3 the singular values of F.  This is the exact minimum
  over directors of the per-director law ``energy_director``; both are
  exposed and cross-checked in the tests.  W_eps(F) = +inf when det F <= 0.

* SyntheticModel: W_eps(F) = scale * g_p(dist(F, U_eps)) over a finite well
  family; zero exactly on the wells and p-growth at infinity by
  construction.  Finite everywhere (no determinant constraint).

The rescaled small-strain density is V_eps(E) = W_eps(I + eps E) / eps^2 and
f_eps(F) = V_eps(sym F).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .matkernel import dist_to_wells, singular_values, symmetrize
from .wells import EpsilonWells, FiniteWellFamily, NematicWellFamily

__all__ = [
    "GpFunction",
    "ReferenceVol",
    "PolynomialVol",
    "NematicModel",
    "SyntheticModel",
    "rescaled_density",
    "rescaled_density_batch",
    "f_eps",
    "model_to_json",
    "model_from_json",
]


@dataclass(frozen=True)
class GpFunction:
    """The convex glue function g_p, 1 < p <= 2.

    g_p(t) = t^2 / 2 on [0, 1] and t^p / p + (1/2 - 1/p) on [1, inf).
    C^1 at t = 1 with g_p(1) = 1/2; quadratic near zero, p-growth at
    infinity.
    """

    p: float = 1.5

    def __post_init__(self):
        if not (1.0 < self.p <= 2.0):
            raise ConfigError(f"g_p exponent must lie in (1, 2], got {self.p}")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        assert np.all(t >= 0.0), "g_p is defined on t >= 0"
        small = 0.5 * t * t
        large = np.power(t, self.p) / self.p + (0.5 - 1.0 / self.p)
        out = np.where(t <= 1.0, small, large)
        return float(out) if out.ndim == 0 else out

    def deriv(self, t):
        t = np.asarray(t, dtype=float)
        assert np.all(t >= 0.0)
        out = np.where(t <= 1.0, t, np.power(t, self.p - 1.0))
        return float(out) if out.ndim == 0 else out

    def one_sided_derivs_at_one(self):
        """(left, right) derivative at the branch point t = 1; both equal 1."""
        left = 1.0                      # d/dt t^2/2 at 1
        right = 1.0 ** (self.p - 1.0)   # d/dt t^p/p at 1
        return left, right


class _VolBase:
    def second_deriv_at_one(self):
        raise NotImplementedError

    def growth_bound(self):
        raise NotImplementedError


@dataclass(frozen=True)
class ReferenceVol(_VolBase):
    """W_vol(t) = t^2 - 1 - 2 log t.

    Zero exactly at t = 1, blows up as t -> 0+, W_vol''(1) = 4, and
    W_vol(t) >= 0.5 t^2 for t >= 2.5 (the stored growth pair).
    """

    kind: str = "reference"

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.where(t > 0.0, t * t - 1.0 - 2.0 * np.log(np.where(t > 0.0, t, 1.0)), np.inf)
        return float(out) if out.ndim == 0 else out

    def deriv(self, t):
        t = np.asarray(t, dtype=float)
        out = 2.0 * t - 2.0 / t
        return float(out) if out.ndim == 0 else out

    def second_deriv_at_one(self):
        return 4.0

    def growth_bound(self):
        return 0.5, 2.5


@dataclass(frozen=True)
class PolynomialVol(_VolBase):
    """W_vol(t) = sum_k c_k (t - 1)^k (k >= 2) + b (t - 1 - log t), b > 0.

    The barrier term supplies the t -> 0+ blow-up; the polynomial part
    controls growth.  Construction validates W_vol''(1) = 2 c_2 + b > 0,
    positivity away from t = 1 (numeric grid check), and finds a quadratic
    growth pair (k, M) by scanning; a law that never dominates k t^2 is
    rejected.
    """

    coefficients: tuple = (1.0,)        # (c_2, c_3, ...)
    barrier_weight: float = 1.0
    kind: str = "polynomial"
    _growth: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        coeff = tuple(float(c) for c in self.coefficients)
        object.__setattr__(self, "coefficients", coeff)
        if len(coeff) == 0:
            raise ConfigError("polynomial volumetric law needs at least c_2")
        if self.barrier_weight <= 0.0:
            raise ConfigError("barrier weight must be positive")
        if self.second_deriv_at_one() <= 0.0:
            raise ConfigError("volumetric law needs W''(1) > 0")
        t = np.concatenate([np.geomspace(1e-6, 0.98, 200), np.geomspace(1.02, 1e4, 400)])
        vals = self._eval(t)
        if np.any(vals <= 0.0):
            bad = float(t[np.argmin(vals)])
            raise ConfigError(f"volumetric law is not positive away from 1 (fails near t={bad:.3g})")
        object.__setattr__(self, "_growth", self._find_growth())

    def _eval(self, t):
        t = np.asarray(t, dtype=float)
        s = t - 1.0
        poly = np.zeros_like(t)
        for k, c in enumerate(self.coefficients, start=2):
            poly += c * s ** k
        barrier = np.where(t > 0.0, t - 1.0 - np.log(np.where(t > 0.0, t, 1.0)), np.inf)
        return poly + self.barrier_weight * barrier

    def __call__(self, t):
        out = self._eval(t)
        return float(out) if out.ndim == 0 else out

    def deriv(self, t):
        t = np.asarray(t, dtype=float)
        s = t - 1.0
        dpoly = np.zeros_like(t)
        for k, c in enumerate(self.coefficients, start=2):
            dpoly += k * c * s ** (k - 1)
        out = dpoly + self.barrier_weight * (1.0 - 1.0 / t)
        return float(out) if out.ndim == 0 else out

    def second_deriv_at_one(self):
        return 2.0 * self.coefficients[0] + self.barrier_weight

    def _find_growth(self):
        for M in (2.0, 3.0, 5.0, 10.0, 20.0, 50.0):
            t = np.geomspace(M, 1e4, 600)
            k = float(np.min(self._eval(t) / (t * t)))
            if k > 0.0:
                return 0.9 * k, M
        raise ConfigError("volumetric law lacks quadratic growth at infinity")

    def growth_bound(self):
        return self._growth


def _vol_from_json(doc):
    kind = doc.get("kind")
    if kind == "reference":
        return ReferenceVol()
    if kind == "polynomial":
        return PolynomialVol(tuple(doc["coefficients"]), float(doc["barrier_weight"]))
    raise ConfigError(f"unknown volumetric law kind {kind!r}")


def _vol_to_json(vol):
    if isinstance(vol, ReferenceVol):
        return {"kind": "reference"}
    return {
        "kind": "polynomial",
        "coefficients": list(vol.coefficients),
        "barrier_weight": vol.barrier_weight,
    }


@dataclass(frozen=True)
class NematicModel:
    """Compressible nematic elastomer energy; director eliminated exactly."""

    mu: float = 3.0
    vol: _VolBase = field(default_factory=ReferenceVol)

    def __post_init__(self):
        if self.mu <= 0.0:
            raise ConfigError("shear modulus mu must be positive")

    # weak coercivity exponent of this family
    p = 1.5
    dim = 3
    kind = "nematic"

    @property
    def family(self):
        return NematicWellFamily()

    def wells(self, eps):
        assert eps > 0.0
        return EpsilonWells(kind="nematic", eps=float(eps))

    def energy(self, F, eps):
        """W_eps(F); +inf when det F <= 0.  Scalar route via the Jacobi kernel."""
        F = np.asarray(F, dtype=float)
        assert F.shape == (3, 3)
        assert eps > 0.0
        J = float(np.linalg.det(F))
        if J <= 0.0 or not math.isfinite(J):
            return math.inf
        lam = singular_values(F)
        a = 1.0 + eps
        trace_term = a * (lam[0] ** 2 + lam[1] ** 2) + lam[2] ** 2 / (a * a)
        iso = 0.5 * self.mu * (J ** (-2.0 / 3.0) * trace_term - 3.0)
        return iso + float(self.vol(J))

    def energy_batch(self, F, eps):
        F = np.asarray(F, dtype=float)
        J = np.linalg.det(F)
        l2 = np.linalg.eigvalsh(np.swapaxes(F, -1, -2) @ F)   # lambda_i^2 ascending
        a = 1.0 + eps
        trace_term = a * (l2[..., 0] + l2[..., 1]) + l2[..., 2] / (a * a)
        ok = J > 0.0
        Js = np.where(ok, J, 1.0)
        vals = 0.5 * self.mu * (Js ** (-2.0 / 3.0) * trace_term - 3.0) + self.vol(Js)
        return np.where(ok, vals, np.inf)

    def energy_director(self, F, eps, n):
        """Per-director law W_{n,eps}; energy() is its exact minimum over n."""
        F = np.asarray(F, dtype=float)
        n = np.asarray(n, dtype=float)
        assert abs(np.dot(n, n) - 1.0) < 1e-10
        J = float(np.linalg.det(F))
        if J <= 0.0:
            return math.inf
        a = 1.0 + eps
        # L_{n,eps}^{-1} = a^{-2} n x n + a (I - n x n)
        Fn = F.T @ n
        tr = a * float(np.sum(F * F)) + (a ** -2.0 - a) * float(np.dot(Fn, Fn))
        return 0.5 * self.mu * (J ** (-2.0 / 3.0) * tr - 3.0) + float(self.vol(J))

    def energy_and_grad_batch(self, F, eps):
        """Values and dW/dF on a stack; rows with det <= 0 get +inf and zero grad.

        The gradient differentiates the per-director law at the optimal
        director (the top eigenvector of F F^T), which is the gradient of the
        min wherever the top eigenvalue is simple.
        """
        F = np.asarray(F, dtype=float)
        J = np.linalg.det(F)
        ok = J > 0.0
        a = 1.0 + eps
        B = F @ np.swapaxes(F, -1, -2)
        w, Q = np.linalg.eigh(B)
        n = Q[..., :, -1]                                   # top eigenvector
        frob2 = np.sum(F * F, axis=(-2, -1))
        lmax = w[..., -1]
        c = a - a ** -2.0
        tr = a * frob2 - c * lmax                           # tr(F^T L*^{-1} F)
        Js = np.where(ok, J, 1.0)
        Jm23 = Js ** (-2.0 / 3.0)
        vals = 0.5 * self.mu * (Jm23 * tr - 3.0) + self.vol(Js)

        FinvT = np.swapaxes(np.linalg.inv(np.where(ok[..., None, None], F, np.eye(3))), -1, -2)
        Ftn = np.einsum("...ji,...j->...i", F, n)           # F^T n
        LinvF = a * F - c * np.einsum("...i,...j->...ij", n, Ftn)
        grads = 0.5 * self.mu * (2.0 * Jm23[..., None, None] * LinvF
                                 - (2.0 / 3.0) * (Jm23 * tr)[..., None, None] * FinvT)
        grads = grads + (self.vol.deriv(Js) * Js)[..., None, None] * FinvT
        vals = np.where(ok, vals, np.inf)
        grads = np.where(ok[..., None, None], grads, 0.0)
        return vals, grads

    def limit_params(self):
        from .limits import LimitParams
        return LimitParams.from_model(self)


def _finite_nearest_batch(F, members):
    """Per-sample distance to {R U} over a finite member list, plus the
    nearest point N = R* U* (ties keep the first member)."""
    F = np.asarray(F, dtype=float)
    m = F.shape[0]
    d = F.shape[-1]
    frob2 = np.sum(F * F, axis=(-2, -1))
    best_d2 = np.full(m, np.inf)
    nearest = np.zeros_like(F)
    for U in members:
        A = np.einsum("ab,mcb->mac", U, F)                  # U @ F^T
        Us, s, Vt = np.linalg.svd(A)
        sgn = np.where(np.linalg.det(Us) * np.linalg.det(Vt) > 0.0, 1.0, -1.0)
        tr = np.sum(s[:, :-1], axis=1) + sgn * s[:, -1]
        d2 = frob2 + np.sum(U * U) - 2.0 * tr
        diag = np.ones((m, d))
        diag[:, -1] = sgn
        R = np.matmul(np.swapaxes(Vt, -1, -2) * diag[:, None, :], np.swapaxes(Us, -1, -2))
        N = np.matmul(R, np.broadcast_to(U, F.shape))
        better = d2 < best_d2
        best_d2 = np.where(better, d2, best_d2)
        nearest = np.where(better[:, None, None], N, nearest)
    return np.sqrt(np.maximum(best_d2, 0.0)), nearest


@dataclass(frozen=True)
class SyntheticModel:
    """W_eps(F) = scale * g_p(dist(F, U_eps)) over a finite well family."""

    family: FiniteWellFamily
    p: float = 1.5
    scale: float = 1.0
    kind = "synthetic"

    def __post_init__(self):
        if self.scale <= 0.0:
            raise ConfigError("synthetic energy scale must be positive")
        object.__setattr__(self, "_gp", GpFunction(self.p))

    @property
    def dim(self):
        return self.family.dim

    def wells(self, eps):
        return self.family.at_eps(eps)

    def energy(self, F, eps):
        dist, _ = dist_to_wells(np.asarray(F, dtype=float), self.wells(eps))
        return self.scale * float(self._gp(dist))

    def energy_batch(self, F, eps):
        F = np.asarray(F, dtype=float)
        dist, _ = _finite_nearest_batch(F, self.wells(eps).members)
        return self.scale * self._gp(dist)

    def energy_and_grad_batch(self, F, eps):
        F = np.asarray(F, dtype=float)
        dist, nearest = _finite_nearest_batch(F, self.wells(eps).members)
        vals = self.scale * self._gp(dist)
        safe = np.where(dist > 1e-14, dist, 1.0)
        coef = np.where(dist > 1e-14, self.scale * self._gp.deriv(dist) / safe, 0.0)
        grads = coef[:, None, None] * (F - nearest)
        return vals, grads


def rescaled_density(model, eps, E):
    """V_eps(E) = W_eps(I + eps E) / eps^2 (extended real)."""
    E = np.asarray(E, dtype=float)
    F = np.eye(model.dim) + eps * E
    return model.energy(F, eps) / eps ** 2


def rescaled_density_batch(model, eps, E):
    E = np.asarray(E, dtype=float)
    F = np.eye(model.dim) + eps * E
    return model.energy_batch(F, eps) / eps ** 2


def f_eps(model, eps, F):
    """f_eps(F) = V_eps(sym F), the density the variational solver integrates."""
    return rescaled_density(model, eps, symmetrize(F))


def model_to_json(model):
    """Plain-JSON descriptor (kind, moduli, wells as flat row-major lists)."""
    if isinstance(model, NematicModel):
        return {"kind": "nematic", "mu": model.mu, "vol": _vol_to_json(model.vol)}
    if isinstance(model, SyntheticModel):
        return {
            "kind": "synthetic",
            "p": model.p,
            "scale": model.scale,
            "dim": model.dim,
            "wells": [np.asarray(U, dtype=float).reshape(-1).tolist() for U in model.family.strains],
        }
    raise ConfigError(f"cannot serialize model of type {type(model).__name__}")


def model_from_json(doc):
    kind = doc.get("kind")
    if kind == "nematic":
        return NematicModel(mu=float(doc["mu"]), vol=_vol_from_json(doc["vol"]))
    if kind == "synthetic":
        d = int(doc["dim"])
        wells = tuple(np.asarray(w, dtype=float).reshape(d, d) for w in doc["wells"])
        family = FiniteWellFamily(wells)
        return SyntheticModel(family=family, p=float(doc["p"]), scale=float(doc["scale"]))
    raise ConfigError(f"unknown model kind {kind!r}")

"""Desk-scale P1 minimization of the eps-rescaled and relaxed functionals.

The discrete energies on a BoxMesh are

    E_eps(u)  = sum_T |T| W_eps(I + eps grad u_T) / eps^2 - sum_v m_v l(v).u(v)
    E_rel(u)  = sum_T |T| fqc(grad u_T)           - sum_v m_v l(v).u(v)

with one-point quadrature for the energy (exact for P1 gradients) and lumped
vertex masses for the load.  minimize() runs multi-start L-BFGS with
backtracking; steps that make any element determinant non-positive hit +inf
and are rejected by the line search.  All accumulation follows a fixed
element order, and the multi-start winner is chosen by (value, start index),
so results are deterministic for a given seed regardless of thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .limits import fqc_value_grad_batch
from .mesh import BoxMesh
from .optim import lbfgs

__all__ = [
    "BoundarySpec",
    "LoadSpec",
    "SolveOptions",
    "MinimizeResult",
    "EpsObjective",
    "RelaxedObjective",
    "QuadraticObjective",
    "relaxed_objective_for",
    "energy_eps",
    "energy_relaxed",
    "minimize",
    "epsilon_sweep",
    "SweepCell",
    "SweepReport",
    "strong_convergence_diagnostic",
]


@dataclass(frozen=True)
class BoundarySpec:
    """Dirichlet data on selected box faces.

    faces: "all" or an iterable of face names (x0, x1, y0, y1, z0, z1).
    data: a (d, d) matrix A for affine displacement u(x) = A x, a per-vertex
    (nv, d) array, or a callable x -> u(x).
    """

    faces: object = "all"
    data: object = None

    def evaluate(self, vertices):
        d = vertices.shape[1]
        data = self.data
        if data is None:
            return np.zeros_like(vertices)
        if callable(data):
            return np.array([np.asarray(data(x), dtype=float) for x in vertices])
        data = np.asarray(data, dtype=float)
        if data.shape == (d, d):
            return vertices @ data.T
        if data.shape == vertices.shape:
            return data.copy()
        raise ConfigError(f"boundary data shape {data.shape} not understood")


@dataclass(frozen=True)
class LoadSpec:
    """Dead load l; constant (d,) vector, per-vertex array, or callable."""

    value: object = None

    def evaluate(self, vertices):
        d = vertices.shape[1]
        v = self.value
        if v is None:
            return np.zeros_like(vertices)
        if callable(v):
            return np.array([np.asarray(v(x), dtype=float) for x in vertices])
        v = np.asarray(v, dtype=float)
        if v.shape == (d,):
            return np.broadcast_to(v, vertices.shape).copy()
        if v.shape == vertices.shape:
            return v.copy()
        raise ConfigError(f"load shape {v.shape} not understood")


@dataclass(frozen=True)
class SolveOptions:
    tol: float = 1e-8
    max_iter: int = 2000
    starts: int = 5
    seed: int = 0
    perturb: float = 0.1
    memory: int = 10
    threads: int = 1


@dataclass
class MinimizeResult:
    u: np.ndarray
    value: float
    converged: bool
    status: str            # "ok" | "no_descent"
    diagnostics: dict = field(default_factory=dict)


class EpsObjective:
    """Per-element density W_eps(I + eps G) / eps^2 of displacement gradients."""

    def __init__(self, model, eps):
        assert eps > 0.0
        self.model = model
        self.eps = float(eps)
        self.growth_p = model.p

    def values(self, G):
        F = np.eye(G.shape[-1]) + self.eps * G
        return self.model.energy_batch(F, self.eps) / self.eps ** 2

    def value_grads(self, G):
        F = np.eye(G.shape[-1]) + self.eps * G
        vals, grads = self.model.energy_and_grad_batch(F, self.eps)
        return vals / self.eps ** 2, grads / self.eps


class RelaxedObjective:
    """Per-element relaxed density fqc(G) = mu dist^2(sym G, Q) + (lam/2) tr^2 G."""

    def __init__(self, params):
        self.params = params
        self.growth_p = 2.0

    def values(self, G):
        return fqc_value_grad_batch(self.params, G)[0]

    def value_grads(self, G):
        return fqc_value_grad_batch(self.params, G)


class QuadraticObjective:
    """Per-element density 0.5 c |sym G|^2 (single-well limit; convex)."""

    def __init__(self, c):
        assert c > 0.0
        self.c = float(c)
        self.growth_p = 2.0

    def value_grads(self, G):
        E = 0.5 * (G + np.swapaxes(G, -1, -2))
        vals = 0.5 * self.c * np.sum(E * E, axis=(-2, -1))
        return vals, self.c * E

    def values(self, G):
        return self.value_grads(G)[0]


def relaxed_objective_for(model):
    """The closed-form relaxed density matching a model, where one exists."""
    if model.kind == "nematic":
        return RelaxedObjective(model.limit_params())
    strains = model.family.strains
    if len(strains) == 1 and not np.any(strains[0]):
        # single well: V(E) = (scale/2)|E|^2 is already convex
        return QuadraticObjective(model.scale)
    raise ConfigError("no closed-form relaxed density for a multiwell synthetic model")


def _load_vector(mesh, load):
    ell = (load or LoadSpec()).evaluate(mesh.vertices)
    return mesh.vertex_mass[:, None] * ell


def _assemble(mesh, objective, loadvec, u, want_grad):
    G = mesh.gradients(u)
    if want_grad:
        vals, grads = objective.value_grads(G)
    else:
        vals = objective.values(G)
    if not np.all(np.isfinite(vals)):
        return math.inf, None
    value = float(np.dot(mesh.volumes, vals)) - float(np.sum(loadvec * u))
    if not want_grad:
        return value, None
    gfull = mesh.scatter_grad(mesh.volumes[:, None, None] * grads) - loadvec
    return value, gfull


def energy_eps(mesh, u, model, eps, load=None):
    """Discrete rescaled energy of a displacement field; +inf if any element
    has det(I + eps grad u) <= 0."""
    value, _ = _assemble(mesh, EpsObjective(model, eps), _load_vector(mesh, load),
                         np.asarray(u, dtype=float), want_grad=False)
    return value


def energy_relaxed(mesh, u, params_or_objective, load=None):
    """Discrete relaxed energy; pass LimitParams or any per-element objective."""
    obj = params_or_objective
    if not hasattr(obj, "values"):
        obj = RelaxedObjective(obj)
    value, _ = _assemble(mesh, obj, _load_vector(mesh, load),
                         np.asarray(u, dtype=float), want_grad=False)
    return value


def minimize(objective, mesh, bc, load=None, opts=None):
    """Multi-start quasi-Newton minimization over the free vertices.

    Start 0 is the extension of the boundary data (affine data extends
    affinely); the remaining opts.starts - 1 starts add seeded interior
    perturbations, halved until the energy is finite.  The best start wins by
    (value, start index).  If no start converges to tolerance the result is
    still returned with status "no_descent" (best effort, per contract).
    """
    opts = opts or SolveOptions()
    fixed = mesh.boundary_mask(bc.faces)
    data = bc.evaluate(mesh.vertices)
    free = np.repeat(~fixed, mesh.d)
    loadvec = _load_vector(mesh, load)
    base = np.where(fixed[:, None], data, 0.0)

    def compose(x):
        u = base.copy()
        u.reshape(-1)[free] = x
        return u

    def fun(x):
        value, gfull = _assemble(mesh, objective, loadvec, compose(x), want_grad=True)
        if gfull is None:
            return math.inf, np.zeros_like(x)
        return value, gfull.reshape(-1)[free]

    x_data = data.reshape(-1)[free]
    rng = np.random.default_rng(opts.seed)
    amp0 = opts.perturb * mesh.h
    starts = [x_data]
    for _ in range(max(opts.starts, 1) - 1):
        noise = rng.standard_normal(x_data.size)
        amp = amp0
        for _ in range(40):
            if math.isfinite(fun(x_data + amp * noise)[0]):
                break
            amp *= 0.5
        starts.append(x_data + amp * noise)

    def run(x0):
        return lbfgs(fun, x0, tol=opts.tol, max_iter=opts.max_iter, memory=opts.memory)

    if opts.threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=opts.threads) as pool:
            results = list(pool.map(run, starts))
    else:
        results = [run(x0) for x0 in starts]

    best = min(range(len(results)), key=lambda k: (results[k].value, k))
    res = results[best]
    any_converged = any(r.converged for r in results)
    return MinimizeResult(
        u=compose(res.x),
        value=res.value,
        converged=res.converged,
        status="ok" if any_converged else "no_descent",
        diagnostics={
            "start_values": [r.value for r in results],
            "start_converged": [r.converged for r in results],
            "iterations": res.iterations,
            "grad_norm": res.grad_norm,
            "n_evals": sum(r.n_evals for r in results),
            "best_start": best,
        },
    )


def _lp_field_norm(mesh, field_at_vertices, p):
    w = np.linalg.norm(field_at_vertices, axis=1)
    return float(np.dot(mesh.vertex_mass, w ** p) ** (1.0 / p))


def _lp_grad_norm(mesh, G, p):
    w = np.sqrt(np.sum(G * G, axis=(-2, -1)))
    return float(np.dot(mesh.volumes, w ** p) ** (1.0 / p))


@dataclass
class SweepCell:
    eps: float
    n: int
    m_eps: float
    m_rel: float
    gap: float
    iterations: int
    grad_norm: float
    converged: bool
    grad_p_norm: float
    u_dist_p: float
    gradu_dist_p: float


@dataclass
class SweepReport:
    cells: list
    gap_decreasing: bool
    data: np.ndarray
    p: float

    @property
    def gaps(self):
        return [c.gap for c in self.cells]

    def to_json(self):
        return {
            "p": self.p,
            "data": np.asarray(self.data, dtype=float).reshape(-1).tolist(),
            "gap_decreasing": self.gap_decreasing,
            "cells": [
                {
                    "eps": c.eps, "n": c.n, "m_eps": c.m_eps, "m_rel": c.m_rel,
                    "gap": c.gap, "iterations": c.iterations, "grad_norm": c.grad_norm,
                    "converged": c.converged, "grad_p_norm": c.grad_p_norm,
                    "u_dist_p": c.u_dist_p, "gradu_dist_p": c.gradu_dist_p,
                }
                for c in self.cells
            ],
        }


def epsilon_sweep(model, cells, data, load=None, opts=None, relaxed_only=False):
    """Joint (eps, mesh) refinement study of m_eps against the relaxed m.

    cells: sequence of (eps, n).  data: affine boundary matrix.  The relaxed
    problem is solved once per distinct mesh size; per-cell failures propagate
    as inf entries without aborting the sweep.
    """
    opts = opts or SolveOptions()
    data = np.asarray(data, dtype=float)
    d = data.shape[0]
    bc = BoundarySpec("all", data)
    relaxed = relaxed_objective_for(model)
    p = model.p

    rel_cache = {}
    out = []
    for eps, n in cells:
        mesh = BoxMesh.build(d, int(n))
        if n not in rel_cache:
            rel_cache[n] = minimize(relaxed, mesh, bc, load=load, opts=opts)
        rel = rel_cache[n]
        if relaxed_only:
            out.append(SweepCell(float(eps), int(n), math.nan, rel.value, math.nan,
                                 rel.diagnostics["iterations"], rel.diagnostics["grad_norm"],
                                 rel.converged, math.nan, math.nan, math.nan))
            continue
        try:
            res = minimize(EpsObjective(model, eps), mesh, bc, load=load, opts=opts)
            G_eps = mesh.gradients(res.u)
            G_rel = mesh.gradients(rel.u)
            cell = SweepCell(
                eps=float(eps), n=int(n), m_eps=res.value, m_rel=rel.value,
                gap=abs(res.value - rel.value),
                iterations=res.diagnostics["iterations"],
                grad_norm=res.diagnostics["grad_norm"],
                converged=res.converged,
                grad_p_norm=_lp_grad_norm(mesh, G_eps, p),
                u_dist_p=_lp_field_norm(mesh, res.u - rel.u, p),
                gradu_dist_p=_lp_grad_norm(mesh, G_eps - G_rel, p),
            )
        except Exception:
            cell = SweepCell(float(eps), int(n), math.inf, rel.value, math.inf,
                             0, math.inf, False, math.inf, math.inf, math.inf)
        out.append(cell)

    gaps = [c.gap for c in out if math.isfinite(c.gap)]
    decreasing = all(gaps[k + 1] <= gaps[k] * (1.0 + 1e-9) for k in range(len(gaps) - 1))
    return SweepReport(cells=out, gap_decreasing=decreasing and len(gaps) == len(out), data=data, p=p)


def strong_convergence_diagnostic(report, expect_decay=False):
    """L^p distances between the eps-minimizers and the relaxed minimizer.

    Decay of grad(u_eps) - grad(u) toward zero is only guaranteed under a
    uniformly strictly quasiconvex relaxed density, so it is asserted only
    when the caller opts in via expect_decay.
    """
    vals = [c.gradu_dist_p for c in report.cells]
    if expect_decay:
        for k in range(len(vals) - 1):
            if not vals[k + 1] <= vals[k] * (1.0 + 1e-9):
                raise AssertionError(
                    "gradient distances did not decay; the uniform strict "
                    "quasiconvexity hypothesis may not hold for this data")
    return vals

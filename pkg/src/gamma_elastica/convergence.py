"""Numerical verification of the small-strain limit statements.

Four measurements, each packaged as a deterministic scan with a serializable
report:

  * uniform_limit_scan      sup over a compact strain grid of |V_eps - V|
  * dist_limit_scan         dist^2(I + eps E, wells)/eps^2 against its limit
  * coercivity_scan         empirical min of W_eps / g_p(dist to wells)
  * quadratic_lower_bound_fit   fit-then-verify V(E) >= C1 |E|^2 - C2

plus hull_membership, the zero-set test for the relaxed density.  Reports
serialize to CSV (columns eps,value,target,error) and JSON; identical seeds
give byte-identical text.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .energies import GpFunction, NematicModel, SyntheticModel, _finite_nearest_batch, rescaled_density_batch
from .errors import ConfigError, InfiniteValue
from .limits import LimitParams, min_dist2_to_un, min_dist2_to_un_batch, v_limit_batch, vqce
from .matkernel import dist_to_sval_orbit, symmetrize
from .wells import FiniteWellFamily, NematicWellFamily, u_of_n

GRID_SEED = 0x5EED

# Empirical floor for W_eps / g_p(dist), calibrated once with the default
# sampler (3 x 1200 samples per eps, eps in {0.1, 0.05, 0.02}, reference
# model mu = 3): measured minima stay in [3.26, 3.43] across seeds
# {0x5EED, 1..5, 99, 12345}, so the floor is the calibration minimum rounded
# down to one significant digit.  The acceptance tests repeat the seed-0x5EED
# run verbatim against this constant.
COERCIVITY_C_FROZEN = 3.0

_RATE_POINTS = 4


@dataclass(frozen=True)
class EpsSchedule:
    """Strictly decreasing positive eps values."""

    values: tuple = ()

    def __post_init__(self):
        vals = tuple(float(e) for e in self.values)
        assert len(vals) > 0
        assert all(e > 0.0 for e in vals)
        assert all(a > b for a, b in zip(vals, vals[1:])), "schedule must decrease"
        object.__setattr__(self, "values", vals)

    @classmethod
    def geometric(cls, start=0.2, ratio=0.5, count=8):
        assert 0.0 < ratio < 1.0 and start > 0.0 and count >= 1
        return cls(tuple(start * ratio**k for k in range(count)))

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True, eq=False)
class CompactGrid:
    """Finite symmetric-matrix sample with ||E||_F <= radius.

    Mix of structured points (zero, scaled basis, spontaneous strains and
    spectral-box boundary points in 3d) and a seeded random fill, so scans
    exercise both the zero set and generic strains.
    """

    points: np.ndarray
    radius: float
    seed: int

    def __post_init__(self):
        assert self.points.ndim == 3 and self.points.shape[0] > 0
        norms = np.linalg.norm(self.points, axis=(1, 2))
        assert np.all(norms <= self.radius * (1.0 + 1e-12))

    def __len__(self):
        return self.points.shape[0]

    @classmethod
    def build(cls, d=3, radius=2.0, count=224, seed=GRID_SEED):
        assert d in (2, 3) and radius > 0.0
        pts = [np.zeros((d, d))]
        for i in range(d):
            for j in range(i, d):
                B = np.zeros((d, d))
                B[i, j] = B[j, i] = 1.0
                B /= np.linalg.norm(B)
                for s in (0.5 * radius, radius):
                    pts.append(s * B)
                    pts.append(-s * B)
        if d == 3:
            directors = [
                np.array([1.0, 0.0, 0.0]),
                np.array([0.0, 1.0, 0.0]),
                np.array([0.0, 0.0, 1.0]),
                np.array([1.0, 1.0, 1.0]) / math.sqrt(3.0),
                np.array([1.0, 2.0, 2.0]) / 3.0,
            ]
            for n in directors:
                pts.append(u_of_n(n))
            # boundary of the spectral box: trace-free, one eigenvalue pinned
            pts.append(np.diag([0.25, 0.25, -0.5]))
            pts.append(np.diag([1.0, -0.5, -0.5]) * 0.999)
        structured = []
        for E in pts:
            nrm = np.linalg.norm(E)
            if nrm > radius:
                E = E * (radius / nrm)
            structured.append(E)
        rng = np.random.default_rng(seed)
        n_random = max(0, count - len(structured))
        A = rng.standard_normal((n_random, d, d))
        E = 0.5 * (A + np.swapaxes(A, -1, -2))
        nrm = np.linalg.norm(E, axis=(1, 2))
        amp = radius * rng.uniform(0.05, 1.0, n_random)
        E *= (amp / np.maximum(nrm, 1e-30))[:, None, None]
        points = np.concatenate([np.stack(structured), E], axis=0) if n_random else np.stack(structured)
        return cls(points=points, radius=float(radius), seed=int(seed))


@dataclass(frozen=True)
class ConvergenceReport:
    """Per-eps scan outcome plus a fitted log-log rate and a pass flag."""

    kind: str
    eps: tuple
    values: tuple
    targets: tuple
    errors: tuple
    rate: float
    passed: bool
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        assert all(e >= 0.0 for e in self.errors)
        assert math.isfinite(self.rate)

    def rows(self):
        return list(zip(self.eps, self.values, self.targets, self.errors))

    def to_json(self):
        return {
            "kind": self.kind,
            "eps": list(self.eps),
            "values": list(self.values),
            "targets": list(self.targets),
            "errors": list(self.errors),
            "rate": self.rate,
            "passed": self.passed,
            "details": self.details,
        }


@dataclass(frozen=True)
class CoercivityReport:
    """Per-eps empirical min of W_eps / g_p(dist), with the minimizing F."""

    kind: str
    eps: tuple
    c_min: tuple
    floor: float
    argmin: tuple
    counts: tuple
    passed: bool
    details: dict = field(default_factory=dict)

    def rows(self):
        return [
            (e, c, self.floor, max(0.0, self.floor - c))
            for e, c in zip(self.eps, self.c_min)
        ]

    def to_json(self):
        return {
            "kind": self.kind,
            "eps": list(self.eps),
            "c_min": list(self.c_min),
            "floor": self.floor,
            "argmin": [np.asarray(F).tolist() for F in self.argmin],
            "counts": list(self.counts),
            "passed": self.passed,
            "details": self.details,
        }


def fit_rate(eps, errors, points=_RATE_POINTS):
    """Least-squares slope of log(error) against log(eps) on the tail.

    Only the last ``points`` schedule entries enter the fit; earlier ones are
    pre-asymptotic.  Nonpositive errors are dropped (exact hits).  Fewer than
    two usable points yields 0.0.
    """
    eps = np.asarray(list(eps), dtype=float)[-points:]
    err = np.asarray(list(errors), dtype=float)[-points:]
    keep = err > 0.0
    if np.count_nonzero(keep) < 2:
        return 0.0
    slope = np.polyfit(np.log(eps[keep]), np.log(err[keep]), 1)[0]
    return float(slope)


def _decreasing_ok(errors, slack=0.05):
    """Nonincreasing up to one inversion of relative size <= slack."""
    bad = [k for k in range(len(errors) - 1) if errors[k + 1] > errors[k]]
    if len(bad) > 1:
        return False
    return all(errors[k + 1] <= (1.0 + slack) * errors[k] for k in bad)


def limit_density_batch(model, params, E):
    """V(E) for the model's own small-strain limit, vectorized over strains."""
    E = np.asarray(E, dtype=float)
    if isinstance(model, NematicModel):
        if params is None:
            params = model.limit_params()
        return v_limit_batch(params, E)
    if isinstance(model, SyntheticModel):
        U = np.stack(model.family.strains)
        diff = E[:, None] - U[None]
        d2 = np.min(np.sum(diff * diff, axis=(-2, -1)), axis=1)
        return 0.5 * model.scale * d2
    raise ConfigError(f"no limit density for model of type {type(model).__name__}")


def uniform_limit_scan(model, params, grid, sched, rate_min=0.9, slack=0.05):
    """sup over the grid of |V_eps(E) - V(E)| per eps, plus a fitted rate.

    Raises InfiniteValue when some V_eps is infinite, i.e. the grid radius is
    too large for the largest scheduled eps.
    """
    E = grid.points
    target = limit_density_batch(model, params, E)
    eps_list, values, targets, errors, arg = [], [], [], [], []
    for eps in sched:
        veps = rescaled_density_batch(model, eps, E)
        if not np.all(np.isfinite(veps)):
            k = int(np.argmax(~np.isfinite(veps)))
            raise InfiniteValue(
                f"V_eps infinite at eps={eps} for grid point {k}: radius too large for the schedule"
            )
        diff = np.abs(veps - target)
        j = int(np.argmax(diff))
        eps_list.append(float(eps))
        values.append(float(veps[j]))
        targets.append(float(target[j]))
        errors.append(float(diff[j]))
        arg.append(j)
    rate = fit_rate(eps_list, errors)
    ok = _decreasing_ok(errors, slack) and rate >= rate_min
    return ConvergenceReport(
        kind="uniform_limit",
        eps=tuple(eps_list),
        values=tuple(values),
        targets=tuple(targets),
        errors=tuple(errors),
        rate=rate,
        passed=bool(ok),
        details={
            "grid_size": int(len(grid)),
            "grid_radius": grid.radius,
            "grid_seed": grid.seed,
            "argmax_index": arg,
            "rate_min": rate_min,
        },
    )


def _well_distance_batch(wells, F):
    if wells.kind == "nematic":
        return dist_to_sval_orbit(F, wells.svals())
    dist, _ = _finite_nearest_batch(F, wells.members)
    return dist


def dist_limit_scan(E, family, sched, tol=1e-2):
    """dist^2(I + eps E, wells at eps)/eps^2 per eps against dist^2(E, M).

    Values may sit above or below the target at finite eps; the pass flag
    asserts only that the final relative error is within ``tol``.
    """
    E = symmetrize(np.asarray(E, dtype=float))
    if isinstance(family, FiniteWellFamily):
        target = float(family.dist2(E))
    elif isinstance(family, NematicWellFamily):
        target = float(min_dist2_to_un(E))
    else:
        raise ConfigError(f"unknown well family {type(family).__name__}")
    eye = np.eye(E.shape[0])
    eps_list, values, errors, rel = [], [], [], []
    for eps in sched:
        wells = family.at_eps(eps)
        dist = _well_distance_batch(wells, (eye + eps * E)[None])[0]
        v = float(dist) ** 2 / float(eps) ** 2
        eps_list.append(float(eps))
        values.append(v)
        errors.append(abs(v - target))
        rel.append(abs(v - target) / (1.0 + target))
    rate = fit_rate(eps_list, errors)
    return ConvergenceReport(
        kind="dist_limit",
        eps=tuple(eps_list),
        values=tuple(values),
        targets=tuple(target for _ in eps_list),
        errors=tuple(errors),
        rate=rate,
        passed=bool(rel[-1] <= tol),
        details={"relative_errors": rel, "tol": tol, "family": type(family).__name__},
    )


@dataclass(frozen=True)
class CoercivitySampler:
    """Sampling plan for the coercivity scan.

    Near shell: well points perturbed to dist in [near_lo, near_hi] (samples
    landing below near_lo are excluded as 0/0).  Mid range: |F| in [1, 5].
    Far field: |F| log-uniform in [far_lo, far_hi], some with det <= 0, where
    the energy is infinite and the ratio trivially satisfies any floor.
    """

    near: int = 1200
    mid: int = 1200
    far: int = 1200
    near_lo: float = 1e-3
    near_hi: float = 1.0
    far_lo: float = 5.0
    far_hi: float = 50.0
    seed: int = GRID_SEED

    def __post_init__(self):
        assert self.near > 0 and self.mid > 0 and self.far > 0
        assert 0.0 < self.near_lo < self.near_hi
        assert 0.0 < self.far_lo < self.far_hi


def _random_rotations(rng, count, d):
    A = rng.standard_normal((count, d, d))
    Q, R = np.linalg.qr(A)
    sgn = np.sign(np.diagonal(R, axis1=-2, axis2=-1))
    sgn = np.where(sgn == 0.0, 1.0, sgn)
    Q = Q * sgn[:, None, :]
    neg = np.linalg.det(Q) < 0.0
    Q[neg, :, 0] *= -1.0
    return Q


def _sample_coercivity(model, wells, sampler, rng):
    d = wells.dim
    # near shell: F = R W (I + t N), t log-spaced through the shell
    R = _random_rotations(rng, sampler.near, d)
    if wells.kind == "nematic":
        n = rng.standard_normal((sampler.near, 3))
        n /= np.linalg.norm(n, axis=1)[:, None]
        a = 1.0 + wells.eps
        b = a**-0.5
        W = b * np.eye(3)[None] + (a - b) * np.einsum("mi,mj->mij", n, n)
    else:
        idx = rng.integers(0, len(wells.members), sampler.near)
        W = np.stack([wells.members[i] for i in idx])
    N = rng.standard_normal((sampler.near, d, d))
    N /= np.linalg.norm(N, axis=(1, 2))[:, None, None]
    t = np.geomspace(2.0 * sampler.near_lo, sampler.near_hi, sampler.near)
    near = np.matmul(R, W) @ (np.eye(d)[None] + t[:, None, None] * N)
    # mid range: |F| uniform in [1, 5]
    A = rng.standard_normal((sampler.mid, d, d))
    A /= np.linalg.norm(A, axis=(1, 2))[:, None, None]
    mid = A * rng.uniform(1.0, 5.0, sampler.mid)[:, None, None]
    # far field: |F| log-uniform in [far_lo, far_hi]
    A = rng.standard_normal((sampler.far, d, d))
    A /= np.linalg.norm(A, axis=(1, 2))[:, None, None]
    amp = np.exp(rng.uniform(math.log(sampler.far_lo), math.log(sampler.far_hi), sampler.far))
    far = A * amp[:, None, None]
    return np.concatenate([near, mid, far], axis=0)


def coercivity_scan(model, sampler=None, sched=None, floor=0.0):
    """Empirical min over samples of W_eps(F) / g_p(dist(F, wells at eps)).

    Samples with dist < sampler.near_lo are excluded (the ratio degenerates
    to 0/0 on the wells); infinite energies satisfy the bound vacuously.
    """
    sampler = sampler or CoercivitySampler()
    sched = sched or EpsSchedule.geometric()
    gp = GpFunction(model.p)
    rng = np.random.default_rng(sampler.seed)
    eps_list, cmins, argmins, counts = [], [], [], []
    for eps in sched:
        wells = model.wells(eps)
        F = _sample_coercivity(model, wells, sampler, rng)
        dist = _well_distance_batch(wells, F)
        keep = dist >= sampler.near_lo
        Fk, dk = F[keep], dist[keep]
        w = model.energy_batch(Fk, eps)
        ratio = np.where(np.isinf(w), np.inf, w / gp(dk))
        j = int(np.argmin(ratio))
        eps_list.append(float(eps))
        cmins.append(float(ratio[j]))
        argmins.append(Fk[j].copy())
        counts.append(int(keep.sum()))
    passed = all(c > floor for c in cmins)
    return CoercivityReport(
        kind="coercivity",
        eps=tuple(eps_list),
        c_min=tuple(cmins),
        floor=float(floor),
        argmin=tuple(argmins),
        counts=tuple(counts),
        passed=bool(passed),
        details={
            "seed": sampler.seed,
            "near": sampler.near,
            "mid": sampler.mid,
            "far": sampler.far,
            "near_shell": [sampler.near_lo, sampler.near_hi],
            "far_band": [sampler.far_lo, sampler.far_hi],
            "p": model.p,
        },
    )


def quadratic_lower_bound_fit(params, grid, verify_radius=None, margin=0.9, seed=GRID_SEED):
    """Fit (C1, C2) with V(E) >= C1 |E|^2 - C2, then verify on a larger set.

    C1 is a margin below the smallest V/|E|^2 ratio on the outer part of the
    grid; C2 absorbs the worst deficit over the grid plus a fresh random ball
    of radius ``verify_radius`` (default 5x the grid radius).  The final
    inequality is asserted on the combined set.
    """
    if verify_radius is None:
        verify_radius = 5.0 * grid.radius
    E = grid.points
    v = v_limit_batch(params, E)
    n2 = np.sum(E * E, axis=(1, 2))
    outer = n2 >= (0.5 * grid.radius) ** 2
    assert np.any(outer)
    c1 = margin * float(np.min(v[outer] / n2[outer]))
    c1 = max(c1, 1e-12)
    rng = np.random.default_rng(seed + 1)
    d = E.shape[-1]
    A = rng.standard_normal((4 * len(grid), d, d))
    X = 0.5 * (A + np.swapaxes(A, -1, -2))
    nrm = np.linalg.norm(X, axis=(1, 2))
    X *= (verify_radius * rng.uniform(0.0, 1.0, len(X)) / np.maximum(nrm, 1e-30))[:, None, None]
    big = np.concatenate([E, X], axis=0)
    vb = v_limit_batch(params, big)
    deficit = c1 * np.sum(big * big, axis=(1, 2)) - vb
    c2 = 1.02 * max(0.0, float(np.max(deficit))) + 1e-12
    assert np.all(vb >= c1 * np.sum(big * big, axis=(1, 2)) - c2)
    return float(c1), float(c2)


def hull_membership(params, E, tol=1e-10):
    """Zero-set test for the relaxed density at a symmetric strain.

    Membership in {vqce = 0} forces membership in the lamination hull of the
    spontaneous strains (via V >= dist^2/2), so the second flag mirrors the
    first.  Needs lam >= 0; otherwise the density is not bounded below by the
    distance term and the test is meaningless.
    """
    if params.lam < 0.0:
        raise ConfigError("hull membership needs lam >= 0")
    member = bool(vqce(params, E) <= tol)
    return {"member_of_Vqce_zero": member, "implies_Qe2_member": member}


def report_csv_text(report):
    """Plain CSV, columns eps,value,target,error; shortest-roundtrip floats."""
    lines = ["eps,value,target,error"]
    for row in report.rows():
        lines.append(",".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"


def report_json_text(report):
    return json.dumps(report.to_json(), sort_keys=True, indent=2) + "\n"

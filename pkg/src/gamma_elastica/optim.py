"""Limited-memory quasi-Newton minimizer with Armijo backtracking.

The line search treats +inf objective values as a rejected step, which is how
determinant constraints (det F > 0) are enforced without ever producing a
finite sentinel value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["LbfgsResult", "lbfgs"]


@dataclass
class LbfgsResult:
    x: np.ndarray
    value: float
    grad_norm: float
    iterations: int
    n_evals: int
    converged: bool
    status: str


def _two_loop(g, S, Y, rho):
    q = -g.copy()
    alpha = []
    for s, y, r in zip(reversed(S), reversed(Y), reversed(rho)):
        a = r * np.dot(s, q)
        alpha.append(a)
        q -= a * y
    if S:
        gamma = np.dot(S[-1], Y[-1]) / np.dot(Y[-1], Y[-1])
        q *= gamma
    for (s, y, r), a in zip(zip(S, Y, rho), reversed(alpha)):
        b = r * np.dot(y, q)
        q += (a - b) * s
    return q


def lbfgs(fun, x0, tol=1e-8, max_iter=1000, memory=10, armijo=1e-4,
          shrink=0.5, max_backtracks=60):
    """Minimize fun(x) -> (value, grad) from x0.

    Convergence is declared when the gradient max-norm falls to ``tol``.
    Curvature pairs with s.y <= 1e-12 |s||y| are skipped.  If the line search
    cannot find a finite decreasing step the run stops with
    status="line_search_failure" and the best point found so far; three
    consecutive iterations without a decrease resolvable in double precision
    stop with status="stalled" (best effort, caller sees converged=False
    unless the gradient test already passed).
    """
    x = np.array(x0, dtype=float)
    f, g = fun(x)
    n_evals = 1
    if not math.isfinite(f):
        raise ValueError("lbfgs requires a finite starting value")
    S, Y, rho = [], [], []
    status = "max_iter"
    converged = False
    it = 0
    stall = 0
    for it in range(1, max_iter + 1):
        gn = float(np.max(np.abs(g))) if g.size else 0.0
        if gn <= tol:
            status, converged = "converged", True
            it -= 1
            break
        p = _two_loop(g, S, Y, rho)
        gTp = float(np.dot(g, p))
        if not gTp < 0.0:
            S, Y, rho = [], [], []
            p = -g
            gTp = float(np.dot(g, p))
        a = 1.0
        accepted = False
        for _ in range(max_backtracks):
            xn = x + a * p
            if not np.any(xn != x):
                break
            fn, gg = fun(xn)
            n_evals += 1
            if math.isfinite(fn):
                need = armijo * a * gTp
                # once the required decrease is below resolution on f,
                # any non-increase is as good as the test can distinguish
                if fn <= f + need or (fn <= f and -need <= 1e-15 * abs(f)):
                    accepted = True
                    break
            a *= shrink
        if not accepted:
            status = "line_search_failure"
            break
        s = xn - x
        y = gg - g
        sy = float(np.dot(s, y))
        if sy > 1e-12 * (np.linalg.norm(s) * np.linalg.norm(y) + 1e-300):
            S.append(s)
            Y.append(y)
            rho.append(1.0 / sy)
            if len(S) > memory:
                S.pop(0)
                Y.pop(0)
                rho.pop(0)
        if f - fn <= 1e-14 * (abs(f) + 1e-300):
            stall += 1
        else:
            stall = 0
        x, f, g = xn, fn, gg
        if stall >= 3:
            status = "stalled"
            break
    else:
        it = max_iter
    gn = float(np.max(np.abs(g))) if g.size else 0.0
    if gn <= tol:
        status, converged = "converged", True
    return LbfgsResult(x, float(f), gn, it, n_evals, converged, status)

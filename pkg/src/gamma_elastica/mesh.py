"""P1 simplicial meshes of the unit box [0, 1]^d (d = 2 or 3).

Kuhn triangulation: every grid square splits into 2 triangles, every grid
cube into 6 tetrahedra, all sharing the main diagonal, so the mesh is
conforming and every element has volume h^d / d!.  Element gradients of P1
fields are constant; loads use lumped vertex masses |T| / (d+1).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .errors import SizeError

__all__ = ["BoxMesh"]

MAX_N = {2: 128, 3: 10}   # desk scale; d = 3 work beyond n = 10 is out of scope

_FACES = {
    "x0": (0, 0.0), "x1": (0, 1.0),
    "y0": (1, 0.0), "y1": (1, 1.0),
    "z0": (2, 0.0), "z1": (2, 1.0),
}


@dataclass(frozen=True)
class BoxMesh:
    d: int
    n: int
    vertices: np.ndarray        # (nv, d)
    cells: np.ndarray           # (ne, d+1) vertex ids
    volumes: np.ndarray         # (ne,)
    gradmats: np.ndarray        # (ne, d+1, d) rows are grad lambda_i
    vertex_mass: np.ndarray     # (nv,) lumped masses, sums to 1

    @property
    def h(self):
        return 1.0 / self.n

    @classmethod
    def build(cls, d, n):
        assert d in (2, 3)
        if not 1 <= n <= MAX_N[d]:
            raise SizeError(f"n out of range for d={d} (cap {MAX_N[d]})")
        axes = [np.linspace(0.0, 1.0, n + 1)] * d
        grids = np.meshgrid(*axes, indexing="ij")
        vertices = np.stack([g.reshape(-1) for g in grids], axis=1)

        strides = [(n + 1) ** (d - 1 - k) for k in range(d)]

        def vid(idx):
            return sum(i * s for i, s in zip(idx, strides))

        cells = []
        corners = np.stack(np.meshgrid(*[np.arange(n)] * d, indexing="ij"), axis=-1).reshape(-1, d)
        perms = list(permutations(range(d)))
        for corner in corners:
            for perm in perms:
                path = [tuple(corner)]
                cur = list(corner)
                for ax in perm:
                    cur[ax] += 1
                    path.append(tuple(cur))
                cells.append([vid(p) for p in path])
        cells = np.asarray(cells, dtype=np.int64)

        X = vertices[cells[:, 1:]] - vertices[cells[:, :1]]     # (ne, d, d) edge rows
        dets = np.linalg.det(X)
        volumes = np.abs(dets) / np.prod(range(1, d + 1))
        # x - x0 = X^T lambda, so lambda = X^{-T} (x - x0) and grad lambda_i is
        # row i of X^{-T} for the non-apex vertices
        grads = np.swapaxes(np.linalg.inv(X), -1, -2)            # (ne, d, d) rows grad lambda_i
        g0 = -grads.sum(axis=1, keepdims=True)
        gradmats = np.concatenate([g0, grads], axis=1)

        vertex_mass = np.zeros(len(vertices))
        np.add.at(vertex_mass, cells.reshape(-1), np.repeat(volumes / (d + 1), d + 1))
        return cls(d, n, vertices, cells, volumes, gradmats, vertex_mass)

    def gradients(self, U):
        """Per-element gradient of a P1 vector field U (nv, d) -> (ne, d, d);
        (grad u)_{ab} = d u_a / d x_b, constant on each element."""
        return np.einsum("eia,eib->eab", U[self.cells], self.gradmats)

    def scatter_grad(self, S):
        """Adjoint of ``gradients``: accumulate per-element (d, d) sensitivities
        S into per-vertex forces (nv, d).  sum_e S[e] : d(grad u)/d U."""
        contrib = np.einsum("eab,eib->eia", S, self.gradmats)
        out = np.zeros_like(self.vertices)
        np.add.at(out, self.cells.reshape(-1), contrib.reshape(-1, self.d))
        return out

    def boundary_mask(self, faces):
        """Boolean vertex mask for a face selection.

        faces is "all" or an iterable drawn from x0, x1, y0, y1 (and z0, z1
        for d = 3); sides are at coordinate 0 and 1 respectively.
        """
        if faces == "all":
            faces = [f for f, (ax, _) in _FACES.items() if ax < self.d]
        mask = np.zeros(len(self.vertices), dtype=bool)
        for f in faces:
            if f not in _FACES or _FACES[f][0] >= self.d:
                raise ValueError(f"unknown face {f!r} for d={self.d}")
            ax, val = _FACES[f]
            mask |= np.abs(self.vertices[:, ax] - val) < 1e-12
        if not mask.any():
            raise ValueError("boundary selection is empty")
        return mask

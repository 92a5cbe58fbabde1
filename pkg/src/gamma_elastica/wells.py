"""Well families for multiwell energies.

A family describes the strain set M; ``at_eps`` produces the finite-strain
well set U_eps.  Two kinds are supported:

* finite: M = {U_1, ..., U_m} of symmetric d x d strains, with exact wells
  I + eps U_i (no higher-order correction);
* nematic: M = {U_n = (3 n x n - I) / 2, n in S^2}, with wells
  L_{n,eps}^{1/2} = (1+eps) n x n + (1+eps)^{-1/2} (I - n x n),
  which expands as I + eps U_n + O(eps^2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .matkernel import symmetrize

__all__ = [
    "EpsilonWells",
    "FiniteWellFamily",
    "NematicWellFamily",
    "u_of_n",
    "nematic_stretch",
    "nematic_step_tensor",
]


def u_of_n(n):
    """Traceless strain U_n = (3 n x n - I) / 2 of a unit director n.

    Eigenvalues are (1, -1/2, -1/2) and |U_n|_F^2 = 3/2.
    """
    n = np.asarray(n, dtype=float)
    assert n.shape == (3,)
    assert abs(np.dot(n, n) - 1.0) < 1e-10, "director must be a unit vector"
    return 1.5 * np.outer(n, n) - 0.5 * np.eye(3)


def nematic_stretch(n, eps):
    """Spontaneous stretch L_{n,eps}^{1/2}; unit determinant for every eps > -1."""
    n = np.asarray(n, dtype=float)
    a = 1.0 + eps
    b = a ** -0.5
    return b * np.eye(3) + (a - b) * np.outer(n, n)


def nematic_step_tensor(n, eps):
    """Step-length tensor L_{n,eps} = (1+eps)^2 n x n + (1+eps)^{-1} (I - n x n)."""
    n = np.asarray(n, dtype=float)
    a = 1.0 + eps
    return (1.0 / a) * np.eye(3) + (a * a - 1.0 / a) * np.outer(n, n)


@dataclass(frozen=True)
class EpsilonWells:
    """The well set at a fixed eps: {R U : R in SO(d), U in members}."""

    kind: str                       # "finite" | "nematic"
    eps: float
    members: tuple = ()             # finite kind only
    lattice: int = 2562             # director lattice resolution (nematic)

    def __post_init__(self):
        assert self.kind in ("finite", "nematic")
        assert self.eps > -1.0
        if self.kind == "finite":
            assert len(self.members) > 0, "well family must be nonempty"
            for U in self.members:
                assert np.linalg.det(U) > 0.0, "wells must be orientation preserving"
        else:
            assert self.lattice >= 2562

    @property
    def dim(self):
        if self.kind == "nematic":
            return 3
        return self.members[0].shape[0]

    def stretch(self, n):
        assert self.kind == "nematic"
        return nematic_stretch(n, self.eps)

    def svals(self):
        """Common ascending singular values of every member (nematic only)."""
        assert self.kind == "nematic"
        a = 1.0 + self.eps
        b = a ** -0.5
        return np.array(sorted([b, b, a]))

    def max_offset(self):
        """max over members of ||U - I||_F (bounds the drift away from SO(d))."""
        if self.kind == "finite":
            return max(float(np.linalg.norm(U - np.eye(self.dim))) for U in self.members)
        a = 1.0 + self.eps
        b = a ** -0.5
        return float(np.sqrt((a - 1.0) ** 2 + 2.0 * (b - 1.0) ** 2))


@dataclass(frozen=True)
class FiniteWellFamily:
    """M = {U_1, ..., U_m}, symmetric d x d.  Wells at eps are exactly I + eps U_i."""

    strains: tuple = field(default_factory=tuple)

    def __post_init__(self):
        strains = tuple(np.asarray(U, dtype=float) for U in self.strains)
        assert len(strains) > 0
        d = strains[0].shape[0]
        assert d in (2, 3)
        for U in strains:
            assert U.shape == (d, d)
            assert np.allclose(U, U.T, atol=1e-12), "strains must be symmetric"
        object.__setattr__(self, "strains", strains)

    @property
    def dim(self):
        return self.strains[0].shape[0]

    def at_eps(self, eps):
        members = tuple(np.eye(self.dim) + eps * U for U in self.strains)
        return EpsilonWells(kind="finite", eps=float(eps), members=members)

    def dist2(self, E):
        """min over members of |E - U|_F^2 (the small-strain target)."""
        E = symmetrize(E)
        return min(float(np.sum((E - U) ** 2)) for U in self.strains)

    @classmethod
    def single_well(cls, d=3):
        """M = {0}: wells reduce to SO(d) for every eps."""
        return cls((np.zeros((d, d)),))


@dataclass(frozen=True)
class NematicWellFamily:
    """M = {U_n : n in S^2}; the eps-wells are the spontaneous stretches."""

    lattice: int = 2562

    @property
    def dim(self):
        return 3

    def at_eps(self, eps):
        return EpsilonWells(kind="nematic", eps=float(eps), lattice=self.lattice)

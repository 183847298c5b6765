"""Riemannian algebra connection, projectors, and the constrained connections.

Everything here is a dense computation on ``n x n`` matrices; ``n`` is at most
a handful for the systems this package targets, so projectors are formed
explicitly (by solving, never by inverting).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import LieAlgebraSpec, _frozen, _vec, ad_star, bracket, flat, sharp
from .errors import DimensionError, SubspaceError, TransversalityError

__all__ = [
    "RANK_RTOL",
    "numerical_rank",
    "Subspace",
    "AffineSubspace",
    "ProjectorPair",
    "g_connection",
    "orthogonal_projectors",
    "oblique_projectors",
    "d_connection",
    "c_connection",
]

RANK_RTOL = 1e-10
COVECTOR_TOL = 1e-12


def numerical_rank(S: np.ndarray, rtol: float = RANK_RTOL) -> int:
    if S.size == 0:
        return 0
    sv = np.linalg.svd(S, compute_uv=False)
    return int(np.sum(sv > rtol * sv[0])) if sv[0] > 0 else 0


def _kernel_basis(rows: np.ndarray, n: int) -> np.ndarray:
    """Orthonormal basis (as columns) of the null space of ``rows``."""
    if rows.shape[0] == 0:
        return np.eye(n)
    _, _, Vt = np.linalg.svd(rows)
    r = numerical_rank(rows)
    return Vt[r:].T.copy()


@dataclass(frozen=True, eq=False)
class Subspace:
    """Linear subspace given by the columns of ``basis`` (shape ``n x k``).

    ``covectors`` optionally fixes the constraint covectors that define the
    subspace as a kernel (shape ``(n - k) x n``). When absent, consumers fall
    back to an orthonormal annihilator.
    """

    basis: np.ndarray
    covectors: np.ndarray | None = None

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=float)
        if B.ndim == 1:
            B = B[:, None]
        if B.ndim != 2:
            raise DimensionError(f"subspace basis must be a matrix, got shape {B.shape}")
        n, k = B.shape
        if k and numerical_rank(B) < k:
            raise SubspaceError(f"subspace basis ({n} x {k}) is rank deficient: rank {numerical_rank(B)}")
        object.__setattr__(self, "basis", _frozen(B))
        if self.covectors is not None:
            Acov = np.asarray(self.covectors, dtype=float).reshape(-1, n)
            if Acov.shape[0] != n - k or numerical_rank(Acov) < n - k:
                raise SubspaceError(
                    f"need {n - k} independent covectors for a {k}-dim subspace of R^{n}"
                )
            scale = max(1.0, float(np.max(np.abs(Acov), initial=0.0)) * float(np.max(np.abs(B), initial=0.0)))
            if k and np.max(np.abs(Acov @ B), initial=0.0) > COVECTOR_TOL * scale:
                raise SubspaceError("covectors do not annihilate the subspace basis")
            object.__setattr__(self, "covectors", _frozen(Acov))

    @property
    def algebra_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(np.eye(n), np.zeros((0, n)))

    @classmethod
    def zero(cls, n: int) -> "Subspace":
        return cls(np.zeros((n, 0)))

    @classmethod
    def from_covectors(cls, covectors) -> "Subspace":
        """Kernel of the given constraint covectors (rows)."""
        Acov = np.atleast_2d(np.asarray(covectors, dtype=float))
        return cls(_kernel_basis(Acov, Acov.shape[1]), Acov)

    def contains(self, x, tol: float = 1e-10) -> bool:
        x = np.asarray(x, dtype=float)
        coef, *_ = np.linalg.lstsq(self.basis, x, rcond=None)
        return bool(np.linalg.norm(self.basis @ coef - x) <= tol * max(1.0, np.linalg.norm(x)))


@dataclass(frozen=True, eq=False)
class AffineSubspace:
    """``offset + direction``."""

    offset: np.ndarray
    direction: Subspace

    def __post_init__(self):
        a0 = np.asarray(self.offset, dtype=float)
        if a0.shape != (self.direction.algebra_dim,):
            raise DimensionError(f"offset of shape {a0.shape} does not match subspace")
        object.__setattr__(self, "offset", _frozen(a0))

    @property
    def algebra_dim(self) -> int:
        return self.direction.algebra_dim

    @property
    def dim(self) -> int:
        return self.direction.dim

    @classmethod
    def from_covectors(cls, covectors, levels) -> "AffineSubspace":
        """Solution set of ``covectors @ x = levels``; offset is the least-norm solution."""
        d = Subspace.from_covectors(covectors)
        levels = np.atleast_1d(np.asarray(levels, dtype=float))
        a0, *_ = np.linalg.lstsq(d.covectors, levels, rcond=None)
        return cls(a0, d)


@dataclass(frozen=True, eq=False)
class ProjectorPair:
    onto: np.ndarray
    along: np.ndarray


def g_connection(A: LieAlgebraSpec, x, y, sigma: int = 1) -> np.ndarray:
    """Levi-Civita connection restricted to invariant fields, in algebra terms.

    For ``sigma=+1`` (right-invariant metric) this is
    ``-1/2 [x, y] + 1/2 #ad*_x b(y) + 1/2 #ad*_y b(x)``. ``sigma=-1`` gives the
    left-invariant counterpart, i.e. the same formula on the opposite bracket.
    """
    x, y = _vec(A, x), _vec(A, y)
    out = -0.5 * bracket(A, x, y) + 0.5 * sharp(A, ad_star(A, x, flat(A, y))) + 0.5 * sharp(
        A, ad_star(A, y, flat(A, x))
    )
    return out if sigma == 1 else -out


def orthogonal_projectors(A: LieAlgebraSpec, d: Subspace) -> ProjectorPair:
    """Metric-orthogonal projector onto ``d`` and its complement."""
    n = A.dim
    if d.algebra_dim != n:
        raise DimensionError(f"subspace lives in R^{d.algebra_dim}, algebra has dim {n}")
    B = d.basis
    if d.dim == 0:
        onto = np.zeros((n, n))
    else:
        BtM = B.T @ A.metric
        onto = B @ np.linalg.solve(BtM @ B, BtM)
    return ProjectorPair(_frozen(onto), _frozen(np.eye(n) - onto))


def oblique_projectors(A: LieAlgebraSpec, d: Subspace, f: Subspace) -> ProjectorPair:
    """Projector onto ``d`` along ``f`` (requires ``d + f`` to be a direct sum equal to the algebra)."""
    n = A.dim
    if d.algebra_dim != n or f.algebra_dim != n:
        raise DimensionError("subspaces do not conform to the algebra")
    S = np.hstack([d.basis, f.basis])
    rank = numerical_rank(S)
    if S.shape[1] != n or rank < n:
        raise TransversalityError(
            f"constraint (dim {d.dim}) and input (dim {f.dim}) subspaces are not transversal: "
            f"stacked rank {rank} of {n}",
            rank=rank,
        )
    coords = np.linalg.solve(S, np.eye(n))
    onto = d.basis @ coords[: d.dim]
    return ProjectorPair(_frozen(onto), _frozen(np.eye(n) - onto))


def _projected_connection(A, along, x, y, sigma):
    nabla = g_connection(A, x, y, sigma)
    return nabla + g_connection(A, x, along @ y, sigma) - along @ nabla


def d_connection(
    A: LieAlgebraSpec, d: Subspace, x, y, sigma: int = 1, projectors: ProjectorPair | None = None
) -> np.ndarray:
    """Nonholonomic connection ``nabla_x y + (nabla_x Q)(y)`` with ``Q`` the orthogonal complement projector."""
    P = projectors if projectors is not None else orthogonal_projectors(A, d)
    return _projected_connection(A, P.along, _vec(A, x), _vec(A, y), sigma)


def c_connection(
    A: LieAlgebraSpec,
    d: Subspace,
    f: Subspace,
    x,
    y,
    sigma: int = 1,
    projectors: ProjectorPair | None = None,
) -> np.ndarray:
    """Induced constrained connection: as :func:`d_connection` but projecting along ``f``."""
    P = projectors if projectors is not None else oblique_projectors(A, d, f)
    return _projected_connection(A, P.along, _vec(A, x), _vec(A, y), sigma)

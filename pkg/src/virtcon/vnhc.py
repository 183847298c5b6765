"""Virtual nonholonomic constraints: the feedback law that makes a subspace invariant.

A :class:`ControlledSystem` is the reduced mechanical system

    xi_dot = drift(xi) + F @ u,    drift(xi) = -sigma * #(ad*_xi b(xi))

together with a (possibly affine) constraint subspace. When the constraint
direction and the span of ``F`` are complementary there is exactly one
``u(xi)`` keeping every constraint covector constant along the flow; that
law is :func:`control_law`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np

from .algebra import GroupModel, LieAlgebraSpec, _frozen, _vec, ad_star, flat, sharp, validate_algebra
from .connections import (
    RANK_RTOL,
    AffineSubspace,
    ProjectorPair,
    Subspace,
    numerical_rank,
    oblique_projectors,
)
from .errors import AlgebraError, DimensionError, SubspaceError, TransversalityError

__all__ = [
    "Constraint",
    "TransversalityReport",
    "ControlledSystem",
    "annihilator",
    "check_transversal",
    "geodesic_drift",
    "drift",
    "control_law",
    "closed_loop_field",
    "constraint_residual",
]

Constraint = Union[Subspace, AffineSubspace]


def _direction(constraint: Constraint) -> Subspace:
    return constraint.direction if isinstance(constraint, AffineSubspace) else constraint


def annihilator(d: Subspace) -> np.ndarray:
    """Orthonormal rows spanning the covectors that vanish on ``d``.

    Rows come from the left singular vectors of the basis, so the result is
    deterministic; each row is signed so its largest entry is positive.
    """
    B = d.basis
    n, k = B.shape
    if k == 0:
        return np.eye(n)
    U, _, _ = np.linalg.svd(B, full_matrices=True)
    rows = U[:, k:].T.copy()
    for row in rows:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return rows


def _constraint_rows(constraint: Constraint) -> np.ndarray:
    d = _direction(constraint)
    return d.covectors if d.covectors is not None else annihilator(d)


@dataclass(frozen=True)
class TransversalityReport:
    transversal: bool
    rank: int
    algebra_dim: int
    constraint_dim: int
    input_dim: int
    singular_ratio: float

    def __bool__(self) -> bool:
        return self.transversal

    def lines(self) -> list[str]:
        return [
            f"constraint_dim: {self.constraint_dim}",
            f"input_dim: {self.input_dim}",
            f"stacked_rank: {self.rank} of {self.algebra_dim}",
            f"min_singular_ratio: {self.singular_ratio:.17g}",
            f"transversal: {self.transversal}",
        ]


def check_transversal(constraint: Constraint, f: Subspace, rtol: float = RANK_RTOL) -> TransversalityReport:
    """Is the algebra the direct sum of the constraint direction and ``f``?"""
    d = _direction(constraint)
    n = d.algebra_dim
    S = np.hstack([d.basis, f.basis])
    rank = numerical_rank(S, rtol)
    if S.size:
        sv = np.linalg.svd(S, compute_uv=False)
        ratio = float(sv[-1] / sv[0]) if sv[0] > 0 and S.shape[1] == n else 0.0
    else:
        ratio = 0.0
    ok = f.algebra_dim == n and d.dim + f.dim == n and rank == n
    return TransversalityReport(ok, rank, n, d.dim, f.dim, ratio)


@dataclass(frozen=True, eq=False)
class ControlledSystem:
    """Algebra, trivialization sign, input directions and constraint.

    ``input_basis`` holds the input vectors ``f_a`` as columns (``n x m``).
    ``constraint=None`` means the whole algebra, i.e. a free system.
    ``sigma=+1`` is the right trivialization ``xi = g_dot g^-1``; ``-1`` the left.
    """

    algebra: LieAlgebraSpec
    sigma: int
    input_basis: np.ndarray
    constraint: Constraint | None = None
    group: GroupModel | None = None
    label: str = ""
    annihilator_rows: np.ndarray = field(init=False, repr=False)
    levels: np.ndarray = field(init=False, repr=False)
    _gain: np.ndarray = field(init=False, repr=False)
    _drift_q: np.ndarray = field(init=False, repr=False)
    _closed_q: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        A = self.algebra
        n = A.dim
        report = validate_algebra(A)
        if not report.passed:
            raise AlgebraError(f"invalid algebra {A.name!r}: " + "; ".join(report.failures()))
        if self.sigma not in (1, -1):
            raise ValueError(f"sigma must be +1 or -1, got {self.sigma}")
        F = np.asarray(self.input_basis, dtype=float)
        if F.ndim == 1:
            F = F[:, None] if F.size else np.zeros((n, 0))
        if F.shape[0] != n:
            raise DimensionError(f"input basis has {F.shape[0]} rows, algebra has dim {n}")
        if F.shape[1] >= n:
            raise DimensionError(f"need fewer inputs than the algebra dimension ({F.shape[1]} >= {n})")
        if F.shape[1] and numerical_rank(F) < F.shape[1]:
            raise SubspaceError("input directions are linearly dependent")
        object.__setattr__(self, "input_basis", _frozen(F))

        constraint = Subspace.full(n) if self.constraint is None else self.constraint
        if constraint.algebra_dim != n:
            raise DimensionError(f"constraint lives in R^{constraint.algebra_dim}, algebra has dim {n}")
        object.__setattr__(self, "constraint", constraint)

        tr = check_transversal(constraint, Subspace(F))
        if not tr:
            raise TransversalityError(
                f"{self.label or 'system'}: constraint (dim {tr.constraint_dim}) and inputs "
                f"(dim {tr.input_dim}) are not transversal, stacked rank {tr.rank} of {n}",
                rank=tr.rank,
            )
        rows = _constraint_rows(constraint)
        offset = constraint.offset if isinstance(constraint, AffineSubspace) else np.zeros(n)
        object.__setattr__(self, "annihilator_rows", _frozen(rows))
        object.__setattr__(self, "levels", _frozen(rows @ offset))
        if F.shape[1]:
            gain = -np.linalg.solve(rows @ F, rows)
        else:
            gain = np.zeros((0, n))
        object.__setattr__(self, "_gain", _frozen(gain))
        # drift(x) = Q @ kron(x, x) with Q[r, (i, l)] = -sigma (M^-1)[r, j] C[i, j, k] M[k, l]
        G = np.einsum("ijk,kl->jil", A.structure_constants, A.metric).reshape(n, n * n)
        Q = -self.sigma * np.linalg.solve(A.metric, G)
        object.__setattr__(self, "_drift_q", _frozen(Q))
        object.__setattr__(self, "_closed_q", _frozen(Q + F @ (gain @ Q)))

    @property
    def dim(self) -> int:
        return self.algebra.dim

    @property
    def n_inputs(self) -> int:
        return self.input_basis.shape[1]

    @property
    def direction(self) -> Subspace:
        return _direction(self.constraint)

    @property
    def input_subspace(self) -> Subspace:
        return Subspace(self.input_basis)

    @property
    def is_affine(self) -> bool:
        return isinstance(self.constraint, AffineSubspace)

    @cached_property
    def projectors(self) -> ProjectorPair:
        """Projectors onto the constraint direction along the inputs."""
        return oblique_projectors(self.algebra, self.direction, self.input_subspace)


def geodesic_drift(A: LieAlgebraSpec, x, sigma: int = 1) -> np.ndarray:
    """``-sigma * #(ad*_x b(x))`` evaluated operator by operator."""
    return -sigma * sharp(A, ad_star(A, x, flat(A, x)))


def drift(sys: ControlledSystem, x) -> np.ndarray:
    """Uncontrolled acceleration ``-sigma * #(ad*_x b(x))``.

    Uses the quadratic-form coefficients cached on the system; agrees with
    :func:`geodesic_drift` to rounding.
    """
    x = _vec(sys.algebra, x)
    return sys._drift_q @ np.outer(x, x).ravel()


def control_law(sys: ControlledSystem, x) -> np.ndarray:
    """The unique ``u`` with ``rows @ (drift(x) + F u) = 0``; defined for every ``x``."""
    return sys._gain @ drift(sys, x)


def closed_loop_field(sys: ControlledSystem, x) -> np.ndarray:
    """``drift(x) + F @ control_law(x)``."""
    x = _vec(sys.algebra, x)
    return sys._closed_q @ np.outer(x, x).ravel()


def constraint_residual(constraint: Constraint | ControlledSystem, x) -> np.ndarray:
    """``rows @ (x - offset)``; zero exactly on the constraint."""
    if isinstance(constraint, ControlledSystem):
        return constraint.annihilator_rows @ np.asarray(x, dtype=float) - constraint.levels
    rows = _constraint_rows(constraint)
    x = np.asarray(x, dtype=float)
    if x.shape != (rows.shape[1],):
        raise DimensionError(f"state of shape {x.shape} does not conform to dim {rows.shape[1]}")
    if isinstance(constraint, AffineSubspace):
        x = x - constraint.offset
    return rows @ x

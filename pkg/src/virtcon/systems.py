"""Pre-built systems with closed-form oracles for their drift and control law."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .algebra import (
    LieAlgebraSpec,
    adjoint_group,
    gl2_structure_constants,
    se3_group,
    se3_structure_constants,
    so3_group,
    so3_structure_constants,
    so3xr_structure_constants,
    so3xs1_group,
)
from .connections import AffineSubspace, Subspace
from .errors import ParameterError
from .vnhc import ControlledSystem, annihilator

__all__ = [
    "CatalogEntry",
    "build_so3_rigid_body",
    "build_se3_homogeneous",
    "build_rotor",
    "build_random_orthogonal",
    "CATALOG",
    "build",
    "random_states",
]


@dataclass(frozen=True, eq=False)
class CatalogEntry:
    name: str
    params: dict
    system: ControlledSystem
    closed_form_control: Callable[[np.ndarray], np.ndarray] | None = None
    closed_form_drift: Callable[[np.ndarray], np.ndarray] | None = None
    notes: dict = field(default_factory=dict)


def _positive(**values):
    for key, v in values.items():
        if not (np.isfinite(v) and v > 0):
            raise ParameterError(f"{key} must be positive, got {v}")


def build_so3_rigid_body(lambda1: float, lambda2: float, lambda3: float) -> CatalogEntry:
    """Free rigid body on SO(3) with principal inertias ``lambda_i``."""
    _positive(lambda1=lambda1, lambda2=lambda2, lambda3=lambda3)
    J = np.diag([lambda1, lambda2, lambda3]).astype(float)
    A = LieAlgebraSpec(so3_structure_constants(), J, "so(3)")
    sys = ControlledSystem(A, 1, np.zeros((3, 0)), None, so3_group(), "so3_rigid_body")

    def euler(omega):
        omega = np.asarray(omega, dtype=float)
        return np.linalg.solve(J, np.cross(omega, J @ omega))

    return CatalogEntry(
        "so3_rigid_body",
        {"lambda1": lambda1, "lambda2": lambda2, "lambda3": lambda3},
        sys,
        closed_form_control=lambda x: np.zeros(0),
        closed_form_drift=euler,
    )


SE3_INPUT_CONVENTIONS = ("sharp", "printed")


def build_se3_homogeneous(m: float, k: float, inputs: str = "sharp") -> CatalogEntry:
    """Homogeneous rigid body on SE(3) with the rolling-type constraint.

    Coordinates are ``(omega_1, omega_2, omega_3, x_dot, y_dot, z_dot)``. The
    constraint is ``omega_1 + y_dot = 0, omega_2 - x_dot = 0, omega_3 = 0,
    z_dot = 0``.

    ``inputs="sharp"`` uses the input vectors ``#F`` of the force covectors
    ``e1 + e5, e2 - e4, e3, e6``; this makes the inputs metric-orthogonal to
    the constraint. ``inputs="printed"`` uses columns that reproduce the
    component equations with ``-u_2`` in the x equation and ``-u_1`` in the
    y equation; those lose transversality when ``k = 1``.
    """
    _positive(m=m, k=k)
    if inputs not in SE3_INPUT_CONVENTIONS:
        raise ParameterError(f"inputs must be one of {SE3_INPUT_CONVENTIONS}, got {inputs!r}")
    I, M_ = m * k * k, m
    metric = np.diag([I, I, I, M_, M_, M_])
    A = LieAlgebraSpec(se3_structure_constants(), metric, "se(3)")
    covectors = np.array(
        [
            [1, 0, 0, 0, 1, 0],
            [0, 1, 0, -1, 0, 0],
            [0, 0, 1, 0, 0, 0],
            [0, 0, 0, 0, 0, 1],
        ],
        dtype=float,
    )
    basis = np.array([[1, 0, 0, 0, -1, 0], [0, 1, 0, 1, 0, 0]], dtype=float).T
    d = Subspace(basis, covectors)
    if inputs == "sharp":
        F = np.linalg.solve(metric, covectors.T)
    else:
        F = np.zeros((6, 4))
        F[[0, 4], 0] = 1 / I, -1 / M_
        F[[1, 3], 1] = 1 / I, -1 / M_
        F[2, 2] = 1 / I
        F[5, 3] = 1 / M_
    sys = ControlledSystem(A, 1, F, d, se3_group(), "se3_homogeneous")

    def law(x):
        w1, w2 = x[0], x[1]
        return np.array([0.0, 0.0, 0.0, m * (w1 * w1 + w2 * w2)])

    def free(x):
        return np.concatenate([np.zeros(3), np.cross(x[:3], x[3:])])

    return CatalogEntry(
        "se3_homogeneous",
        {"m": m, "k": k, "inputs": inputs},
        sys,
        closed_form_control=law,
        closed_form_drift=free,
        notes={"closed_form_control_domain": "constraint subspace"},
    )


def build_rotor(
    lambda1: float, lambda2: float, lambda3: float, J: float, k: float, p: float = 0.0
) -> CatalogEntry:
    """Rigid body with a rotor on its third axis, group SO(3) x S^1.

    Coordinates are ``(omega_1, omega_2, omega_3, alpha_dot)``. The affine
    constraint is ``(J - k lambda3) omega_3 + J (1 - k) alpha_dot = p`` and the
    single input vector is ``(-J/D) e3 + (lambda3/D) e4`` with
    ``D = J lambda3 - J^2``.
    """
    _positive(lambda1=lambda1, lambda2=lambda2, lambda3=lambda3, J=J)
    D = J * lambda3 - J * J
    if not D > 0:
        raise ParameterError(
            f"metric not positive-definite: requires J*lambda3 - J**2 > 0, got {D:.6g}"
        )
    for key, v in (("k", k), ("p", p)):
        if not np.isfinite(v):
            raise ParameterError(f"{key} must be finite, got {v}")
    metric = np.array(
        [
            [lambda1, 0, 0, 0],
            [0, lambda2, 0, 0],
            [0, 0, lambda3, J],
            [0, 0, J, J],
        ],
        dtype=float,
    )
    A = LieAlgebraSpec(so3xr_structure_constants(), metric, "so(3)xR")
    covector = np.array([[0.0, 0.0, J - k * lambda3, J * (1.0 - k)]])
    constraint = AffineSubspace.from_covectors(covector, [p])
    f = np.array([0.0, 0.0, -J / D, lambda3 / D])
    sys = ControlledSystem(A, -1, f[:, None], constraint, so3xs1_group(), "rotor")

    def law(x):
        return np.array([k * (lambda1 - lambda2) * x[0] * x[1]])

    def free(x):
        w1, w2, w3, a = x
        return np.array(
            [
                -((lambda3 - lambda2) * w2 * w3 + J * w2 * a) / lambda1,
                -((lambda1 - lambda3) * w1 * w3 - J * w1 * a) / lambda2,
                -(J / D) * (lambda2 - lambda1) * w1 * w2,
                (J / D) * (lambda2 - lambda1) * w1 * w2,
            ]
        )

    return CatalogEntry(
        "rotor",
        {"lambda1": lambda1, "lambda2": lambda2, "lambda3": lambda3, "J": J, "k": k, "p": p},
        sys,
        closed_form_control=law,
        closed_form_drift=free,
    )


def build_random_orthogonal(seed: int = 0, dim_constraint: int = 2) -> CatalogEntry:
    """gl(2, R) in a random basis with a random metric and constraint.

    The inputs span the metric-orthogonal complement of the constraint, so
    the virtual constraint dynamics coincide with the nonholonomic ones.
    """
    rng = np.random.default_rng(seed)
    n = 4
    if not 0 < dim_constraint < n:
        raise ParameterError(f"dim_constraint must be in 1..{n - 1}")
    while True:
        P = rng.normal(size=(n, n))
        if np.linalg.cond(P) < 10:
            break
    C0 = gl2_structure_constants()
    C = np.einsum("ai,bj,abc,kc->ijk", P, P, C0, np.linalg.inv(P))
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    metric = Q @ np.diag(rng.uniform(0.5, 2.0, size=n)) @ Q.T
    metric = 0.5 * (metric + metric.T)
    A = LieAlgebraSpec(C, metric, f"gl(2)@seed{seed}")
    d = Subspace(rng.normal(size=(n, dim_constraint)))
    F = np.linalg.solve(metric, annihilator(d).T)
    sys = ControlledSystem(A, 1, F, d, adjoint_group(A), f"random_orthogonal[{seed}]")
    return CatalogEntry("random_orthogonal", {"seed": seed, "dim_constraint": dim_constraint}, sys)


CATALOG: dict[str, Callable[..., CatalogEntry]] = {
    "so3_rigid_body": build_so3_rigid_body,
    "se3_homogeneous": build_se3_homogeneous,
    "rotor": build_rotor,
    "random_orthogonal": build_random_orthogonal,
}


def build(name: str, **params) -> CatalogEntry:
    try:
        builder = CATALOG[name]
    except KeyError:
        raise ParameterError(f"unknown catalog system {name!r}; known: {', '.join(CATALOG)}") from None
    try:
        return builder(**params)
    except TypeError as exc:
        raise ParameterError(f"bad parameters for {name}: {exc}") from None


def random_states(
    sys: ControlledSystem, rng: np.random.Generator, count: int, on_constraint: bool = True, scale: float = 1.0
) -> np.ndarray:
    """``count`` standard-normal states, optionally placed on the constraint."""
    n = sys.dim
    if not on_constraint:
        return scale * rng.normal(size=(count, n))
    d = sys.direction
    offset = sys.constraint.offset if sys.is_affine else np.zeros(n)
    return offset + scale * rng.normal(size=(count, d.dim)) @ d.basis.T

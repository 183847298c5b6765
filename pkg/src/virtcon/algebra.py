"""Finite-dimensional Lie algebras with an inner product, in basis coordinates.

An algebra is described by its structure constants ``C[i, j, k]`` meaning
``[e_i, e_j] = sum_k C[i, j, k] e_k`` and by a metric matrix ``M`` with
``<x, y> = x @ M @ y``. Vectors and covectors are plain float arrays of
length ``n``; covectors pair with vectors by the dot product.

The module also holds the matrix group models used to reconstruct group
trajectories from algebra trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import DimensionError, IntegrationError

__all__ = [
    "LieAlgebraSpec",
    "ValidationReport",
    "GroupModel",
    "bracket",
    "ad_matrix",
    "ad_star",
    "flat",
    "sharp",
    "kinetic_energy",
    "validate_algebra",
    "so3_structure_constants",
    "se3_structure_constants",
    "so3xr_structure_constants",
    "gl2_structure_constants",
    "hat",
    "vee",
    "exp_so3",
    "exp_se3",
    "so3_group",
    "se3_group",
    "so3xs1_group",
    "adjoint_group",
    "group_step",
    "orthogonality_drift",
    "algebra_to_dict",
    "algebra_from_dict",
]

# Validation thresholds
STRUCTURE_TOL = 1e-12
GROUP_MEMBERSHIP_TOL = 1e-8
SMALL_ANGLE = 1e-8


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LieAlgebraSpec:
    """Structure constants plus metric of an ``n``-dimensional Lie algebra.

    Construction only checks shapes. Antisymmetry, the Jacobi identity and
    positive-definiteness of the metric are reported by
    :func:`validate_algebra` so that broken specs can still be inspected.
    """

    structure_constants: np.ndarray
    metric: np.ndarray
    name: str = ""

    def __post_init__(self):
        C = np.asarray(self.structure_constants, dtype=float)
        M = np.asarray(self.metric, dtype=float)
        if C.ndim != 3 or len(set(C.shape)) != 1 or C.shape[0] == 0:
            raise DimensionError(f"structure constants must be n x n x n, got {C.shape}")
        n = C.shape[0]
        if M.shape != (n, n):
            raise DimensionError(f"metric must be {n} x {n}, got {M.shape}")
        object.__setattr__(self, "structure_constants", _frozen(C))
        object.__setattr__(self, "metric", _frozen(M))

    @property
    def dim(self) -> int:
        return self.structure_constants.shape[0]

    def inner(self, x, y) -> float:
        return float(_vec(self, x) @ self.metric @ _vec(self, y))

    def with_metric(self, metric, name: str | None = None) -> "LieAlgebraSpec":
        return LieAlgebraSpec(self.structure_constants, metric, self.name if name is None else name)

    def opposite(self) -> "LieAlgebraSpec":
        """Same vector space and metric with the bracket negated."""
        return LieAlgebraSpec(-self.structure_constants, self.metric, f"{self.name}^op")


def _vec(A: LieAlgebraSpec, x, what: str = "vector") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (A.dim,):
        raise DimensionError(f"{what} of shape {x.shape} does not conform to dim {A.dim}")
    return x


def bracket(A: LieAlgebraSpec, x, y) -> np.ndarray:
    """``[x, y]_k = sum_ij C[i, j, k] x_i y_j``."""
    x, y = _vec(A, x), _vec(A, y)
    return np.einsum("ijk,i,j->k", A.structure_constants, x, y)


def ad_matrix(A: LieAlgebraSpec, x) -> np.ndarray:
    """Matrix of ``y -> [x, y]``."""
    x = _vec(A, x)
    return np.einsum("i,ijk->kj", x, A.structure_constants)


def ad_star(A: LieAlgebraSpec, x, mu) -> np.ndarray:
    """Coadjoint action with ``(ad*_x mu)(y) = mu([x, y])``, no extra sign."""
    x, mu = _vec(A, x), _vec(A, mu, "covector")
    return np.einsum("i,ijk,k->j", x, A.structure_constants, mu)


def flat(A: LieAlgebraSpec, x) -> np.ndarray:
    return A.metric @ _vec(A, x)


def sharp(A: LieAlgebraSpec, mu) -> np.ndarray:
    return np.linalg.solve(A.metric, _vec(A, mu, "covector"))


def kinetic_energy(A: LieAlgebraSpec, x) -> float:
    """Reduced Lagrangian ``0.5 <x, x>``."""
    x = _vec(A, x)
    return 0.5 * float(x @ A.metric @ x)


@dataclass(frozen=True)
class ValidationReport:
    name: str
    antisymmetry: float
    jacobi: float
    metric_asymmetry: float
    min_metric_eigenvalue: float
    tol: float = STRUCTURE_TOL

    @property
    def passed(self) -> bool:
        return (
            self.antisymmetry <= self.tol
            and self.jacobi <= self.tol
            and self.metric_asymmetry <= self.tol
            and self.min_metric_eigenvalue > 0.0
        )

    def failures(self) -> list[str]:
        out = []
        if self.antisymmetry > self.tol:
            out.append(f"antisymmetry violated: max |C[i,j,k] + C[j,i,k]| = {self.antisymmetry:.3g}")
        if self.jacobi > self.tol:
            out.append(f"Jacobi identity violated: max residual = {self.jacobi:.3g}")
        if self.metric_asymmetry > self.tol:
            out.append(f"metric not symmetric: max |M - M^T| = {self.metric_asymmetry:.3g}")
        if not self.min_metric_eigenvalue > 0.0:
            out.append(
                f"metric not positive-definite: min eigenvalue = {self.min_metric_eigenvalue:.6g}"
            )
        return out

    def lines(self) -> list[str]:
        return [
            f"algebra: {self.name or '<unnamed>'}",
            f"antisymmetry_max: {self.antisymmetry:.17g}",
            f"jacobi_max: {self.jacobi:.17g}",
            f"metric_asymmetry_max: {self.metric_asymmetry:.17g}",
            f"metric_min_eigenvalue: {self.min_metric_eigenvalue:.17g}",
            f"algebra_passed: {self.passed}",
        ] + [f"FAIL: {msg}" for msg in self.failures()]


def validate_algebra(A: LieAlgebraSpec, tol: float = STRUCTURE_TOL) -> ValidationReport:
    """Measure how far ``A`` is from a valid metric Lie algebra. Never raises."""
    C = A.structure_constants
    antisym = float(np.max(np.abs(C + C.transpose(1, 0, 2))))
    jac = (
        np.einsum("ijm,mlk->ijlk", C, C)
        + np.einsum("jlm,mik->ijlk", C, C)
        + np.einsum("lim,mjk->ijlk", C, C)
    )
    M = A.metric
    asym = float(np.max(np.abs(M - M.T)))
    with np.errstate(all="ignore"):
        eig = np.linalg.eigvalsh(0.5 * (M + M.T)) if np.all(np.isfinite(M)) else np.array([np.nan])
    return ValidationReport(
        name=A.name,
        antisymmetry=antisym,
        jacobi=float(np.max(np.abs(jac))),
        metric_asymmetry=asym,
        min_metric_eigenvalue=float(np.min(eig)),
        tol=tol,
    )


# --- structure constants of the catalog algebras -------------------------

def _levi_civita() -> np.ndarray:
    eps = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[i, j, k] = 1.0
        eps[j, i, k] = -1.0
    return eps


def so3_structure_constants() -> np.ndarray:
    """``[e_i, e_j] = eps_ijk e_k``: the cross product under the hat map."""
    return _levi_civita()


def se3_structure_constants() -> np.ndarray:
    """Basis ``(omega, v)``: ``[(w1, v1), (w2, v2)] = (w1 x w2, w1 x v2 - w2 x v1)``."""
    eps = _levi_civita()
    C = np.zeros((6, 6, 6))
    C[:3, :3, :3] = eps
    C[:3, 3:, 3:] = eps
    C[3:, :3, 3:] = eps
    return C


def so3xr_structure_constants() -> np.ndarray:
    """so(3) plus a central direction (the rotor angle rate)."""
    C = np.zeros((4, 4, 4))
    C[:3, :3, :3] = _levi_civita()
    return C


def gl2_structure_constants() -> np.ndarray:
    """gl(2, R) in the basis ``E11, E12, E21, E22``."""
    idx = [(0, 0), (0, 1), (1, 0), (1, 1)]
    C = np.zeros((4, 4, 4))
    for a, (i, j) in enumerate(idx):
        for b, (k, l) in enumerate(idx):
            # [E_ij, E_kl] = delta_jk E_il - delta_li E_kj
            if j == k:
                C[a, b, idx.index((i, l))] += 1.0
            if l == i:
                C[a, b, idx.index((k, j))] -= 1.0
    return C


# --- matrix group models ---------------------------------------------------

def hat(w) -> np.ndarray:
    w1, w2, w3 = w
    return np.array([[0.0, -w3, w2], [w3, 0.0, -w1], [-w2, w1, 0.0]])


def vee(W) -> np.ndarray:
    return np.array([W[2, 1], W[0, 2], W[1, 0]])


def _rodrigues_coeffs(theta: float) -> tuple[float, float, float]:
    """Return ``sin t / t``, ``(1 - cos t) / t^2``, ``(t - sin t) / t^3``."""
    if theta < SMALL_ANGLE:
        t2 = theta * theta
        return 1.0 - t2 / 6.0, 0.5 - t2 / 24.0, 1.0 / 6.0 - t2 / 120.0
    s, c = np.sin(theta), np.cos(theta)
    return s / theta, (1.0 - c) / theta**2, (theta - s) / theta**3


def exp_so3(W) -> np.ndarray:
    """Rodrigues formula for a skew-symmetric 3x3 matrix."""
    W = np.asarray(W, dtype=float)
    a, b, _ = _rodrigues_coeffs(float(np.linalg.norm(vee(W))))
    return np.eye(3) + a * W + b * (W @ W)


def exp_se3(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    W = X[:3, :3]
    a, b, c = _rodrigues_coeffs(float(np.linalg.norm(vee(W))))
    W2 = W @ W
    out = np.eye(4)
    out[:3, :3] = np.eye(3) + a * W + b * W2
    out[:3, 3] = (np.eye(3) + b * W + c * W2) @ X[:3, 3]
    return out


def _se3_embed(x) -> np.ndarray:
    X = np.zeros((4, 4))
    X[:3, :3] = hat(x[:3])
    X[:3, 3] = x[3:6]
    return X


def _so3xs1_embed(x) -> np.ndarray:
    X = np.zeros((5, 5))
    X[:3, :3] = hat(x[:3])
    X[3, 4], X[4, 3] = -x[3], x[3]
    return X


def _so3xs1_exp(X) -> np.ndarray:
    out = np.eye(5)
    out[:3, :3] = exp_so3(X[:3, :3])
    a = X[4, 3]
    out[3:, 3:] = [[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]]
    return out


@dataclass(frozen=True, eq=False)
class GroupModel:
    """A matrix group together with the embedding of its algebra.

    ``orthogonality_block`` is a ``(start, stop)`` index range whose diagonal
    block must stay orthogonal; ``None`` when the group has no such block.
    """

    name: str
    matrix_size: int
    embed: Callable[[np.ndarray], np.ndarray]
    exponential: Callable[[np.ndarray], np.ndarray]
    orthogonality_block: tuple[int, int] | None = None
    identity: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "identity", _frozen(np.eye(self.matrix_size)))

    def compose(self, g, h) -> np.ndarray:
        return np.asarray(g) @ np.asarray(h)


def so3_group() -> GroupModel:
    return GroupModel("SO(3)", 3, hat, exp_so3, (0, 3))


def se3_group() -> GroupModel:
    return GroupModel("SE(3)", 4, _se3_embed, exp_se3, (0, 3))


def so3xs1_group() -> GroupModel:
    """SO(3) x S^1 as 5x5 block-diagonal rotations (S^1 as a planar rotation)."""
    return GroupModel("SO(3)xS1", 5, _so3xs1_embed, _so3xs1_exp, (0, 5))


def adjoint_group(A: LieAlgebraSpec) -> GroupModel:
    """Adjoint group of ``A`` acting on its own coordinates; works for any algebra."""
    return GroupModel(
        f"Ad({A.name})",
        A.dim,
        lambda x: ad_matrix(A, x),
        scipy.linalg.expm,
        None,
    )


def orthogonality_drift(Gm: GroupModel, g) -> float:
    """``||R^T R - I||_F`` over the model's rotation block (0 if it has none)."""
    if Gm.orthogonality_block is None:
        return 0.0
    a, b = Gm.orthogonality_block
    R = np.asarray(g)[a:b, a:b]
    return float(np.linalg.norm(R.T @ R - np.eye(b - a)))


def group_step(Gm: GroupModel, g, x, h: float, sigma: int) -> np.ndarray:
    """Advance ``g`` by the exponential of ``h * x`` on the trivialization side.

    ``sigma=+1`` (right trivialization) gives ``exp(h x) g``; ``sigma=-1``
    gives ``g exp(h x)``.
    """
    if sigma not in (1, -1):
        raise ValueError(f"sigma must be +1 or -1, got {sigma}")
    if not h > 0:
        raise ValueError(f"step must be positive, got {h}")
    g = np.asarray(g, dtype=float)
    if g.shape != (Gm.matrix_size, Gm.matrix_size):
        raise DimensionError(f"group element shape {g.shape} does not match {Gm.name}")
    if not np.all(np.isfinite(g)) or not np.all(np.isfinite(x)):
        raise IntegrationError("non-finite input to group step")
    drift = orthogonality_drift(Gm, g)
    if drift > GROUP_MEMBERSHIP_TOL:
        raise ValueError(f"element is not in {Gm.name}: orthogonality drift {drift:.3g}")
    E = Gm.exponential(h * Gm.embed(np.asarray(x, dtype=float)))
    out = E @ g if sigma == 1 else g @ E
    if not np.all(np.isfinite(out)):
        raise IntegrationError("non-finite group element")
    return out


# --- plain-document serialization ------------------------------------------

def algebra_to_dict(A: LieAlgebraSpec) -> dict:
    """Zero-suppressed, 1-based ``(i, j, k, value)`` quadruples plus row-major metric."""
    C = A.structure_constants
    quads = [
        [int(i) + 1, int(j) + 1, int(k) + 1, float(C[i, j, k])]
        for i, j, k in zip(*np.nonzero(C))
    ]
    return {
        "name": A.name,
        "dim": A.dim,
        "structure_constants": quads,
        "metric": A.metric.tolist(),
    }


def algebra_from_dict(doc: dict) -> LieAlgebraSpec:
    try:
        n = int(doc["dim"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DimensionError(f"algebra.dim missing or not an integer: {exc}") from None
    if n <= 0:
        raise DimensionError(f"algebra.dim must be positive, got {n}")
    C = np.zeros((n, n, n))
    for q in doc.get("structure_constants", []):
        if len(q) != 4:
            raise DimensionError(f"structure constant entry {q!r} is not (i, j, k, value)")
        i, j, k = (int(v) - 1 for v in q[:3])
        if not all(0 <= v < n for v in (i, j, k)):
            raise DimensionError(f"structure constant index out of range 1..{n}: {q!r}")
        C[i, j, k] = float(q[3])
    M = np.asarray(doc.get("metric", np.eye(n)), dtype=float)
    if M.shape == (n * n,):
        M = M.reshape(n, n)
    return LieAlgebraSpec(C, M, str(doc.get("name", "")))

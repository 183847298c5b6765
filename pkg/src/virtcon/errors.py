"""Exception hierarchy shared by all modules."""


class VirtconError(Exception):
    """Base class for all package errors."""


class DimensionError(VirtconError, ValueError):
    """An array does not conform to the algebra it is used with."""


class ParameterError(VirtconError, ValueError):
    """A physical parameter violates a builder precondition."""


class SubspaceError(VirtconError, ValueError):
    """A subspace basis is rank deficient."""


class TransversalityError(VirtconError, ValueError):
    """Constraint and input subspaces are not complementary.

    ``rank`` is the numerical rank of the stacked basis that was found.
    """

    def __init__(self, message: str, rank: int | None = None):
        super().__init__(message)
        self.rank = rank


class IntegrationError(VirtconError, RuntimeError):
    """Non-finite or exploding state during time integration."""

    def __init__(self, message: str, t: float | None = None):
        if t is not None:
            message = f"{message} (t={t:.17g})"
        super().__init__(message)
        self.t = t


class ConfigError(VirtconError, ValueError):
    """A run configuration could not be parsed or is inconsistent."""


class AlgebraError(VirtconError, ValueError):
    """An algebra spec fails antisymmetry, Jacobi, or metric checks."""

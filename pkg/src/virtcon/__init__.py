"""Control laws that enforce virtual nonholonomic constraints on Lie groups.

The reduced dynamics live on the Lie algebra; see :mod:`virtcon.vnhc` for the
feedback law, :mod:`virtcon.systems` for ready-made examples and
:mod:`virtcon.integrate` for simulation.
"""

from .algebra import (
    LieAlgebraSpec,
    ad_star,
    bracket,
    flat,
    kinetic_energy,
    sharp,
    validate_algebra,
)
from .connections import (
    AffineSubspace,
    Subspace,
    c_connection,
    d_connection,
    g_connection,
    oblique_projectors,
    orthogonal_projectors,
)
from .errors import (
    AlgebraError,
    ConfigError,
    DimensionError,
    IntegrationError,
    ParameterError,
    SubspaceError,
    TransversalityError,
    VirtconError,
)
from .integrate import IntegratorConfig, Trajectory, monitors_report, simulate
from .systems import CATALOG, build
from .vnhc import ControlledSystem, check_transversal, closed_loop_field, control_law, drift

__version__ = "0.1.0"

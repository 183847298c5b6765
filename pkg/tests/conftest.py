import numpy as np
import pytest

from virtcon.algebra import (
    LieAlgebraSpec,
    se3_structure_constants,
    so3_structure_constants,
    so3xr_structure_constants,
)
from virtcon.systems import build_rotor, build_se3_homogeneous, build_so3_rigid_body

ROTOR_PARAMS = dict(lambda1=1.0, lambda2=2.0, lambda3=3.0, J=0.5, k=0.5, p=0.3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240617)


def catalog_algebras():
    """The three catalog algebras with non-trivial SPD metrics."""
    return {
        "so3": LieAlgebraSpec(so3_structure_constants(), np.diag([1.0, 2.0, 3.0]), "so(3)"),
        "se3": LieAlgebraSpec(
            se3_structure_constants(), np.diag([0.5, 0.5, 0.5, 2.0, 2.0, 2.0]), "se(3)"
        ),
        "so3xr": build_rotor(**ROTOR_PARAMS).system.algebra,
    }


def catalog_entries():
    return {
        "so3_rigid_body": build_so3_rigid_body(1.0, 2.0, 3.0),
        "se3_homogeneous": build_se3_homogeneous(2.0, 0.5),
        "rotor": build_rotor(**ROTOR_PARAMS),
    }


@pytest.fixture(params=["so3", "se3", "so3xr"])
def catalog_algebra(request):
    return catalog_algebras()[request.param]


@pytest.fixture(params=["so3_rigid_body", "se3_homogeneous", "rotor"])
def catalog_entry(request):
    return catalog_entries()[request.param]


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    results = getattr(test_acceptance, "RESULTS", {})
    if results:
        terminalreporter.section("acceptance criteria")
        for key in sorted(results):
            terminalreporter.write_line(results[key])

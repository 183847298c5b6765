"""TOML run configuration and algebra documents.

A run configuration looks like::

    [system]
    name = "rotor"                 # catalog name, or "custom"
    [system.params]
    lambda1 = 1.0
    ...

    [initial]
    xi = [0.001, 1.0, 0.0, 0.0]    # or "random" (uses --seed)
    # g = [[...], ...]             # default: identity

    [integrator]
    h = 1e-3
    T = 10.0
    record_stride = 10
    controlled = true

    [output]
    dir = "out"

    [tolerances]
    residual = 1e-8

A custom system replaces ``system.params`` with ``system.algebra``,
``system.constraint`` and ``system.inputs`` tables; see the README.
"""

from __future__ import annotations

import sys as _sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

if _sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import tomli_w

from .algebra import (
    LieAlgebraSpec,
    adjoint_group,
    algebra_from_dict,
    algebra_to_dict,
    se3_group,
    so3_group,
    so3xs1_group,
)
from .connections import AffineSubspace, Subspace
from .errors import ConfigError, DimensionError
from .integrate import DEFAULT_TOLERANCES, IntegratorConfig
from .systems import CATALOG

__all__ = [
    "RunConfig",
    "CustomSystemSpec",
    "load_config",
    "parse_config",
    "load_algebra",
    "dump_algebra",
    "GROUP_MODELS",
]

GROUP_MODELS = ("so3", "se3", "so3xs1", "adjoint", "none")
TOLERANCE_KEYS = ("residual", "ortho_drift", "energy_drift", "control_norm")


@dataclass(frozen=True, eq=False)
class CustomSystemSpec:
    """Pieces of an inline system, kept separate so each can be validated alone."""

    algebra: LieAlgebraSpec
    sigma: int
    inputs: np.ndarray
    constraint: Subspace | AffineSubspace | None
    group: str
    label: str

    def group_model(self):
        return {
            "so3": so3_group,
            "se3": se3_group,
            "so3xs1": so3xs1_group,
            "adjoint": lambda: adjoint_group(self.algebra),
            "none": lambda: None,
        }[self.group]()


@dataclass(frozen=True, eq=False)
class RunConfig:
    system_name: str
    params: dict = field(default_factory=dict)
    custom: CustomSystemSpec | None = None
    initial_xi: Any = None
    initial_g: np.ndarray | None = None
    integrator: IntegratorConfig | None = None
    controlled: bool = True
    out_dir: Path = Path(".")
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    source: str = "<config>"

    def with_param(self, key: str, value) -> "RunConfig":
        if self.custom is not None:
            raise ConfigError(f"{self.source}: --sweep only applies to catalog system parameters")
        return replace(self, params={**self.params, key: value})


def _get(doc: dict, path: str, kind=None, default=...):
    node: Any = doc
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            if default is not ...:
                return default
            raise ConfigError(f"missing field '{path}'")
        node = node[part]
    if kind is not None and not isinstance(node, kind):
        names = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
        raise ConfigError(f"field '{path}' must be {names}, got {type(node).__name__}")
    return node


def _array(value, path: str, ndim: int) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"field '{path}' must be a numeric array") from None
    if arr.ndim != ndim:
        raise ConfigError(f"field '{path}' must be a {ndim}-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"field '{path}' contains non-finite values")
    return arr


def _custom_system(doc: dict) -> CustomSystemSpec:
    try:
        algebra = algebra_from_dict(_get(doc, "system.algebra", dict))
    except DimensionError as exc:
        raise ConfigError(f"system.algebra: {exc}") from None
    n = algebra.dim
    sigma = _get(doc, "system.sigma", int, 1)
    if sigma not in (1, -1):
        raise ConfigError(f"field 'system.sigma' must be 1 or -1, got {sigma}")
    group = _get(doc, "system.group", str, "adjoint")
    if group not in GROUP_MODELS:
        raise ConfigError(f"field 'system.group' must be one of {GROUP_MODELS}, got {group!r}")

    raw_inputs = _get(doc, "system.inputs.basis", list, [])
    inputs = _array(raw_inputs, "system.inputs.basis", 2).T if raw_inputs else np.zeros((n, 0))
    if inputs.shape[0] != n:
        raise ConfigError(f"field 'system.inputs.basis' vectors must have length {n}")

    con = _get(doc, "system.constraint", dict, None)
    constraint = None
    if con is not None:
        try:
            if "covectors" in con:
                rows = _array(con["covectors"], "system.constraint.covectors", 2)
                if "levels" in con:
                    constraint = AffineSubspace.from_covectors(rows, _array(con["levels"], "system.constraint.levels", 1))
                else:
                    constraint = Subspace.from_covectors(rows)
            elif "basis" in con:
                d = Subspace(_array(con["basis"], "system.constraint.basis", 2).T)
                if "offset" in con:
                    constraint = AffineSubspace(_array(con["offset"], "system.constraint.offset", 1), d)
                else:
                    constraint = d
            else:
                raise ConfigError("table 'system.constraint' needs 'basis' or 'covectors'")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"system.constraint: {exc}") from None
        if constraint.algebra_dim != n:
            raise ConfigError(f"system.constraint vectors must have length {n}")
    label = _get(doc, "system.label", str, "custom")
    return CustomSystemSpec(algebra, sigma, inputs, constraint, group, label)


def parse_config(doc: dict, source: str = "<config>") -> RunConfig:
    """Turn a parsed TOML document into a :class:`RunConfig`; raises :class:`ConfigError`."""
    try:
        return _parse(doc, source)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def _parse(doc: dict, source: str) -> RunConfig:
    name = _get(doc, "system.name", str)
    params: dict = {}
    custom = None
    if name == "custom":
        custom = _custom_system(doc)
    elif name in CATALOG:
        params = dict(_get(doc, "system.params", dict, {}))
    else:
        raise ConfigError(f"field 'system.name': unknown system {name!r}; known: custom, {', '.join(CATALOG)}")

    xi = _get(doc, "initial.xi", (list, str), None)
    if isinstance(xi, str):
        if xi != "random":
            raise ConfigError("field 'initial.xi' must be an array or \"random\"")
    elif xi is not None:
        xi = _array(xi, "initial.xi", 1)
    g = _get(doc, "initial.g", list, None)
    g = _array(g, "initial.g", 2) if g is not None else None

    integ = _get(doc, "integrator", dict, None)
    cfg = None
    if integ is not None:
        try:
            cfg = IntegratorConfig(
                h=float(_get(doc, "integrator.h", (int, float))),
                T=float(_get(doc, "integrator.T", (int, float))),
                scheme=_get(doc, "integrator.scheme", str, "rk4"),
                record_stride=_get(doc, "integrator.record_stride", int, 1),
            )
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"integrator: {exc}") from None
    controlled = _get(doc, "integrator.controlled", bool, True)

    tolerances = dict(DEFAULT_TOLERANCES)
    for key, value in _get(doc, "tolerances", dict, {}).items():
        if key not in TOLERANCE_KEYS:
            raise ConfigError(f"field 'tolerances.{key}': unknown tolerance; known: {', '.join(TOLERANCE_KEYS)}")
        if not isinstance(value, (int, float)) or not value > 0:
            raise ConfigError(f"field 'tolerances.{key}' must be a positive number")
        tolerances[key] = float(value)

    out_dir = Path(_get(doc, "output.dir", str, "."))
    return RunConfig(name, params, custom, xi, g, cfg, controlled, out_dir, tolerances, source)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(doc, str(path))


def dump_algebra(A: LieAlgebraSpec, path) -> Path:
    """Write ``A`` as a TOML ``[algebra]`` table."""
    path = Path(path)
    path.write_text(tomli_w.dumps({"algebra": algebra_to_dict(A)}))
    return path


def load_algebra(path) -> LieAlgebraSpec:
    path = Path(path)
    try:
        doc = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    try:
        return algebra_from_dict(doc.get("algebra", doc))
    except DimensionError as exc:
        raise ConfigError(f"{path}: algebra: {exc}") from None

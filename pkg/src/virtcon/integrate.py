"""RK4 integration of the reduced dynamics with exponential-map reconstruction.

The algebra state is advanced by classical RK4 on the closed-loop field
(the control is re-evaluated in every stage). The group element is then
advanced by one exponential step using the freshly updated algebra state.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, NamedTuple

import numpy as np

from .algebra import group_step, kinetic_energy, orthogonality_drift
from .errors import IntegrationError
from .vnhc import ControlledSystem, closed_loop_field, control_law, drift

__all__ = [
    "BLOWUP_NORM",
    "DEFAULT_TOLERANCES",
    "IntegratorConfig",
    "MonitorRecord",
    "Trajectory",
    "MonitorSummary",
    "rk4_step",
    "simulate",
    "monitors_report",
    "write_trajectory_csv",
    "write_group_csv",
]

BLOWUP_NORM = 1e12
SCHEMES = ("rk4",)
DEFAULT_TOLERANCES = {"residual": 1e-8, "ortho_drift": 1e-10}


@dataclass(frozen=True)
class IntegratorConfig:
    h: float
    T: float
    scheme: str = "rk4"
    record_stride: int = 1

    def __post_init__(self):
        if not (np.isfinite(self.h) and self.h > 0):
            raise ValueError(f"step h must be positive and finite, got {self.h}")
        if not (np.isfinite(self.T) and self.T >= self.h):
            raise ValueError(f"horizon T={self.T} must be finite and at least h={self.h}")
        if self.T / self.h > np.iinfo(np.int64).max:
            raise ValueError("T/h does not fit in a machine integer")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; available: {', '.join(SCHEMES)}")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValueError(f"record_stride must be a positive integer, got {self.record_stride}")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.h))


class MonitorRecord(NamedTuple):
    energy: float
    constraint_residual_norm: float
    group_orthogonality_drift: float
    control_norm: float


@dataclass(eq=False)
class Trajectory:
    """Recorded samples of a run. Arrays share their first axis."""

    times: np.ndarray
    states: np.ndarray
    group_elements: np.ndarray | None
    controls: np.ndarray
    energy: np.ndarray
    residual: np.ndarray
    ortho_drift: np.ndarray
    control_norm: np.ndarray
    error: str | None = None
    system_label: str = ""

    def __len__(self) -> int:
        return len(self.times)

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def monitors(self) -> list[MonitorRecord]:
        return [
            MonitorRecord(*vals)
            for vals in zip(self.energy, self.residual, self.ortho_drift, self.control_norm)
        ]


def rk4_step(field: Callable[[np.ndarray], np.ndarray], x, h: float, t: float = 0.0) -> np.ndarray:
    """One classical Runge-Kutta step of the autonomous ODE ``x' = field(x)``."""
    x = np.asarray(x, dtype=float)
    k1 = field(x)
    k2 = field(x + 0.5 * h * k1)
    k3 = field(x + 0.5 * h * k2)
    k4 = field(x + h * k3)
    for k in (k1, k2, k3, k4):
        if not np.all(np.isfinite(k)):
            raise IntegrationError("non-finite RK4 stage", t=t)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


class _Recorder:
    def __init__(self, sys: ControlledSystem, controlled: bool):
        self.sys = sys
        self.controlled = controlled
        self.rows: dict[str, list] = {k: [] for k in ("t", "x", "g", "u", "e", "r", "o", "c")}

    def __call__(self, t, x, g):
        sys = self.sys
        u = control_law(sys, x) if self.controlled else np.zeros(sys.n_inputs)
        res = sys.annihilator_rows @ x - sys.levels
        rec = self.rows
        rec["t"].append(t)
        rec["x"].append(x.copy())
        rec["g"].append(None if g is None else g.copy())
        rec["u"].append(u)
        rec["e"].append(kinetic_energy(sys.algebra, x))
        rec["r"].append(float(np.max(np.abs(res))) if res.size else 0.0)
        rec["o"].append(orthogonality_drift(sys.group, g) if g is not None else 0.0)
        rec["c"].append(float(np.linalg.norm(u)))

    def trajectory(self, error) -> Trajectory:
        rec = self.rows
        n, m = self.sys.dim, self.sys.n_inputs
        count = len(rec["t"])
        groups = None if rec["g"][0] is None else np.array(rec["g"])
        return Trajectory(
            times=np.array(rec["t"]),
            states=np.array(rec["x"], dtype=float).reshape(count, n),
            group_elements=groups,
            controls=np.array(rec["u"], dtype=float).reshape(count, m),
            energy=np.array(rec["e"]),
            residual=np.array(rec["r"]),
            ortho_drift=np.array(rec["o"]),
            control_norm=np.array(rec["c"]),
            error=error,
            system_label=self.sys.label,
        )


def simulate(
    sys: ControlledSystem,
    x0,
    g0=None,
    cfg: IntegratorConfig | None = None,
    controlled: bool = True,
) -> Trajectory:
    """Integrate ``sys`` from ``(g0, x0)``.

    ``controlled=False`` integrates the drift alone. A blow-up (non-finite
    stage or state norm above ``BLOWUP_NORM``) ends the run early; the
    trajectory up to that point is returned with ``error`` set.
    """
    if cfg is None:
        raise ValueError("an IntegratorConfig is required")
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (sys.dim,) or not np.all(np.isfinite(x)):
        raise ValueError(f"initial state must be a finite vector of length {sys.dim}")
    Gm = sys.group
    g = None
    if Gm is not None:
        g = np.array(Gm.identity if g0 is None else g0, dtype=float)
        if g.shape != (Gm.matrix_size, Gm.matrix_size):
            raise ValueError(f"initial group element must be {Gm.matrix_size}x{Gm.matrix_size}")

    field = (lambda y: closed_loop_field(sys, y)) if controlled else (lambda y: drift(sys, y))
    h, stride, n_steps = cfg.h, int(cfg.record_stride), cfg.n_steps
    record = _Recorder(sys, controlled)
    record(0.0, x, g)
    error = None
    for step in range(1, n_steps + 1):
        t_prev = (step - 1) * h
        try:
            x_new = rk4_step(field, x, h, t=t_prev)
            if not np.linalg.norm(x_new) <= BLOWUP_NORM:
                raise IntegrationError(f"state norm exceeded {BLOWUP_NORM:g}", t=step * h)
            g_new = group_step(Gm, g, x_new, h, sys.sigma) if Gm is not None else None
        except IntegrationError as exc:
            error = str(exc)
            break
        x, g = x_new, g_new
        if step % stride == 0 or step == n_steps:
            record(step * h, x, g)
    return record.trajectory(error)


@dataclass
class MonitorSummary:
    stats: dict[str, dict[str, float]]
    energy_relative_drift: float
    checks: dict[str, tuple[float, float, bool]] = field(default_factory=dict)
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(ok for _, _, ok in self.checks.values())

    def lines(self) -> list[str]:
        out = []
        for name, s in self.stats.items():
            out.append(f"{name}: max={s['max']:.17g} mean={s['mean']:.17g}")
        out.append(f"energy_relative_drift: {self.energy_relative_drift:.17g}")
        for name, (value, tol, ok) in self.checks.items():
            out.append(f"check {name}: {value:.6g} <= {tol:.6g} {'PASS' if ok else 'FAIL'}")
        if self.error:
            out.append(f"integration_error: {self.error}")
        out.append(f"passed: {self.passed}")
        return out


def monitors_report(traj: Trajectory, tolerances: Mapping[str, float] | None = None) -> MonitorSummary:
    """Max/mean of every monitor and pass/fail against ``tolerances``.

    Recognized tolerance keys: ``residual``, ``ortho_drift``, ``control_norm``
    (all compared with the max) and ``energy_drift`` (relative to the first
    sample).
    """
    if len(traj) == 0:
        raise ValueError("cannot summarize an empty trajectory")
    tol = dict(DEFAULT_TOLERANCES if tolerances is None else tolerances)
    series = {
        "energy": traj.energy,
        "residual": traj.residual,
        "ortho_drift": traj.ortho_drift,
        "control_norm": traj.control_norm,
    }
    stats = {k: {"max": float(np.max(v)), "mean": float(np.mean(v))} for k, v in series.items()}
    e0 = float(traj.energy[0])
    scale = abs(e0) if e0 != 0 else 1.0
    drift = float(np.max(np.abs(traj.energy - e0))) / scale
    checks = {}
    for key, limit in tol.items():
        if key == "energy_drift":
            value = drift
        elif key in series:
            value = stats[key]["max"]
        else:
            raise ValueError(f"unknown tolerance key {key!r}")
        checks[key] = (value, float(limit), bool(value <= limit))
    return MonitorSummary(stats, drift, checks, traj.error)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_trajectory_csv(traj: Trajectory, path) -> Path:
    path = Path(path)
    n = traj.states.shape[1]
    m = traj.controls.shape[1]
    header = (
        ["t"]
        + [f"xi_{i + 1}" for i in range(n)]
        + [f"u_{a + 1}" for a in range(m)]
        + ["energy", "residual", "ortho_drift"]
    )
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(len(traj)):
            row = [traj.times[i], *traj.states[i], *traj.controls[i], traj.energy[i], traj.residual[i], traj.ortho_drift[i]]
            w.writerow([_fmt(v) for v in row])
    return path


def write_group_csv(traj: Trajectory, path) -> Path | None:
    """Row-major group matrix entries per sample; ``None`` if no group was tracked."""
    if traj.group_elements is None:
        return None
    path = Path(path)
    s = traj.group_elements.shape[1]
    header = ["t"] + [f"g_{i + 1}_{j + 1}" for i in range(s) for j in range(s)]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t, g in zip(traj.times, traj.group_elements):
            w.writerow([_fmt(t), *(_fmt(v) for v in g.ravel())])
    return path

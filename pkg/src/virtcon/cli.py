"""Command-line front end: ``virtcon validate|control|simulate --config run.toml``.

Exit codes: 0 success, 2 config or usage error, 3 validation failure,
4 integration failure.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .algebra import validate_algebra
from .config import RunConfig, load_config
from .connections import Subspace
from .errors import ConfigError, VirtconError
from .integrate import monitors_report, simulate, write_group_csv, write_trajectory_csv
from .systems import build, random_states
from .vnhc import ControlledSystem, check_transversal, closed_loop_field, control_law

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VALIDATION = 3
EXIT_INTEGRATION = 4

REPORT_NAME = "validation_report.txt"
TRAJECTORY_NAME = "trajectory.csv"
GROUP_NAME = "group.csv"
SUMMARY_NAME = "summary.txt"


def _fmt(v) -> str:
    return format(float(v), ".17g")


def _fmt_vec(v) -> str:
    return " ".join(_fmt(x) for x in np.ravel(v))


class _Failure(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class _Validation:
    lines: list
    system: ControlledSystem | None

    @property
    def passed(self) -> bool:
        return self.system is not None


def _validate(rc: RunConfig) -> _Validation:
    """Build the configured system, recording every check on the way."""
    lines = [f"system: {rc.system_name}"]
    if rc.custom is None:
        try:
            entry = build(rc.system_name, **rc.params)
        except VirtconError as exc:
            lines += [f"build: FAIL {exc}", "passed: False"]
            return _Validation(lines, None)
        system = entry.system
        lines.append("build: ok")
        lines += validate_algebra(system.algebra).lines()
        lines += check_transversal(system.constraint, system.input_subspace).lines()
        lines.append("passed: True")
        return _Validation(lines, system)

    cs = rc.custom
    report = validate_algebra(cs.algebra)
    lines += report.lines()
    n = cs.algebra.dim
    constraint = cs.constraint if cs.constraint is not None else Subspace.full(n)
    try:
        tr = check_transversal(constraint, Subspace(cs.inputs))
    except VirtconError as exc:
        lines += [f"transversality: FAIL {exc}", "passed: False"]
        return _Validation(lines, None)
    lines += tr.lines()
    system = None
    if report.passed and tr.transversal:
        try:
            group = cs.group_model()
            system = ControlledSystem(cs.algebra, cs.sigma, cs.inputs, cs.constraint, group, cs.label)
        except (VirtconError, ValueError) as exc:
            lines.append(f"build: FAIL {exc}")
    lines.append(f"passed: {system is not None}")
    return _Validation(lines, system)


def _require_system(rc: RunConfig) -> ControlledSystem:
    v = _validate(rc)
    if not v.passed:
        failing = [ln for ln in v.lines if "FAIL" in ln or ln.startswith("transversal: False")]
        raise _Failure(EXIT_VALIDATION, "validation failed: " + "; ".join(failing or v.lines[-2:]))
    return v.system


def _out_dir(args, rc: RunConfig) -> Path:
    out = Path(args.out) if args.out else rc.out_dir
    out.mkdir(parents=True, exist_ok=True)
    return out


def _initial_state(rc: RunConfig, system: ControlledSystem, seed: int | None) -> np.ndarray:
    if rc.initial_xi is None:
        return np.zeros(system.dim)
    if isinstance(rc.initial_xi, str):
        rng = np.random.default_rng(0 if seed is None else seed)
        return random_states(system, rng, 1)[0]
    if rc.initial_xi.shape != (system.dim,):
        raise _Failure(
            EXIT_CONFIG, f"{rc.source}: field 'initial.xi' has length {rc.initial_xi.size}, system dim is {system.dim}"
        )
    return rc.initial_xi


def cmd_validate(rc: RunConfig, args) -> int:
    v = _validate(rc)
    path = _out_dir(args, rc) / REPORT_NAME
    path.write_text("\n".join(v.lines) + "\n")
    print("\n".join(v.lines))
    return EXIT_OK if v.passed else EXIT_VALIDATION


def _parse_state(text: str) -> np.ndarray:
    try:
        return np.array([float(s) for s in text.replace(",", " ").split()])
    except ValueError:
        raise _Failure(EXIT_CONFIG, f"--state: not a list of numbers: {text!r}") from None


def cmd_control(rc: RunConfig, args) -> int:
    system = _require_system(rc)
    if args.random:
        rng = np.random.default_rng(0 if args.seed is None else args.seed)
        states = random_states(system, rng, args.random)
    elif args.state is not None:
        states = [_parse_state(args.state)]
    else:
        states = [_initial_state(rc, system, args.seed)]
    for x in states:
        if x.shape != (system.dim,):
            raise _Failure(EXIT_CONFIG, f"state has length {x.size}, system dim is {system.dim}")
        u = control_law(system, x)
        residual = system.annihilator_rows @ closed_loop_field(system, x)
        print(f"state: {_fmt_vec(x)}")
        print(f"u: {_fmt_vec(u)}")
        print(f"invariance_residual: {_fmt_vec(residual)}")
    return EXIT_OK


def _run_once(rc: RunConfig, out: Path, seed: int | None) -> tuple[int, list[str]]:
    system = _require_system(rc)
    if rc.integrator is None:
        raise _Failure(EXIT_CONFIG, f"{rc.source}: missing table 'integrator'")
    x0 = _initial_state(rc, system, seed)
    g0 = rc.initial_g
    if g0 is not None and (system.group is None or g0.shape != (system.group.matrix_size,) * 2):
        raise _Failure(EXIT_CONFIG, f"{rc.source}: field 'initial.g' does not match the system's group")
    try:
        traj = simulate(system, x0, g0, rc.integrator, controlled=rc.controlled)
    except ValueError as exc:
        raise _Failure(EXIT_CONFIG, f"{rc.source}: {exc}") from None
    out.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(traj, out / TRAJECTORY_NAME)
    write_group_csv(traj, out / GROUP_NAME)
    summary = monitors_report(traj, rc.tolerances)
    lines = [f"system: {system.label}", f"samples: {len(traj)}", *summary.lines()]
    (out / SUMMARY_NAME).write_text("\n".join(lines) + "\n")
    if traj.error:
        return EXIT_INTEGRATION, lines
    return (EXIT_OK if summary.passed else EXIT_VALIDATION), lines


def _parse_sweep(text: str) -> tuple[str, np.ndarray]:
    try:
        key, rng = text.split("=", 1)
        start, stop, count = rng.split(":")
        values = np.linspace(float(start), float(stop), int(count))
    except ValueError:
        raise _Failure(EXIT_CONFIG, f"--sweep expects PARAM=START:STOP:N, got {text!r}") from None
    if not key or len(values) < 1:
        raise _Failure(EXIT_CONFIG, f"--sweep expects PARAM=START:STOP:N with N >= 1, got {text!r}")
    return key, values


def _guarded(rc: RunConfig, out: Path, seed) -> tuple[int, list[str]]:
    try:
        return _run_once(rc, out, seed)
    except _Failure as exc:
        return exc.code, [f"error: {exc}"]


def cmd_simulate(rc: RunConfig, args) -> int:
    out = _out_dir(args, rc)
    if not args.sweep:
        code, lines = _run_once(rc, out, args.seed)
        print("\n".join(lines))
        return code

    key, values = _parse_sweep(args.sweep)
    runs = []
    for v in values:
        try:
            runs.append((v, rc.with_param(key, float(v)), out / f"{key}={_fmt(v)}"))
        except ConfigError as exc:
            raise _Failure(EXIT_CONFIG, str(exc)) from None
    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        results = list(pool.map(lambda r: _guarded(r[1], r[2], args.seed), runs))
    for (v, _, path), (code, lines) in zip(runs, results):
        status = "ok" if code == EXIT_OK else f"exit {code}"
        detail = next((ln for ln in lines if ln.startswith(("error", "integration_error"))), "")
        print(f"{key}={_fmt(v)}: {status} -> {path}" + (f" ({detail})" if detail else ""))
    return max(code for code, _ in results)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="virtcon", description="Virtual nonholonomic constraint synthesis and simulation on Lie groups."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="TOML run configuration")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides output.dir)")
    common.add_argument("--seed", type=int, metavar="N", help="seed for random states")

    sub.add_parser("validate", parents=[common], help="check the algebra and transversality")
    p_control = sub.add_parser("control", parents=[common], help="evaluate the control law")
    p_control.add_argument("--state", metavar="X", help="algebra state, comma or space separated")
    p_control.add_argument("--random", type=int, default=0, metavar="COUNT", help="evaluate at COUNT random states")
    p_sim = sub.add_parser("simulate", parents=[common], help="integrate and write CSV output")
    p_sim.add_argument("--sweep", metavar="PARAM=START:STOP:N", help="run N copies varying one system parameter")
    p_sim.add_argument("--workers", type=int, default=None, metavar="N", help="threads for --sweep")
    return parser


COMMANDS = {"validate": cmd_validate, "control": cmd_control, "simulate": cmd_simulate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        rc = load_config(args.config)
        return COMMANDS[args.command](rc, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _Failure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()

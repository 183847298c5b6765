from pathlib import Path

import numpy as np
import pytest

from virtcon.cli import EXIT_CONFIG, EXIT_INTEGRATION, EXIT_OK, EXIT_VALIDATION, main
from virtcon.config import dump_algebra, load_algebra, load_config
from virtcon.errors import ConfigError
from virtcon.systems import build_rotor

DATA = Path(__file__).parent / "data"
CONFIGS = Path(__file__).parent.parent / "configs"

SO3_CUSTOM = """
[system]
name = "custom"
sigma = 1
group = "so3"
[system.algebra]
dim = 3
structure_constants = [[1,2,3,1.0],[2,1,3,-1.0],[2,3,1,1.0],[3,2,1,-1.0],[3,1,2,1.0],[1,3,2,-1.0]]
metric = [[1,0,0],[0,2,0],[0,0,3]]
[system.constraint]
{constraint}
[system.inputs]
basis = {inputs}
"""


def write(tmp_path, text, name="run.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def rotor_config(**params):
    base = dict(lambda1=1.0, lambda2=2.0, lambda3=3.0, J=0.5, k=0.5)
    base.update(params)
    body = "\n".join(f"{k} = {v!r}" for k, v in base.items())
    return f'[system]\nname = "rotor"\n[system.params]\n{body}\n'


class TestConfig:
    def test_example_configs_parse(self):
        for path in sorted(CONFIGS.glob("*.toml")):
            rc = load_config(path)
            assert rc.integrator is not None

    def test_syntax_error_has_line(self, tmp_path):
        with pytest.raises(ConfigError, match="line 2"):
            load_config(write(tmp_path, '[system]\nname = "rotor\n'))

    def test_missing_field_named(self, tmp_path):
        with pytest.raises(ConfigError, match="system.name"):
            load_config(write(tmp_path, "[system]\n"))

    def test_unknown_system(self, tmp_path):
        with pytest.raises(ConfigError, match="unknown system"):
            load_config(write(tmp_path, '[system]\nname = "pendulum"\n'))

    @pytest.mark.parametrize(
        "extra,field",
        [
            ("[tolerances]\nresidual = 0.0\n", "tolerances.residual"),
            ("[tolerances]\nspeed = 1.0\n", "tolerances.speed"),
            ("[integrator]\nh = -1.0\nT = 1.0\n", "integrator"),
            ("[initial]\nxi = \"zero\"\n", "initial.xi"),
            ("[initial]\nxi = [1.0, \"a\"]\n", "initial.xi"),
        ],
    )
    def test_field_errors(self, tmp_path, extra, field):
        with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
            load_config(write(tmp_path, rotor_config() + extra))

    def test_custom_system_parses(self, tmp_path):
        text = SO3_CUSTOM.format(constraint="covectors = [[0.0, 0.0, 1.0]]", inputs="[[0.0, 0.0, 1.0]]")
        rc = load_config(write(tmp_path, text))
        assert rc.custom.algebra.dim == 3
        assert rc.custom.inputs.shape == (3, 1)

    def test_custom_bad_structure_index(self, tmp_path):
        text = SO3_CUSTOM.format(constraint="covectors = [[0.0, 0.0, 1.0]]", inputs="[[0.0, 0.0, 1.0]]")
        text = text.replace("[1,2,3,1.0]", "[1,2,4,1.0]")
        with pytest.raises(ConfigError, match="system.algebra"):
            load_config(write(tmp_path, text))

    def test_algebra_document_round_trip(self, tmp_path):
        A = build_rotor(1.0, 2.0, 3.0, 0.5, 0.5).system.algebra
        B = load_algebra(dump_algebra(A, tmp_path / "alg.toml"))
        np.testing.assert_array_equal(B.structure_constants, A.structure_constants)
        np.testing.assert_array_equal(B.metric, A.metric)


class TestValidate:
    def test_se3_passes_with_rank_six(self, tmp_path, capsys):
        code = main(["validate", "--config", str(DATA / "se3_golden.toml"), "--out", str(tmp_path)])
        assert code == EXIT_OK
        report = (tmp_path / "validation_report.txt").read_text()
        assert "stacked_rank: 6 of 6" in report and "passed: True" in report

    def test_rotor_indefinite_metric(self, tmp_path, capsys):
        cfg = write(tmp_path, rotor_config(lambda3=0.5, J=0.5))
        assert main(["validate", "--config", cfg, "--out", str(tmp_path)]) == EXIT_VALIDATION
        assert "J*lambda3 - J**2 > 0" in (tmp_path / "validation_report.txt").read_text()

    def test_f_equal_d(self, tmp_path, capsys):
        text = SO3_CUSTOM.format(constraint="basis = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]", inputs="[[1.0, 0.0, 0.0]]")
        assert main(["validate", "--config", write(tmp_path, text), "--out", str(tmp_path)]) == EXIT_VALIDATION
        assert "transversal: False" in (tmp_path / "validation_report.txt").read_text()

    def test_invalid_custom_algebra(self, tmp_path, capsys):
        text = SO3_CUSTOM.format(constraint="covectors = [[0.0, 0.0, 1.0]]", inputs="[[0.0, 0.0, 1.0]]")
        text = text.replace("[2,1,3,-1.0]", "[2,1,3,1.0]")
        assert main(["validate", "--config", write(tmp_path, text), "--out", str(tmp_path)]) == EXIT_VALIDATION
        assert "antisymmetry violated" in (tmp_path / "validation_report.txt").read_text()

    def test_parse_error_exit(self, tmp_path, capsys):
        assert main(["validate", "--config", write(tmp_path, "[system\n")]) == EXIT_CONFIG
        assert "line 1" in capsys.readouterr().err

    def test_missing_file(self, tmp_path, capsys):
        assert main(["validate", "--config", str(tmp_path / "absent.toml")]) == EXIT_CONFIG


class TestControl:
    def test_rotor_value(self, tmp_path, capsys):
        cfg = write(tmp_path, rotor_config())
        assert main(["control", "--config", cfg, "--state", "1,2,0.3,0.4"]) == EXIT_OK
        out = capsys.readouterr().out
        u = float(out.split("u: ")[1].split()[0])
        assert u == pytest.approx(-1.0, abs=1e-12)
        residual = float(out.split("invariance_residual: ")[1].split()[0])
        assert abs(residual) < 1e-12

    def test_se3_value(self, tmp_path, capsys):
        text = '[system]\nname = "se3_homogeneous"\n[system.params]\nm = 1.0\nk = 1.0\n'
        assert main(["control", "--config", write(tmp_path, text), "--state", "1 2 0 2 -1 0"]) == EXIT_OK
        u = [float(v) for v in capsys.readouterr().out.split("u: ")[1].splitlines()[0].split()]
        np.testing.assert_allclose(u, [0, 0, 0, 5.0], atol=1e-12)

    def test_zero_state(self, tmp_path, capsys):
        assert main(["control", "--config", write(tmp_path, rotor_config()), "--state", "0,0,0,0"]) == EXIT_OK
        assert "u: 0\n" in capsys.readouterr().out

    def test_seventeen_digits(self, tmp_path, capsys):
        main(["control", "--config", write(tmp_path, rotor_config()), "--state", "0.1,0.3,0,0"])
        line = capsys.readouterr().out.split("u: ")[1].splitlines()[0]
        assert float(line) == pytest.approx(0.5 * -1 * 0.1 * 0.3, rel=1e-15)
        assert line == format(float(line), ".17g")

    def test_random_states_reproducible(self, tmp_path, capsys):
        cfg = write(tmp_path, rotor_config())
        main(["control", "--config", cfg, "--random", "3", "--seed", "11"])
        first = capsys.readouterr().out
        main(["control", "--config", cfg, "--random", "3", "--seed", "11"])
        assert capsys.readouterr().out == first
        assert first.count("u: ") == 3

    def test_dimension_mismatch(self, tmp_path, capsys):
        assert main(["control", "--config", write(tmp_path, rotor_config()), "--state", "1,2"]) == EXIT_CONFIG

    def test_non_numeric_state(self, tmp_path, capsys):
        assert main(["control", "--config", write(tmp_path, rotor_config()), "--state", "a,b"]) == EXIT_CONFIG


class TestSimulate:
    def test_golden_csv_byte_for_byte(self, tmp_path, capsys):
        assert main(["simulate", "--config", str(DATA / "se3_golden.toml"), "--out", str(tmp_path)]) == EXIT_OK
        assert (tmp_path / "trajectory.csv").read_bytes() == (DATA / "se3_golden_trajectory.csv").read_bytes()
        assert (tmp_path / "group.csv").read_bytes() == (DATA / "se3_golden_group.csv").read_bytes()

    def test_zero_state_rows(self, tmp_path, capsys):
        text = rotor_config() + "[initial]\nxi = [0.0, 0.0, 0.0, 0.0]\n[integrator]\nh = 0.1\nT = 0.5\n"
        assert main(["simulate", "--config", write(tmp_path, text), "--out", str(tmp_path)]) == EXIT_OK
        rows = (tmp_path / "trajectory.csv").read_text().splitlines()[1:]
        assert len(rows) == 6
        for row in rows:
            assert all(float(v) == 0.0 for v in row.split(",")[1:])

    def test_unstable_gain_still_exits_zero(self, tmp_path, capsys):
        text = rotor_config(k=0.0, p=0.0) + (
            "[initial]\nxi = [0.001, 1.0, 0.0, 0.0]\n[integrator]\nh = 1e-2\nT = 30.0\nrecord_stride = 10\n"
        )
        assert main(["simulate", "--config", write(tmp_path, text), "--out", str(tmp_path)]) == EXIT_OK
        rows = (tmp_path / "trajectory.csv").read_text().splitlines()[1:]
        omega1 = [abs(float(r.split(",")[1])) for r in rows]
        assert max(omega1) > 0.1

    def test_blow_up_exit_and_partial_csv(self, tmp_path, capsys):
        text = (
            '[system]\nname = "so3_rigid_body"\n[system.params]\nlambda1 = 1.0\nlambda2 = 2.0\nlambda3 = 3.0\n'
            "[initial]\nxi = [1e5, 1e5, 1e5]\n[integrator]\nh = 0.1\nT = 10.0\n"
        )
        assert main(["simulate", "--config", write(tmp_path, text), "--out", str(tmp_path)]) == EXIT_INTEGRATION
        assert len((tmp_path / "trajectory.csv").read_text().splitlines()) >= 2
        assert "integration_error" in (tmp_path / "summary.txt").read_text()

    def test_tolerance_failure_exit(self, tmp_path, capsys):
        text = (
            '[system]\nname = "so3_rigid_body"\n[system.params]\nlambda1 = 1.0\nlambda2 = 2.0\nlambda3 = 3.0\n'
            "[initial]\nxi = [0.3, 1.0, -0.7]\n[integrator]\nh = 0.1\nT = 5.0\n[tolerances]\nenergy_drift = 1e-300\n"
        )
        assert main(["simulate", "--config", write(tmp_path, text), "--out", str(tmp_path)]) == EXIT_VALIDATION

    def test_validation_failure_exit(self, tmp_path, capsys):
        text = rotor_config(lambda3=0.4) + "[integrator]\nh = 0.1\nT = 1.0\n"
        assert main(["simulate", "--config", write(tmp_path, text), "--out", str(tmp_path)]) == EXIT_VALIDATION

    def test_missing_integrator(self, tmp_path, capsys):
        assert main(["simulate", "--config", write(tmp_path, rotor_config()), "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_wrong_initial_length(self, tmp_path, capsys):
        text = rotor_config() + "[initial]\nxi = [1.0, 2.0]\n[integrator]\nh = 0.1\nT = 1.0\n"
        assert main(["simulate", "--config", write(tmp_path, text), "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_non_member_initial_group(self, tmp_path, capsys):
        text = rotor_config() + (
            "[initial]\nxi = [0.0, 0.0, 0.0, 0.0]\ng = [[2.0,0,0,0,0],[0,1,0,0,0],[0,0,1,0,0],[0,0,0,1,0],[0,0,0,0,1]]\n"
            "[integrator]\nh = 0.1\nT = 1.0\n"
        )
        assert main(["simulate", "--config", write(tmp_path, text), "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_sweep(self, tmp_path, capsys):
        text = rotor_config(p=0.3) + '[initial]\nxi = "random"\n[integrator]\nh = 1e-2\nT = 1.0\n'
        code = main(["simulate", "--config", write(tmp_path, text), "--out", str(tmp_path), "--sweep", "k=0:1:3", "--seed", "4"])
        assert code == EXIT_OK
        for k in ("0", "0.5", "1"):
            assert (tmp_path / f"k={k}" / "trajectory.csv").exists()

    def test_sweep_reports_worst_exit(self, tmp_path, capsys):
        text = rotor_config(lambda3=3.0) + '[initial]\nxi = "random"\n[integrator]\nh = 1e-2\nT = 0.5\n'
        code = main(["simulate", "--config", write(tmp_path, text), "--out", str(tmp_path), "--sweep", "J=1:3:2"])
        assert code == EXIT_VALIDATION  # J = 3 makes the metric singular
        out = capsys.readouterr().out
        assert "J=1: ok" in out and "J=3: exit 3" in out

    @pytest.mark.parametrize("sweep", ["k", "k=0:1", "k=a:b:3", "=0:1:2"])
    def test_bad_sweep(self, tmp_path, capsys, sweep):
        text = rotor_config() + "[integrator]\nh = 0.1\nT = 1.0\n"
        assert main(["simulate", "--config", write(tmp_path, text), "--out", str(tmp_path), "--sweep", sweep]) == EXIT_CONFIG

    def test_unknown_subcommand(self, capsys):
        assert main(["frobnicate"]) == EXIT_CONFIG

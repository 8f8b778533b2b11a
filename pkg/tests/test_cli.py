"""
Tests for the command-line interface.
"""
import json

import pytest

from src.phasequant.cli import build_parser, config_from_args, main
from src.phasequant.errors import NumericalFailureError
from src.phasequant.oracle import OracleLevel, OracleSpectrum
from src.phasequant.service import quant_service


def run_cli(capsys, *argv):
    """Run main() and return (exit code, stdout)."""
    code = main(list(argv))
    return code, capsys.readouterr().out


class TestConfigFromArgs:
    """Tests for turning flags into a RunConfig."""

    def test_spectrum_flags(self):
        """Test that potential flags build a PotentialConfig."""
        args = build_parser().parse_args(["spectrum", "--potential", "harmonic", "--omega", "2", "--n-max", "3"])

        config = config_from_args(args)

        assert config.command == "spectrum"
        assert config.potential.kind == "harmonic"
        assert config.potential.omega == 2.0
        assert config.n_max == 3

    def test_config_file_with_overrides(self, tmp_path):
        """Test that flags override values from the config file."""
        path = tmp_path / "run.json"
        path.write_text(json.dumps({
            "potential": {"kind": "harmonic", "omega": 1.0},
            "n_max": 7,
            "tolerances": {"rel_tol": 1e-9},
        }))
        args = build_parser().parse_args(["spectrum", "--config", str(path), "--n-max", "2"])

        config = config_from_args(args)

        assert config.n_max == 2
        assert config.tolerances.rel_tol == 1e-9
        assert config.potential.omega == 1.0

    def test_cornell_mass_is_quark_mass(self):
        """Test that --mass on the cornell command sets the quark mass."""
        args = build_parser().parse_args(["cornell", "table", "--mass", "0.3", "--alpha-s", "0.375"])

        config = config_from_args(args)

        assert config.cornell.mass == 0.3
        assert config.cornell.resolved_alpha_tilde() == pytest.approx(0.5)

    def test_verify_identity_action(self):
        """Test that `cornell verify-identity` runs the identity check."""
        args = build_parser().parse_args(["cornell", "verify-identity", "--sweeps", "5", "--seed", "42"])

        config = config_from_args(args)

        assert config.command == "identity-check"
        assert config.sweeps == 5
        assert config.seed == 42


class TestSpectrumCommand:
    """Tests for `spectrum`."""

    def test_harmonic_energies(self, capsys):
        """Test the unit oscillator levels in the JSON document."""
        code, out = run_cli(capsys, "spectrum", "--potential", "harmonic", "--omega", "1", "--n-max", "2")

        assert code == 0
        document = json.loads(out)
        assert document["tool"] == "phasequant"
        assert document["results"]["energies"] == pytest.approx([0.5, 1.5, 2.5], rel=1e-9)
        assert document["config"]["tolerances"]["rel_tol"] == 1e-10

    def test_output_is_deterministic(self, capsys):
        """Test that two runs print byte-identical output."""
        argv = ("spectrum", "--potential-expr", "x^4", "--n-max", "3")

        _, first = run_cli(capsys, *argv)
        _, second = run_cli(capsys, *argv)

        assert first == second

    def test_no_bound_states_exit_code(self, capsys):
        """Test that -x^2 exits with 3 and reports no bound states."""
        code, out = run_cli(capsys, "spectrum", "--potential-expr", "-x^2", "--n-max", "0")

        assert code == 3
        assert "no bound states" in out

    def test_unknown_identifier_exit_code(self, capsys):
        """Test that an unknown function is a configuration error."""
        code, out = run_cli(capsys, "spectrum", "--potential-expr", "tanh(x)")

        assert code == 1
        assert json.loads(out)["error"]["type"] == "UnknownIdentifierError"

    def test_missing_potential(self, capsys):
        """Test that spectrum without a potential is a usage error."""
        code, out = run_cli(capsys, "spectrum", "--n-max", "2")

        assert code == 1
        assert json.loads(out)["error"]["type"] == "ConfigurationError"

    def test_csv_not_available(self, capsys):
        """Test that csv output is refused for spectra."""
        code, _ = run_cli(capsys, "spectrum", "--potential", "harmonic", "--omega", "1", "--format", "csv")

        assert code == 1

    def test_numerical_failure_exit_code(self, capsys, mocker):
        """Test that a numerical failure exits with 2 and a structured error."""
        mocker.patch.object(quant_service, "spectrum", side_effect=NumericalFailureError("did not converge"))

        code, out = run_cli(capsys, "spectrum", "--potential", "harmonic", "--omega", "1")

        assert code == 2
        assert json.loads(out)["error"]["message"] == "did not converge"

    def test_bad_flag_is_usage_error(self, capsys):
        """Test that argparse errors exit with 1."""
        code, _ = run_cli(capsys, "spectrum", "--potential", "morse")

        assert code == 1

    def test_writes_out_file(self, capsys, tmp_path):
        """Test --out."""
        path = tmp_path / "spectrum.json"

        code, out = run_cli(capsys, "spectrum", "--potential", "harmonic", "--omega", "1",
                            "--n-max", "0", "--out", str(path))

        assert code == 0
        assert out == ""
        assert json.loads(path.read_text())["results"]["energies"] == pytest.approx([0.5])


class TestWavefunctionCommand:
    """Tests for `wavefunction`."""

    def test_json_diagnostics(self, capsys):
        """Test node count, turning points and the standing-wave norm."""
        code, out = run_cli(capsys, "wavefunction", "--potential", "harmonic", "--omega", "1",
                            "--n", "2", "--samples", "11")

        assert code == 0
        results = json.loads(out)["results"]
        assert results["node_count"] == 2
        assert results["turning_points"] == pytest.approx([-5 ** 0.5, 5 ** 0.5], rel=1e-10)
        assert results["standing_wave"]["relative_discrepancy"] < 1e-12
        assert len(results["samples"]) == 11

    def test_csv_rows(self, capsys):
        """Test the CSV sample table."""
        code, out = run_cli(capsys, "wavefunction", "--potential", "harmonic", "--omega", "1",
                            "--samples", "5", "--format", "csv")

        lines = out.strip().splitlines()
        assert code == 0
        assert lines[0] == "x,psi,region"
        assert len(lines) == 6


class TestCornellCommand:
    """Tests for `cornell` and `identity-check`."""

    def test_table(self, capsys):
        """Test the closed-form ground state in the table."""
        code, out = run_cli(capsys, "cornell", "table", "--kappa", "0.2", "--alpha-tilde", "0.5", "--n-r-max", "0")

        assert code == 0
        levels = json.loads(out)["results"]["levels"]
        assert levels[0]["E_squared"] == pytest.approx(1.93137085, rel=1e-8)

    def test_verify_identity(self, capsys):
        """Test the seeded identity sweep exits cleanly."""
        code, out = run_cli(capsys, "cornell", "verify-identity", "--sweeps", "5", "--seed", "42")

        assert code == 0
        results = json.loads(out)["results"]
        assert results["passed"] is True
        assert len(results["samples"]) == 5

    def test_identity_check_command(self, capsys):
        """Test the standalone identity-check command."""
        code, out = run_cli(capsys, "identity-check", "--sweeps", "2", "--seed", "1")

        assert code == 0
        assert json.loads(out)["config"]["sweeps"] == 2


@pytest.mark.oracle
@pytest.mark.slow
class TestVerifyCommand:
    """Tests for `verify`."""

    def test_harmonic(self, capsys):
        """Test that semiclassical and oracle levels agree for the oscillator."""
        code, out = run_cli(capsys, "verify", "--problem", "harmonic", "--n-max", "2", "--grid-h", "0.01")

        assert code == 0
        comparison = json.loads(out)["results"]["comparison"]
        assert comparison["max_abs_deviation"] < 1e-5

    def test_cornell_grid_residuals(self, capsys):
        """Test that every Cornell level on the default grid moves by less than 1e-5·E² under h → h/2."""
        code, out = run_cli(capsys, "verify", "--problem", "cornell", "--kappa", "0.2", "--alpha-tilde", "0.5",
                            "--n-max", "3", "--l-max", "2")

        assert code == 0
        reports = json.loads(out)["results"]["reports"]
        assert [report["l"] for report in reports] == [0, 1, 2]
        for report in reports:
            assert report["grid"]["h"] == pytest.approx(1e-3)
            rows = report["comparison"]["rows"]
            assert [row["index"] for row in rows] == [0, 1, 2, 3]
            for row in rows:
                assert row["grid_residual"] < 1e-5 * row["oracle"]


class TestVerifyDefaults:
    """Tests for `verify` settings that do not need the oracle to run."""

    def test_default_grid_step(self, capsys, mocker):
        """Test that verify without --grid-h builds its grid with h = 1e-3."""
        mocker.patch(
            "src.phasequant.service.oracle_spectrum",
            return_value=OracleSpectrum(levels=[OracleLevel(index=0, energy=0.5, grid_residual=0.0)]),
        )

        code, out = run_cli(capsys, "verify", "--problem", "harmonic", "--n-max", "0")

        assert code == 0
        results = json.loads(out)["results"]
        assert results["grid"]["h"] == pytest.approx(1e-3)
        assert results["comparison"]["max_abs_deviation"] < 1e-8

"""Integration tests for the command line interface."""

import sys
from pathlib import Path

import pytest
import yaml
from click.testing import CliRunner
from loguru import logger

from main import cli
from src.core.exceptions import NonConvergence
from src.export import dump_graph, write_yaml
from src.pipeline import Pipeline
from src.quadgraph import build_rectangle

pytestmark = pytest.mark.integration


@pytest.fixture
def runner() -> CliRunner:
    # click >= 8.2 always captures stderr separately and dropped mix_stderr.
    try:
        return CliRunner(mix_stderr=False)
    except TypeError:
        return CliRunner()


@pytest.fixture(autouse=True)
def restore_logger():
    """The CLI replaces loguru sinks with streams owned by the runner."""
    yield
    logger.remove()
    logger.add(sys.stderr, level="INFO")


class TestStageCommands:
    """Test cases for the stage commands."""

    def test_pipeline_command(self, runner: CliRunner, config_file: Path, temp_dir: Path):
        """Test a full run that writes every artifact."""
        out = temp_dir / "cli-output"
        result = runner.invoke(cli, ["pipeline", "-c", str(config_file), "-o", str(out)])
        assert result.exit_code == 0, result.stderr
        assert (out / "surface.obj").exists()
        assert (out / "report.yaml").exists()
        summary_lines = [line for line in result.stdout.splitlines() if not line.startswith("  ")]
        summary = yaml.safe_load("\n".join(summary_lines))
        assert summary["passed"] is True

    def test_solve_command(self, runner: CliRunner, config_file: Path, temp_dir: Path):
        """Test that the solve stage writes the solution and a summary."""
        out = temp_dir / "solve-output"
        result = runner.invoke(cli, ["solve", "-c", str(config_file), "-o", str(out)])
        assert result.exit_code == 0, result.stderr
        assert (out / "solution.yaml").exists()
        assert not (out / "surface.obj").exists()

    def test_missing_config(self, runner: CliRunner, temp_dir: Path):
        """Test exit code 4 for a missing configuration file."""
        result = runner.invoke(cli, ["verify", "-c", str(temp_dir / "missing.yaml")])
        assert result.exit_code == 4
        assert "Configuration file not found" in result.stderr

    def test_malformed_tolerance(self, runner: CliRunner, config_file: Path):
        """Test exit code 4 for a tolerance override without a value."""
        result = runner.invoke(cli, ["verify", "-c", str(config_file), "-t", "closure"])
        assert result.exit_code == 4

    def test_failed_verification(self, runner: CliRunner, config_file: Path, temp_dir: Path):
        """Test exit code 2 when a check fails."""
        result = runner.invoke(
            cli,
            [
                "verify",
                "-c",
                str(config_file),
                "-o",
                str(temp_dir / "failed"),
                "-t",
                "stationarity=-1",
            ],
        )
        assert result.exit_code == 2
        assert "Verification failed" in result.stderr

    def test_solver_failure(self, runner: CliRunner, config_file: Path, mocker):
        """Test exit code 3 when the solver does not converge."""
        mocker.patch.object(
            Pipeline,
            "solve",
            side_effect=NonConvergence("Newton iteration stalled", residual=1.0),
        )
        result = runner.invoke(cli, ["solve", "-c", str(config_file)])
        assert result.exit_code == 3
        assert "Newton iteration stalled" in result.stderr

    def test_version(self, runner: CliRunner):
        """Test the version option."""
        result = runner.invoke(cli, ["--version"])
        assert result.exit_code == 0
        assert "discrete-cmc" in result.stdout


class TestSearchCommand:
    """Test cases for search-q."""

    def test_search(self, runner: CliRunner, config_file: Path, mocker):
        """Test that the tuned q is printed."""
        mocker.patch.object(Pipeline, "closing_residual", return_value=lambda q: q - 0.95)
        result = runner.invoke(
            cli, ["search-q", "-c", str(config_file), "--low", "0.9", "--high", "0.99"]
        )
        assert result.exit_code == 0, result.stderr
        assert result.stdout.startswith("q = 0.95")

    def test_no_bracket(self, runner: CliRunner, config_file: Path, mocker):
        """Test exit code 3 when the bracket has no sign change."""
        mocker.patch.object(Pipeline, "closing_residual", return_value=lambda q: 1.0)
        result = runner.invoke(cli, ["search-q", "-c", str(config_file)])
        assert result.exit_code == 3

    def test_invalid_bracket(self, runner: CliRunner, config_file: Path):
        """Test exit code 4 for a reversed bracket."""
        result = runner.invoke(
            cli, ["search-q", "-c", str(config_file), "--low", "0.99", "--high", "0.9"]
        )
        assert result.exit_code == 4


class TestValidateGraph:
    """Test cases for validate-graph."""

    def test_valid_graph(self, runner: CliRunner, temp_dir: Path):
        """Test a dumped rectangle."""
        path = dump_graph(build_rectangle(3, 3), temp_dir / "graph.yaml")
        result = runner.invoke(cli, ["validate-graph", str(path)])
        assert result.exit_code == 0
        assert "Graph is valid" in result.stdout

    def test_invalid_graph(self, runner: CliRunner, temp_dir: Path):
        """Test a graph whose edge colors are missing."""
        document = build_rectangle(2, 2).to_document()
        document["edges"] = document["edges"][1:]
        path = write_yaml(document, temp_dir / "broken.yaml")
        result = runner.invoke(cli, ["validate-graph", str(path)])
        assert result.exit_code == 4
        assert result.stdout.strip()

    def test_missing_graph(self, runner: CliRunner, temp_dir: Path):
        """Test a path that does not exist."""
        result = runner.invoke(cli, ["validate-graph", str(temp_dir / "none.yaml")])
        assert result.exit_code == 4

"""Unit tests for configuration management."""

import math
from pathlib import Path

import pytest
import yaml

from src.config import BoundaryConfig, Config, PipelineConfig, SearchConfig, parse_angle
from src.core.exceptions import ConfigurationError, ErrorSeverity
from src.geometry import Flavor


class TestParseAngle:
    """Test cases for angle parsing."""

    @pytest.mark.parametrize(
        "value, expected",
        [
            (0.5, 0.5),
            (1, 1.0),
            ("2/3", 2 / 3),
            ("2pi/3", 2 / 3),
            ("pi/2", 0.5),
            ("3*pi/4", 0.75),
            ("pi", 1.0),
            (" 1 / 10 ", 0.1),
        ],
    )
    def test_valid_angles(self, value, expected):
        """Test the accepted spellings, all as multiples of pi."""
        assert parse_angle(value) == pytest.approx(expected)

    @pytest.mark.parametrize("value", ["half", "1/0", True, None, [1]])
    def test_invalid_angles(self, value):
        """Test rejection of values that are not angles."""
        with pytest.raises(ValueError):
            parse_angle(value)


class TestModels:
    """Test cases for the configuration schema."""

    def test_defaults(self):
        """Test a configuration built from nothing."""
        settings = PipelineConfig()
        assert settings.flavor is Flavor.SPHERICAL
        assert settings.q == 0.9
        assert settings.graph.rectangle == (4, 4)
        assert settings.boundary.corner_radians() == pytest.approx((math.pi / 2,) * 4)

    def test_boundary_radians(self):
        """Test conversion of stored multiples of pi."""
        bc = BoundaryConfig(side_angle="pi", corner_angles=["1/2", "2pi/3", 0.5, 0.25])
        assert bc.side_radians() == pytest.approx(math.pi)
        assert bc.corner_radians()[1] == pytest.approx(2 * math.pi / 3)
        assert BoundaryConfig(overrides={"3": "1/3"}).override_radians() == {
            3: pytest.approx(math.pi / 3)
        }

    def test_corner_count(self):
        """Test that any non-empty list of corner angles is accepted."""
        assert len(BoundaryConfig(corner_angles=[0.5, 0.5, 0.5]).corner_radians()) == 3
        with pytest.raises(ValueError):
            BoundaryConfig(corner_angles=[])

    @pytest.mark.parametrize("q", [0.0, -0.1, 1.5])
    def test_q_range(self, q):
        """Test that q must lie in (0, 1]."""
        with pytest.raises(ValueError):
            PipelineConfig(q=q)

    def test_q_search(self):
        """Test the search keyword for q."""
        assert PipelineConfig(q=" Search ").q == "search"

    def test_bracket(self):
        """Test the search bracket ordering."""
        with pytest.raises(ValueError):
            SearchConfig(bracket=(0.99, 0.95))

    def test_rectangle_minimum(self):
        """Test the smallest admissible rectangle."""
        with pytest.raises(ValueError):
            PipelineConfig(graph={"rectangle": [1, 4]})

    def test_logging_level(self):
        """Test normalization and validation of the logging level."""
        assert PipelineConfig(logging={"level": "debug"}).logging.level == "DEBUG"
        with pytest.raises(ValueError):
            PipelineConfig(logging={"level": "LOUD"})


class TestConfig:
    """Test cases for Config class."""

    def test_config_initialization(self, config_file: Path, sample_config: dict):
        """Test Config initialization with valid file."""
        config = Config(str(config_file))
        assert config.config_path == config_file
        assert config.pipeline.name == "test"
        assert config.pipeline.graph.rectangle == (3, 3)
        assert config.pipeline.boundary.corner_angles == pytest.approx([2 / 3] * 4)

    def test_config_file_not_found(self, temp_dir: Path):
        """Test Config initialization with non-existent file."""
        with pytest.raises(ConfigurationError) as exc_info:
            Config(str(temp_dir / "non_existent.yaml"))
        assert exc_info.value.severity is ErrorSeverity.CRITICAL

    def test_config_invalid_yaml(self, temp_dir: Path):
        """Test Config initialization with invalid YAML."""
        invalid_yaml_file = temp_dir / "invalid.yaml"
        invalid_yaml_file.write_text("invalid: yaml: content: [")

        with pytest.raises(ConfigurationError):
            Config(str(invalid_yaml_file))

    def test_config_not_a_mapping(self, temp_dir: Path):
        """Test rejection of a YAML list."""
        path = temp_dir / "list.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigurationError):
            Config(str(path))

    def test_empty_file_uses_defaults(self, temp_dir: Path):
        """Test that an empty document validates to the defaults."""
        path = temp_dir / "empty.yaml"
        path.write_text("")
        assert Config(str(path)).pipeline.q == 0.9

    def test_validation_error(self, temp_dir: Path, sample_config: dict):
        """Test that schema violations become ConfigurationError."""
        sample_config["flavor"] = "euclidean"
        path = temp_dir / "bad.yaml"
        path.write_text(yaml.safe_dump(sample_config))
        with pytest.raises(ConfigurationError) as exc_info:
            Config(str(path))
        assert exc_info.value.context["config_key"] == "validation"

    def test_get_method(self, config: Config):
        """Test get method for configuration values."""
        assert config.get("flavor") == "spherical"
        assert config.get("solver.max_iterations") == 200
        assert config.get("non.existing.key", "default_value") == "default_value"
        assert config.get("non.existing.key") is None

    def test_environment_overrides(self, config_file: Path, monkeypatch):
        """Test environment variable overrides."""
        monkeypatch.setenv("CMC_LOG_LEVEL", "warning")
        monkeypatch.setenv("CMC_Q", "0.95")
        monkeypatch.setenv("CMC_OUTPUT_DIR", "/tmp/cmc-output")
        config = Config(str(config_file))
        assert config.pipeline.logging.level == "WARNING"
        assert config.pipeline.q == 0.95
        assert config.pipeline.output.directory == Path("/tmp/cmc-output")

    def test_override_revalidates(self, config: Config):
        """Test that overrides are validated like file values."""
        config.override("verify.tolerances.closure", 1e-5)
        assert config.pipeline.verify.tolerances["closure"] == 1e-5
        with pytest.raises(ConfigurationError):
            config.override("q", 2.0)

    def test_from_dict(self, sample_config: dict):
        """Test building a configuration without a file."""
        config = Config.from_dict(sample_config)
        assert config.pipeline.flavor is Flavor.SPHERICAL

    def test_echo_round_trip(self, config: Config):
        """Test that the echoed YAML validates to the same configuration."""
        echoed = Config.from_dict(yaml.safe_load(config.echo()))
        assert echoed.pipeline == config.pipeline
        assert echoed.digest() == config.digest()

    def test_digest_changes_with_content(self, sample_config: dict):
        """Test that different configurations have different digests."""
        first = Config.from_dict(sample_config)
        sample_config["q"] = 0.8
        assert Config.from_dict(sample_config).digest() != first.digest()

"""Configuration management for the discrete cmc pipeline."""

import hashlib
import math
import os
from fractions import Fraction
from pathlib import Path
from typing import Any, Literal

import yaml
from loguru import logger
from pydantic import BaseModel, Field, ValidationError, field_validator

from .core.exceptions import ConfigurationError, ErrorSeverity
from .geometry import Flavor

SCHEMA_VERSION = 1


def parse_angle(value: Any) -> float:
    """
    Angle as a multiple of pi.

    Accepts numbers (0.5), fractions ("2/3") and strings naming pi
    explicitly ("2pi/3", "pi/2", "3*pi/4").
    """
    if isinstance(value, bool):
        raise ValueError(f"Invalid angle: {value!r}")
    if isinstance(value, (int, float)):
        result = float(value)
    elif isinstance(value, str):
        text = value.strip().lower().replace(" ", "").replace("*", "")
        if "pi" in text:
            numerator, _, denominator = text.partition("/")
            coefficient = numerator.replace("pi", "") or "1"
            text = f"{coefficient}/{denominator}" if denominator else coefficient
        try:
            result = float(Fraction(text))
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError(f"Invalid angle: {value!r}") from e
    else:
        raise ValueError(f"Invalid angle: {value!r}")
    if not math.isfinite(result):
        raise ValueError(f"Angle must be finite: {value!r}")
    return result


class GraphConfig(BaseModel):
    """Combinatorics of the S-quad graph."""

    kind: Literal["rectangle", "umbilic", "file"] = Field(
        default="rectangle", description="How the graph is produced"
    )
    rectangle: tuple[int, int] = Field(
        default=(4, 4), description="Vertices of G along each side"
    )
    umbilic_size: int = Field(default=2, ge=1, le=50, description="Umbilic sector size")
    path: Path | None = Field(default=None, description="Serialized graph file")

    @field_validator("rectangle")
    @classmethod
    def validate_rectangle(cls, v: tuple[int, int]) -> tuple[int, int]:
        if min(v) < 2:
            raise ValueError(f"Rectangle needs at least 2 vertices per side: {v}")
        return v


class BoundaryConfig(BaseModel):
    """Boundary data; angles are multiples of pi."""

    kind: Literal["neumann", "dirichlet"] = Field(default="neumann")
    side_angle: float = Field(default=1.0, description="Angle on side rings / pi")
    corner_angles: list[float] = Field(
        default_factory=lambda: [0.5, 0.5, 0.5, 0.5],
        description="Corner angles / pi, counterclockwise from the origin",
    )
    overrides: dict[int, float] = Field(
        default_factory=dict, description="Per-vertex angles / pi"
    )
    dirichlet_value: float = Field(
        default=1.0, gt=0.0, lt=2.0, description="Fixed boundary variable / K"
    )

    @field_validator("side_angle", mode="before")
    @classmethod
    def validate_side_angle(cls, v: Any) -> float:
        return parse_angle(v)

    @field_validator("corner_angles", mode="before")
    @classmethod
    def validate_corner_angles(cls, v: Any) -> list[float]:
        angles = [parse_angle(a) for a in v]
        if not angles:
            raise ValueError("At least one corner angle is required")
        return angles

    @field_validator("overrides", mode="before")
    @classmethod
    def validate_overrides(cls, v: Any) -> dict[int, float]:
        return {int(k): parse_angle(a) for k, a in (v or {}).items()}

    def side_radians(self) -> float:
        return self.side_angle * math.pi

    def corner_radians(self) -> tuple[float, ...]:
        return tuple(a * math.pi for a in self.corner_angles)

    def override_radians(self) -> dict[int, float]:
        return {v: a * math.pi for v, a in self.overrides.items()}


class SolverConfig(BaseModel):
    """Ring pattern solver settings."""

    tolerance: float = Field(default=1e-10, gt=0.0, le=1e-2)
    max_iterations: int = Field(default=200, ge=1, le=10000)
    init_scale: float = Field(default=0.8, gt=0.0, lt=2.0)
    continuation_steps: int = Field(
        default=8, ge=0, le=1000, description="Initial continuation steps; 0 disables it"
    )


class LayoutConfig(BaseModel):
    """Embedding and lift tolerances."""

    tolerance: float = Field(default=1e-7, gt=0.0, le=1e-2)
    polish: bool = Field(default=True, description="Least-squares polish pass")
    closure_tolerance: float = Field(default=1e-7, gt=0.0, le=1e-2)


class VerifyConfig(BaseModel):
    """Verification thresholds; keys follow the check families."""

    tolerances: dict[str, float] = Field(default_factory=dict)


class SearchConfig(BaseModel):
    """Closing criterion for tuning q."""

    criterion: Literal["side_ratio", "side_length"] = Field(default="side_ratio")
    target: float = Field(default=1.0, gt=0.0)
    side: int = Field(default=0, ge=0, le=3)
    bracket: tuple[float, float] = Field(default=(0.9, 0.9999))
    xtol: float = Field(default=1e-6, gt=0.0)

    @field_validator("bracket")
    @classmethod
    def validate_bracket(cls, v: tuple[float, float]) -> tuple[float, float]:
        low, high = v
        if not 0.0 < low < high <= 1.0:
            raise ValueError(f"Search bracket must satisfy 0 < low < high <= 1: {v}")
        return v


class OutputConfig(BaseModel):
    """Artifacts written by a pipeline run."""

    directory: Path = Field(default=Path("output"))
    pattern_svg: bool = Field(default=True)
    obj: bool = Field(default=True)
    reports: bool = Field(default=True)
    reflections: int = Field(default=0, ge=0, le=8, description="Reflected copies")


class LoggingConfig(BaseModel):
    """Logging configuration schema."""

    level: str = Field(default="INFO", description="Logging level")
    file: str | None = Field(default=None, description="Log file path")
    rotation: str = Field(default="10 MB", description="Log file rotation size")
    retention: int = Field(default=5, ge=1, le=20, description="Rotated files kept")

    @field_validator("level")
    @classmethod
    def validate_level(cls, v: str) -> str:
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if v.upper() not in valid_levels:
            raise ValueError(
                f"Invalid logging level: {v}. Must be one of {valid_levels}"
            )
        return v.upper()


class PipelineConfig(BaseModel):
    """Main configuration schema."""

    schema_version: Literal[1] = SCHEMA_VERSION
    name: str = Field(default="surface", min_length=1)
    flavor: Flavor = Field(default=Flavor.SPHERICAL)
    q: float | Literal["search"] = Field(default=0.9)
    graph: GraphConfig = Field(default_factory=GraphConfig)
    boundary: BoundaryConfig = Field(default_factory=BoundaryConfig)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    layout: LayoutConfig = Field(default_factory=LayoutConfig)
    verify: VerifyConfig = Field(default_factory=VerifyConfig)
    search: SearchConfig = Field(default_factory=SearchConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)

    @field_validator("q", mode="before")
    @classmethod
    def validate_q(cls, v: Any) -> float | str:
        if isinstance(v, str) and v.strip().lower() == "search":
            return "search"
        q = float(v)
        if not 0.0 < q <= 1.0:
            raise ValueError(f"q must lie in (0, 1]: {q}")
        return q


class Config:
    """Configuration manager for pipeline runs."""

    def __init__(self, config_path: str | Path = "config.yaml"):
        """Initialize configuration from YAML file."""
        self.config_path = Path(config_path)
        self._raw_config = self._load_config()
        self._config = self._validate_and_parse_config()

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Config":
        """Build a configuration from an in-memory mapping."""
        config = cls.__new__(cls)
        config.config_path = Path("<memory>")
        config._raw_config = dict(data)
        config._config = config._validate_and_parse_config()
        return config

    def _load_config(self) -> dict[str, Any]:
        """Load configuration from YAML file."""
        if not self.config_path.exists():
            raise ConfigurationError(
                f"Configuration file not found: {self.config_path}",
                config_key="config_path",
                severity=ErrorSeverity.CRITICAL,
            )

        try:
            with open(self.config_path, encoding="utf-8") as f:
                config = yaml.safe_load(f)
            logger.info(f"Configuration loaded from {self.config_path}")
        except yaml.YAMLError as e:
            raise ConfigurationError(
                f"Error parsing configuration file: {e}",
                config_key="yaml_parsing",
                severity=ErrorSeverity.CRITICAL,
            )
        except OSError as e:
            raise ConfigurationError(
                f"Error loading configuration: {e}",
                config_key="file_loading",
                severity=ErrorSeverity.CRITICAL,
            )
        if config is None:
            return {}
        if not isinstance(config, dict):
            raise ConfigurationError(
                "Configuration file must contain a mapping",
                config_key="yaml_parsing",
                severity=ErrorSeverity.CRITICAL,
            )
        return config

    def _validate_and_parse_config(self) -> PipelineConfig:
        """Validate and parse configuration using Pydantic models."""
        self._apply_env_overrides()
        try:
            config = PipelineConfig(**self._raw_config)
        except (ValidationError, TypeError) as e:
            raise ConfigurationError(
                f"Configuration validation failed: {e}",
                config_key="validation",
                severity=ErrorSeverity.CRITICAL,
            )
        logger.debug("Configuration validation successful")
        return config

    def _apply_env_overrides(self) -> None:
        """Apply environment variable overrides to configuration."""
        env_mappings = {
            "CMC_LOG_LEVEL": "logging.level",
            "CMC_OUTPUT_DIR": "output.directory",
            "CMC_Q": "q",
        }

        for env_var, config_path in env_mappings.items():
            env_value = os.getenv(env_var)
            if env_value:
                self._set_nested_value(self._raw_config, config_path, env_value)
                logger.debug(
                    f"Applied environment override: {env_var} -> {config_path}"
                )

    def _set_nested_value(self, data: dict[str, Any], key: str, value: Any) -> None:
        """Set nested value using dot notation."""
        keys = key.split(".")
        config = data

        for k in keys[:-1]:
            if not isinstance(config.get(k), dict):
                config[k] = {}
            config = config[k]

        config[keys[-1]] = value

    def _get_nested_value(self, data: dict[str, Any], key: str) -> Any:
        """Get nested value using dot notation."""
        keys = key.split(".")
        value: Any = data

        for k in keys:
            if not isinstance(value, dict) or k not in value:
                raise KeyError(f"Key '{key}' not found")
            value = value[k]

        return value

    def get(self, key: str, default: Any = None) -> Any:
        """Get a validated configuration value by dot-separated key."""
        try:
            return self._get_nested_value(self._config.model_dump(mode="json"), key)
        except KeyError:
            return default

    def override(self, key: str, value: Any) -> None:
        """Set a dot-separated key and re-validate."""
        self._set_nested_value(self._raw_config, key, value)
        self._config = self._validate_and_parse_config()
        logger.debug(f"Configuration override: {key} = {value}")

    @property
    def pipeline(self) -> PipelineConfig:
        return self._config

    def echo(self) -> str:
        """Canonical YAML of the validated configuration."""
        return yaml.safe_dump(self._config.model_dump(mode="json"), sort_keys=True)

    def digest(self) -> str:
        return hashlib.sha256(self.echo().encode("utf-8")).hexdigest()

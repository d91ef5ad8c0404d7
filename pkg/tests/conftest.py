"""Pytest configuration and shared fixtures."""

import sys

from pathlib import Path

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

import math  # noqa: E402
import shutil  # noqa: E402
import tempfile  # noqa: E402
from collections.abc import Generator  # noqa: E402
from typing import Any  # noqa: E402

import pytest  # noqa: E402
import yaml  # noqa: E402

from src.cmc import CmcPair, cmc_radii, integrate_one_forms  # noqa: E402
from src.config import Config  # noqa: E402
from src.geometry import Flavor  # noqa: E402
from src.koebe import KoebePair, lift  # noqa: E402
from src.layout import EmbeddedRingPattern, embed  # noqa: E402
from src.quadgraph import SQuadGraph, build_rectangle  # noqa: E402
from src.ringpattern import PatternSolution, rectangle_boundary, solve  # noqa: E402

SPHERICAL_Q = 0.9
HYPERBOLIC_Q = 0.9
SPHERICAL_CORNERS = (2 * math.pi / 3,) * 4
HYPERBOLIC_CORNERS = (math.pi / 2, math.pi / 10, 2 * math.pi / 5, math.pi / 5)


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    """Keep environment overrides out of every test unless set explicitly."""
    for name in ("CMC_LOG_LEVEL", "CMC_OUTPUT_DIR", "CMC_Q"):
        monkeypatch.delenv(name, raising=False)


@pytest.fixture
def temp_dir() -> Generator[Path, None, None]:
    """Create a temporary directory for each test."""
    temp_dir = Path(tempfile.mkdtemp(prefix="discrete_cmc_test_"))
    yield temp_dir
    shutil.rmtree(temp_dir, ignore_errors=True)


@pytest.fixture
def sample_config(temp_dir: Path) -> dict[str, Any]:
    """Sample configuration for testing."""
    return {
        "schema_version": 1,
        "name": "test",
        "flavor": "spherical",
        "q": SPHERICAL_Q,
        "graph": {"kind": "rectangle", "rectangle": [3, 3]},
        "boundary": {
            "kind": "neumann",
            "side_angle": 1,
            "corner_angles": ["2/3", "2/3", "2/3", "2/3"],
        },
        "solver": {"tolerance": 1e-10, "max_iterations": 200},
        "output": {"directory": str(temp_dir / "output")},
        "logging": {"level": "DEBUG"},
    }


@pytest.fixture
def config_file(temp_dir: Path, sample_config: dict[str, Any]) -> Path:
    """Create a temporary config file for testing."""
    config_path = temp_dir / "test_config.yaml"
    with open(config_path, "w") as f:
        yaml.dump(sample_config, f)
    return config_path


@pytest.fixture
def config(config_file: Path) -> Config:
    """Create a Config instance for testing."""
    return Config(str(config_file))


@pytest.fixture(scope="session")
def rectangle_2x2() -> SQuadGraph:
    """The smallest rectangle: four sphere corners around one circle vertex."""
    return build_rectangle(2, 2)


@pytest.fixture(scope="session")
def rectangle_3x3() -> SQuadGraph:
    return build_rectangle(3, 3)


@pytest.fixture(scope="session")
def rectangle_4x4() -> SQuadGraph:
    return build_rectangle(4, 4)


@pytest.fixture(scope="session")
def spherical_solution(rectangle_3x3: SQuadGraph) -> PatternSolution:
    """Solved spherical 3 x 3 pattern with corner angles 2pi/3."""
    bd = rectangle_boundary(rectangle_3x3, math.pi, SPHERICAL_CORNERS)
    return solve(rectangle_3x3, SPHERICAL_Q, bd, Flavor.SPHERICAL)


@pytest.fixture(scope="session")
def hyperbolic_solution(rectangle_3x3: SQuadGraph) -> PatternSolution:
    """Solved hyperbolic 3 x 3 pattern with mixed corner angles."""
    bd = rectangle_boundary(rectangle_3x3, math.pi, HYPERBOLIC_CORNERS)
    return solve(rectangle_3x3, HYPERBOLIC_Q, bd, Flavor.HYPERBOLIC)


@pytest.fixture(scope="session")
def spherical_pattern(spherical_solution: PatternSolution) -> EmbeddedRingPattern:
    return embed(spherical_solution)


@pytest.fixture(scope="session")
def hyperbolic_pattern(hyperbolic_solution: PatternSolution) -> EmbeddedRingPattern:
    return embed(hyperbolic_solution)


@pytest.fixture(scope="session")
def spherical_koebe(spherical_pattern: EmbeddedRingPattern) -> KoebePair:
    return lift(spherical_pattern)


@pytest.fixture(scope="session")
def hyperbolic_koebe(hyperbolic_pattern: EmbeddedRingPattern) -> KoebePair:
    return lift(hyperbolic_pattern)


@pytest.fixture(scope="session")
def spherical_pair(spherical_koebe: KoebePair) -> CmcPair:
    return integrate_one_forms(spherical_koebe, cmc_radii(spherical_koebe.pattern.solution))


@pytest.fixture(scope="session")
def hyperbolic_pair(hyperbolic_koebe: KoebePair) -> CmcPair:
    return integrate_one_forms(
        hyperbolic_koebe, cmc_radii(hyperbolic_koebe.pattern.solution)
    )

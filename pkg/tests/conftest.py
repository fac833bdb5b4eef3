import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from config.settings import get_testing_config, reset_config, set_config  # noqa: E402

def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full default-scenario runs (deselect with -m 'not slow')")

@pytest.fixture(autouse=True)
def testing_config(tmp_path):
    """Fresh testing configuration per test, writing under tmp_path."""
    config = get_testing_config()
    config.paths.output_dir = tmp_path / "output"
    set_config(config)
    yield config
    reset_config()

@pytest.fixture
def scenario():
    from config.scenario_loader import load_scenario
    return load_scenario()

@pytest.fixture
def small_scenario(scenario):
    """One season, two carriers, three distances, two drops."""
    from services.orchestrator import apply_overrides
    from models.domain_models import Season
    return apply_overrides(
        scenario,
        sweep={"seasons": (Season.WINTER,), "frequencies": (7.125, 52.6),
               "dist_min": 10.0, "dist_max": 100.0, "dist_steps": 3, "drops_per_point": 2, "seed": 7}
    )

@pytest.fixture
def linear_dataset():
    """Noiseless y = 3 + 2 x0 - x1 + 0.5 x2."""
    rng = np.random.default_rng(0)
    X = rng.normal(size=(200, 3))
    y = 3.0 + X @ np.array([2.0, -1.0, 0.5])
    return X, y

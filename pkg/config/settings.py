"""
Centralized Configuration System for the path-loss toolkit
Provides type-safe runtime configuration across the application.

Physical scenario settings (seasons, coefficients, channel, sweep grid) live in
the scenario YAML file; this module covers runtime concerns and where to find
that file.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional
import os
from pathlib import Path

from dotenv import load_dotenv

ARTIFACT_VERSION = "1.0.0"

BUNDLED_CONFIG_DIR = Path(__file__).resolve().parent
SCENARIO_FILENAME = "scenario.yaml"

@dataclass
class PathsConfig:
    """Where configuration is read from and output is written to."""
    config_dir: Path = BUNDLED_CONFIG_DIR
    output_dir: Path = Path("output")

    @property
    def scenario_path(self) -> Path:
        return Path(self.config_dir) / SCENARIO_FILENAME

@dataclass
class SimulationRuntimeConfig:
    """Runtime knobs for scenario sweeps."""
    n_workers: int = 1

@dataclass
class TrainingConfig:
    """Configuration for the regression benchmark."""
    train_fraction: float = 0.8
    split_seed: int = 42
    model_seed: int = 42
    include_received_power: bool = False
    rf_n_jobs: int = 1
    # kind -> {hyperparameter: value}; merged over the built-in defaults
    hyperparameters: Dict[str, Dict[str, Any]] = field(default_factory=dict)

@dataclass
class ReportConfig:
    """Configuration for figure and table rendering."""
    per_row: bool = False
    figure_width_in: float = 7.0
    figure_height_in: float = 4.5
    svg_hash_salt: str = "pathloss-lab"

@dataclass
class LoggingConfig:
    """Configuration for logging system."""
    level: str = "INFO"
    format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    file_path: Optional[str] = None
    max_file_size_mb: int = 10
    backup_count: int = 5
    enable_console: bool = True
    json_format: bool = False

@dataclass
class AppConfig:
    """Main application configuration."""
    paths: PathsConfig = field(default_factory=PathsConfig)
    simulation: SimulationRuntimeConfig = field(default_factory=SimulationRuntimeConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    report: ReportConfig = field(default_factory=ReportConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)

    environment: str = field(default_factory=lambda: os.getenv("ENVIRONMENT", "development"))

    def __post_init__(self):
        """Post-initialization validation and setup."""
        self._load_environment_overrides()
        self._validate_config()

    def _validate_config(self):
        """Validate configuration values."""
        if not 0.0 < self.training.train_fraction < 1.0:
            raise ValueError(f"train_fraction ({self.training.train_fraction}) must lie in (0, 1)")

        if self.simulation.n_workers < 1:
            raise ValueError("n_workers must be >= 1")

        if self.training.rf_n_jobs == 0:
            raise ValueError("rf_n_jobs must be nonzero (use -1 for all cores)")

        if self.logging.level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"Unknown log level: {self.logging.level}")

    def _load_environment_overrides(self):
        """Load configuration overrides from environment variables."""
        if os.getenv("PATHLOSS_CONFIG_DIR"):
            self.paths.config_dir = Path(os.getenv("PATHLOSS_CONFIG_DIR"))

        if os.getenv("PATHLOSS_OUTPUT_DIR"):
            self.paths.output_dir = Path(os.getenv("PATHLOSS_OUTPUT_DIR"))

        if os.getenv("PATHLOSS_WORKERS"):
            self.simulation.n_workers = int(os.getenv("PATHLOSS_WORKERS"))

        if os.getenv("LOG_LEVEL"):
            self.logging.level = os.getenv("LOG_LEVEL").upper()

        if os.getenv("LOG_FILE_PATH"):
            self.logging.file_path = os.getenv("LOG_FILE_PATH")

        if os.getenv("LOG_FORMAT_JSON"):
            self.logging.json_format = os.getenv("LOG_FORMAT_JSON").lower() == "true"

    def to_dict(self) -> Dict[str, Any]:
        """Convert configuration to dictionary (recorded in run manifests)."""
        return {
            "paths": {
                "config_dir": str(self.paths.config_dir),
                "output_dir": str(self.paths.output_dir)
            },
            "simulation": {
                "n_workers": self.simulation.n_workers
            },
            "training": {
                "train_fraction": self.training.train_fraction,
                "split_seed": self.training.split_seed,
                "model_seed": self.training.model_seed,
                "include_received_power": self.training.include_received_power,
                "hyperparameters": self.training.hyperparameters
            },
            "report": {
                "per_row": self.report.per_row
            },
            "environment": self.environment
        }


_config: Optional[AppConfig] = None
_dotenv_loaded = False

def get_config() -> AppConfig:
    """Get the global configuration instance."""
    global _config, _dotenv_loaded
    if _config is None:
        if not _dotenv_loaded:
            load_dotenv()
            _dotenv_loaded = True
        _config = AppConfig()
    return _config

def set_config(config: AppConfig):
    """Set the global configuration instance."""
    global _config
    _config = config

def reset_config():
    """Reset configuration to default values."""
    global _config
    _config = None

def get_testing_config() -> AppConfig:
    """Get testing environment configuration."""
    config = AppConfig()
    config.environment = "testing"
    config.logging.level = "ERROR"
    config.logging.file_path = None
    config.paths.config_dir = BUNDLED_CONFIG_DIR
    return config

"""
Main Application Orchestrator
Coordinates the services behind every command: simulate, train, report,
pathloss and coefficients, and the run manifests that make them replayable.
"""

from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import yaml
from pydantic import ValidationError as PydanticValidationError

from config.scenario_loader import load_scenario, scenario_from_dict, scenario_to_dict
from config.settings import ARTIFACT_VERSION, get_config
from core.exceptions import FileSystemError, UsageError
from core.logging_system import get_logger, log_context, log_function_calls, log_performance
from models.domain_models import (
    AtmosphericState, AttenuationBreakdown, BenchmarkResult,
    MultipathSettings, PathLossBreakdown, RegressorKind, RunManifest, ScenarioConfig,
    Season, SweepSettings
)
from services.atmosphere_service import FOLIAGE_ATTENUATION_DB_PER_M, specific_attenuation
from services.channel_service import get_channel_service, path_loss_breakdown
from services.dataset_service import prepare_training_data, read_csv, records_to_frame, write_csv
from services.regression_service import default_specs, get_regression_service, save_model
from services.report_service import format_metrics_text, get_report_service, metrics_frame, read_metrics_csv
from utils.itu_rain import Polarization, coefficient_table

logger = get_logger(__name__)

MANIFEST_SUFFIX = ".manifest.json"
MANIFEST_FILENAME = "manifest.json"

def manifest_path_for(csv_path: Path) -> Path:
    """FILE.csv -> FILE.manifest.json"""
    return csv_path.with_name(csv_path.stem + MANIFEST_SUFFIX)

def write_manifest(manifest: RunManifest, path: Path) -> Path:
    manifest.finished_at = datetime.now()
    try:
        path.write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        raise FileSystemError("write", str(path), str(e)) from e
    return path

def read_manifest(path: Union[str, Path]) -> RunManifest:
    path = Path(path)
    if not path.exists():
        raise FileSystemError("read", str(path), "file not found")
    try:
        return RunManifest.model_validate_json(path.read_text(encoding="utf-8"))
    except (PydanticValidationError, ValueError) as e:
        raise UsageError(f"{path} is not a run manifest: {e}") from e

def _revalidate(model_cls, current, updates: Dict[str, Any], section: str):
    updates = {k: v for k, v in updates.items() if v is not None}
    if not updates:
        return current
    try:
        return model_cls.model_validate({**current.model_dump(), **updates})
    except PydanticValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first["loc"]) or section
        raise UsageError(f"invalid {section} settings ({where}): {first['msg']}") from e

def apply_overrides(
    scenario: ScenarioConfig,
    sweep: Optional[Dict[str, Any]] = None,
    multipath: Optional[Dict[str, Any]] = None
) -> ScenarioConfig:
    """Scenario with command-line overrides applied and re-validated."""
    new_sweep = _revalidate(SweepSettings, scenario.sweep, sweep or {}, "sweep")
    new_multipath = _revalidate(MultipathSettings, scenario.multipath, multipath or {}, "multipath")
    if new_sweep is scenario.sweep and new_multipath is scenario.multipath:
        return scenario
    return scenario.model_copy(update={"sweep": new_sweep, "multipath": new_multipath})

class PathLossOrchestrator:
    """Main orchestrator for the path-loss toolkit."""

    @property
    def config(self):
        return get_config()

    def __init__(self):
        self.channel_service = get_channel_service()
        self.regression_service = get_regression_service()
        self.report_service = get_report_service()
        logger.info("Path-loss orchestrator initialized")

    # -- simulate ------------------------------------------------------------

    @log_function_calls()
    @log_performance(threshold_seconds=60.0)
    def simulate(
        self,
        scenario: ScenarioConfig,
        out_path: Path,
        n_workers: Optional[int] = None,
        config_path: Optional[Path] = None,
        argv: Sequence[str] = ()
    ) -> Tuple[Path, Path, int]:
        """
        Run a sweep and write the dataset CSV and its manifest.

        Returns:
            (csv path, manifest path, row count)
        """
        manifest = RunManifest(
            artifact_version=ARTIFACT_VERSION,
            command="simulate",
            resolved_config={
                "scenario": scenario_to_dict(scenario),
                "n_workers": n_workers or self.config.simulation.n_workers,
                "argv": list(argv),
                "settings": self.config.to_dict(),
            },
            master_seed=scenario.sweep.seed,
            inputs={"config": str(config_path or self.config.paths.scenario_path)},
            outputs=[str(out_path)]
        )

        with log_context(logger, command="simulate", seed=scenario.sweep.seed):
            records = self.channel_service.sweep(scenario, n_workers)
            write_csv(records_to_frame(records), out_path)
            logger.info(f"Simulated {len(records)} rows into {out_path}")
        manifest_path = write_manifest(manifest, manifest_path_for(out_path))
        return out_path, manifest_path, len(records)

    def scenario_from_manifest(self, manifest: RunManifest) -> ScenarioConfig:
        if manifest.command != "simulate" or "scenario" not in manifest.resolved_config:
            raise UsageError(f"manifest was written by '{manifest.command}', expected 'simulate'")
        return scenario_from_dict(manifest.resolved_config["scenario"])

    # -- train ---------------------------------------------------------------

    @log_function_calls()
    @log_performance(threshold_seconds=300.0)
    def train(
        self,
        data_path: Path,
        out_dir: Path,
        kinds: Optional[Sequence[RegressorKind]] = None,
        train_fraction: Optional[float] = None,
        seed: Optional[int] = None,
        overrides: Optional[Dict[str, Dict[str, Any]]] = None,
        include_received_power: Optional[bool] = None,
        argv: Sequence[str] = (),
        split_seed: Optional[int] = None,
        model_seed: Optional[int] = None
    ) -> Tuple[BenchmarkResult, List[Path]]:
        """
        Preprocess, fit and evaluate, then persist models, metrics and manifest.

        `seed` sets both the split and the model seed; `split_seed` and
        `model_seed` override it individually.

        Returns:
            (benchmark result, written paths)
        """
        training = self.config.training
        train_fraction = training.train_fraction if train_fraction is None else train_fraction
        if split_seed is None:
            split_seed = training.split_seed if seed is None else seed
        if model_seed is None:
            model_seed = training.model_seed if seed is None else seed
        include_received_power = (training.include_received_power
                                  if include_received_power is None else include_received_power)

        frame = read_csv(data_path, strict=True)
        data = prepare_training_data(frame, train_fraction, split_seed, include_received_power)
        specs = default_specs(kinds, seed=model_seed, overrides=overrides)

        with log_context(logger, command="train", seed=model_seed):
            logger.info(f"Training {len(specs)} model(s) on {len(data.y_train)} rows, testing on {len(data.y_test)}")
            result, models = self.regression_service.benchmark(
                data.X_train, data.y_train, data.X_test, data.y_test, specs, data.feature_names
            )

        models_dir = out_dir / "models"
        try:
            models_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise FileSystemError("create directory", str(models_dir), str(e)) from e

        written = []
        for kind, model in models.items():
            model_path = models_dir / f"{kind.value}.joblib"
            save_model(model, model_path)
            written.append(model_path)

        metrics_csv = out_dir / "metrics.csv"
        metrics_frame(result).to_csv(metrics_csv, index=False, lineterminator="\n")
        metrics_txt = out_dir / "metrics.txt"
        metrics_txt.write_text(format_metrics_text(result), encoding="utf-8")
        written += [metrics_csv, metrics_txt]

        manifest = RunManifest(
            artifact_version=ARTIFACT_VERSION,
            command="train",
            resolved_config={
                "train_fraction": train_fraction,
                "split_seed": split_seed,
                "model_seed": model_seed,
                "include_received_power": include_received_power,
                "feature_names": list(data.feature_names),
                "models": [spec.kind.value for spec in specs],
                "hyperparameters": {spec.kind.value: spec.hyperparameters for spec in specs},
                "argv": list(argv),
                "settings": self.config.to_dict(),
            },
            master_seed=model_seed,
            inputs={"data": str(data_path)},
            outputs=[str(p) for p in written]
        )
        written.append(write_manifest(manifest, out_dir / MANIFEST_FILENAME))
        return result, written

    def train_options_from_manifest(self, manifest: RunManifest) -> Dict[str, Any]:
        if manifest.command != "train":
            raise UsageError(f"manifest was written by '{manifest.command}', expected 'train'")
        resolved = manifest.resolved_config
        try:
            return {
                "data_path": Path(manifest.inputs["data"]),
                "kinds": [RegressorKind(k) for k in resolved["models"]],
                "train_fraction": resolved["train_fraction"],
                "split_seed": resolved["split_seed"],
                "model_seed": resolved["model_seed"],
                "overrides": resolved["hyperparameters"],
                "include_received_power": resolved["include_received_power"],
            }
        except (KeyError, ValueError) as e:
            raise UsageError(f"incomplete train manifest: {e}") from e

    # -- report --------------------------------------------------------------

    @log_function_calls()
    def report(
        self,
        out_dir: Path,
        data_path: Optional[Path] = None,
        metrics_path: Optional[Path] = None,
        seasons: Optional[Sequence[Season]] = None,
        per_row: Optional[bool] = None,
        argv: Sequence[str] = ()
    ) -> List[Path]:
        """Render season charts from a dataset and comparison charts from a metrics file."""
        if data_path is None and metrics_path is None:
            raise UsageError("report needs --data and/or --metrics")
        per_row = self.config.report.per_row if per_row is None else per_row

        frame = read_csv(data_path, strict=True) if data_path is not None else None
        result = read_metrics_csv(metrics_path) if metrics_path is not None else None

        try:
            out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise FileSystemError("create directory", str(out_dir), str(e)) from e

        written: List[Path] = []
        if frame is not None:
            written += self.report_service.render_dataset(frame, out_dir, seasons, per_row)
        if result is not None:
            written += self.report_service.render_metrics(result, out_dir)

        inputs = {}
        if data_path is not None:
            inputs["data"] = str(data_path)
        if metrics_path is not None:
            inputs["metrics"] = str(metrics_path)
        manifest = RunManifest(
            artifact_version=ARTIFACT_VERSION,
            command="report",
            resolved_config={
                "seasons": [s.value for s in seasons] if seasons else None,
                "per_row": per_row,
                "argv": list(argv),
                "settings": self.config.to_dict(),
            },
            inputs=inputs,
            outputs=[str(p) for p in written]
        )
        written.append(write_manifest(manifest, out_dir / MANIFEST_FILENAME))
        return written

    # -- pathloss ------------------------------------------------------------

    def evaluate_path_loss(
        self,
        freq_ghz: float,
        distance: float,
        path_loss_exponent: float,
        alpha: Optional[float] = None,
        weather: Optional[AtmosphericState] = None,
        foliage: bool = False,
        shadow: float = 0.0,
        scenario: Optional[ScenarioConfig] = None
    ) -> Tuple[PathLossBreakdown, Optional[AttenuationBreakdown]]:
        """Deterministic close-in path loss with its term breakdown."""
        attenuation = None
        if weather is not None:
            scenario = scenario or load_scenario()
            attenuation = specific_attenuation(freq_ghz, weather, scenario.attenuation, foliage)
            total_alpha = attenuation.total_alpha
        else:
            total_alpha = (alpha or 0.0) + (FOLIAGE_ATTENUATION_DB_PER_M if foliage else 0.0)
        return path_loss_breakdown(freq_ghz, distance, path_loss_exponent, total_alpha, shadow), attenuation

    # -- coefficients --------------------------------------------------------

    def coefficients_yaml(self, freqs: Sequence[float], polarization: Polarization = Polarization.HORIZONTAL) -> str:
        """Rain coefficient rows in the scenario file's attenuation grammar."""
        rows = coefficient_table(freqs, polarization)
        return yaml.safe_dump({"frequencies": rows}, sort_keys=False, default_flow_style=False)

_orchestrator: Optional[PathLossOrchestrator] = None

def get_orchestrator() -> PathLossOrchestrator:
    """Get the global orchestrator instance."""
    global _orchestrator
    if _orchestrator is None:
        _orchestrator = PathLossOrchestrator()
    return _orchestrator

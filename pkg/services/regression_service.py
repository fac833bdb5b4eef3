"""
Regression Service
The nine path-loss regressors, the evaluation metrics and the benchmark
that fits and ranks all of them.
"""

import math
import time
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import joblib
import numpy as np
from pydantic import ValidationError as PydanticValidationError
from sklearn.ensemble import RandomForestRegressor
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import ElasticNet, Lasso, LinearRegression, Ridge
from sklearn.metrics import mean_absolute_error, mean_squared_error, r2_score
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import PolynomialFeatures
from sklearn.svm import SVR

from config.settings import ARTIFACT_VERSION, get_config
from core.exceptions import (
    ConvergenceError, DomainError, ErrorHandler, FileSystemError, ModelFormatError,
    PathLossLabException, ShapeError, SingularFitError, UndefinedMetricError, ValidationError
)
from core.logging_system import get_training_logger, log_function_calls, log_metrics, log_performance
from models.domain_models import (
    BenchmarkEntry, BenchmarkResult, MetricsReport, ReferenceStudy, RegressorKind, RegressorSpec
)
from services.dataset_service import FeatureScaling
from utils.estimators import HuberIRLSRegressor, ScheduledSGDRegressor, svr_kkt_residual

logger = get_training_logger()

MODEL_FORMAT = "pathloss-lab-model"
MODEL_FORMAT_VERSION = 1

# Fitted on z-scored features; linear and random forest see raw features.
STANDARDIZED_KINDS = frozenset({
    RegressorKind.ROBUST, RegressorKind.RIDGE, RegressorKind.LASSO, RegressorKind.ELASTIC_NET,
    RegressorKind.POLYNOMIAL, RegressorKind.SGD, RegressorKind.SVM,
})

DEFAULT_HYPERPARAMETERS: Dict[RegressorKind, Dict[str, Any]] = {
    RegressorKind.LINEAR: {},
    RegressorKind.ROBUST: {"epsilon": 1.35, "tol": 1e-8, "max_iter": 100},
    RegressorKind.RIDGE: {"alpha": 1.0},
    RegressorKind.LASSO: {"alpha": 0.1, "tol": 1e-6, "max_iter": 10000},
    RegressorKind.ELASTIC_NET: {"alpha": 0.1, "l1_ratio": 0.5, "tol": 1e-6, "max_iter": 10000},
    RegressorKind.POLYNOMIAL: {"degree": 2},
    RegressorKind.SGD: {"eta0": 0.01, "decay": 1e-4, "epochs": 100},
    RegressorKind.RANDOM_FOREST: {
        "n_estimators": 100, "bootstrap": True, "max_features": None,
        "min_samples_leaf": 2, "max_depth": None,
    },
    RegressorKind.SVM: {"C": 1.0, "epsilon": 0.1, "gamma": "scale", "tol": 1e-3, "max_iter": 100000},
}

# Reported benchmark rows of the seasonal UMi study, shown next to this run's metrics.
PUBLISHED_METRICS: Dict[RegressorKind, MetricsReport] = {
    RegressorKind.LINEAR: MetricsReport(mae=5.061, mse=42.777, rmse=6.540, r2=0.813),
    RegressorKind.ROBUST: MetricsReport(mae=5.596, mse=70.153, rmse=8.375, r2=0.693),
    RegressorKind.RIDGE: MetricsReport(mae=5.506, mse=48.404, rmse=6.957, r2=0.788),
    RegressorKind.LASSO: MetricsReport(mae=7.827, mse=97.061, rmse=9.851, r2=0.576),
    RegressorKind.ELASTIC_NET: MetricsReport(mae=5.202, mse=43.594, rmse=6.602, r2=0.809),
    RegressorKind.POLYNOMIAL: MetricsReport(mae=4.388, mse=33.833, rmse=5.816, r2=0.852),
    RegressorKind.SGD: MetricsReport(mae=5.414, mse=46.738, rmse=6.836, r2=0.796),
    RegressorKind.RANDOM_FOREST: MetricsReport(mae=3.485, mse=24.809, rmse=4.980, r2=0.891),
    RegressorKind.SVM: MetricsReport(mae=6.687, mse=82.902, rmse=9.105, r2=0.638),
}

REFERENCE_STUDIES: Tuple[ReferenceStudy, ...] = (
    ReferenceStudy(citation="Popoola et al. 2018", description="Feed-forward neural network path loss model",
                   mae=4.74, mse=39.38, rmse=6.27),
    ReferenceStudy(citation="Obeidat et al. 2018", description="Indoor path loss with wall correction factors",
                   rmse=8.67),
    ReferenceStudy(citation="Sotiroudis et al. 2019", description="Neural networks and random forests for NB-IoT",
                   mae=4.28, rmse=5.60),
    ReferenceStudy(citation="Aldossari & Chen 2020", description="Machine learning path loss in urban mm-wave",
                   mae=5.10, mse=44.51, rmse=6.67, r2=0.72),
)

# ---------------------------------------------------------------------------
# specs
# ---------------------------------------------------------------------------

def resolve_hyperparameters(kind: RegressorKind, overrides: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Defaults, then config-level, then caller overrides."""
    resolved = dict(DEFAULT_HYPERPARAMETERS[kind])
    layers = [get_config().training.hyperparameters.get(kind.value, {}), overrides or {}]
    for layer in layers:
        for name, value in layer.items():
            if name not in resolved:
                raise ValidationError(
                    f"{kind.value}.{name}", value,
                    f"one of {', '.join(sorted(resolved)) or '(no hyperparameters)'}"
                )
            resolved[name] = value
    return resolved

def default_specs(
    kinds: Optional[Iterable[RegressorKind]] = None,
    seed: Optional[int] = None,
    overrides: Optional[Dict[str, Dict[str, Any]]] = None
) -> List[RegressorSpec]:
    """Specs with resolved hyperparameters, in the canonical kind order."""
    seed = get_config().training.model_seed if seed is None else seed
    overrides = overrides or {}
    wanted = list(RegressorKind) if kinds is None else list(kinds)
    specs = []
    for kind in RegressorKind:
        if kind not in wanted:
            continue
        hyperparameters = resolve_hyperparameters(kind, overrides.get(kind.value))
        try:
            specs.append(RegressorSpec(kind=kind, hyperparameters=hyperparameters, seed=seed))
        except PydanticValidationError as e:
            raise ValidationError(kind.value, hyperparameters, e.errors()[0]["msg"]) from e
    return specs

def build_estimator(spec: RegressorSpec, n_features: int):
    """Unfitted scikit-learn compatible estimator for a spec."""
    hp = resolve_hyperparameters(spec.kind, spec.hyperparameters)
    kind = spec.kind

    if kind == RegressorKind.LINEAR:
        return LinearRegression()
    if kind == RegressorKind.ROBUST:
        return HuberIRLSRegressor(epsilon=hp["epsilon"], tol=hp["tol"], max_iter=int(hp["max_iter"]))
    if kind == RegressorKind.RIDGE:
        return Ridge(alpha=hp["alpha"])
    if kind == RegressorKind.LASSO:
        return Lasso(alpha=hp["alpha"], tol=hp["tol"], max_iter=int(hp["max_iter"]))
    if kind == RegressorKind.ELASTIC_NET:
        return ElasticNet(alpha=hp["alpha"], l1_ratio=hp["l1_ratio"], tol=hp["tol"], max_iter=int(hp["max_iter"]))
    if kind == RegressorKind.POLYNOMIAL:
        return make_pipeline(PolynomialFeatures(degree=int(hp["degree"]), include_bias=False), LinearRegression())
    if kind == RegressorKind.SGD:
        return ScheduledSGDRegressor(eta0=hp["eta0"], decay=hp["decay"], epochs=int(hp["epochs"]), random_state=spec.seed)
    if kind == RegressorKind.RANDOM_FOREST:
        max_features = hp["max_features"] or max(1, math.ceil(n_features / 3))
        return RandomForestRegressor(
            n_estimators=int(hp["n_estimators"]),
            bootstrap=bool(hp["bootstrap"]),
            max_features=max_features,
            min_samples_leaf=int(hp["min_samples_leaf"]),
            max_depth=hp["max_depth"],
            random_state=spec.seed,
            n_jobs=get_config().training.rf_n_jobs
        )
    if kind == RegressorKind.SVM:
        return SVR(kernel="rbf", gamma=hp["gamma"], C=hp["C"], epsilon=hp["epsilon"],
                   tol=hp["tol"], max_iter=int(hp["max_iter"]))
    raise ValidationError("kind", kind, ", ".join(k.value for k in RegressorKind))

# ---------------------------------------------------------------------------
# fit / predict
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrainedModel:
    """A fitted regressor together with the preprocessing it was trained under."""
    spec: RegressorSpec
    estimator: Any
    scaling: Optional[FeatureScaling]
    n_features: int
    feature_names: Tuple[str, ...] = ()

    @property
    def kind(self) -> RegressorKind:
        return self.spec.kind

    @property
    def final_estimator(self):
        return self.estimator.steps[-1][1] if hasattr(self.estimator, "steps") else self.estimator

    @property
    def coefficients(self) -> Tuple[np.ndarray, float]:
        """(coef, intercept) for the linear family, in the space the model was fitted in."""
        final = self.final_estimator
        if not hasattr(final, "coef_"):
            raise AttributeError(f"{self.kind.display_name} has no linear coefficients")
        return np.asarray(final.coef_, dtype=float).ravel(), float(np.ravel(final.intercept_)[0])

    def predict(self, features) -> np.ndarray:
        return predict(self, features)

def _as_matrix(features, name: str = "features") -> np.ndarray:
    matrix = np.asarray(features, dtype=float)
    if matrix.ndim != 2:
        raise DomainError(name, f"{matrix.ndim}-D array", "a 2-D rows x columns matrix")
    if not np.all(np.isfinite(matrix)):
        raise DomainError(name, "non-finite entries", "finite values")
    return matrix

def _promote_convergence_warnings(kind: RegressorKind, estimator, caught: List[warnings.WarningMessage]):
    messages = [str(w.message) for w in caught if issubclass(w.category, ConvergenceWarning)]
    if not messages:
        return
    final = estimator.steps[-1][1] if hasattr(estimator, "steps") else estimator
    n_iter = getattr(final, "n_iter_", None)
    iterations = int(np.max(n_iter)) if n_iter is not None else -1
    diagnostics = {"message": messages[-1]}
    if getattr(final, "dual_gap_", None) is not None:
        diagnostics["dual_gap"] = float(np.max(final.dual_gap_))
    raise ConvergenceError(kind.value, iterations, diagnostics)

def _check_rank(spec: RegressorSpec, estimator, n_features: int):
    if spec.kind == RegressorKind.LINEAR:
        final, width = estimator, n_features
    elif spec.kind == RegressorKind.POLYNOMIAL:
        final = estimator.steps[-1][1]
        width = estimator.steps[0][1].n_output_features_
    else:
        return
    if final.rank_ < width:
        # rank_ is of the centered design; the intercept adds one
        raise SingularFitError(spec.kind.value, int(final.rank_) + 1, width + 1)

def _check_svr_optimality(svr, X: np.ndarray, y: np.ndarray):
    residual = svr_kkt_residual(svr, X, y)
    if residual > svr.tol:
        logger.warning(f"SVM optimality residual {residual:.3g} exceeds tol {svr.tol:g}")
    else:
        logger.debug(f"SVM optimality residual {residual:.3g}")

@log_function_calls()
def fit(spec: RegressorSpec, features, target, feature_names: Sequence[str] = ()) -> TrainedModel:
    """
    Fit one regressor.

    Args:
        spec: Model kind, hyperparameters and seed
        features: rows x p matrix
        target: path loss per row (dB)
        feature_names: Column names recorded with the model

    Returns:
        TrainedModel
    """
    X = _as_matrix(features)
    y = np.asarray(target, dtype=float).ravel()
    if len(y) != X.shape[0]:
        raise DomainError("target rows", len(y), f"{X.shape[0]} rows to match the features")
    if not np.all(np.isfinite(y)):
        raise DomainError("target", "non-finite entries", "finite values")

    scaling = FeatureScaling.fit(X) if spec.kind in STANDARDIZED_KINDS else None
    X_fit = scaling.transform(X) if scaling is not None else X

    estimator = build_estimator(spec, X.shape[1])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        estimator.fit(X_fit, y)
    _promote_convergence_warnings(spec.kind, estimator, caught)
    _check_rank(spec, estimator, X.shape[1])
    if spec.kind == RegressorKind.SVM:
        _check_svr_optimality(estimator, X_fit, y)

    resolved = spec.model_copy(update={"hyperparameters": resolve_hyperparameters(spec.kind, spec.hyperparameters)})
    return TrainedModel(
        spec=resolved,
        estimator=estimator,
        scaling=scaling,
        n_features=X.shape[1],
        feature_names=tuple(feature_names)
    )

def predict(model: TrainedModel, features) -> np.ndarray:
    """Predictions for a feature matrix of the training width."""
    X = _as_matrix(features)
    if X.shape[1] != model.n_features:
        raise ShapeError(model.n_features, X.shape[1])
    if model.scaling is not None:
        X = model.scaling.transform(X)
    return np.asarray(model.estimator.predict(X), dtype=float).ravel()

# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def compute_metrics(target, predictions) -> MetricsReport:
    """
    MAE, MSE, RMSE and R² of predictions against the target.

    Raises UndefinedMetricError carrying the other three metrics when the
    target has zero variance.
    """
    y = np.asarray(target, dtype=float).ravel()
    y_hat = np.asarray(predictions, dtype=float).ravel()
    if len(y) == 0 or len(y) != len(y_hat):
        raise DomainError("lengths", (len(y), len(y_hat)), "equal and nonzero")

    mae = float(mean_absolute_error(y, y_hat))
    mse = float(mean_squared_error(y, y_hat))
    rmse = math.sqrt(mse)

    if np.all(y == y[0]):
        partial = MetricsReport(mae=mae, mse=mse, rmse=rmse, r2=None)
        raise UndefinedMetricError("r2", "target variance is zero", partial_report=partial)

    return MetricsReport(mae=mae, mse=mse, rmse=rmse, r2=min(1.0, float(r2_score(y, y_hat))))

# ---------------------------------------------------------------------------
# benchmark
# ---------------------------------------------------------------------------

def _sort_entries(entries: List[BenchmarkEntry]) -> List[BenchmarkEntry]:
    order = list(RegressorKind)
    ranked = sorted((e for e in entries if e.succeeded), key=lambda e: (e.metrics.rmse, order.index(e.kind)))
    failed = sorted((e for e in entries if not e.succeeded), key=lambda e: order.index(e.kind))
    return ranked + failed

class RegressionService:
    """Fits, evaluates and persists the regressors."""

    def __init__(self):
        self.error_handler = ErrorHandler(logger)
        self._stats = {"benchmarks": 0, "fits": 0, "failures": 0}
        logger.info("Regression service initialized")

    @log_performance(threshold_seconds=120.0)
    def benchmark(
        self,
        X_train, y_train, X_test, y_test,
        specs: Optional[Sequence[RegressorSpec]] = None,
        feature_names: Sequence[str] = ()
    ) -> Tuple[BenchmarkResult, Dict[RegressorKind, TrainedModel]]:
        """
        Fit and evaluate every spec; one model failing does not stop the others.

        Returns:
            (result sorted by ascending RMSE, fitted models by kind)
        """
        specs = list(specs) if specs is not None else default_specs()
        if len({spec.kind for spec in specs}) != len(specs):
            raise ValidationError("models", [s.kind.value for s in specs], "unique model kinds")

        entries: List[BenchmarkEntry] = []
        models: Dict[RegressorKind, TrainedModel] = {}
        for spec in specs:
            started = time.perf_counter()
            metrics = None
            error = None
            try:
                model = fit(spec, X_train, y_train, feature_names)
                metrics = compute_metrics(y_test, predict(model, X_test))
                models[spec.kind] = model
                self._stats["fits"] += 1
            except UndefinedMetricError as e:
                metrics = e.partial_report
                models[spec.kind] = model
                error = self.error_handler.handle_error(e, {"kind": spec.kind.value}).to_dict()
            except (PathLossLabException, ValueError, np.linalg.LinAlgError) as e:
                self._stats["failures"] += 1
                error = self.error_handler.handle_error(e, {"kind": spec.kind.value}).to_dict()

            elapsed = time.perf_counter() - started
            if metrics is not None:
                log_metrics(logger, {"model": spec.kind.display_name, **metrics.model_dump(),
                                     "fit_seconds": round(elapsed, 3)})
            entries.append(BenchmarkEntry(
                kind=spec.kind,
                metrics=metrics,
                error=error,
                fit_seconds=elapsed,
                hyperparameters=resolve_hyperparameters(spec.kind, spec.hyperparameters)
            ))

        self._stats["benchmarks"] += 1
        return BenchmarkResult(entries=tuple(_sort_entries(entries)), reference_studies=REFERENCE_STUDIES), models

    def get_statistics(self) -> Dict[str, Any]:
        return {**self._stats, "errors": self.error_handler.get_error_stats()}

_regression_service: Optional[RegressionService] = None

def get_regression_service() -> RegressionService:
    """Get the global regression service."""
    global _regression_service
    if _regression_service is None:
        _regression_service = RegressionService()
    return _regression_service

def benchmark_all(
    X_train, y_train, X_test, y_test,
    specs: Optional[Sequence[RegressorSpec]] = None,
    feature_names: Sequence[str] = ()
) -> BenchmarkResult:
    """Fit and rank all nine regressors (or the given specs)."""
    result, _ = get_regression_service().benchmark(X_train, y_train, X_test, y_test, specs, feature_names)
    return result

# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def save_model(model: TrainedModel, path: Union[str, Path]):
    """Write a self-describing joblib container."""
    path = Path(path)
    payload = {
        "format": MODEL_FORMAT,
        "format_version": MODEL_FORMAT_VERSION,
        "artifact_version": ARTIFACT_VERSION,
        "spec": model.spec.model_dump(mode="json"),
        "estimator": model.estimator,
        "scaling": None if model.scaling is None else {"mean": model.scaling.mean, "std": model.scaling.std},
        "n_features": model.n_features,
        "feature_names": list(model.feature_names),
    }
    try:
        joblib.dump(payload, path)
    except OSError as e:
        raise FileSystemError("write", str(path), str(e)) from e

def load_model(path: Union[str, Path]) -> TrainedModel:
    """Load a model written by save_model with the same artifact version."""
    path = Path(path)
    if not path.exists():
        raise FileSystemError("read", str(path), "file not found")
    try:
        payload = joblib.load(path)
    except Exception as e:
        raise ModelFormatError(str(path), f"unreadable container: {e}") from e

    if not isinstance(payload, dict) or payload.get("format") != MODEL_FORMAT:
        raise ModelFormatError(str(path), "not a path-loss model container")
    if payload.get("format_version") != MODEL_FORMAT_VERSION:
        raise ModelFormatError(str(path), f"format version {payload.get('format_version')} is not supported")
    if payload.get("artifact_version") != ARTIFACT_VERSION:
        raise ModelFormatError(
            str(path), f"written by version {payload.get('artifact_version')}, this is {ARTIFACT_VERSION}"
        )

    scaling = payload["scaling"]
    return TrainedModel(
        spec=RegressorSpec.model_validate(payload["spec"]),
        estimator=payload["estimator"],
        scaling=None if scaling is None else FeatureScaling(mean=scaling["mean"], std=scaling["std"]),
        n_features=int(payload["n_features"]),
        feature_names=tuple(payload["feature_names"])
    )

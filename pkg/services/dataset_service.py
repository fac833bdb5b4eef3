"""
Dataset Service
CSV serialization and ingestion of the channel dataset, preprocessing
(column dropping, season label encoding, standardization) and splitting.
"""

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from sklearn.model_selection import train_test_split
from sklearn.preprocessing import LabelEncoder, StandardScaler

from core.exceptions import CsvParseError, DomainError, EncodingError, FileSystemError, SchemaError
from core.logging_system import get_logger, log_function_calls
from models.domain_models import ChannelRecord, Season

logger = get_logger(__name__)

DISTANCE_COLUMN = "T-R Separation Distance (m)"
DELAY_COLUMN = "Time Delay (ns)"
RECEIVED_POWER_COLUMN = "Received Power (dBm)"
DELAY_SPREAD_COLUMN = "RMS Delay Spread (ns)"
SEASON_COLUMN = "Season"
FREQUENCY_COLUMN = "Frequency"
TARGET_COLUMN = "Path Loss (dB)"

CANONICAL_COLUMNS: Tuple[str, ...] = (
    DISTANCE_COLUMN,
    DELAY_COLUMN,
    RECEIVED_POWER_COLUMN,
    "Phase (rad)",
    "Azimuth AoD (degree)",
    "Elevation AoD (degree)",
    "Azimuth AoA (degree)",
    "Elevation AoA (degree)",
    DELAY_SPREAD_COLUMN,
    SEASON_COLUMN,
    FREQUENCY_COLUMN,
    TARGET_COLUMN,
)
IGNORED_COLUMNS: Tuple[str, ...] = ("Data Source", "Simulation Number")
NUMERIC_COLUMNS: Tuple[str, ...] = tuple(c for c in CANONICAL_COLUMNS if c != SEASON_COLUMN) + ("Simulation Number",)

# Received power is tx_power - path_loss + relative power by construction,
# so it is left out of the default feature set.
DEFAULT_FEATURE_COLUMNS: Tuple[str, ...] = tuple(
    c for c in CANONICAL_COLUMNS if c not in (TARGET_COLUMN, RECEIVED_POWER_COLUMN)
)
FULL_FEATURE_COLUMNS: Tuple[str, ...] = tuple(c for c in CANONICAL_COLUMNS if c != TARGET_COLUMN)

_season_encoder = LabelEncoder().fit([season.value for season in Season])

# ---------------------------------------------------------------------------
# construction and schema
# ---------------------------------------------------------------------------

def empty_frame(columns: Sequence[str] = CANONICAL_COLUMNS) -> pd.DataFrame:
    """Header-only dataset with the canonical dtypes."""
    return pd.DataFrame({
        column: pd.Series([], dtype=object if column in (SEASON_COLUMN, "Data Source") else np.float64)
        for column in columns
    })

def records_to_frame(records: Iterable[ChannelRecord]) -> pd.DataFrame:
    """Tabular dataset in canonical column order."""
    rows = [record.to_row() for record in records]
    if not rows:
        return empty_frame()
    frame = pd.DataFrame(rows, columns=list(CANONICAL_COLUMNS))
    return _coerce_numeric(frame)

def check_schema(frame: pd.DataFrame):
    """Raise SchemaError unless the columns are exactly the canonical ones (optional ignored columns aside)."""
    columns = list(frame.columns)
    missing = [c for c in CANONICAL_COLUMNS if c not in columns]
    unexpected = [c for c in columns if c not in CANONICAL_COLUMNS and c not in IGNORED_COLUMNS]
    core = [c for c in columns if c not in IGNORED_COLUMNS]
    misordered = not missing and not unexpected and tuple(core) != CANONICAL_COLUMNS
    if missing or unexpected or misordered:
        raise SchemaError(missing=missing, unexpected=unexpected, misordered=misordered)

def _coerce_numeric(frame: pd.DataFrame) -> pd.DataFrame:
    for column in NUMERIC_COLUMNS:
        if column in frame.columns:
            frame[column] = frame[column].astype(np.float64)
    return frame

# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

@log_function_calls()
def write_csv(frame: pd.DataFrame, path: Union[str, Path]):
    """
    Write the dataset as UTF-8 CSV with a header row.

    Floats are rendered in shortest round-trip form, "." decimal separator.
    """
    path = Path(path)
    if not path.parent.exists():
        raise FileSystemError("write", str(path), "parent directory does not exist")
    try:
        frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")
    except OSError as e:
        raise FileSystemError("write", str(path), str(e)) from e
    logger.info(f"Wrote {len(frame)} rows to {path}")

def _precheck_rows(path: Path) -> List[str]:
    try:
        with path.open("r", encoding="utf-8", newline="") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header is None:
                raise CsvParseError(str(path), "file is empty (header row is mandatory)")
            bad_rows = [
                reader.line_num for row in reader
                if row and len(row) != len(header)
            ]
    except FileNotFoundError as e:
        raise FileSystemError("read", str(path), "file not found") from e
    except UnicodeDecodeError as e:
        raise CsvParseError(str(path), f"not valid UTF-8: {e}") from e
    except csv.Error as e:
        raise CsvParseError(str(path), str(e)) from e

    duplicates = sorted({c for c in header if header.count(c) > 1})
    if duplicates:
        raise CsvParseError(str(path), f"duplicate column names: {', '.join(duplicates)}")
    if bad_rows:
        raise CsvParseError(str(path), f"rows do not have {len(header)} fields", rows=bad_rows)
    return header

@log_function_calls()
def read_csv(path: Union[str, Path], strict: bool = True) -> pd.DataFrame:
    """
    Read a dataset CSV.

    Args:
        path: CSV file (UTF-8, comma separated, header mandatory)
        strict: Require exactly the canonical columns in canonical order

    Returns:
        DataFrame with float64 numeric columns and string labels
    """
    path = Path(path)
    header = _precheck_rows(path)

    text_columns = {c: str for c in header if c not in NUMERIC_COLUMNS}
    frame = pd.read_csv(path, encoding="utf-8", float_precision="round_trip", dtype=text_columns)

    if strict:
        check_schema(frame)

    # header is line 1
    missing_rows = [int(i) + 2 for i in np.flatnonzero(frame.isna().any(axis=1).to_numpy())]
    if missing_rows:
        raise CsvParseError(str(path), "missing values", rows=missing_rows)

    for column in NUMERIC_COLUMNS:
        if column in frame.columns:
            numeric = pd.to_numeric(frame[column], errors="coerce")
            bad = [int(i) + 2 for i in np.flatnonzero(numeric.isna().to_numpy())]
            if bad:
                raise CsvParseError(str(path), f"non-numeric values in '{column}'", rows=bad)
            frame[column] = numeric.astype(np.float64)

    logger.info(f"Read {len(frame)} rows x {len(frame.columns)} columns from {path}")
    return frame

# ---------------------------------------------------------------------------
# preprocessing
# ---------------------------------------------------------------------------

def drop_ignored_columns(frame: pd.DataFrame) -> pd.DataFrame:
    """Remove "Data Source" and "Simulation Number" when present."""
    return frame.drop(columns=[c for c in IGNORED_COLUMNS if c in frame.columns])

def encode_season(label: str) -> int:
    """Alphabetical code: Fall 0, Spring 1, Summer 2, Winter 3."""
    if label not in _season_encoder.classes_:
        raise EncodingError(label, list(_season_encoder.classes_))
    return int(_season_encoder.transform([label])[0])

def decode_season(code: int) -> str:
    if isinstance(code, bool) or not float(code).is_integer() or not 0 <= int(code) < len(_season_encoder.classes_):
        raise EncodingError(code, [str(i) for i in range(len(_season_encoder.classes_))])
    return str(_season_encoder.inverse_transform([int(code)])[0])

def encode_season_column(frame: pd.DataFrame) -> pd.DataFrame:
    """Copy of the frame with the season labels replaced by their codes."""
    labels = frame[SEASON_COLUMN].astype(str)
    unknown = sorted(set(labels) - set(_season_encoder.classes_))
    if unknown:
        raise EncodingError(unknown[0], list(_season_encoder.classes_))
    encoded = frame.copy()
    encoded[SEASON_COLUMN] = _season_encoder.transform(labels).astype(np.int64)
    return encoded

def split(frame: pd.DataFrame, train_fraction: float, seed: int) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """
    Deterministic shuffled train/test partition.

    The training part gets floor(train_fraction * rows) rows.
    """
    n_rows = len(frame)
    if not 0.0 < train_fraction < 1.0:
        raise DomainError("train_fraction", train_fraction, "0 < fraction < 1")
    if n_rows < 2:
        raise DomainError("rows", n_rows, ">= 2 rows to split")

    n_train = math.floor(train_fraction * n_rows + 1e-9)
    if not 1 <= n_train <= n_rows - 1:
        raise DomainError("train size", n_train, f"1 <= train rows <= {n_rows - 1}")

    train, test = train_test_split(frame, train_size=n_train, random_state=seed, shuffle=True)
    return train, test

@dataclass(frozen=True)
class FeatureScaling:
    """Per-column training statistics; zero-spread columns map to 0."""
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, features: np.ndarray) -> "FeatureScaling":
        features = np.asarray(features, dtype=float)
        if features.shape[0] == 0:
            raise DomainError("training rows", 0, "nonempty training features")
        scaler = StandardScaler().fit(features)
        std = np.sqrt(scaler.var_)
        std[np.ptp(features, axis=0) == 0] = 0.0
        return cls(mean=scaler.mean_.copy(), std=std)

    def transform(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=float)
        constant = self.std == 0
        scaled = (features - self.mean) / np.where(constant, 1.0, self.std)
        scaled[:, constant] = 0.0
        return scaled

def standardize(
    train_features: np.ndarray,
    test_features: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, FeatureScaling]:
    """Z-score both sets with the training statistics only."""
    scaling = FeatureScaling.fit(train_features)
    return scaling.transform(train_features), scaling.transform(test_features), scaling

def feature_columns(include_received_power: bool = False) -> Tuple[str, ...]:
    return FULL_FEATURE_COLUMNS if include_received_power else DEFAULT_FEATURE_COLUMNS

def to_features(
    frame: pd.DataFrame,
    include_received_power: bool = False
) -> Tuple[np.ndarray, np.ndarray, Tuple[str, ...]]:
    """Feature matrix, target vector and feature names of a dataset."""
    frame = drop_ignored_columns(frame)
    columns = feature_columns(include_received_power)
    missing = [c for c in columns + (TARGET_COLUMN,) if c not in frame.columns]
    if missing:
        raise SchemaError(missing=missing)

    encoded = encode_season_column(frame)
    features = encoded[list(columns)].to_numpy(dtype=np.float64)
    target = encoded[TARGET_COLUMN].to_numpy(dtype=np.float64)
    if not (np.all(np.isfinite(features)) and np.all(np.isfinite(target))):
        raise DomainError("dataset", "non-finite values", "finite features and target")
    return features, target, columns

@dataclass(frozen=True)
class TrainTestData:
    """Split and encoded arrays ready for the regressors."""
    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray
    feature_names: Tuple[str, ...]

@log_function_calls()
def prepare_training_data(
    frame: pd.DataFrame,
    train_fraction: float = 0.8,
    seed: int = 42,
    include_received_power: bool = False
) -> TrainTestData:
    """Drop ignored columns, encode seasons and split."""
    train, test = split(drop_ignored_columns(frame), train_fraction, seed)
    X_train, y_train, names = to_features(train, include_received_power)
    X_test, y_test, _ = to_features(test, include_received_power)
    logger.info(f"Prepared {len(y_train)} training and {len(y_test)} test rows with {len(names)} features")
    return TrainTestData(X_train=X_train, y_train=y_train, X_test=X_test, y_test=y_test, feature_names=names)

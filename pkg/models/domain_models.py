"""
Domain Models for the path-loss toolkit
Provides type-safe, immutable data structures using Pydantic for validation.
"""

import math
from datetime import datetime
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

CARRIER_FREQUENCIES_GHZ: Tuple[float, ...] = (7.125, 24.25, 52.6, 71.0)
CI_REFERENCE_DISTANCE_M = 1.0
SWEEP_DISTANCE_BOUNDS_M: Tuple[float, float] = (10.0, 500.0)
BREAKDOWN_TOLERANCE = 1e-12

Range = Tuple[float, float]

class Season(str, Enum):
    """The four seasonal weather regimes."""
    SPRING = "Spring"
    SUMMER = "Summer"
    FALL = "Fall"
    WINTER = "Winter"

# Profile order; label encoding uses alphabetical order instead.
SEASON_ORDER: Tuple[Season, ...] = (Season.SPRING, Season.SUMMER, Season.FALL, Season.WINTER)

class ValidationMode(str, Enum):
    """How Table-1 bound violations are treated."""
    STRICT = "strict"
    WARN = "warn"

def _check_range(name: str, value: Range) -> Range:
    low, high = value
    if low > high:
        raise ValueError(f"{name}: min > max ({low} > {high})")
    return (float(low), float(high))

class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

# ---------------------------------------------------------------------------
# atmosphere
# ---------------------------------------------------------------------------

class AtmosphericState(_Frozen):
    """One weather snapshot driving atmospheric attenuation."""
    temperature: float = Field(..., description="Air temperature (°C)")
    humidity: float = Field(..., ge=0.0, le=100.0, description="Relative humidity (%)")
    pressure: float = Field(..., gt=0.0, description="Barometric pressure (mbar)")
    rain_rate: float = Field(..., ge=0.0, description="Rain rate (mm/hr)")

class ValidationBounds(_Frozen):
    """Global bounds every state and season range must respect."""
    temperature: Range = (13.0, 40.0)
    humidity: Range = (2.0, 100.0)
    pressure: Range = (1000.0, 1013.0)
    rain_rate: Range = (0.2, 10.5)

    @field_validator("temperature", "humidity", "pressure", "rain_rate")
    @classmethod
    def ordered(cls, v, info):
        return _check_range(info.field_name, v)

    def as_dict(self) -> Dict[str, Range]:
        return {name: getattr(self, name) for name in ATMOSPHERE_FIELDS}

ATMOSPHERE_FIELDS: Tuple[str, ...] = ("temperature", "humidity", "pressure", "rain_rate")

class SeasonProfile(_Frozen):
    """Per-variable uniform sampling ranges for one season."""
    season: Season
    temperature: Range
    humidity: Range
    pressure: Range
    rain_rate: Range

    @field_validator("temperature", "humidity", "pressure", "rain_rate")
    @classmethod
    def ordered(cls, v, info):
        return _check_range(info.field_name, v)

    def ranges(self) -> Dict[str, Range]:
        return {name: getattr(self, name) for name in ATMOSPHERE_FIELDS}

class AttenuationBreakdown(_Frozen):
    """Per-mechanism specific attenuation and the total α."""
    gas: float = Field(..., ge=0.0, description="Gaseous absorption (dB/km)")
    rain: float = Field(..., ge=0.0, description="Rain attenuation (dB/km)")
    foliage: float = Field(..., ge=0.0, description="Foliage attenuation (dB/m)")
    total_alpha: float = Field(..., ge=0.0, description="Total specific attenuation (dB/m)")

    @model_validator(mode="after")
    def parts_sum_to_total(self):
        expected = (self.gas + self.rain) / 1000.0 + self.foliage
        if abs(self.total_alpha - expected) > BREAKDOWN_TOLERANCE:
            raise ValueError(f"total_alpha {self.total_alpha} != components {expected}")
        return self

    @classmethod
    def from_components(cls, gas: float, rain: float, foliage: float) -> "AttenuationBreakdown":
        return cls(gas=gas, rain=rain, foliage=foliage, total_alpha=(gas + rain) / 1000.0 + foliage)

class FrequencyCoefficients(_Frozen):
    """Coefficients of the parametric weather-to-attenuation model at one carrier."""
    freq_ghz: float = Field(..., gt=0.0)
    rain_k: float = Field(..., ge=0.0, description="Rain power-law k (dB/km)")
    rain_a: float = Field(..., gt=0.0, description="Rain power-law exponent")
    gas_g0: float = Field(..., ge=0.0, description="Gas baseline (dB/km)")
    gas_humidity: float = Field(0.0, ge=0.0, description="dB/km per % relative humidity")
    gas_temperature: float = Field(0.0, description="dB/km per °C above the reference temperature")

class AttenuationCoefficients(_Frozen):
    """The per-frequency coefficient table."""
    entries: Tuple[FrequencyCoefficients, ...]
    reference_temperature: float = 20.0
    interpolate: bool = False

    @field_validator("entries")
    @classmethod
    def unique_sorted(cls, v):
        freqs = [entry.freq_ghz for entry in v]
        if len(set(freqs)) != len(freqs):
            raise ValueError("duplicate frequency in coefficient table")
        return tuple(sorted(v, key=lambda entry: entry.freq_ghz))

    @property
    def frequencies(self) -> Tuple[float, ...]:
        return tuple(entry.freq_ghz for entry in self.entries)

# ---------------------------------------------------------------------------
# channel
# ---------------------------------------------------------------------------

class LinkGeometry(_Frozen):
    """One transmitter-receiver link."""
    distance: float = Field(..., ge=CI_REFERENCE_DISTANCE_M, description="3-D T-R separation (m)")
    base_station_height: float = Field(32.0, gt=0.0)
    user_height: float = Field(1.5, gt=0.0)
    tx_power: float = Field(30.0, description="Transmit power (dBm)")

class AntennaMetadata(_Frozen):
    """Radio settings recorded with a scenario. None of them changes the simulated channel."""
    channel_bandwidth_mhz: float = Field(800.0, gt=0.0)
    environment: str = "NLOS"
    polarization: str = "co-polarization"
    array_type: str = "ULA"
    n_tx_antennas: int = Field(1, ge=1)
    n_rx_antennas: int = Field(1, ge=1)
    azimuth_hpbw_deg: float = Field(10.0, gt=0.0, le=360.0)

class ChannelModelParams(_Frozen):
    """Parameters of the close-in path-loss model and its add-ons."""
    path_loss_exponent: float = Field(3.2, gt=0.0)
    shadow_sigma: float = Field(8.0, ge=0.0, description="Shadow fading standard deviation (dB)")
    human_blockage_enabled: bool = True
    human_blockage_mean: float = Field(14.4, ge=0.0, description="Added loss when blocked (dB)")
    human_blockage_probability: float = Field(0.2, ge=0.0, le=1.0)
    foliage_enabled: bool = False

class MultipathSettings(_Frozen):
    """Controls of the simplified multipath sampler."""
    n_paths_min: int = Field(1, ge=1)
    n_paths_max: int = Field(5, ge=1)
    delay_scale_ns: float = Field(50.0, gt=0.0)
    decay_db_per_ns: float = Field(0.05, ge=0.0)
    jitter_db: float = Field(3.0, ge=0.0, le=3.0)

    @model_validator(mode="after")
    def ordered(self):
        if self.n_paths_min > self.n_paths_max:
            raise ValueError("n_paths_min > n_paths_max")
        return self

class MultipathComponent(_Frozen):
    """One resolvable propagation path of a drop."""
    delay: float = Field(..., ge=0.0, description="Excess delay (ns)")
    relative_power: float = Field(..., le=0.0, description="Power relative to the strongest path (dB)")
    phase: float = Field(..., ge=0.0, lt=2 * math.pi, description="Phase (rad)")
    aod_azimuth: float = Field(..., ge=0.0, lt=360.0)
    aod_elevation: float = Field(..., ge=-90.0, le=90.0)
    aoa_azimuth: float = Field(..., ge=0.0, lt=360.0)
    aoa_elevation: float = Field(..., ge=-90.0, le=90.0)

class ChannelRecord(_Frozen):
    """One row of the channel dataset."""
    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    t_r_separation: float = Field(..., alias="T-R Separation Distance (m)")
    time_delay: float = Field(..., alias="Time Delay (ns)")
    received_power: float = Field(..., alias="Received Power (dBm)")
    phase: float = Field(..., alias="Phase (rad)")
    azimuth_aod: float = Field(..., alias="Azimuth AoD (degree)")
    elevation_aod: float = Field(..., alias="Elevation AoD (degree)")
    azimuth_aoa: float = Field(..., alias="Azimuth AoA (degree)")
    elevation_aoa: float = Field(..., alias="Elevation AoA (degree)")
    rms_delay_spread: float = Field(..., ge=0.0, alias="RMS Delay Spread (ns)")
    season: Season = Field(..., alias="Season")
    frequency: float = Field(..., alias="Frequency")
    path_loss: float = Field(..., alias="Path Loss (dB)")

    @field_validator("frequency")
    @classmethod
    def carrier(cls, v):
        if not any(math.isclose(v, f, rel_tol=0, abs_tol=1e-9) for f in CARRIER_FREQUENCIES_GHZ):
            raise ValueError(f"frequency {v} GHz is not one of {CARRIER_FREQUENCIES_GHZ}")
        return v

    def to_row(self) -> Dict[str, Any]:
        """Column-name keyed row with the season as its label."""
        row = self.model_dump(by_alias=True)
        row["Season"] = self.season.value
        return row

class SweepSettings(_Frozen):
    """The scenario grid."""
    frequencies: Tuple[float, ...] = CARRIER_FREQUENCIES_GHZ
    seasons: Tuple[Season, ...] = SEASON_ORDER
    dist_min: float = 10.0
    dist_max: float = 500.0
    dist_steps: int = Field(20, ge=0)
    drops_per_point: int = Field(3, ge=0)
    seed: int = 42

    @model_validator(mode="after")
    def within_bounds(self):
        low, high = SWEEP_DISTANCE_BOUNDS_M
        if not (low <= self.dist_min <= self.dist_max <= high):
            raise ValueError(f"distance grid must satisfy {low} <= dist_min <= dist_max <= {high}")
        return self

class ScenarioConfig(_Frozen):
    """Everything a sweep needs, as loaded from the scenario file."""
    version: int = 1
    validation: ValidationMode = ValidationMode.STRICT
    bounds: ValidationBounds = Field(default_factory=ValidationBounds)
    seasons: Tuple[SeasonProfile, ...]
    attenuation: AttenuationCoefficients
    channel: ChannelModelParams = Field(default_factory=ChannelModelParams)
    base_station_height: float = 32.0
    user_height: float = 1.5
    tx_power: float = 30.0
    multipath: MultipathSettings = Field(default_factory=MultipathSettings)
    sweep: SweepSettings = Field(default_factory=SweepSettings)
    antenna: AntennaMetadata = Field(default_factory=AntennaMetadata)

    def profile(self, season: Season) -> SeasonProfile:
        for profile in self.seasons:
            if profile.season == season:
                return profile
        raise KeyError(season)

    def geometry(self, distance: float) -> LinkGeometry:
        return LinkGeometry(
            distance=distance,
            base_station_height=self.base_station_height,
            user_height=self.user_height,
            tx_power=self.tx_power
        )

class PathLossBreakdown(_Frozen):
    """Term-by-term close-in path loss."""
    fspl: float
    distance_term: float
    atmospheric_term: float
    shadow: float
    total: float

# ---------------------------------------------------------------------------
# regression
# ---------------------------------------------------------------------------

class RegressorKind(str, Enum):
    """The nine benchmarked regressors."""
    LINEAR = "linear"
    ROBUST = "robust"
    RIDGE = "ridge"
    LASSO = "lasso"
    ELASTIC_NET = "elasticnet"
    POLYNOMIAL = "polynomial"
    SGD = "sgd"
    RANDOM_FOREST = "randomforest"
    SVM = "svm"

    @property
    def display_name(self) -> str:
        return _DISPLAY_NAMES[self]

_DISPLAY_NAMES = {
    RegressorKind.LINEAR: "Linear Regression",
    RegressorKind.ROBUST: "Robust Regression",
    RegressorKind.RIDGE: "Ridge Regression",
    RegressorKind.LASSO: "LASSO Regression",
    RegressorKind.ELASTIC_NET: "Elastic Net",
    RegressorKind.POLYNOMIAL: "Polynomial Regression",
    RegressorKind.SGD: "SGD",
    RegressorKind.RANDOM_FOREST: "RF Regressor",
    RegressorKind.SVM: "SVM Regressor",
}

class RegressorSpec(_Frozen):
    """One model kind with its hyperparameters."""
    kind: RegressorKind
    hyperparameters: Dict[str, Any] = Field(default_factory=dict)
    seed: int = 42

    @model_validator(mode="after")
    def documented_ranges(self):
        hp = self.hyperparameters
        checks = {
            "alpha": lambda v: v >= 0,
            "l2": lambda v: v >= 0,
            "degree": lambda v: int(v) >= 1,
            "n_estimators": lambda v: int(v) >= 1,
            "C": lambda v: v > 0,
            "epsilon": lambda v: v >= 0,
            "l1_ratio": lambda v: 0 <= v <= 1,
            "max_iter": lambda v: int(v) >= 1,
            "epochs": lambda v: int(v) >= 1,
            "eta0": lambda v: v > 0,
            "tol": lambda v: v > 0,
        }
        for name, ok in checks.items():
            if name not in hp or hp[name] is None:
                continue
            try:
                valid = ok(hp[name])
            except (TypeError, ValueError):
                valid = False
            if not valid:
                raise ValueError(f"{self.kind.value}.{name} = {hp[name]} is out of range")
        return self

class MetricsReport(_Frozen):
    """Regression error metrics for one model on one evaluation set."""
    mae: float = Field(..., ge=0.0)
    mse: float = Field(..., ge=0.0)
    rmse: float = Field(..., ge=0.0)
    r2: Optional[float] = Field(None, le=1.0)

    def as_row(self, decimals: int = 3) -> List[str]:
        cells = [self.mae, self.mse, self.rmse, self.r2]
        return ["-" if v is None else f"{v:.{decimals}f}" for v in cells]

class BenchmarkEntry(_Frozen):
    """Outcome of one model in a benchmark run."""
    kind: RegressorKind
    metrics: Optional[MetricsReport] = None
    error: Optional[Dict[str, Any]] = None
    fit_seconds: float = 0.0
    hyperparameters: Dict[str, Any] = Field(default_factory=dict)

    @property
    def display_name(self) -> str:
        return self.kind.display_name

    @property
    def succeeded(self) -> bool:
        return self.metrics is not None

class ReferenceStudy(_Frozen):
    """A prior study's reported metrics, rendered for comparison only."""
    citation: str
    description: str
    mae: Optional[float] = None
    mse: Optional[float] = None
    rmse: Optional[float] = None
    r2: Optional[float] = None

class BenchmarkResult(_Frozen):
    """All nine entries sorted by RMSE plus the fixed reference block."""
    entries: Tuple[BenchmarkEntry, ...]
    reference_studies: Tuple[ReferenceStudy, ...] = ()

    @property
    def best(self) -> Optional[BenchmarkEntry]:
        succeeded = [entry for entry in self.entries if entry.succeeded]
        return succeeded[0] if succeeded else None

# ---------------------------------------------------------------------------
# cli
# ---------------------------------------------------------------------------

class RunManifest(BaseModel):
    """Everything needed to reproduce one command invocation."""
    artifact_version: str
    command: str
    resolved_config: Dict[str, Any] = Field(default_factory=dict)
    master_seed: Optional[int] = None
    inputs: Dict[str, str] = Field(default_factory=dict)
    outputs: List[str] = Field(default_factory=list)
    started_at: datetime = Field(default_factory=datetime.now)
    finished_at: Optional[datetime] = None

class PlotSeries(_Frozen):
    """One line of a path-loss versus distance chart."""
    label: str
    x: Tuple[float, ...]
    y: Tuple[float, ...]
    spread: Tuple[float, ...]

    @model_validator(mode="after")
    def consistent(self):
        if not (len(self.x) == len(self.y) == len(self.spread)):
            raise ValueError("x, y and spread must have equal lengths")
        if any(b <= a for a, b in zip(self.x, self.x[1:])):
            raise ValueError("x values must be strictly increasing")
        return self

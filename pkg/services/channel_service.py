"""
Channel Simulation Service
Close-in path loss, shadow fading, a simplified multipath sampler and
per-drop channel record synthesis over a seasonal scenario grid.
"""

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config.settings import get_config
from core.exceptions import ConfigurationError, DomainError
from core.logging_system import get_simulation_logger, log_function_calls, log_performance
from models.domain_models import (
    CARRIER_FREQUENCIES_GHZ, CI_REFERENCE_DISTANCE_M, SEASON_ORDER, AttenuationCoefficients,
    ChannelModelParams, ChannelRecord, LinkGeometry, MultipathComponent, MultipathSettings,
    PathLossBreakdown, ScenarioConfig, SeasonProfile
)
from services.atmosphere_service import sample_atmosphere, specific_attenuation
from utils.rng_streams import substream

logger = get_simulation_logger()

FSPL_1M_CONSTANT_DB = 32.4
TWO_PI = 2.0 * math.pi

def fspl(freq_ghz: float) -> float:
    """Free-space path loss at the 1 m reference distance (dB)."""
    if freq_ghz <= 0:
        raise DomainError("frequency", freq_ghz, "f > 0 GHz")
    return FSPL_1M_CONSTANT_DB + 20.0 * math.log10(freq_ghz)

def path_loss_breakdown(
    freq_ghz: float,
    distance: float,
    path_loss_exponent: float,
    alpha: float,
    shadow_draw: float = 0.0
) -> PathLossBreakdown:
    """Term-by-term close-in path loss; `total` is the sum of the terms."""
    if distance < CI_REFERENCE_DISTANCE_M:
        raise DomainError("distance", distance, f"d >= {CI_REFERENCE_DISTANCE_M} m (CI reference distance)")
    if alpha < 0:
        raise DomainError("alpha", alpha, "alpha >= 0 dB/m")
    if path_loss_exponent <= 0:
        raise DomainError("path_loss_exponent", path_loss_exponent, "n > 0")

    free_space = fspl(freq_ghz)
    distance_term = 10.0 * path_loss_exponent * math.log10(distance)
    atmospheric_term = alpha * distance
    return PathLossBreakdown(
        fspl=free_space,
        distance_term=distance_term,
        atmospheric_term=atmospheric_term,
        shadow=shadow_draw,
        total=free_space + distance_term + atmospheric_term + shadow_draw
    )

def ci_path_loss(
    freq_ghz: float,
    distance: float,
    params: ChannelModelParams,
    alpha: float,
    shadow_draw: float = 0.0
) -> float:
    """
    Close-in path loss (dB).

    PL = FSPL(f) + 10 n log10(d) + alpha d + shadow, with d in metres and
    alpha the total specific attenuation in dB/m.
    """
    return path_loss_breakdown(freq_ghz, distance, params.path_loss_exponent, alpha, shadow_draw).total

def rms_delay_spread(components: Sequence[MultipathComponent]) -> float:
    """Power-weighted standard deviation of the path delays (ns)."""
    if not components:
        raise DomainError("components", 0, "at least one multipath component")

    delays = np.array([c.delay for c in components], dtype=float)
    powers_db = np.array([c.relative_power for c in components], dtype=float)
    weights = 10.0 ** ((powers_db - powers_db.max()) / 10.0)
    weights /= weights.sum()

    mean_delay = np.dot(weights, delays)
    return float(math.sqrt(max(0.0, float(np.dot(weights, (delays - mean_delay) ** 2)))))

def sample_multipath(
    rng: np.random.Generator,
    n_paths_range: Tuple[int, int],
    delay_scale: float,
    decay: float,
    jitter_db: float = 3.0
) -> List[MultipathComponent]:
    """
    Draw the resolvable paths of one drop.

    The first path arrives at delay 0; the remaining excess delays are
    exponential with mean `delay_scale`. Powers fall off by `decay` dB/ns
    plus uniform jitter and are renormalized so the strongest path is 0 dB.
    """
    low, high = n_paths_range
    if not 1 <= low <= high:
        raise DomainError("n_paths_range", n_paths_range, "1 <= min <= max")
    if delay_scale <= 0:
        raise DomainError("delay_scale", delay_scale, "> 0 ns")
    if decay < 0:
        raise DomainError("decay", decay, ">= 0 dB/ns")

    n_paths = int(rng.integers(low, high + 1))
    delays = np.concatenate([[0.0], np.sort(rng.exponential(delay_scale, size=n_paths - 1))])
    powers = -decay * delays + rng.uniform(-jitter_db, jitter_db, size=n_paths)
    powers = powers - powers.max()
    phases = np.mod(rng.uniform(0.0, TWO_PI, size=n_paths), TWO_PI)
    aod_azimuth = np.mod(rng.uniform(0.0, 360.0, size=n_paths), 360.0)
    aod_elevation = rng.uniform(-90.0, 90.0, size=n_paths)
    aoa_azimuth = np.mod(rng.uniform(0.0, 360.0, size=n_paths), 360.0)
    aoa_elevation = rng.uniform(-90.0, 90.0, size=n_paths)

    return [
        MultipathComponent(
            delay=float(delays[i]),
            relative_power=float(min(0.0, powers[i])),
            phase=float(phases[i]),
            aod_azimuth=float(aod_azimuth[i]),
            aod_elevation=float(aod_elevation[i]),
            aoa_azimuth=float(aoa_azimuth[i]),
            aoa_elevation=float(aoa_elevation[i])
        )
        for i in range(n_paths)
    ]

def simulate_drop(
    geometry: LinkGeometry,
    params: ChannelModelParams,
    freq_ghz: float,
    season: SeasonProfile,
    coeffs: AttenuationCoefficients,
    rng: np.random.Generator,
    multipath: Optional[MultipathSettings] = None
) -> List[ChannelRecord]:
    """
    One receiver placement: weather, path loss and its multipath rows.

    The stream is consumed in a fixed order (weather, shadow, blockage,
    multipath) whether or not shadowing or blockage are enabled, so drops with
    the same stream stay comparable across parameter changes.
    """
    multipath = multipath or MultipathSettings()

    state = sample_atmosphere(season, rng)
    attenuation = specific_attenuation(freq_ghz, state, coeffs, params.foliage_enabled)
    shadow = params.shadow_sigma * float(rng.standard_normal())
    blocked = float(rng.random()) < params.human_blockage_probability and params.human_blockage_enabled
    paths = sample_multipath(
        rng,
        (multipath.n_paths_min, multipath.n_paths_max),
        multipath.delay_scale_ns,
        multipath.decay_db_per_ns,
        multipath.jitter_db
    )

    path_loss = ci_path_loss(freq_ghz, geometry.distance, params, attenuation.total_alpha, shadow)
    if blocked:
        path_loss += params.human_blockage_mean

    received = [geometry.tx_power - path_loss + path.relative_power for path in paths]
    path_loss_column = geometry.tx_power - max(received)
    spread = rms_delay_spread(paths)

    return [
        ChannelRecord(
            t_r_separation=geometry.distance,
            time_delay=path.delay,
            received_power=power,
            phase=path.phase,
            azimuth_aod=path.aod_azimuth,
            elevation_aod=path.aod_elevation,
            azimuth_aoa=path.aoa_azimuth,
            elevation_aoa=path.aoa_elevation,
            rms_delay_spread=spread,
            season=season.season,
            frequency=freq_ghz,
            path_loss=path_loss_column
        )
        for path, power in zip(paths, received)
    ]

def distance_grid(scenario: ScenarioConfig) -> np.ndarray:
    sweep = scenario.sweep
    return np.linspace(sweep.dist_min, sweep.dist_max, sweep.dist_steps)

class ScenarioSimulator:
    """Runs scenario sweeps and keeps simple run statistics."""

    def __init__(self):
        self._lock = threading.Lock()
        self._stats = {"sweeps": 0, "drops": 0, "records": 0}
        logger.info("Scenario simulator initialized")

    def _validate_grid(self, scenario: ScenarioConfig):
        sweep = scenario.sweep
        if not sweep.frequencies or not sweep.seasons or sweep.dist_steps < 1 or sweep.drops_per_point < 1:
            raise ConfigurationError(
                "sweep",
                f"empty grid ({len(sweep.seasons)} seasons x {len(sweep.frequencies)} frequencies x "
                f"{sweep.dist_steps} distances x {sweep.drops_per_point} drops)"
            )
        for freq in sweep.frequencies:
            if not any(math.isclose(freq, f, rel_tol=0.0, abs_tol=1e-9) for f in CARRIER_FREQUENCIES_GHZ):
                raise ConfigurationError("sweep.frequencies", f"{freq} GHz is not one of {CARRIER_FREQUENCIES_GHZ}")
        if len(set(sweep.seasons)) != len(sweep.seasons):
            raise ConfigurationError("sweep.seasons", "duplicate season")

    def _work_items(self, scenario: ScenarioConfig) -> List[Tuple[int, float, int, float, int]]:
        sweep = scenario.sweep
        seasons = sorted(sweep.seasons, key=SEASON_ORDER.index)
        distances = distance_grid(scenario)
        return [
            (SEASON_ORDER.index(season), float(freq), dist_idx, float(distance), drop_idx)
            for season in seasons
            for freq in sorted(sweep.frequencies)
            for dist_idx, distance in enumerate(distances)
            for drop_idx in range(sweep.drops_per_point)
        ]

    def _run_item(self, scenario: ScenarioConfig, item) -> List[Tuple[tuple, ChannelRecord]]:
        season_idx, freq, dist_idx, distance, drop_idx = item
        season = SEASON_ORDER[season_idx]
        rng = substream(scenario.sweep.seed, season.value, freq, dist_idx, drop_idx)
        records = simulate_drop(
            scenario.geometry(distance),
            scenario.channel,
            freq,
            scenario.profile(season),
            scenario.attenuation,
            rng,
            scenario.multipath
        )
        return [((season_idx, freq, distance, drop_idx, record.time_delay), record) for record in records]

    @log_function_calls()
    @log_performance(threshold_seconds=30.0)
    def sweep(self, scenario: ScenarioConfig, n_workers: Optional[int] = None) -> List[ChannelRecord]:
        """
        Simulate every (season, frequency, distance, drop) point of the grid.

        Args:
            scenario: Validated scenario
            n_workers: Worker threads; the configured default when omitted

        Returns:
            Records in canonical order (season, frequency, distance, drop, delay)
        """
        self._validate_grid(scenario)
        n_workers = n_workers or get_config().simulation.n_workers
        items = self._work_items(scenario)
        logger.info(f"Sweeping {len(items)} drops with {n_workers} worker(s), seed {scenario.sweep.seed}")

        if n_workers > 1:
            with ThreadPoolExecutor(max_workers=n_workers) as pool:
                chunks = list(pool.map(lambda item: self._run_item(scenario, item), items))
        else:
            chunks = [self._run_item(scenario, item) for item in items]

        keyed = [pair for chunk in chunks for pair in chunk]
        keyed.sort(key=lambda pair: pair[0])
        records = [record for _, record in keyed]

        with self._lock:
            self._stats["sweeps"] += 1
            self._stats["drops"] += len(items)
            self._stats["records"] += len(records)

        logger.info(f"Sweep produced {len(records)} records")
        return records

    def get_statistics(self) -> Dict[str, Any]:
        with self._lock:
            return dict(self._stats)

_channel_service: Optional[ScenarioSimulator] = None

def get_channel_service() -> ScenarioSimulator:
    """Get the global scenario simulator."""
    global _channel_service
    if _channel_service is None:
        _channel_service = ScenarioSimulator()
    return _channel_service

def sweep_scenario(scenario: ScenarioConfig, n_workers: Optional[int] = None) -> List[ChannelRecord]:
    """Convenience function to run a sweep with the global simulator."""
    return get_channel_service().sweep(scenario, n_workers)

"""
Atmosphere Service
Seasonal weather profiles and conversion of a weather state into specific attenuation.
"""

import math
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from config.scenario_loader import load_scenario
from core.exceptions import DomainError, UnsupportedFrequencyError
from core.logging_system import get_logger
from models.domain_models import (
    ATMOSPHERE_FIELDS, AtmosphericState, AttenuationBreakdown, AttenuationCoefficients,
    FrequencyCoefficients, SeasonProfile
)

logger = get_logger(__name__)

FOLIAGE_ATTENUATION_DB_PER_M = 0.4
FREQUENCY_MATCH_TOLERANCE_GHZ = 1e-9

def load_season_profiles(config_path: Optional[Union[str, Path]] = None) -> List[SeasonProfile]:
    """
    Load the four season profiles.

    Args:
        config_path: Scenario file; the bundled default when omitted

    Returns:
        Profiles in the order Spring, Summer, Fall, Winter
    """
    return list(load_scenario(config_path).seasons)

def sample_atmosphere(profile: SeasonProfile, rng: np.random.Generator) -> AtmosphericState:
    """Draw each weather variable uniformly and independently from its season range."""
    values = {}
    for name in ATMOSPHERE_FIELDS:
        low, high = getattr(profile, name)
        values[name] = float(rng.uniform(low, high))
    return AtmosphericState(**values)

def resolve_coefficients(freq_ghz: float, coeffs: AttenuationCoefficients) -> FrequencyCoefficients:
    """
    Coefficients for one carrier.

    Exact table match by default; with interpolation enabled, every coefficient
    is interpolated linearly in log10(frequency) between the bracketing entries.
    """
    for entry in coeffs.entries:
        if math.isclose(entry.freq_ghz, freq_ghz, rel_tol=0.0, abs_tol=FREQUENCY_MATCH_TOLERANCE_GHZ):
            return entry

    freqs = coeffs.frequencies
    if not coeffs.interpolate or not freqs or not (freqs[0] < freq_ghz < freqs[-1]):
        raise UnsupportedFrequencyError(freq_ghz, freqs)

    log_freqs = np.log10(freqs)
    target = np.log10(freq_ghz)

    def interp(field: str) -> float:
        return float(np.interp(target, log_freqs, [getattr(entry, field) for entry in coeffs.entries]))

    logger.debug(f"Interpolating attenuation coefficients at {freq_ghz} GHz")
    return FrequencyCoefficients(
        freq_ghz=freq_ghz,
        rain_k=interp("rain_k"),
        rain_a=interp("rain_a"),
        gas_g0=interp("gas_g0"),
        gas_humidity=interp("gas_humidity"),
        gas_temperature=interp("gas_temperature")
    )

def specific_attenuation(
    freq_ghz: float,
    state: AtmosphericState,
    coeffs: AttenuationCoefficients,
    foliage_enabled: bool = False
) -> AttenuationBreakdown:
    """
    Per-mechanism specific attenuation for one weather state.

    Args:
        freq_ghz: Carrier frequency (GHz)
        state: Weather snapshot
        coeffs: Coefficient table
        foliage_enabled: Add the fixed foliage term

    Returns:
        AttenuationBreakdown with gas and rain in dB/km, foliage and total_alpha in dB/m
    """
    if freq_ghz <= 0:
        raise DomainError("frequency", freq_ghz, "f > 0 GHz")

    entry = resolve_coefficients(freq_ghz, coeffs)
    rain = entry.rain_k * state.rain_rate ** entry.rain_a
    gas = max(
        0.0,
        entry.gas_g0
        + entry.gas_humidity * state.humidity
        + entry.gas_temperature * (state.temperature - coeffs.reference_temperature)
    )
    foliage = FOLIAGE_ATTENUATION_DB_PER_M if foliage_enabled else 0.0
    return AttenuationBreakdown.from_components(gas=gas, rain=rain, foliage=foliage)

"""Season sampling, specific attenuation and the rain coefficient regression."""

import math

import numpy as np
import pytest
from pydantic import ValidationError as PydanticValidationError

from core.exceptions import DomainError, UnsupportedFrequencyError
from models.domain_models import (
    AtmosphericState, AttenuationBreakdown, AttenuationCoefficients, FrequencyCoefficients, Season, SeasonProfile
)
from services.atmosphere_service import (
    FOLIAGE_ATTENUATION_DB_PER_M, load_season_profiles, resolve_coefficients, sample_atmosphere,
    specific_attenuation
)
from utils.itu_rain import Polarization, coefficient_table, p838_coefficients
from utils.rng_streams import derive_seed, get_rng, substream

def _state(temperature=20.0, humidity=50.0, pressure=1008.0, rain_rate=0.0):
    return AtmosphericState(temperature=temperature, humidity=humidity, pressure=pressure, rain_rate=rain_rate)

def _table(interpolate=False):
    return AttenuationCoefficients(
        entries=(
            FrequencyCoefficients(freq_ghz=10.0, rain_k=0.01, rain_a=1.2, gas_g0=0.01, gas_humidity=0.0, gas_temperature=0.0),
            FrequencyCoefficients(freq_ghz=100.0, rain_k=1.0, rain_a=0.8, gas_g0=0.21, gas_humidity=0.002,
                                  gas_temperature=-0.01),
        ),
        interpolate=interpolate
    )

class TestSeasonProfiles:

    def test_load_returns_four_profiles(self):
        profiles = load_season_profiles()
        assert [p.season for p in profiles] == [Season.SPRING, Season.SUMMER, Season.FALL, Season.WINTER]

    def test_samples_stay_in_range(self):
        profile = load_season_profiles()[1]
        rng = get_rng(3)
        for _ in range(500):
            state = sample_atmosphere(profile, rng)
            for name, (low, high) in profile.ranges().items():
                assert low <= getattr(state, name) <= high

    def test_degenerate_range_returns_the_point(self):
        profile = SeasonProfile(season=Season.WINTER, temperature=(15.0, 15.0), humidity=(30.0, 30.0),
                                pressure=(1010.0, 1010.0), rain_rate=(0.5, 0.5))
        state = sample_atmosphere(profile, get_rng(0))
        assert state == _state(15.0, 30.0, 1010.0, 0.5)

    def test_min_above_max_rejected(self):
        with pytest.raises(PydanticValidationError, match="min > max"):
            SeasonProfile(season=Season.FALL, temperature=(30.0, 18.0), humidity=(45.0, 85.0),
                          pressure=(1003.0, 1011.0), rain_rate=(0.5, 5.0))

    def test_sampling_is_seed_deterministic(self):
        profile = load_season_profiles()[0]
        assert sample_atmosphere(profile, get_rng(11)) == sample_atmosphere(profile, get_rng(11))

    def test_sample_mean_near_range_midpoint(self):
        profile = load_season_profiles()[2]
        rng = get_rng(5)
        samples = [sample_atmosphere(profile, rng) for _ in range(10_000)]
        for name, (low, high) in profile.ranges().items():
            mean = np.mean([getattr(s, name) for s in samples])
            assert abs(mean - (low + high) / 2) <= 0.02 * (high - low)

class TestSpecificAttenuation:

    def test_dry_clear_air_gives_gas_baseline_only(self, scenario):
        breakdown = specific_attenuation(7.125, _state(humidity=0.0, rain_rate=0.0), scenario.attenuation)
        assert breakdown.rain == 0.0
        assert breakdown.gas == pytest.approx(0.0065)
        assert breakdown.total_alpha == pytest.approx(0.0065 / 1000.0)

    def test_rain_power_law(self):
        breakdown = specific_attenuation(100.0, _state(rain_rate=16.0), _table())
        assert breakdown.rain == pytest.approx(1.0 * 16.0 ** 0.8)

    def test_total_is_sum_of_parts(self, scenario):
        breakdown = specific_attenuation(52.6, _state(30.0, 90.0, 1002.0, 8.0), scenario.attenuation, True)
        expected = (breakdown.gas + breakdown.rain) / 1000.0 + breakdown.foliage
        assert abs(breakdown.total_alpha - expected) <= 1e-12

    def test_foliage_adds_fixed_term(self, scenario):
        state = _state(rain_rate=2.0)
        without = specific_attenuation(24.25, state, scenario.attenuation)
        with_foliage = specific_attenuation(24.25, state, scenario.attenuation, foliage_enabled=True)
        assert with_foliage.foliage == FOLIAGE_ATTENUATION_DB_PER_M
        assert with_foliage.total_alpha - without.total_alpha == pytest.approx(0.4)

    def test_gas_is_clamped_at_zero(self):
        table = AttenuationCoefficients(entries=(FrequencyCoefficients(
            freq_ghz=52.6, rain_k=0.7, rain_a=0.8, gas_g0=0.1, gas_humidity=0.0, gas_temperature=-0.05),))
        breakdown = specific_attenuation(52.6, _state(temperature=40.0), table)
        assert breakdown.gas == 0.0

    def test_monotone_in_rain_rate(self, scenario):
        for freq in scenario.attenuation.frequencies:
            alphas = [specific_attenuation(freq, _state(rain_rate=r), scenario.attenuation).total_alpha
                      for r in (0.2, 1.0, 5.0, 10.5)]
            assert alphas == sorted(alphas)

    def test_monotone_in_humidity(self, scenario):
        for freq in scenario.attenuation.frequencies:
            alphas = [specific_attenuation(freq, _state(humidity=h), scenario.attenuation).total_alpha
                      for h in np.linspace(2.0, 100.0, 50)]
            assert all(a <= b for a, b in zip(alphas, alphas[1:]))

    def test_random_states_give_nonnegative_alpha_ordered_by_rain(self, scenario):
        rng = np.random.default_rng(12)
        bounds = scenario.bounds.as_dict()
        for _ in range(1000):
            values = {name: rng.uniform(low, high) for name, (low, high) in bounds.items()}
            freq = float(rng.choice(scenario.attenuation.frequencies))
            wetter = dict(values, rain_rate=min(values["rain_rate"] + rng.uniform(0.0, 5.0), 10.5))
            dry = specific_attenuation(freq, AtmosphericState(**values), scenario.attenuation)
            wet = specific_attenuation(freq, AtmosphericState(**wetter), scenario.attenuation)
            assert dry.total_alpha >= 0.0
            assert wet.total_alpha >= dry.total_alpha

    def test_zero_coefficients_give_zero_alpha(self):
        table = AttenuationCoefficients(entries=(FrequencyCoefficients(
            freq_ghz=24.25, rain_k=0.0, rain_a=1.0, gas_g0=0.0, gas_humidity=0.0, gas_temperature=0.0),))
        rng = np.random.default_rng(13)
        for _ in range(100):
            state = _state(rng.uniform(13.0, 40.0), rng.uniform(2.0, 100.0), rng.uniform(1000.0, 1013.0),
                           rng.uniform(0.2, 10.5))
            assert specific_attenuation(24.25, state, table).total_alpha == 0.0

    def test_rain_grows_with_frequency_at_fixed_rate(self, scenario):
        rains = [specific_attenuation(f, _state(rain_rate=5.0), scenario.attenuation).rain
                 for f in scenario.attenuation.frequencies]
        assert rains == sorted(rains)

    def test_nonpositive_frequency(self, scenario):
        with pytest.raises(DomainError):
            specific_attenuation(0.0, _state(), scenario.attenuation)

    def test_untabulated_frequency(self, scenario):
        with pytest.raises(UnsupportedFrequencyError, match="28 GHz"):
            specific_attenuation(28.0, _state(), scenario.attenuation)

    def test_interpolation_in_log_frequency(self):
        entry = resolve_coefficients(math.sqrt(10.0 * 100.0), _table(interpolate=True))
        assert entry.rain_k == pytest.approx(0.505)
        assert entry.gas_g0 == pytest.approx(0.11)

    def test_interpolation_does_not_extrapolate(self):
        with pytest.raises(UnsupportedFrequencyError):
            resolve_coefficients(200.0, _table(interpolate=True))

    def test_breakdown_rejects_inconsistent_total(self):
        with pytest.raises(PydanticValidationError):
            AttenuationBreakdown(gas=1.0, rain=1.0, foliage=0.0, total_alpha=0.5)

    def test_weather_state_bounds(self):
        with pytest.raises(PydanticValidationError):
            _state(humidity=120.0)
        with pytest.raises(PydanticValidationError):
            _state(rain_rate=-1.0)

class TestRainCoefficients:

    @pytest.mark.parametrize("freq, k, a", [
        (10.0, 0.01217, 1.2571),
        (20.0, 0.09164, 1.0568),
        (30.0, 0.2403, 0.9485),
    ])
    def test_horizontal_reference_values(self, freq, k, a):
        k_h, a_h = p838_coefficients(freq, Polarization.HORIZONTAL)
        assert k_h == pytest.approx(k, rel=0.01)
        assert a_h == pytest.approx(a, abs=0.005)

    def test_circular_lies_between_linear_polarizations(self):
        k_h, _ = p838_coefficients(30.0, Polarization.HORIZONTAL)
        k_v, _ = p838_coefficients(30.0, Polarization.VERTICAL)
        k_c, _ = p838_coefficients(30.0, Polarization.CIRCULAR)
        assert min(k_h, k_v) <= k_c <= max(k_h, k_v)

    def test_bundled_table_matches_regression(self, scenario):
        rows = coefficient_table(scenario.attenuation.frequencies)
        for row, entry in zip(rows, scenario.attenuation.entries):
            assert row["rain_k"] == pytest.approx(entry.rain_k, rel=0.01)
            assert row["rain_a"] == pytest.approx(entry.rain_a, abs=0.005)

    def test_outside_validity_range(self):
        with pytest.raises(DomainError):
            p838_coefficients(0.5)

class TestRandomStreams:

    def test_same_key_same_stream(self):
        a = substream(42, "Winter", 7.125, 0, 0).random(5)
        b = substream(42, "Winter", 7.125, 0, 0).random(5)
        np.testing.assert_array_equal(a, b)

    def test_key_parts_are_not_interchangeable(self):
        assert derive_seed(42, 1, 23) != derive_seed(42, 12, 3)
        assert derive_seed(42, "Winter") != derive_seed(43, "Winter")

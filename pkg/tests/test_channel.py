"""Close-in path loss, multipath sampling and scenario sweeps."""

import math

import numpy as np
import pytest

from core.exceptions import ConfigurationError, DomainError
from models.domain_models import (
    ChannelModelParams, LinkGeometry, MultipathComponent, MultipathSettings, Season, SeasonProfile
)
from services.atmosphere_service import sample_atmosphere, specific_attenuation
from services.channel_service import (
    ci_path_loss, distance_grid, fspl, get_channel_service, path_loss_breakdown, rms_delay_spread,
    sample_multipath, simulate_drop, sweep_scenario
)
from services.orchestrator import apply_overrides
from utils.rng_streams import get_rng

NO_SHADOW = ChannelModelParams(shadow_sigma=0.0, human_blockage_enabled=False)

def _component(delay, power):
    return MultipathComponent(delay=delay, relative_power=power, phase=0.0, aod_azimuth=0.0,
                              aod_elevation=0.0, aoa_azimuth=0.0, aoa_elevation=0.0)

class TestPathLoss:

    def test_reference_point(self):
        assert ci_path_loss(1.0, 1.0, NO_SHADOW, alpha=0.0) == pytest.approx(32.4, abs=1e-12)

    def test_known_value(self):
        # 32.4 + 20 log10(7.125) + 32 log10(100)
        assert ci_path_loss(7.125, 100.0, NO_SHADOW, alpha=0.0) == pytest.approx(113.456, abs=1e-3)

    def test_breakdown_terms_sum_to_total(self):
        breakdown = path_loss_breakdown(52.6, 237.0, 3.2, 0.004, shadow_draw=-2.5)
        parts = breakdown.fspl + breakdown.distance_term + breakdown.atmospheric_term + breakdown.shadow
        assert abs(breakdown.total - parts) <= 1e-9

    def test_decade_of_distance_adds_ten_n(self):
        near = ci_path_loss(24.25, 10.0, NO_SHADOW, alpha=0.0)
        far = ci_path_loss(24.25, 100.0, NO_SHADOW, alpha=0.0)
        assert far - near == pytest.approx(10.0 * NO_SHADOW.path_loss_exponent)

    def test_monotone_in_distance_and_frequency(self):
        distances = [10.0, 50.0, 200.0, 500.0]
        losses = [ci_path_loss(71.0, d, NO_SHADOW, alpha=0.01) for d in distances]
        assert losses == sorted(losses)
        assert fspl(7.125) < fspl(24.25) < fspl(52.6) < fspl(71.0)

    def test_decade_slope_with_attenuation(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            freq, d = rng.uniform(1.0, 100.0), rng.uniform(1.0, 50.0)
            n, alpha = rng.uniform(1.5, 5.0), rng.uniform(0.0, 0.05)
            near = path_loss_breakdown(freq, d, n, alpha).total
            far = path_loss_breakdown(freq, 10.0 * d, n, alpha).total
            assert abs((far - near) - (10.0 * n + 9.0 * alpha * d)) <= 1e-9

    def test_carriers_ordered_at_every_distance(self):
        carriers = (7.125, 24.25, 52.6, 71.0)
        for d in np.linspace(10.0, 500.0, 50):
            losses = [ci_path_loss(f, d, NO_SHADOW, alpha=0.003) for f in carriers]
            assert all(a < b for a, b in zip(losses, losses[1:]))

    def test_atmospheric_term_is_alpha_times_distance(self):
        breakdown = path_loss_breakdown(24.25, 300.0, 3.2, alpha=0.002)
        assert breakdown.atmospheric_term == pytest.approx(0.6)

    @pytest.mark.parametrize("freq, distance, alpha", [
        (0.0, 10.0, 0.0),
        (-5.0, 10.0, 0.0),
        (7.125, 0.5, 0.0),
        (7.125, 10.0, -0.1),
    ])
    def test_domain_errors(self, freq, distance, alpha):
        with pytest.raises(DomainError):
            path_loss_breakdown(freq, distance, 3.2, alpha)

class TestMultipath:

    def test_first_path_is_strongest_at_zero_delay(self):
        rng = get_rng(1)
        for _ in range(50):
            paths = sample_multipath(rng, (1, 5), 50.0, 0.05)
            assert paths[0].delay == 0.0
            assert max(p.relative_power for p in paths) == 0.0
            assert 1 <= len(paths) <= 5

    def test_delays_sorted(self):
        paths = sample_multipath(get_rng(2), (5, 5), 50.0, 0.05)
        delays = [p.delay for p in paths]
        assert delays == sorted(delays)

    def test_angles_and_phases_in_range(self):
        for path in sample_multipath(get_rng(3), (5, 5), 50.0, 0.05):
            assert 0.0 <= path.phase < 2 * math.pi
            assert 0.0 <= path.aod_azimuth < 360.0 and 0.0 <= path.aoa_azimuth < 360.0
            assert -90.0 <= path.aod_elevation <= 90.0 and -90.0 <= path.aoa_elevation <= 90.0

    def test_bad_path_range(self):
        with pytest.raises(DomainError):
            sample_multipath(get_rng(0), (3, 2), 50.0, 0.05)

    def test_rms_delay_spread_single_path(self):
        assert rms_delay_spread([_component(0.0, 0.0)]) == 0.0

    def test_rms_delay_spread_two_equal_paths(self):
        # equal weights at 0 and 100 ns: mean 50, spread 50
        assert rms_delay_spread([_component(0.0, 0.0), _component(100.0, 0.0)]) == pytest.approx(50.0)

    def test_rms_delay_spread_weighting(self):
        # -10 dB second path: weights 1/1.1 and 0.1/1.1
        spread = rms_delay_spread([_component(0.0, 0.0), _component(100.0, -10.0)])
        p = 0.1 / 1.1
        assert spread == pytest.approx(100.0 * math.sqrt(p * (1 - p)))

    def test_rms_delay_spread_invariances(self):
        paths = sample_multipath(get_rng(8), (5, 5), 50.0, 0.05)
        spread = rms_delay_spread(paths)
        shifted = [p.model_copy(update={"relative_power": p.relative_power - 7.0}) for p in paths]
        assert rms_delay_spread(shifted) == pytest.approx(spread, rel=1e-12)
        assert rms_delay_spread(list(reversed(paths))) == pytest.approx(spread, rel=1e-12)

    def test_rms_delay_spread_empty(self):
        with pytest.raises(DomainError):
            rms_delay_spread([])

    def test_rms_delay_spread_oracle(self):
        # linear powers (1, 1, 2): mean delay 62.5 ns, second moment 5625 ns²
        half = 10.0 * math.log10(0.5)
        paths = [_component(0.0, half), _component(50.0, half), _component(100.0, 0.0)]
        assert rms_delay_spread(paths) == pytest.approx(41.458, abs=1e-3)

    def test_excess_delays_have_the_configured_mean(self):
        rng = get_rng(9)
        excess = [p.delay for _ in range(2000) for p in sample_multipath(rng, (10, 10), 50.0, 0.05)[1:]]
        assert len(excess) == 18_000
        assert np.mean(excess) == pytest.approx(50.0, abs=2.0)

class TestSimulateDrop:

    def test_single_path_rows(self, scenario):
        geometry = LinkGeometry(distance=100.0)
        records = simulate_drop(geometry, NO_SHADOW, 7.125, scenario.profile(Season.WINTER), scenario.attenuation,
                                get_rng(4), MultipathSettings(n_paths_min=1, n_paths_max=1))
        assert len(records) == 1
        record = records[0]
        assert record.time_delay == 0.0
        assert record.rms_delay_spread == 0.0
        assert record.received_power == pytest.approx(geometry.tx_power - record.path_loss)

    def test_path_loss_matches_close_in_model_without_randomness(self, scenario):
        records = simulate_drop(LinkGeometry(distance=100.0), NO_SHADOW, 7.125, scenario.profile(Season.WINTER),
                                scenario.attenuation, get_rng(5), MultipathSettings(n_paths_min=1, n_paths_max=1))
        # winter alpha at 7.125 GHz is well under 1e-4 dB/m
        assert records[0].path_loss == pytest.approx(113.456, abs=0.01)

    def test_rows_share_drop_values(self, scenario):
        records = simulate_drop(LinkGeometry(distance=250.0), scenario.channel, 52.6,
                                scenario.profile(Season.SUMMER), scenario.attenuation, get_rng(6),
                                MultipathSettings(n_paths_min=4, n_paths_max=4))
        assert len({r.path_loss for r in records}) == 1
        assert len({r.rms_delay_spread for r in records}) == 1
        strongest = max(r.received_power for r in records)
        assert strongest == pytest.approx(scenario.tx_power - records[0].path_loss)

    def test_certain_blockage_adds_mean_loss(self, scenario):
        blocked = ChannelModelParams(shadow_sigma=0.0, human_blockage_probability=1.0)
        single = MultipathSettings(n_paths_min=1, n_paths_max=1)
        args = (LinkGeometry(distance=100.0),)
        base = simulate_drop(*args, NO_SHADOW, 24.25, scenario.profile(Season.FALL), scenario.attenuation,
                             get_rng(7), single)[0]
        with_blockage = simulate_drop(*args, blocked, 24.25, scenario.profile(Season.FALL), scenario.attenuation,
                                      get_rng(7), single)[0]
        assert with_blockage.path_loss - base.path_loss == pytest.approx(blocked.human_blockage_mean)

    @pytest.mark.slow
    def test_shadow_fading_statistics(self, scenario):
        params = ChannelModelParams(shadow_sigma=8.0, human_blockage_enabled=False)
        calm = SeasonProfile(season=Season.WINTER, temperature=(20.0, 20.0), humidity=(50.0, 50.0),
                             pressure=(1008.0, 1008.0), rain_rate=(1.0, 1.0))
        alpha = specific_attenuation(24.25, sample_atmosphere(calm, get_rng(0)), scenario.attenuation).total_alpha
        baseline = ci_path_loss(24.25, 100.0, params, alpha)
        single = MultipathSettings(n_paths_min=1, n_paths_max=1)
        rng = get_rng(10)
        shadows = np.array([
            simulate_drop(LinkGeometry(distance=100.0), params, 24.25, calm, scenario.attenuation, rng, single)[0]
            .path_loss - baseline
            for _ in range(100_000)
        ])
        assert abs(shadows.mean()) <= 0.1
        assert shadows.std() == pytest.approx(8.0, abs=0.08)

class TestSweep:

    def test_row_counts_and_grid(self, small_scenario):
        records = sweep_scenario(small_scenario)
        drops = 1 * 2 * 3 * 2
        delay_zero = [r for r in records if r.time_delay == 0.0]
        assert len(delay_zero) == drops
        assert drops <= len(records) <= 5 * drops
        assert {r.frequency for r in records} == {7.125, 52.6}
        assert {r.season for r in records} == {Season.WINTER}
        np.testing.assert_allclose(sorted({r.t_r_separation for r in records}), [10.0, 55.0, 100.0])

    def test_same_seed_same_records(self, small_scenario):
        assert sweep_scenario(small_scenario) == sweep_scenario(small_scenario)

    def test_worker_count_does_not_change_output(self, small_scenario):
        assert sweep_scenario(small_scenario, n_workers=1) == sweep_scenario(small_scenario, n_workers=4)

    def test_different_seed_changes_output(self, small_scenario):
        other = apply_overrides(small_scenario, sweep={"seed": 8})
        assert sweep_scenario(small_scenario) != sweep_scenario(other)

    def test_canonical_order(self, small_scenario):
        records = sweep_scenario(small_scenario)
        keys = [(r.frequency, r.t_r_separation) for r in records]
        assert keys == sorted(keys)

    def test_grid_point_independent_of_other_points(self, small_scenario):
        # dropping a frequency leaves the remaining points' draws unchanged
        full = sweep_scenario(small_scenario)
        reduced = sweep_scenario(apply_overrides(small_scenario, sweep={"frequencies": (7.125,)}))
        assert reduced == [r for r in full if r.frequency == 7.125]

    def test_empty_grid_rejected(self, small_scenario):
        empty = apply_overrides(small_scenario, sweep={"drops_per_point": 0})
        with pytest.raises(ConfigurationError, match="empty grid"):
            sweep_scenario(empty)

    def test_non_carrier_frequency_rejected(self, small_scenario):
        odd = apply_overrides(small_scenario, sweep={"frequencies": (28.0,)})
        with pytest.raises(ConfigurationError, match="28.0 GHz"):
            sweep_scenario(odd)

    def test_distance_grid_endpoints(self, scenario):
        grid = distance_grid(scenario)
        assert grid[0] == 10.0 and grid[-1] == 500.0
        assert len(grid) == scenario.sweep.dist_steps

    def test_default_scenario_size(self, scenario):
        # published dataset has 2835 rows
        rows = len(sweep_scenario(scenario))
        assert 0.9 * 2835 <= rows <= 1.1 * 2835

    def test_statistics_count_sweeps(self, small_scenario):
        service = get_channel_service()
        before = service.get_statistics()["sweeps"]
        sweep_scenario(small_scenario)
        assert service.get_statistics()["sweeps"] == before + 1

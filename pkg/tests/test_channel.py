"""Path sampling statistics and index-bin behavior."""

import numpy as np
import pytest

from otfslink.channel import (
    ChannelProfile,
    doppler_index_from_speed,
    sample_channel,
)
from otfslink.errors import ConfigError


def make_rng(seed):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


class TestChannelProfile:
    def test_bin_count(self):
        assert ChannelProfile(paths=2, l_max=3, k_max=5).bin_count == 4 * 11
        assert ChannelProfile(paths=1, l_max=0, k_max=0).bin_count == 1

    def test_validation(self):
        with pytest.raises(ConfigError):
            ChannelProfile(paths=0, l_max=1, k_max=1)
        with pytest.raises(ConfigError):
            ChannelProfile(paths=1, l_max=-1, k_max=0)
        with pytest.raises(ConfigError):
            ChannelProfile(paths=1, l_max=0, k_max=-2)
        with pytest.raises(ConfigError):
            # 2 paths cannot occupy 1 bin without replacement
            ChannelProfile(paths=2, l_max=0, k_max=0)

    def test_replacement_profile_allows_fewer_bins(self):
        prof = ChannelProfile(paths=4, l_max=0, k_max=0, distinct_bins=False)
        real = sample_channel(prof, make_rng(0))
        assert real.paths == 4


class TestSampleChannel:
    def test_index_ranges(self):
        prof = ChannelProfile(paths=5, l_max=3, k_max=4)
        rng = make_rng(1)
        for _ in range(200):
            real = sample_channel(prof, rng)
            assert np.all(real.delays >= 0) and np.all(real.delays <= 3)
            assert np.all(np.abs(real.dopplers) <= 4)

    def test_distinct_bins_are_distinct(self):
        prof = ChannelProfile(paths=6, l_max=2, k_max=1)  # 9 bins, 6 paths
        rng = make_rng(2)
        for _ in range(300):
            real = sample_channel(prof, rng)
            pairs = set(zip(real.delays.tolist(), real.dopplers.tolist()))
            assert len(pairs) == 6

    def test_unit_total_power(self):
        # single Rayleigh path: E[|h|^2] = 1.0 +/- 0.02 over 1e5 draws
        prof = ChannelProfile(paths=1, l_max=0, k_max=0)
        rng = make_rng(3)
        acc = 0.0
        draws = 100000
        for _ in range(draws):
            acc += float(np.abs(sample_channel(prof, rng).gains[0]) ** 2)
        assert acc / draws == pytest.approx(1.0, abs=0.02)

    def test_per_path_variance_scales_inverse_p(self):
        prof = ChannelProfile(paths=4, l_max=1, k_max=1)
        rng = make_rng(4)
        sq = np.zeros(4)
        draws = 20000
        for _ in range(draws):
            sq += np.abs(sample_channel(prof, rng).gains) ** 2
        assert np.allclose(sq / draws, 0.25, atol=0.02)

    def test_rician_mean_offset(self):
        mu = 0.4 - 0.3j
        prof = ChannelProfile(paths=2, l_max=1, k_max=1, mean=mu)
        rng = make_rng(5)
        acc = np.zeros(2, dtype=complex)
        draws = 20000
        for _ in range(draws):
            acc += sample_channel(prof, rng).gains
        assert np.allclose(acc / draws, mu, atol=0.03)

    def test_seed_determinism(self):
        prof = ChannelProfile(paths=3, l_max=2, k_max=2)
        a, b = make_rng(9), make_rng(9)
        for _ in range(10):
            ra, rb = sample_channel(prof, a), sample_channel(prof, b)
            assert np.array_equal(ra.gains, rb.gains)
            assert np.array_equal(ra.delays, rb.delays)
            assert np.array_equal(ra.dopplers, rb.dopplers)

    def test_gain_dtype_and_shape(self):
        real = sample_channel(ChannelProfile(paths=3, l_max=2, k_max=2), make_rng(6))
        assert real.gains.shape == (3,)
        assert real.gains.dtype == complex
        assert real.delays.shape == (3,)


class TestDopplerIndexFromSpeed:
    def test_reference_value(self):
        # 500 km/h at 4 GHz: f_d = (500/3.6)*4e9/c = 1852.8 Hz;
        # bin width 15000/128 = 117.19 Hz -> round(15.81) = 16
        k = doppler_index_from_speed(500.0, 4e9, 128, 15000.0)
        assert k == 16

    def test_zero_speed(self):
        assert doppler_index_from_speed(0.0, 4e9, 64, 15000.0) == 0

    def test_scales_linearly_before_rounding(self):
        k1 = doppler_index_from_speed(100.0, 4e9, 1024, 15000.0)
        k2 = doppler_index_from_speed(200.0, 4e9, 1024, 15000.0)
        assert abs(k2 - 2 * k1) <= 1

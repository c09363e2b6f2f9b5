"""Delay-Doppler channel sampling and physical-parameter conversion.

Path gains are i.i.d. complex Gaussian with mean `mean` (zero for
Rayleigh) and variance 1/P (1/(2P) per real dimension), so the average
received path power sums to one. Delay indices are uniform over
[0, l_max], Doppler indices uniform over [-k_max, k_max]; with
`distinct_bins` the P (delay, Doppler) pairs are drawn without
replacement so no two paths collapse onto one resolvable bin.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError

SPEED_OF_LIGHT = 299792458.0


@dataclass(frozen=True)
class ChannelProfile:
    """Statistical description of the sampled channels.

    Parameters
    ----------
    paths : int
        Number of propagation paths P (>= 1).
    l_max : int
        Largest delay index, inclusive.
    k_max : int
        Largest absolute Doppler index; indices span [-k_max, k_max].
    mean : complex
        Common mean of every path gain; 0 gives Rayleigh fading,
        nonzero gives Rician fading.
    distinct_bins : bool
        Sample the P index pairs without replacement (default). With
        False, indices are drawn independently and may repeat.
    """

    paths: int
    l_max: int
    k_max: int
    mean: complex = 0.0
    distinct_bins: bool = True

    def __post_init__(self):
        if self.paths < 1:
            raise ConfigError(f"paths must be >= 1, got {self.paths}", key="paths")
        if self.l_max < 0:
            raise ConfigError(f"l_max must be >= 0, got {self.l_max}", key="l_max")
        if self.k_max < 0:
            raise ConfigError(f"k_max must be >= 0, got {self.k_max}", key="k_max")
        if self.distinct_bins and self.paths > self.bin_count:
            raise ConfigError(
                f"cannot draw {self.paths} distinct bins from "
                f"(l_max+1)*(2*k_max+1)={self.bin_count}",
                key="paths",
            )

    @property
    def bin_count(self):
        return (self.l_max + 1) * (2 * self.k_max + 1)


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """One sampled channel: P complex gains and their integer indices."""

    gains: np.ndarray
    delays: np.ndarray
    dopplers: np.ndarray

    def __post_init__(self):
        if not (len(self.gains) == len(self.delays) == len(self.dopplers)):
            raise DimensionError("gains, delays and dopplers must have equal length")

    @property
    def paths(self):
        return len(self.gains)


def sample_channel(profile, rng):
    """Draw one ChannelRealization.

    Draw order is fixed (indices first, then gains) so a given generator
    state always yields the same realization. Bin enumeration for the
    distinct draw is delay-major with Doppler ascending from -k_max.
    """
    p = profile.paths
    if profile.distinct_bins:
        flat = rng.choice(profile.bin_count, size=p, replace=False)
        width = 2 * profile.k_max + 1
        delays = flat // width
        dopplers = flat % width - profile.k_max
    else:
        delays = rng.integers(0, profile.l_max + 1, size=p)
        dopplers = rng.integers(-profile.k_max, profile.k_max + 1, size=p)
    sigma = np.sqrt(1.0 / (2.0 * p))
    gains = profile.mean + sigma * (rng.standard_normal(p) + 1j * rng.standard_normal(p))
    return ChannelRealization(
        gains=gains, delays=np.asarray(delays, dtype=int), dopplers=np.asarray(dopplers, dtype=int)
    )


def doppler_index_from_speed(speed_kmh, carrier_hz, n, delta_f):
    """Largest Doppler index produced by a given mobile speed.

    k_max = round(nu_max * N * T) with nu_max = (v/c) * f_c and
    T = 1/delta_f.
    """
    if speed_kmh < 0 or carrier_hz <= 0 or n < 1 or delta_f <= 0:
        raise ConfigError("speed must be >= 0; carrier, n, delta_f must be positive")
    v = speed_kmh * 1000.0 / 3600.0
    nu_max = v / SPEED_OF_LIGHT * carrier_hz
    return int(round(nu_max * n / delta_f))

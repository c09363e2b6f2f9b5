"""Delay-Doppler transceiver primitives.

Grid transforms between the delay-Doppler and time-frequency planes,
BPSK mapping, and the vectorized transmit relation y = H x + w with
complex AWGN of total variance N0 per sample.

The M x N delay-Doppler matrix X holds delay along rows and Doppler
along columns; its vectorization is column-major (delay index fastest),
matching the per-delay-bin DFT structure of the channel operators.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError
from .ddmatrix import dft_matrix, effective_channel


@dataclass(frozen=True)
class NoiseSpec:
    """Symbol energy and one-sided noise density.

    n0 == 0 designates a noiseless run; transmit() then adds nothing.
    """

    es: float
    n0: float

    def __post_init__(self):
        if self.es <= 0:
            raise ConfigError(f"es must be positive, got {self.es}", key="es")
        if self.n0 < 0:
            raise ConfigError(f"n0 must be >= 0, got {self.n0}", key="snr_db")

    @classmethod
    def from_snr_db(cls, snr_db, es=1.0):
        """snr_db = 10*log10(es/n0); snr_db = inf gives a noiseless spec."""
        if np.isinf(snr_db) and snr_db > 0:
            return cls(es=es, n0=0.0)
        return cls(es=es, n0=es / 10.0 ** (snr_db / 10.0))

    @property
    def snr_db(self):
        return np.inf if self.n0 == 0 else 10.0 * np.log10(self.es / self.n0)


def _check_grid_shape(grid, x):
    if x.shape != (grid.m, grid.n):
        raise DimensionError(f"expected {grid.m} x {grid.n} grid, got {x.shape}")


def isfft(grid, x_dd):
    """Delay-Doppler grid -> time-frequency grid.

    Output entry (m, n) = (1/sqrt(NM)) * sum_{l,k} x[l,k] *
    exp(j*2*pi*(n*k/N - m*l/M)); implemented as F_M @ X @ F_N^H, a
    unitary map.
    """
    x_dd = np.asarray(x_dd, dtype=complex)
    _check_grid_shape(grid, x_dd)
    return dft_matrix(grid.m) @ x_dd @ dft_matrix(grid.n).conj().T


def sfft(grid, y_tf):
    """Time-frequency grid -> delay-Doppler grid; exact inverse of isfft."""
    y_tf = np.asarray(y_tf, dtype=complex)
    _check_grid_shape(grid, y_tf)
    return dft_matrix(grid.m).conj().T @ y_tf @ dft_matrix(grid.n)


def bpsk_map(bits, es=1.0):
    """Map bits to +/- sqrt(es): bit 0 -> +sqrt(es), bit 1 -> -sqrt(es)."""
    bits = np.asarray(bits)
    return np.sqrt(es) * (1.0 - 2.0 * bits.astype(float)) + 0.0j


def bpsk_demap(symbols):
    """Hard sign decision, ties to bit 0; inverse of bpsk_map when noiseless."""
    return (np.real(np.asarray(symbols)) < 0).astype(int)


def noise_sample(mn, noise, rng):
    """Draw MN complex AWGN samples of total variance n0 each
    (n0/2 per real dimension). Returns zeros when n0 == 0."""
    if noise.n0 == 0:
        return np.zeros(mn, dtype=complex)
    sigma = np.sqrt(noise.n0 / 2.0)
    return sigma * (rng.standard_normal(mn) + 1j * rng.standard_normal(mn))


def transmit(grid, x, chan, noise, rng):
    """Pass a vectorized frame through a channel realization and add
    AWGN: y = H x + w with H the effective delay-Doppler matrix of
    `chan`. The noise draw consumes exactly 2*MN normal variates
    (`noise_sample`), or none when n0 == 0."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (grid.mn,):
        raise DimensionError(f"frame must have length {grid.mn}, got {x.shape}")
    heff = effective_channel(grid, chan.gains, chan.delays, chan.dopplers)
    return heff @ x + noise_sample(grid.mn, noise, rng)

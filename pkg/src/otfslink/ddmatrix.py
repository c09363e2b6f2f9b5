"""Structured matrices of the discrete delay-Doppler system model.

Everything here is exact dense linear algebra on an M*N grid: the unitary
DFT factor, cyclic delay shifts, Doppler phase ramps, the per-path
delay-Doppler operator, the effective channel matrix, the per-path image
matrix of a transmit vector, and the Hermitian Gram matrix of an error
sequence together with its eigen-spectrum.

All functions are pure and deterministic; none mutate their inputs.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigError,
    ContractViolationError,
    DimensionError,
    NumericalError,
)

# Hard size limit for dense construction (desk scale).
MAX_GRID_SIZE = 4096

# Relative zero threshold for eigenvalues of nonnegative definite Grams.
RANK_TOL = 1e-9


@dataclass(frozen=True)
class OtfsGrid:
    """Dimensioning of the delay-Doppler grid.

    Parameters
    ----------
    m : int
        Number of delay bins (subcarriers). Must be >= 1.
    n : int
        Number of Doppler bins (time slots). Must be >= 1.
    delta_f : float
        Subcarrier spacing in Hz. Informational; index arithmetic is
        integer-only.
    """

    m: int
    n: int
    delta_f: float = 15000.0

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ConfigError(f"grid dimensions must be >= 1, got m={self.m} n={self.n}")
        if self.m * self.n > MAX_GRID_SIZE:
            raise ConfigError(
                f"grid size m*n={self.m * self.n} exceeds the hard limit {MAX_GRID_SIZE}"
            )
        if self.delta_f <= 0:
            raise ConfigError(f"delta_f must be positive, got {self.delta_f}")

    @property
    def mn(self):
        return self.m * self.n

    @property
    def slot_duration(self):
        """Symbol duration T = 1/delta_f in seconds."""
        return 1.0 / self.delta_f

    @property
    def delay_resolution(self):
        """Delay bin width 1/(M*delta_f) in seconds."""
        return 1.0 / (self.m * self.delta_f)

    @property
    def doppler_resolution(self):
        """Doppler bin width delta_f/N in Hz."""
        return self.delta_f / self.n


def dft_matrix(n):
    """Unitary n x n DFT matrix, entry (a, b) = exp(-j*2*pi*a*b/n)/sqrt(n)."""
    if n < 1:
        raise DimensionError(f"DFT size must be >= 1, got {n}")
    a = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(a, a) / n) / np.sqrt(n)


def time_to_dd_map(grid):
    """Unitary map (DFT across time slots, per delay bin) between the
    time-domain and delay-Doppler vectorizations: F_N kron I_M."""
    return np.kron(dft_matrix(grid.n), np.eye(grid.m))


def permutation_power(grid, l):
    """l-th power of the forward cyclic shift on MN samples.

    The shift moves basis vector e_c to e_{c+1 mod MN}; l is reduced
    modulo MN, so any integer is accepted.
    """
    mn = grid.mn
    l = int(l) % mn
    p = np.zeros((mn, mn))
    p[(np.arange(mn) + l) % mn, np.arange(mn)] = 1.0
    return p


def phase_diag_power(grid, k):
    """k-th power of the Doppler phase ramp diag{z^0, z^1, ..., z^{MN-1}}
    with z = exp(j*2*pi/MN); k may be negative."""
    mn = grid.mn
    # exact integer exponents of z avoid phase drift for large |k|
    exponents = (int(k) * np.arange(mn)) % mn
    return np.diag(np.exp(2j * np.pi * exponents / mn))


def _check_indices(grid, delays, dopplers):
    delays = np.asarray(delays, dtype=int)
    dopplers = np.asarray(dopplers, dtype=int)
    if delays.shape != dopplers.shape or delays.ndim != 1:
        raise DimensionError("delays and dopplers must be 1-D and equally long")
    if delays.size == 0:
        raise DimensionError("at least one path is required")
    if np.any(delays < 0) or np.any(delays >= grid.mn):
        raise ConfigError(f"delay indices must lie in [0, {grid.mn - 1}]", key="l_max")
    if np.any(np.abs(dopplers) > grid.mn):
        raise ConfigError(f"Doppler indices must lie in [-{grid.mn}, {grid.mn}]", key="k_max")
    return delays, dopplers


def path_operator(grid, delay, doppler):
    """Unitary single-path operator in the delay-Doppler domain:
    (F_N kron I_M) shift^delay phase^doppler (F_N kron I_M)^H."""
    u = time_to_dd_map(grid)
    t = permutation_power(grid, delay) @ phase_diag_power(grid, doppler)
    return u @ t @ u.conj().T


def time_domain_channel(grid, gains, delays, dopplers):
    """Time-domain channel operator sum_i h_i shift^{l_i} phase^{k_i}.

    This is the operator shared by the delay-Doppler and the
    multicarrier (OFDM) front ends; each conjugates it by its own
    unitary transform.
    """
    delays, dopplers = _check_indices(grid, delays, dopplers)
    gains = np.asarray(gains, dtype=complex)
    if gains.shape != delays.shape:
        raise DimensionError("gains must match the number of paths")
    mn = grid.mn
    cols = np.arange(mn)
    t = np.zeros((mn, mn), dtype=complex)
    for h, l, k in zip(gains, delays, dopplers):
        phase = np.exp(2j * np.pi * ((int(k) * cols) % mn) / mn)
        t[(cols + int(l)) % mn, cols] += h * phase
    return t


def effective_channel(grid, gains, delays, dopplers):
    """Effective MN x MN delay-Doppler channel: sum_i h_i * path_operator_i.

    Linear in the gains; raises ConfigError for out-of-range indices.
    """
    delays, dopplers = _check_indices(grid, delays, dopplers)
    gains = np.asarray(gains, dtype=complex)
    if gains.shape != delays.shape:
        raise DimensionError("gains must match the number of paths")
    h = np.zeros((grid.mn, grid.mn), dtype=complex)
    for g, l, k in zip(gains, delays, dopplers):
        h += g * path_operator(grid, l, k)
    return h


def path_image_matrix(grid, x, delays, dopplers):
    """MN x P matrix whose column i is the i-th path operator applied to x.

    Satisfies path_image_matrix(grid, x, ...) @ h == effective_channel @ x
    for every gain vector h. Columns are computed through the factored
    form (transform, shift+phase, inverse transform) which is exact and
    avoids building each dense operator.
    """
    delays, dopplers = _check_indices(grid, delays, dopplers)
    x = np.asarray(x, dtype=complex)
    mn = grid.mn
    if x.shape != (mn,):
        raise DimensionError(f"x must have length {mn}, got shape {x.shape}")
    u = time_to_dd_map(grid)
    v = u.conj().T @ x
    idx = np.arange(mn)
    cols = np.empty((mn, delays.size), dtype=complex)
    for i, (l, k) in enumerate(zip(delays, dopplers)):
        w = v * np.exp(2j * np.pi * ((int(k) * idx) % mn) / mn)
        cols[:, i] = np.roll(w, int(l))
    return u @ cols


def hermitian_eig(a, tol=1e-12, max_sweeps=100):
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    a : (p, p) complex ndarray
        Hermitian within 1e-10 (entrywise, relative to the largest entry).
    tol : float
        Convergence threshold on the off-diagonal Frobenius norm,
        relative to max(1, ||a||_F).
    max_sweeps : int
        Safety limit on full cyclic sweeps.

    Returns
    -------
    (w, v) : eigenvalues sorted descending (real ndarray) and the matching
        unitary eigenvector matrix (columns).

    Each rotation factors the (p, q) pivot's phase into a diagonal unitary
    and applies the classical real rotation, so the update rule stays the
    textbook one. Deterministic: identical inputs give bit-identical
    output.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"square matrix required, got shape {a.shape}")
    scale = max(1.0, float(np.abs(a).max()) if a.size else 0.0)
    if float(np.abs(a - a.conj().T).max()) > 1e-10 * scale:
        raise ContractViolationError("matrix is not Hermitian within 1e-10")
    p = a.shape[0]
    w = a.copy()
    v = np.eye(p, dtype=complex)
    thresh = tol * max(1.0, float(np.linalg.norm(a)))

    def offnorm(m):
        # direct sum over off-diagonal entries; the ||m||^2 - ||diag||^2
        # form cancels catastrophically near convergence
        od = m.copy()
        np.fill_diagonal(od, 0.0)
        return float(np.linalg.norm(od))

    for _ in range(max_sweeps):
        if offnorm(w) <= thresh:
            break
        for i in range(p - 1):
            for j in range(i + 1, p):
                m = abs(w[i, j])
                if m <= thresh / max(1, p):
                    continue
                phi = np.angle(w[i, j])
                ph = np.exp(-1j * phi)
                tau = (w[j, j].real - w[i, i].real) / (2.0 * m)
                if tau >= 0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = 1.0 / (tau - np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # columns: (i, j) <- (c*ci - s*ph*cj, s*ci + c*ph*cj)
                ci, cj = w[:, i].copy(), w[:, j].copy()
                w[:, i] = c * ci - s * ph * cj
                w[:, j] = s * ci + c * ph * cj
                ri, rj = w[i, :].copy(), w[j, :].copy()
                w[i, :] = c * ri - s * np.conj(ph) * rj
                w[j, :] = s * ri + c * np.conj(ph) * rj
                vi, vj = v[:, i].copy(), v[:, j].copy()
                v[:, i] = c * vi - s * ph * vj
                v[:, j] = s * vi + c * ph * vj
    if offnorm(w) > thresh:
        raise NumericalError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")

    vals = np.real(np.diag(w))
    order = np.argsort(-vals, kind="stable")
    return vals[order], v[:, order]


@dataclass(frozen=True, eq=False)
class CodewordDifferenceMatrix:
    """Hermitian Gram matrix of an error sequence's per-path images.

    Attributes
    ----------
    matrix : (p, p) complex ndarray
        The Gram matrix itself; entry (i, j) is e^H Op_i^H Op_j e.
    eigenvalues : (p,) real ndarray
        Nonnegative, sorted descending; values in [-1e-9, 0) are clipped
        to zero.
    eigenvectors : (p, p) complex ndarray
        Columns matching `eigenvalues`.
    rank : int
        Count of eigenvalues above the relative zero threshold.
    d_e2 : float
        Squared Euclidean norm of the generating error sequence.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    rank: int
    d_e2: float

    @property
    def p(self):
        return self.matrix.shape[0]

    @property
    def full_rank(self):
        return self.rank == self.p


def codeword_difference(grid, err, delays, dopplers):
    """Build the codeword difference Gram matrix of an error sequence.

    Parameters
    ----------
    grid : OtfsGrid
    err : (MN,) complex vector
        Difference of two transmit vectors (for BPSK, entries in
        {0, +/-2*sqrt(Es)}); any complex vector is accepted.
    delays, dopplers : (P,) integer vectors

    Returns
    -------
    CodewordDifferenceMatrix
    """
    err = np.asarray(err, dtype=complex)
    phi = path_image_matrix(grid, err, delays, dopplers)
    omega = phi.conj().T @ phi
    omega = 0.5 * (omega + omega.conj().T)  # kill roundoff asymmetry
    vals, vecs = hermitian_eig(omega)
    if vals.size and vals[-1] < -1e-9:
        raise NumericalError(
            f"Gram matrix produced eigenvalue {vals[-1]:.3e} below the -1e-9 floor"
        )
    vals = np.where(vals < 0.0, 0.0, vals)
    top = vals[0] if vals.size else 0.0
    rank = int(np.sum(vals > RANK_TOL * max(top, 1.0)))
    d_e2 = float(np.real(np.vdot(err, err)))
    return CodewordDifferenceMatrix(
        matrix=omega, eigenvalues=vals, eigenvectors=vecs, rank=rank, d_e2=d_e2
    )

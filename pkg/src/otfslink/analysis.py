"""Bound computations and spectral diagnostics on codeword difference
Gram matrices: conditional and unconditional pairwise-error bounds,
coding-gain bound and numerically averaged conditional coding gains,
determinant/trace/eigenvalue floor checks, the large-path-count Gaussian
approximation, and the condition-number diagnostic.

Conventions: `gram` is a ddmatrix.CodewordDifferenceMatrix; the SNR
parameter entering every bound is gamma = es/(4*n0).
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .ddmatrix import OtfsGrid, path_operator
from .errors import ConfigError, RankDeficientError

# relative slack for asserting exact inequalities in floating point
REL_SLACK = 1e-9


def _gamma(noise):
    return noise.es / (4.0 * noise.n0) if noise.n0 > 0 else np.inf


def _require_full_rank(gram, what):
    if not gram.full_rank:
        raise RankDeficientError(
            f"{what} requires a full-rank Gram matrix (rank {gram.rank} of {gram.p})",
            rank=gram.rank,
        )


def conditional_pep_bound(gram, gains, noise):
    """Upper bound on the pairwise error probability given the channel:
    exp(-gamma * h^H G h). Equals exp(-gamma * sum_i l_i |ht_i|^2) in
    the eigenbasis."""
    gains = np.asarray(gains, dtype=complex)
    quad = float(np.real(gains.conj() @ gram.matrix @ gains))
    g = _gamma(noise)
    if g == np.inf:
        return 0.0 if quad > 0 else 1.0
    return math.exp(-g * quad)


def rician_factors(gram, mean):
    """Per-eigendirection Rician factors K_i = |E[h]^H v_i|^2 with
    E[h] = mean * ones."""
    ones = np.full(gram.p, mean, dtype=complex)
    return np.abs(ones.conj() @ gram.eigenvectors) ** 2


def unconditional_pep_rician(gram, noise, k_factors):
    """Channel-averaged pairwise error bound for Rician taps:
    prod_i 1/(1+g*l_i/P) * exp(-K_i*g*l_i/P / (1+g*l_i/P)).

    Zero eigenvalues contribute unit factors, so rank deficiency only
    truncates the product.
    """
    k = np.broadcast_to(np.asarray(k_factors, dtype=float), (gram.p,))
    g = _gamma(noise)
    lam = gram.eigenvalues
    scaled = g * lam / gram.p
    return float(np.prod(np.exp(-k * scaled / (1.0 + scaled)) / (1.0 + scaled)))


def unconditional_pep_rayleigh(gram, noise):
    """High-SNR determinant form of the Rayleigh-averaged bound:
    det(G)^-1 * (es/(4*n0*P))^-P. Requires full rank; the exact
    product form is unconditional_pep_rician with zero K."""
    _require_full_rank(gram, "Rayleigh determinant bound")
    g = _gamma(noise)
    log_det = float(np.sum(np.log(gram.eigenvalues)))
    return math.exp(-log_det - gram.p * math.log(g / gram.p))


def coding_gain_bound(d_e2, p):
    """Universal coding-gain ceiling d_e2/p.

    Returns (linear, dB).
    """
    if d_e2 <= 0 or p < 1:
        raise ConfigError(f"need d_e2 > 0 and p >= 1, got {d_e2}, {p}")
    lin = d_e2 / p
    return lin, 10.0 * math.log10(lin)


def conditional_coding_gain(gram):
    """Realized coding gain of one Gram matrix: det(G)^(1/P) / P,
    computed from the eigenvalue product. Raises RankDeficientError
    when singular."""
    _require_full_rank(gram, "conditional coding gain")
    return math.exp(float(np.mean(np.log(gram.eigenvalues)))) / gram.p


def determinant_lower_bound(gram):
    """Exact determinant floor (d_e2)^P * exp(P - d_e2 * tr(G^-1)).

    Returns (floor_value, holds). Equality iff the Gram is diagonal.
    """
    _require_full_rank(gram, "determinant floor")
    lam = gram.eigenvalues
    tr_inv = float(np.sum(1.0 / lam))
    log_rhs = gram.p * math.log(gram.d_e2) + (gram.p - gram.d_e2 * tr_inv)
    log_det = float(np.sum(np.log(lam)))
    holds = log_det >= log_rhs - REL_SLACK * max(1.0, abs(log_rhs))
    return math.exp(log_rhs), holds


def trace_inverse_bound(gram):
    """Trace-of-inverse floor: tr(G^-1) >= P/d_e2, equality iff diagonal.

    Returns (tr_inv, floor, holds).
    """
    _require_full_rank(gram, "trace-inverse floor")
    tr_inv = float(np.sum(1.0 / gram.eigenvalues))
    floor = gram.p / gram.d_e2
    return tr_inv, floor, tr_inv >= floor * (1.0 - REL_SLACK)


def eigen_square_sum_bound(gram):
    """Eigenvalue square-sum floor: sum l_i^2 >= P * (d_e2)^2, equality
    iff all eigenvalues coincide.

    Returns (sum_sq, floor, holds).
    """
    sum_sq = float(np.sum(gram.eigenvalues**2))
    floor = gram.p * gram.d_e2**2
    return sum_sq, floor, sum_sq >= floor * (1.0 - REL_SLACK)


def p_condition_number(gram):
    """Spectral conditioning diagnostic l_max/l_min >= 1."""
    _require_full_rank(gram, "condition number")
    lam = gram.eigenvalues
    return float(lam[0] / lam[-1])


def qfunc(x):
    """Gaussian tail probability Q(x)."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def gaussian_moments(gram, k_factors):
    """Mean and variance of the Gaussian surrogate for the weighted
    fading power: mu = sum l_i (1 + K_i), var = sum l_i^2 (1 + 2 K_i)."""
    k = np.broadcast_to(np.asarray(k_factors, dtype=float), (gram.p,))
    lam = gram.eigenvalues
    return float(np.sum(lam * (1.0 + k))), float(np.sum(lam**2 * (1.0 + 2.0 * k)))


def rician_gauss_bound(gram, noise, k_factors):
    """General Gaussian-approximation bound
    exp(g^2 var/(2 P^2) - g mu/P) * Q(g sqrt(var)/P - mu/sqrt(var))."""
    mu, var = gaussian_moments(gram, k_factors)
    if var <= 0:
        raise RankDeficientError("all-zero spectrum", rank=0)
    g = _gamma(noise)
    sd = math.sqrt(var)
    log_pref = 0.5 * g * g * var / gram.p**2 - g * mu / gram.p
    q = qfunc(g * sd / gram.p - mu / sd)
    return math.exp(log_pref) * q if q > 0 else 0.0


@dataclass(frozen=True)
class LargePBound:
    """Rayleigh large-path-count bound pair.

    gauss_bound : Chernoff-closed Gaussian approximation
        exp(-(sum l)^2 / (2 sum l^2)), SNR-free.
    simple_bound : exp(-gamma * d_e2 / 2) evaluated at the supplied SNR.
    threshold : smallest gamma for which the simplification is valid,
        P * sum(l) / sum(l^2); never exceeds P/d_e2.
    condition_met : whether the supplied SNR satisfies gamma >= threshold.
    """

    gauss_bound: float
    simple_bound: float
    threshold: float
    condition_met: bool


def large_p_pep_bound(gram, noise):
    """Evaluate the Rayleigh Gaussian-approximation bound and its
    SNR-form simplification at the supplied noise level."""
    lam = gram.eigenvalues
    s1 = float(np.sum(lam))
    s2 = float(np.sum(lam**2))
    if s2 <= 0:
        raise RankDeficientError("all-zero spectrum", rank=0)
    g = _gamma(noise)
    gauss = math.exp(-s1 * s1 / (2.0 * s2))
    simple = math.exp(-g * gram.d_e2 / 2.0) if g < np.inf else 0.0
    threshold = gram.p * s1 / s2
    return LargePBound(
        gauss_bound=gauss,
        simple_bound=simple,
        threshold=threshold,
        condition_met=g >= threshold * (1.0 - 1e-12),
    )


def diagonal_gram_example(p, m=2):
    """Inputs whose Gram matrix is exactly d_e2 * I: a single-bin error
    sequence, one shared delay, and Doppler indices pairwise distinct
    modulo N = p. Returns (grid, err, delays, dopplers)."""
    if p < 1:
        raise ConfigError(f"p must be >= 1, got {p}")
    grid = OtfsGrid(m, p)
    err = np.zeros(grid.mn, dtype=complex)
    err[0] = 2.0
    delays = np.zeros(p, dtype=int)
    dopplers = np.arange(p) - p // 2
    return grid, err, delays, dopplers


@dataclass(frozen=True)
class GainPoint:
    """One averaged-coding-gain record (CSV row of the gain sweep)."""

    d_e2: int
    p: int
    l_max: int
    k_max: int
    avg_gain_db: float
    bound_db: float
    cases: int
    excluded: int


def _bin_table(l_max, k_max):
    return [(l, k) for l in range(l_max + 1) for k in range(-k_max, k_max + 1)]


def _stacked_operators(grid, bins):
    return np.stack([path_operator(grid, l, k) for l, k in bins])


def _gains_from_grams(om, p):
    """(cases, p, p) Hermitian stack -> (full-rank gains, excluded count).

    Bulk path uses batched LAPACK eigenvalues; the scalar API route
    (codeword_difference + Jacobi) is cross-checked against this in the
    test suite.
    """
    vals = np.linalg.eigvalsh(om)
    lam_min = vals[:, 0]
    lam_max = vals[:, -1]
    ok = lam_min > 1e-9 * np.maximum(lam_max, 1.0)
    n_excl = int(np.sum(~ok))
    good = vals[ok]
    gains = np.exp(np.sum(np.log(good), axis=1) / p) / p if good.size else np.empty(0)
    return gains, n_excl


def average_coding_gain(grid, p, l_max, k_max, d_e2, budget, rng, db_mean=False):
    """Average the conditional coding gain over error sequences of one
    squared distance and over channel index placements.

    Error sequences are BPSK differences: support of size d_e2/4 with
    entries +/-2. When (number of sequences) * (number of distinct
    index tuples) <= budget the average is exhaustive, otherwise
    `budget` (sequence, tuple) cases are sampled with `rng`. Rank
    deficient cases are excluded and counted.

    Returns a GainPoint; gains are averaged in the linear domain unless
    db_mean is set.
    """
    if d_e2 < 4 or d_e2 % 4 != 0:
        raise ConfigError(f"d_e2 must be a positive multiple of 4, got {d_e2}", key="d_e2")
    w = d_e2 // 4
    mn = grid.mn
    if w > mn:
        raise ConfigError(f"d_e2={d_e2} needs support {w} > grid size {mn}", key="d_e2")
    if l_max >= mn:
        raise ConfigError(f"l_max must be < {mn}", key="l_max")
    bins = _bin_table(l_max, k_max)
    nb = len(bins)
    if p > nb:
        raise ConfigError(f"p={p} exceeds the {nb} distinct bins", key="p")
    ops = _stacked_operators(grid, bins)
    flat_ops = np.ascontiguousarray(ops.reshape(nb * mn, mn))

    n_seq = math.comb(mn, w) * (2**w)
    n_tuples = math.comb(nb, p)
    exhaustive = n_seq * n_tuples <= budget

    gains_chunks = []
    excluded = 0
    if exhaustive:
        tuples = np.array(list(itertools.combinations(range(nb), p)), dtype=int)
        for support in itertools.combinations(range(mn), w):
            sup = np.array(support, dtype=int)
            for signs in itertools.product((2.0, -2.0), repeat=w):
                err = np.zeros(mn, dtype=complex)
                err[sup] = signs
                u = (flat_ops @ err).reshape(nb, mn)
                g_full = u.conj() @ u.T  # [i, j] = <u_i, u_j>
                om = g_full[tuples[:, :, None], tuples[:, None, :]]
                gains, n_excl = _gains_from_grams(om, p)
                gains_chunks.append(gains)
                excluded += n_excl
    else:
        remaining = int(budget)
        chunk = 8192
        while remaining > 0:
            b = min(chunk, remaining)
            remaining -= b
            sup = np.argsort(rng.random((b, mn)), axis=1)[:, :w]
            signs = 2.0 - 4.0 * rng.integers(0, 2, size=(b, w))
            errs = np.zeros((b, mn), dtype=complex)
            np.put_along_axis(errs, sup, signs.astype(complex), axis=1)
            tup = np.argsort(rng.random((b, nb)), axis=1)[:, :p]
            u_all = (errs @ flat_ops.T).reshape(b, nb, mn)
            u_sel = u_all[np.arange(b)[:, None], tup]
            om = np.einsum("bpi,bqi->bpq", u_sel.conj(), u_sel)
            om = 0.5 * (om + np.conj(np.swapaxes(om, 1, 2)))
            gains, n_excl = _gains_from_grams(om, p)
            gains_chunks.append(gains)
            excluded += n_excl

    gains = np.concatenate(gains_chunks) if gains_chunks else np.empty(0)
    if gains.size == 0:
        raise RankDeficientError("no full-rank cases found", rank=0)
    if db_mean:
        avg_db = float(np.mean(10.0 * np.log10(gains)))
    else:
        avg_db = 10.0 * math.log10(float(np.mean(gains)))
    _, bound_db = coding_gain_bound(d_e2, p)
    return GainPoint(
        d_e2=d_e2,
        p=p,
        l_max=l_max,
        k_max=k_max,
        avg_gain_db=avg_db,
        bound_db=bound_db,
        cases=int(gains.size),
        excluded=excluded,
    )

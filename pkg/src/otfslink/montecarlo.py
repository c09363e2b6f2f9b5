"""End-to-end frame/bit error rate estimation.

Pipeline per trial: draw channel, draw data, encode + interleave (when
coded), BPSK-map, pass through the effective channel with AWGN, detect
(exact candidate search or linear MMSE), deinterleave + trellis-decode,
count errors.

Determinism: every random draw comes from a counter-derived substream
keyed by (master_seed, snr_index, trial_index, tag), and the stopping
rule truncates at the smallest trial index whose cumulative frame-error
count reaches the target, scanning in index order. Worker count and
scheduling therefore cannot change any output number.
"""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .channel import sample_channel
from .coding import bcjr_decode, encode, encoded_length, interleaver_permutation
from .ddmatrix import dft_matrix, time_domain_channel, time_to_dd_map
from .errors import ConfigError, DimensionError, InfeasibleError
from .modem import NoiseSpec, bpsk_map, noise_sample

# substream tags, one per kind of draw
TAG_CHANNEL, TAG_DATA, TAG_NOISE = 0, 1, 2

# exact candidate search limits (hypothesis count 2^20)
MAP_EXACT_UNCODED_MAX_MN = 20
MAP_EXACT_CODED_MAX_DATA = 12

LLR_CLIP = 1e6

WAVEFORMS = ("otfs", "ofdm")
DETECTORS = ("map_exact", "lmmse")


def trial_rng(master_seed, snr_index, trial_index, tag):
    """Counter-derived generator for one draw kind of one trial."""
    seq = np.random.SeedSequence(master_seed, spawn_key=(snr_index, trial_index, tag))
    return np.random.Generator(np.random.Philox(seq))


def wilson_interval(errors, trials, z=1.959963984540054):
    """95% Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise DimensionError("trials must be >= 1")
    phat = errors / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2.0 * trials)) / denom
    half = z * np.sqrt(phat * (1.0 - phat) / trials + z * z / (4.0 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class SimConfig:
    """Full experiment description for one sweep."""

    grid: object
    profile: object
    snr_db: tuple
    max_trials: int
    waveform: str = "otfs"
    code: object = None
    data_len: int = None
    detector: str = "lmmse"
    max_frame_errors: int = 100
    master_seed: int = 0
    es: float = 1.0
    interleaver_seed: int = None
    llr_exact: bool = True

    @property
    def coded(self):
        return self.code is not None

    @property
    def n_info(self):
        """Information bits judged per frame."""
        return self.data_len if self.coded else self.grid.mn

    @property
    def resolved_interleaver_seed(self):
        return self.master_seed if self.interleaver_seed is None else self.interleaver_seed

    def validate(self):
        if self.waveform not in WAVEFORMS:
            raise ConfigError(f"waveform must be one of {WAVEFORMS}", key="waveform")
        if self.detector not in DETECTORS:
            raise ConfigError(f"detector must be one of {DETECTORS}", key="detector")
        if len(self.snr_db) < 1:
            raise ConfigError("snr_db list must be nonempty", key="snr_db")
        if self.max_trials < 1:
            raise ConfigError("max_trials must be >= 1", key="max_trials")
        if self.max_frame_errors < 1:
            raise ConfigError("max_frame_errors must be >= 1", key="max_frame_errors")
        if self.es <= 0:
            raise ConfigError("es must be positive", key="es")
        if self.master_seed < 0:
            raise ConfigError("master_seed must be >= 0", key="master_seed")
        if self.profile.l_max >= self.grid.mn:
            raise ConfigError(
                f"l_max={self.profile.l_max} must be < grid size {self.grid.mn}", key="l_max"
            )
        if self.profile.k_max > self.grid.mn:
            raise ConfigError(
                f"k_max={self.profile.k_max} must be <= grid size {self.grid.mn}", key="k_max"
            )
        if self.coded:
            if self.data_len is None or self.data_len < 1:
                raise ConfigError("coded runs need data_len >= 1", key="data_len")
            need = encoded_length(self.code, self.data_len)
            if need != self.grid.mn:
                raise ConfigError(
                    f"code emits {need} bits for data_len={self.data_len}; "
                    f"the grid carries {self.grid.mn}",
                    key="data_len",
                )
        elif self.data_len is not None and self.data_len != self.grid.mn:
            raise ConfigError(
                f"uncoded frames carry mn={self.grid.mn} bits; drop data_len or set it equal",
                key="data_len",
            )
        if self.detector == "map_exact":
            if self.coded and self.data_len > MAP_EXACT_CODED_MAX_DATA:
                raise InfeasibleError(
                    f"map_exact enumerates 2^data_len codewords; data_len="
                    f"{self.data_len} > {MAP_EXACT_CODED_MAX_DATA}. Use detector=lmmse."
                )
            if not self.coded and self.grid.mn > MAP_EXACT_UNCODED_MAX_MN:
                raise InfeasibleError(
                    f"map_exact enumerates 2^mn frames; mn={self.grid.mn} > "
                    f"{MAP_EXACT_UNCODED_MAX_MN}. Use detector=lmmse."
                )

    def detector_note(self):
        if self.detector == "lmmse":
            return (
                "detector=lmmse: linear MMSE equalizer followed by trellis decoding; "
                "substitute for exhaustive joint-frame search at this scale"
            )
        return "detector=map_exact: exhaustive candidate search"


def multicarrier_map(grid):
    """Per-slot subcarrier DFT I_N kron F_M used by the OFDM front end."""
    return np.kron(np.eye(grid.n), dft_matrix(grid.m))


def _candidate_bits(n):
    ints = np.arange(1 << n, dtype=np.int64)
    return ((ints[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(np.int8)


class TrialContext:
    """Immutable per-sweep precomputation shared by all trials."""

    def __init__(self, config):
        config.validate()
        self.config = config
        grid = config.grid
        self.grid = grid
        self.profile = config.profile
        self.es = config.es
        self.noises = tuple(NoiseSpec.from_snr_db(s, config.es) for s in config.snr_db)
        if config.waveform == "otfs":
            self.front = time_to_dd_map(grid)
        else:
            self.front = multicarrier_map(grid)
        self.perm = (
            interleaver_permutation(config.resolved_interleaver_seed, grid.mn)
            if config.coded
            else None
        )
        self.cand_bits = None
        self.cand_syms = None
        if config.detector == "map_exact":
            bits = _candidate_bits(config.n_info)
            if config.coded:
                # encode the unit data words once; linearity gives the rest
                basis = np.stack(
                    [
                        encode(config.code, np.eye(config.data_len, dtype=int)[i])
                        for i in range(config.data_len)
                    ]
                )
                coded = bits @ basis % 2
                tx = coded[:, self.perm]
            else:
                tx = bits
            self.cand_bits = bits
            self.cand_syms = bpsk_map(tx, config.es)

    def channel_matrix(self, realization):
        """Effective matrix for the active waveform: the shared
        time-domain operator conjugated by the front-end unitary."""
        t = time_domain_channel(self.grid, realization.gains, realization.delays, realization.dopplers)
        return self.front @ t @ self.front.conj().T


def detect_map_exact(y, heff, noise, cand_syms, cand_bits, exact=True):
    """Exhaustive candidate search.

    Hard output is the candidate minimizing ||y - H x||^2 (first hit
    wins, and candidates are ordered by ascending integer value of
    their bit pattern, so ties resolve toward bit 0). LLRs are exact
    bit marginals of the Gaussian posterior (log-sum-exp over
    candidates), or max-log when exact=False.
    """
    z = cand_syms @ heff.T
    metric = np.abs(z - y[None, :]) ** 2
    metric = metric.sum(axis=1)
    best = int(np.argmin(metric))
    bits = cand_bits[best].astype(int)
    n0 = noise.n0 if noise.n0 > 0 else 1e-12
    logit = -metric / n0
    llr = np.empty(cand_bits.shape[1])
    for j in range(cand_bits.shape[1]):
        zero = logit[cand_bits[:, j] == 0]
        one = logit[cand_bits[:, j] == 1]
        if exact:
            llr[j] = _lse(zero) - _lse(one)
        else:
            llr[j] = zero.max() - one.max()
    return bits, np.clip(llr, -LLR_CLIP, LLR_CLIP)


def _lse(v):
    m = v.max()
    return m + np.log(np.exp(v - m).sum())


def detect_lmmse(y, heff, noise):
    """Linear MMSE equalization with per-symbol Gaussian LLRs.

    x_hat = (H^H H + (n0/es) I)^-1 H^H y; each output is modeled as
    bias_k * x_k + residual of variance nu_k, giving
    llr_k = 4 sqrt(es) Re(conj(bias_k) x_hat_k) / nu_k (positive means
    bit 0). Deterministic; the noiseless limit uses a vanishing ridge
    and saturates at +/-1e6.
    """
    mn = y.size
    es, n0 = noise.es, noise.n0
    ridge = n0 / es if n0 > 0 else 1e-12
    hh = heff.conj().T
    g = hh @ heff + ridge * np.eye(mn)
    w = np.linalg.solve(g, hh)
    wh = w @ heff
    xhat = w @ y
    bias = np.diag(wh)
    nu = es * (np.sum(np.abs(wh) ** 2, axis=1) - np.abs(bias) ** 2)
    nu = nu + n0 * np.sum(np.abs(w) ** 2, axis=1)
    nu = np.maximum(nu, 1e-30)
    llr = 4.0 * np.sqrt(es) * np.real(np.conj(bias) * xhat) / nu
    return np.clip(llr, -LLR_CLIP, LLR_CLIP)


def run_trial(ctx, snr_index, trial_index):
    """One seeded trial; returns (frame_error 0/1, bit_error_count)."""
    cfg = ctx.config
    noise = ctx.noises[snr_index]
    seed = cfg.master_seed

    chan = sample_channel(ctx.profile, trial_rng(seed, snr_index, trial_index, TAG_CHANNEL))
    data = trial_rng(seed, snr_index, trial_index, TAG_DATA).integers(0, 2, cfg.n_info)
    if cfg.coded:
        tx_bits = encode(cfg.code, data)[ctx.perm]
    else:
        tx_bits = data
    x = bpsk_map(tx_bits, cfg.es)

    heff = ctx.channel_matrix(chan)
    y = heff @ x + noise_sample(ctx.grid.mn, noise, trial_rng(seed, snr_index, trial_index, TAG_NOISE))

    if cfg.detector == "map_exact":
        bits_hat, _ = detect_map_exact(
            y, heff, noise, ctx.cand_syms, ctx.cand_bits, exact=cfg.llr_exact
        )
    else:
        llr = detect_lmmse(y, heff, noise)
        if cfg.coded:
            deint = np.empty(ctx.grid.mn)
            deint[ctx.perm] = llr
            bits_hat, _ = bcjr_decode(cfg.code, deint, cfg.data_len, exact=cfg.llr_exact)
        else:
            bits_hat = (llr < 0).astype(int)

    errs = int(np.sum(bits_hat != data))
    return (1 if errs else 0), errs


@dataclass(frozen=True)
class SnrPoint:
    """Per-SNR sweep record; field order matches the CSV schema."""

    snr_db: float
    trials: int
    frame_errors: int
    bit_errors: int
    fer: float
    ber: float
    ci95_low: float
    ci95_high: float
    wall_seconds: float


@dataclass(frozen=True)
class SweepResult:
    config: SimConfig
    points: tuple

    @property
    def detector_note(self):
        return self.config.detector_note()


SWEEP_CSV_HEADER = "snr_db,trials,frame_errors,bit_errors,fer,ber,ci95_low,ci95_high,wall_seconds"

_WORKER_CTX = None


def _init_worker(config):
    global _WORKER_CTX
    _WORKER_CTX = TrialContext(config)


def _worker_trial(args):
    snr_index, trial_index = args
    return run_trial(_WORKER_CTX, snr_index, trial_index)


def run_sweep(config, workers=1):
    """Run the configured sweep; identical configs give identical
    SweepResults (wall_seconds aside) at any worker count."""
    config.validate()
    workers = max(1, int(workers))
    ctx = TrialContext(config) if workers == 1 else None
    pool = None
    try:
        if workers > 1:
            pool = ProcessPoolExecutor(
                max_workers=workers, initializer=_init_worker, initargs=(config,)
            )
        points = []
        for s_idx in range(len(config.snr_db)):
            t0 = time.perf_counter()
            fe = be = 0
            trials_used = 0
            next_t = 0
            block = 64 if workers == 1 else 64 * workers
            stop = False
            while not stop and next_t < config.max_trials:
                n = min(block, config.max_trials - next_t)
                idx = range(next_t, next_t + n)
                if pool is None:
                    results = [run_trial(ctx, s_idx, t) for t in idx]
                else:
                    results = list(
                        pool.map(
                            _worker_trial,
                            [(s_idx, t) for t in idx],
                            chunksize=max(1, n // workers),
                        )
                    )
                for t, (f, b) in zip(idx, results):
                    fe += f
                    be += b
                    trials_used = t + 1
                    if fe >= config.max_frame_errors:
                        stop = True
                        break
                next_t += n
                block = min(4096, block * 2)
            lo, hi = wilson_interval(fe, trials_used)
            points.append(
                SnrPoint(
                    snr_db=float(config.snr_db[s_idx]),
                    trials=trials_used,
                    frame_errors=fe,
                    bit_errors=be,
                    fer=fe / trials_used,
                    ber=be / (trials_used * config.n_info),
                    ci95_low=lo,
                    ci95_high=hi,
                    wall_seconds=time.perf_counter() - t0,
                )
            )
    finally:
        if pool is not None:
            pool.shutdown()
    return SweepResult(config=config, points=tuple(points))


def run_ofdm_baseline(config, workers=1):
    """Same sweep with the multicarrier front end (Doppler-induced
    inter-carrier interference retained)."""
    return run_sweep(replace(config, waveform="ofdm"), workers=workers)


def format_sig(x):
    """Fixed 6-significant-digit decimal rendering for diffable output."""
    return f"{x:.6g}"


def sweep_csv_lines(result):
    """Render a SweepResult as schema-exact CSV lines (no newlines)."""
    lines = [SWEEP_CSV_HEADER]
    for p in result.points:
        lines.append(
            ",".join(
                [
                    format_sig(p.snr_db),
                    str(p.trials),
                    str(p.frame_errors),
                    str(p.bit_errors),
                    format_sig(p.fer),
                    format_sig(p.ber),
                    format_sig(p.ci95_low),
                    format_sig(p.ci95_high),
                    format_sig(p.wall_seconds),
                ]
            )
        )
    return lines


def write_sweep_csv(path, result):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(sweep_csv_lines(result)) + "\n")

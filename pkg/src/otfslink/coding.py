"""Convolutional coding: encoder, minimum-distance search, interleaver,
and a log-domain BCJR decoder.

Codes are rate 1/n feedforward with trellis termination: `memory` tail
zeros are appended to every data block and their parity bits are
transmitted, so the trellis starts and ends in the zero state.

LLR convention everywhere: positive means bit 0. The decoder's max*
combining uses the exact Jacobian logarithm (log-sum-exp); a max-log
switch exists for speed.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError


@dataclass(frozen=True)
class ConvCode:
    """Rate 1/n feedforward convolutional code.

    generators : tuple of tuples of 0/1 ints
        Coefficient vectors over the delay operator, lowest order first:
        (1, 0, 1) encodes 1 + D^2. All generators are padded to equal
        length; memory is the largest degree.
    name : str
        Display label.
    """

    generators: tuple
    name: str = "custom"

    def __post_init__(self):
        if len(self.generators) < 1:
            raise ConfigError("at least one generator polynomial required", key="generators")
        degree = max(len(g) for g in self.generators) - 1
        padded = tuple(tuple(g) + (0,) * (degree + 1 - len(g)) for g in self.generators)
        if degree < 0 or all(not any(g) for g in padded):
            raise ConfigError("generators must be nonzero", key="generators")
        object.__setattr__(self, "generators", padded)

    @property
    def memory(self):
        return len(self.generators[0]) - 1

    @property
    def n_out(self):
        return len(self.generators)

    @property
    def states(self):
        return 1 << self.memory


def code_from_octal(octal_strings, name="custom"):
    """Build a ConvCode from octal generator strings, e.g. ("5", "7").

    The most significant bit of the octal value is the current-input
    (D^0) tap, so ("5", "7") is 1 + D^2 and 1 + D + D^2.
    """
    polys = []
    width = max(len(format(int(s, 8), "b")) for s in octal_strings)
    for s in octal_strings:
        bits = format(int(s, 8), f"0{width}b")
        polys.append(tuple(int(b) for b in bits))
    return ConvCode(generators=tuple(polys), name=name)


def generators_octal(code):
    """Octal strings for each generator, inverse of code_from_octal."""
    return tuple(
        format(int("".join(str(b) for b in gen), 2), "o") for gen in code.generators
    )


# Named codes selectable from configs; taps ascending in the delay power.
CODE_REGISTRY = {
    "A": ConvCode(((1, 1), (0, 1)), name="A"),
    "B": ConvCode(((1, 0, 1), (1, 1, 1)), name="B"),
    "C": ConvCode(((1, 0, 1, 0, 0, 1), (1, 1, 1, 1, 1, 1)), name="C"),
    "D": ConvCode(((1, 1, 1, 0, 0, 1, 1), (1, 0, 1, 1, 1, 0, 1)), name="D"),
}


def get_code(name):
    key = str(name).strip().upper()
    if key not in CODE_REGISTRY:
        raise ConfigError(f"unknown code name {name!r}; choose one of A, B, C, D", key="name")
    return CODE_REGISTRY[key]


def encoded_length(code, data_len):
    """Transmitted bits for a data block: n_out * (data_len + memory)."""
    return code.n_out * (data_len + code.memory)


def encode(code, data):
    """Encode a data bit vector, appending `memory` termination zeros.

    Output interleaves the generator streams per step:
    (g1(t0), g2(t0), g1(t1), g2(t1), ...).
    """
    data = np.asarray(data, dtype=int)
    if data.ndim != 1 or data.size < 1:
        raise DimensionError("data must be a nonempty 1-D bit vector")
    u = np.concatenate([data, np.zeros(code.memory, dtype=int)])
    out = np.empty((u.size, code.n_out), dtype=int)
    for j, g in enumerate(code.generators):
        out[:, j] = np.convolve(u, np.asarray(g, dtype=int))[: u.size] % 2
    return out.reshape(-1)


def _trellis_tables(code):
    """next_state[s, u] and output bits out[s, u, j] for input u from
    state s. State encodes the previous `memory` inputs, most recent in
    the high bit."""
    m = code.memory
    n_states = code.states
    nxt = np.zeros((n_states, 2), dtype=int)
    out = np.zeros((n_states, 2, code.n_out), dtype=int)
    for s in range(n_states):
        # bit i of s (from high) is the input i+1 steps back
        past = [(s >> (m - 1 - i)) & 1 for i in range(m)]
        for u in (0, 1):
            window = [u] + past  # u_t, u_{t-1}, ..., u_{t-m}
            for j, g in enumerate(code.generators):
                out[s, u, j] = sum(gi * wi for gi, wi in zip(g, window)) % 2
            nxt[s, u] = ((u << (m - 1)) | (s >> 1)) if m > 0 else 0
    return nxt, out


@dataclass(frozen=True)
class CodewordPairMetric:
    """Minimum separation between distinct codewords.

    d_free : minimum Hamming weight of a nonzero codeword.
    d_e2_min : minimum squared Euclidean distance for unit-energy BPSK,
        always 4 * d_free.
    frame_limited : True when lengthening the frame would lower the
        minimum further.
    """

    d_free: int
    d_e2_min: int
    frame_limited: bool


def _min_weight(code, frame_bits):
    """Minimum Hamming weight over nonzero terminated codewords with
    `frame_bits` information bits, by trellis DP."""
    nxt, out = _trellis_tables(code)
    wt = out.sum(axis=2)
    inf = np.iinfo(np.int64).max // 2
    n_states = code.states
    # best[s]: lightest path 0 -> s with at least one 1 input so far
    best = np.full(n_states, inf, dtype=np.int64)
    zero_w = 0  # the all-zero prefix sits in state 0 at weight 0
    for t in range(frame_bits + code.memory):
        new = np.full(n_states, inf, dtype=np.int64)
        inputs = (0, 1) if t < frame_bits else (0,)
        for s in range(n_states):
            if best[s] >= inf:
                continue
            for u in inputs:
                ns = nxt[s, u]
                cand = best[s] + wt[s, u]
                if cand < new[ns]:
                    new[ns] = cand
        if t < frame_bits:  # diverge from the all-zero path
            ns = nxt[0, 1]
            cand = zero_w + wt[0, 1]
            if cand < new[ns]:
                new[ns] = cand
        best = new
    return int(best[0]) if best[0] < inf else None


def min_squared_euclidean_distance(code, frame_bits):
    """Exact minimum nonzero codeword weight (and 4x Euclidean value)
    over terminated frames of `frame_bits` information bits.

    By linearity the minimum over codeword pairs equals the minimum
    nonzero weight. A frame is flagged frame-limited when a longer
    frame admits a lighter path.
    """
    if frame_bits < 1:
        raise ConfigError(f"frame_bits must be >= 1, got {frame_bits}", key="frame_bits")
    d = _min_weight(code, frame_bits)
    if d is None:
        raise ConfigError("frame admits no nonzero codeword", key="frame_bits")
    horizon = frame_bits + 12 * (code.memory + 1) + 8
    d_long = _min_weight(code, horizon)
    return CodewordPairMetric(d_free=d, d_e2_min=4 * d, frame_limited=d_long < d)


def interleaver_permutation(seed, length):
    """Seeded Fisher-Yates permutation; written out explicitly so the
    permutation is fully determined by this code, not by library
    shuffle internals."""
    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(0x1EAF,)))
    perm = np.arange(length)
    for i in range(length - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def interleave(seed, v):
    """Apply the seeded uniform permutation to v."""
    v = np.asarray(v)
    return v[interleaver_permutation(seed, v.size)]


def deinterleave(seed, v):
    """Exact inverse of interleave with the same seed."""
    v = np.asarray(v)
    perm = interleaver_permutation(seed, v.size)
    out = np.empty_like(v)
    out[perm] = v
    return out


def _combine(a, b, exact):
    return np.logaddexp(a, b) if exact else np.maximum(a, b)


def bcjr_decode(code, llr_in, data_len, exact=True):
    """Per-bit MAP decoding of a terminated frame in the log domain.

    Parameters
    ----------
    code : ConvCode
    llr_in : real vector of per-coded-bit LLRs (positive = bit 0),
        length n_out * (data_len + memory).
    data_len : number of information bits.
    exact : use exact log-sum-exp combining (default); False switches
        to max-log.

    Returns
    -------
    (bits, llr_out) : hard decisions and posterior LLRs for the
        information bits. Zero posteriors decode to bit 0.
    """
    llr_in = np.asarray(llr_in, dtype=float)
    total = data_len + code.memory
    if llr_in.size != code.n_out * total:
        raise DimensionError(
            f"expected {code.n_out * total} coded LLRs, got {llr_in.size}"
        )
    nxt, out = _trellis_tables(code)
    n_states = code.states
    sgn = 1.0 - 2.0 * out  # (+1 for coded bit 0, -1 for bit 1)
    neg = -1e30

    # branch metrics bm[t, s, u] = sum_j 0.5 * sgn * llr
    llr_steps = llr_in.reshape(total, code.n_out)
    bm = 0.5 * np.einsum("suj,tj->tsu", sgn, llr_steps)

    alpha = np.full((total + 1, n_states), neg)
    alpha[0, 0] = 0.0
    if code.memory > 0:
        # each state has exactly two predecessors and a fixed arriving input
        states = np.arange(n_states)
        u_of = states >> (code.memory - 1)
        prev0 = (states << 1) & (n_states - 1)
        prev1 = prev0 | 1
        for t in range(total):
            a = _combine(
                alpha[t, prev0] + bm[t, prev0, u_of],
                alpha[t, prev1] + bm[t, prev1, u_of],
                exact,
            )
            if t >= data_len:  # termination: only zero inputs arrive
                a = np.where(u_of == 0, a, neg)
            alpha[t + 1] = a
    else:
        for t in range(total):
            inputs = (0, 1) if t < data_len else (0,)
            acc = neg
            for u in inputs:
                acc = _combine(acc, alpha[t, 0] + bm[t, 0, u], exact)
            alpha[t + 1, 0] = acc

    beta = np.full((total + 1, n_states), neg)
    beta[total, 0] = 0.0
    for t in range(total - 1, -1, -1):
        inputs = (0, 1) if t < data_len else (0,)
        for u in inputs:
            cand = beta[t + 1][nxt[:, u]] + bm[t, :, u]
            beta[t] = _combine(beta[t], cand, exact)

    llr_out = np.empty(data_len)
    for t in range(data_len):
        num = alpha[t] + bm[t, :, 0] + beta[t + 1][nxt[:, 0]]
        den = alpha[t] + bm[t, :, 1] + beta[t + 1][nxt[:, 1]]
        if exact:
            llr_out[t] = _reduce_lse(num) - _reduce_lse(den)
        else:
            llr_out[t] = num.max() - den.max()
    bits = (llr_out < 0).astype(int)
    return bits, llr_out


def _reduce_lse(v):
    m = v.max()
    if m <= -1e29:
        return m
    return m + np.log(np.exp(v - m).sum())

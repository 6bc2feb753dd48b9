"""Monte Carlo execution of the protocol with pluggable channels.

Each round k draws exactly one 4-word block from a Philox counter-based
generator keyed by the session seed, so round k's randomness is a pure
function of (seed, k): partitioning rounds across workers and merging
the commutative accumulators reproduces the single-worker session bit
for bit.

Word layout per round: Alice's setting, Alice's outcome, Bob's setting,
Bob's outcome (each mapped through the appropriate conditional
distribution).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from .adversary import bob_channel
from .classical_bound import cached_fgc
from .photonic import effective_stats
from .tomography import (
    ConditionalStats,
    SETTINGS,
    chi_identity,
    process_fidelity,
    process_matrix_1q,
    protocol_frame,
)

KIND_TEST = 0
KIND_KEY = 1
KIND_DISCARD = 2


@dataclass(frozen=True)
class SessionConfig:
    """Protocol session: round count, sifting mode, channel, seed."""

    n_rounds: int
    gamma: float | None = None  # None -> natural sifting (uniform settings)
    channel: tuple | str = "ideal"
    seed: int = 0
    correction: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.n_rounds < 1:
            raise ValueError("n_rounds must be >= 1")
        if self.gamma is not None and not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @property
    def key_setting_prob(self):
        """Per-party probability of choosing setting 3.

        Natural sifting gives P(key) = 1/9; a gamma target biases both
        parties to sqrt(1 - gamma) so that P(i = j = 3) = 1 - gamma.
        """
        if self.gamma is None:
            return 1 / 3
        return float(np.sqrt(1 - self.gamma))


@dataclass
class BlockReport:
    f_values: list
    max_delta: float
    pooled_se: float
    flagged: bool


@dataclass
class SessionResult:
    stats: ConditionalStats
    f_expt: float
    f_gc: float
    aborted: bool
    alice_key: np.ndarray
    bob_key: np.ndarray
    q_emp: float
    block_report: BlockReport | None
    counts: dict = field(repr=False, default_factory=dict)
    setting_counts: np.ndarray | None = None


def _born_table(channel_spec):
    """P(b=+1 | i, s, j) where s labels the eigenstate heralded to Bob."""
    frame = protocol_frame()
    name = channel_spec if isinstance(channel_spec, str) else channel_spec[0]
    arg = None if isinstance(channel_spec, str) else channel_spec[1]
    if name == "ideal":
        chan = lambda rho: rho
    elif name == "flip":
        chan = bob_channel(arg)
    elif name == "uqcm":
        chan = bob_channel(arg / 6)  # Bob marginal of the p'-mixture
    elif name == "depolarizing":
        chan = lambda rho: (1 - arg) * rho + arg * la.ID2 / 2
    else:
        raise ValueError(f"unknown channel {channel_spec!r}")
    p_plus = np.zeros((4, 3, 4))  # [i][v index 0:+1,1:-1][j]
    for i in SETTINGS:
        for vi, v in enumerate((+1, -1)):
            rho = frame.input_states[(i, v)]
            out = chan(rho)
            for j, obs in zip(SETTINGS, frame.bob_obs):
                p_plus[i, vi, j] = float(np.real(np.trace(out @ la.projector(obs, +1))))
    return p_plus


def _photonic_tables(params):
    """Categorical tables for the photonic channel: P(v|i) and P(b=+1|i,v,j)."""
    photo = effective_stats(params)
    pv = np.zeros((4, 2))
    p_plus = np.zeros((4, 3, 4))
    for i in SETTINGS:
        tot = photo.row_weights[(i, +1)] + photo.row_weights[(i, -1)]
        pv[i, 0] = photo.row_weights[(i, +1)] / tot
        pv[i, 1] = photo.row_weights[(i, -1)] / tot
        for vi, v in enumerate((+1, -1)):
            for j in SETTINGS:
                p_plus[i, vi, j] = photo.stats[(i, v, j, +1)]
    return pv, p_plus


def _round_words(seed, start, count):
    """The 4-word Philox blocks for rounds [start, start + count)."""
    bg = np.random.Philox(key=seed)
    if start:
        bg.advance(start)
    words = np.random.Generator(bg).integers(0, 2**64, size=4 * count, dtype=np.uint64)
    u = (words >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
    return u.reshape(count, 4)


def _simulate_chunk(config, start, count):
    """One worker's rounds; returns the commutative accumulators."""
    u = _round_words(config.seed, start, count)
    p3 = config.key_setting_prob
    if config.gamma is None:
        i = 1 + np.minimum((u[:, 0] * 3).astype(np.int64), 2)
        j = 1 + np.minimum((u[:, 2] * 3).astype(np.int64), 2)
    else:
        # setting 3 with probability p3, else uniform over {1, 2}
        i = np.where(u[:, 0] < p3, 3, 1 + (((u[:, 0] - p3) / (1 - p3)) >= 0.5)).astype(np.int64)
        j = np.where(u[:, 2] < p3, 3, 1 + (((u[:, 2] - p3) / (1 - p3)) >= 0.5)).astype(np.int64)

    name = config.channel if isinstance(config.channel, str) else config.channel[0]
    if name == "photonic":
        pv, p_plus = _photonic_tables(config.channel[1])
        v = np.where(u[:, 1] < pv[i, 0], +1, -1)
        state = v
    else:
        p_plus = _born_table(config.channel)
        a_raw = np.where(u[:, 1] < 0.5, +1, -1)
        state = -a_raw  # singlet heralding is anti-correlated in every basis
        v = state if config.correction else a_raw
    si = (state < 0).astype(np.int64)
    pb = p_plus[i, si, j]
    b = np.where(u[:, 3] < pb, +1, -1)

    kind = np.where((i == 3) & (j == 3), KIND_KEY, KIND_TEST)
    return i, v, j, b, kind


def run_session(config, f_gc=None, block_count=4):
    """Execute the session and evaluate the abort criterion.

    All nine setting pairs feed the tomography table (key rounds
    included: their aggregate statistics are what the parties would
    publish for parameter estimation); the key bits themselves come
    only from the key rounds.
    """
    if f_gc is None:
        f_gc = cached_fgc()
    n = config.n_rounds
    edges = np.linspace(0, n, config.workers + 1).astype(np.int64)
    parts = [
        _simulate_chunk(config, int(a), int(b - a))
        for a, b in zip(edges[:-1], edges[1:])
        if b > a
    ]
    i = np.concatenate([p[0] for p in parts])
    v = np.concatenate([p[1] for p in parts])
    j = np.concatenate([p[2] for p in parts])
    b = np.concatenate([p[3] for p in parts])
    kind = np.concatenate([p[4] for p in parts])

    counts = _count_cells(i, v, j, b)
    stats = ConditionalStats.from_counts(counts)
    f_expt = process_fidelity(process_matrix_1q(stats, protocol_frame()), chi_identity())
    aborted = not f_expt > f_gc

    key_mask = kind == KIND_KEY
    alice_key = (v[key_mask] < 0).astype(np.uint8)
    bob_key = (b[key_mask] < 0).astype(np.uint8)
    q_emp = float(np.mean(alice_key != bob_key)) if alice_key.size else 0.0

    report = None
    if block_count >= 2:
        try:
            report = iid_block_check((i, v, j, b), block_count)
        except ValueError:
            report = None

    setting_counts = np.zeros((4, 4), dtype=np.int64)
    np.add.at(setting_counts, (i, j), 1)
    return SessionResult(
        stats, f_expt, f_gc, aborted, alice_key, bob_key, q_emp, report, counts, setting_counts
    )


def _count_cells(i, v, j, b):
    arr = np.zeros((4, 2, 4, 2), dtype=np.int64)
    np.add.at(arr, (i, (v < 0).astype(np.int64), j, (b < 0).astype(np.int64)), 1)
    counts = {}
    for ii in SETTINGS:
        for vi, vv in enumerate((+1, -1)):
            for jj in SETTINGS:
                for bi, bb in enumerate((+1, -1)):
                    counts[(ii, vv, jj, bb)] = int(arr[ii, vi, jj, bi])
    return counts


def _f_sensitivities(frame=None):
    """dF/dP(+1) per (i, v, j) cell: F is linear in the conditional table."""
    frame = frame or protocol_frame()
    base = {
        (i, a, j, bb): 0.5 for i in SETTINGS for a in (+1, -1) for j in SETTINGS for bb in (+1, -1)
    }
    chi_i = chi_identity()

    def f_of(table):
        return process_fidelity(process_matrix_1q(ConditionalStats(table), frame), chi_i)

    f0 = f_of(base)
    sens = {}
    eps = 1e-6
    for i in SETTINGS:
        for a in (+1, -1):
            for j in SETTINGS:
                t = dict(base)
                t[(i, a, j, +1)] = 0.5 + eps
                t[(i, a, j, -1)] = 0.5 - eps
                sens[(i, a, j)] = (f_of(t) - f0) / eps
    return sens


def iid_block_check(records, m):
    """Block homogeneity of the reconstructed fidelity.

    Splits the round sequence into m contiguous blocks, reconstructs
    F_expt per block, and flags when the largest pairwise difference
    exceeds five pooled standard errors (the statistic is linear in the
    per-cell frequencies, so its variance follows from binomial cells).
    """
    if m < 2:
        raise ValueError("block count m must be >= 2")
    i, v, j, b = records
    n = len(i)
    edges = np.linspace(0, n, m + 1).astype(np.int64)
    frame = protocol_frame()
    sens = _f_sensitivities(frame)
    f_vals, variances = [], []
    for a, z in zip(edges[:-1], edges[1:]):
        sl = slice(int(a), int(z))
        counts = _count_cells(i[sl], v[sl], j[sl], b[sl])
        try:
            stats = ConditionalStats.from_counts(counts)
        except ValueError as exc:
            raise ValueError(f"insufficient data in block for IID check: {exc}") from exc
        f_vals.append(process_fidelity(process_matrix_1q(stats, frame), chi_identity()))
        var = 0.0
        for ii in SETTINGS:
            for aa in (+1, -1):
                for jj in SETTINGS:
                    tot = counts[(ii, aa, jj, +1)] + counts[(ii, aa, jj, -1)]
                    p = counts[(ii, aa, jj, +1)] / tot
                    var += sens[(ii, aa, jj)] ** 2 * p * (1 - p) / tot
        variances.append(var)
    max_delta, pooled = 0.0, 0.0
    for x in range(m):
        for y in range(x + 1, m):
            d = abs(f_vals[x] - f_vals[y])
            if d > max_delta:
                max_delta = d
                pooled = float(np.sqrt(variances[x] + variances[y]))
    flagged = bool(max_delta > 5 * pooled)
    return BlockReport(f_vals, max_delta, pooled, flagged)


def extract_keys(result):
    """(alice bits, bob bits, empirical QBER) of a non-aborted session."""
    if result.aborted:
        raise ValueError("session aborted; no key extracted")
    return result.alice_key, result.bob_key, result.q_emp

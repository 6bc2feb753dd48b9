"""Asymptotic and finite-size secret-key rates.

The finite-size bound follows the chain

    l >= n [1 - (1-gamma) h(Q) - gamma h(F_expt) - I(A:E)]
         - sqrt(n) A (sqrt(log2(2/eps_s^2)) + sqrt(log2(8/eps'_EC^2)))
         - log2(8/eps'_EC^2 + 2/(2 - eps'_EC)) - log2(1/eps_EC)
         - 2 log2(1/(2 eps_PA)).

Two conventions exist for the sqrt(n) coefficient A.  The derivation as
printed carries A = 4 log2(2 sqrt(2) + 1); the published minimum-round
tables are only reproducible with A = 1 (the prefactor dropped).  Both
are implemented; ``tables`` is the default because the acceptance
targets are the tables.  See the decisions ledger.

The entanglement-based baseline mirrors the same structure with the
CHSH collective-attack Holevo term evaluated at a statistically
penalized S (Hoeffding confidence interval on the winning probability
estimated from the gamma-fraction of test rounds).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .adversary import eve_information
from .linalg import binary_entropy as h

SQRT8 = 2 * math.sqrt(2)

#: sqrt(n) coefficient conventions (see module docstring)
AEP_PREFACTORS = {
    "tables": 1.0,
    "printed": 4 * math.log2(2 * math.sqrt(2) + 1),
}


@dataclass(frozen=True)
class FiniteKeyParams:
    """Block size and error terms governing the finite-size bound."""

    n: float
    gamma: float = 1e-2
    eps_s: float = 1e-5
    eps_ec: float = 1e-2
    eps_ec_prime: float = 1e-2
    eps_pa: float = 1e-2
    convention: str = "tables"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be a positive number of key rounds")
        if not 0 < self.gamma < 1:
            raise ValueError("test fraction gamma must lie in (0, 1)")
        for name in ("eps_s", "eps_ec", "eps_ec_prime", "eps_pa"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1)")
        if self.convention not in AEP_PREFACTORS:
            raise ValueError(f"unknown convention {self.convention!r}")

    @property
    def aep_prefactor(self):
        return AEP_PREFACTORS[self.convention]

    def with_n(self, n):
        return replace(self, n=n)


@dataclass
class RateResult:
    """Clamped rate, raw bound, key length and the term breakdown."""

    r: float
    r_raw: float
    l: float
    terms: dict = field(default_factory=dict)


@dataclass
class LeakEc:
    """Error-correction leakage split into n-, sqrt(n)- and constant parts."""

    n_part: float
    sqrt_part: float
    const_part: float

    @property
    def total(self):
        return self.n_part + self.sqrt_part + self.const_part


def asymptotic_rate_ediqkd(q, model="hybrid"):
    """Devetak-Winter rate 1 - h(Q) - I(A:E) of the certified protocol."""
    return 1 - h(q) - eve_information(q, model=model)


def chsh_holevo(s):
    """Collective-attack Holevo bound from a CHSH value (1 bit for S <= 2)."""
    if s <= 2:
        return 1.0
    return h((1 + math.sqrt((s / 2) ** 2 - 1)) / 2)


def asymptotic_rate_diqkd(q):
    """Devetak-Winter rate of the CHSH baseline with S = 2 sqrt(2)(1 - 2Q)."""
    if not 0 <= q < 0.5:
        raise ValueError(f"QBER {q} outside [0, 1/2)")
    return 1 - h(q) - chsh_holevo(SQRT8 * (1 - 2 * q))


def leak_ec(params, q, f_expt):
    """Upper bound on error-correction leakage (bits, whole block)."""
    n = params.n
    n_part = n * ((1 - params.gamma) * h(q) + params.gamma * h(f_expt))
    sqrt_part = math.sqrt(n) * params.aep_prefactor * math.sqrt(
        math.log2(8 / params.eps_ec_prime**2)
    )
    const_part = math.log2(
        8 / params.eps_ec_prime**2 + 2 / (2 - params.eps_ec_prime)
    ) + math.log2(1 / params.eps_ec)
    return LeakEc(n_part, sqrt_part, const_part)


def _assemble(params, i_ab_deficit, i_ae, leak):
    n = params.n
    aep = math.sqrt(n) * params.aep_prefactor * math.sqrt(math.log2(2 / params.eps_s**2))
    pa = 2 * math.log2(1 / (2 * params.eps_pa))
    terms = {
        "i_ab_deficit": i_ab_deficit,
        "i_ae": i_ae,
        "aep_smoothing": aep / n,
        "leak_ec_sqrt": leak.sqrt_part / n,
        "leak_ec_const": leak.const_part / n,
        "privacy_amplification": pa / n,
    }
    r_raw = 1 - sum(terms.values())
    r = max(r_raw, 0.0)
    return RateResult(r=r, r_raw=r_raw, l=r * n, terms=terms)


def finite_rate_ediqkd(q, params, f_expt=None, model="hybrid", p_noise=0.0,
                       q_attack=None):
    """Finite-size rate of the certified protocol at QBER Q.

    f_expt defaults to the flip-channel value 1 - 3Q/2 implied by the
    attack model; pass the tomographic value to override.  Eve's term is
    evaluated at q_attack (default q): callers with independent evidence
    of a stronger attack, such as a degraded process fidelity, pass the
    implied value.  A nonzero p_noise applies noisy preprocessing: the
    error-correction term sees the flipped QBER while Eve's conditional
    states mix accordingly.
    """
    if f_expt is None:
        f_expt = 1 - 1.5 * q
    if q_attack is None:
        q_attack = q
    q_ab = q * (1 - p_noise) + (1 - q) * p_noise
    leak = leak_ec(params, q_ab, f_expt)
    i_ab_deficit = leak.n_part / params.n
    i_ae = eve_information(q_attack, model=model, p_noise=p_noise)
    return _assemble(params, i_ab_deficit, i_ae, leak)


def chsh_estimation_penalty(params):
    """Hoeffding confidence width on S from the test-round sample.

    n counts key rounds, so the protocol saw n gamma / (1 - gamma) test
    rounds.
    """
    m = params.n * params.gamma / (1 - params.gamma)
    return 8 * math.sqrt(math.log(2 / params.eps_s) / (2 * m))


def finite_rate_diqkd(q, params, s=None):
    """Finite-size rate of the CHSH baseline at QBER Q.

    Mirrors the certified protocol's bound with the Holevo term replaced
    by the CHSH collective-attack bound evaluated at the estimated S
    minus its Hoeffding confidence width, and the test-round entropy
    taken on the CHSH winning probability.
    """
    if s is None:
        s = SQRT8 * (1 - 2 * q)
    s_est = max(s - chsh_estimation_penalty(params), 0.0)
    win = (1 + s / SQRT8) / 2
    leak = leak_ec(params, q, win)
    i_ab_deficit = leak.n_part / params.n
    i_ae = chsh_holevo(s_est)
    return _assemble(params, i_ab_deficit, i_ae, leak)


@dataclass
class MinRounds:
    """Smallest block size reaching the target rate, or None if unattainable."""

    n: float | None
    rate_at_n: float | None = None

    @property
    def log10(self):
        return math.log10(self.n) if self.n else None


N_GRID_STEP = 10**0.01
N_CEILING = 1e16


def min_key_rounds(rate_fn, q, r_target=1e-3, params=None, n_floor=10.0):
    """Smallest n with rate >= r_target, on a 10^0.01 log grid plus bisection.

    rate_fn(q, params) -> RateResult; the raw (unclamped) bound drives
    the search.  Returns MinRounds(None) when the target is unattainable
    even at the ceiling block size.
    """
    params = params or FiniteKeyParams(n=1e6)

    def raw(n):
        return rate_fn(q, params.with_n(n)).r_raw

    if raw(N_CEILING) < r_target:
        return MinRounds(None)
    lo, hi = n_floor, N_CEILING
    if raw(lo) >= r_target:
        return MinRounds(lo, raw(lo))
    # bisect on the log grid, then refine inside the bracketing cell
    k_lo, k_hi = 0, int(math.ceil(math.log(hi / lo) / math.log(N_GRID_STEP)))
    while k_hi - k_lo > 1:
        k = (k_lo + k_hi) // 2
        if raw(lo * N_GRID_STEP**k) >= r_target:
            k_hi = k
        else:
            k_lo = k
    a, b = lo * N_GRID_STEP**k_lo, lo * N_GRID_STEP**k_hi
    for _ in range(60):
        mid = math.sqrt(a * b)
        if raw(mid) >= r_target:
            b = mid
        else:
            a = mid
    return MinRounds(b, raw(b))


def efficiency_factor(q, r_target=1e-3, params=None):
    """n'_DIQKD / n'_EDIQKD for a common target rate; None if either is unattainable."""
    ne = min_key_rounds(lambda qq, p: finite_rate_ediqkd(qq, p), q, r_target, params)
    nd = min_key_rounds(lambda qq, p: finite_rate_diqkd(qq, p), q, r_target, params)
    if ne.n is None or nd.n is None:
        return None, ne, nd
    return nd.n / ne.n, ne, nd


def critical_qber_ediqkd(model="hybrid"):
    """Zero of the asymptotic certified-protocol rate."""
    from scipy.optimize import brentq

    return float(brentq(lambda q: asymptotic_rate_ediqkd(q, model), 1e-9, 1 / 6 - 1e-9, xtol=1e-10))


def critical_qber_diqkd():
    """Zero of the asymptotic CHSH-baseline rate."""
    from scipy.optimize import brentq

    return float(brentq(asymptotic_rate_diqkd, 1e-9, 0.25, xtol=1e-10))

import math

import numpy as np
import pytest

from ediqkd import keyrate as kr
from ediqkd.keyrate import FiniteKeyParams


def test_asymptotic_endpoints():
    assert abs(kr.asymptotic_rate_ediqkd(0.0) - 1.0) < 1e-12
    assert abs(kr.asymptotic_rate_diqkd(0.0) - 1.0) < 1e-12


def test_critical_qbers():
    qe = kr.critical_qber_ediqkd()
    qd = kr.critical_qber_diqkd()
    assert abs(qe - 0.069) < 0.003  # paper target 6.9% +- 0.3 pp
    assert abs(qd - 0.071) < 0.002  # paper target 7.1% +- 0.2 pp


def test_rate_strictly_decreasing_to_critical():
    qs = np.linspace(0.0, 0.0685, 40)
    vals = [kr.asymptotic_rate_ediqkd(q) for q in qs]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert kr.asymptotic_rate_diqkd(0.05) > 0


def test_leak_ec_scaling_and_two_codings():
    p = FiniteKeyParams(n=10**6, gamma=0.01)
    q, f = 0.025, 1 - 1.5 * 0.025
    leak = kr.leak_ec(p, q, f)
    leak4 = kr.leak_ec(p.with_n(4 * 10**6), q, f)
    # the sqrt(n) part doubles when n quadruples
    assert abs((leak4.total - 4 * leak.n_part - leak4.const_part)
               / (leak.total - leak.n_part - leak.const_part) - 2) < 1e-12
    # independent scalar re-evaluation of the full bound
    n, g = 10**6, 0.01
    h = lambda x: -x * math.log2(x) - (1 - x) * math.log2(1 - x)
    expect = (
        n * ((1 - g) * h(q) + g * h(1 - f))
        + math.sqrt(n) * math.sqrt(math.log2(8 / 1e-4))
        + math.log2(8 / 1e-4 + 2 / (2 - 1e-2))
        + math.log2(1 / 1e-2)
    )
    assert abs(leak.total - expect) < 1e-9 * expect


def test_leak_ec_degenerate_eps_finite():
    p = FiniteKeyParams(n=100, gamma=0.5, eps_ec_prime=0.999999)
    leak = kr.leak_ec(p, 0.1, 0.9)
    assert math.isfinite(leak.total)


def test_printed_prefactor_convention():
    p_t = FiniteKeyParams(n=10**6, gamma=0.01, convention="tables")
    p_p = FiniteKeyParams(n=10**6, gamma=0.01, convention="printed")
    lt = kr.leak_ec(p_t, 0.03, 0.95)
    lp = kr.leak_ec(p_p, 0.03, 0.95)
    ratio = lp.sqrt_part / lt.sqrt_part
    assert abs(ratio - 4 * math.log2(2 * math.sqrt(2) + 1)) < 1e-12
    assert kr.finite_rate_ediqkd(0.03, p_p).r_raw < kr.finite_rate_ediqkd(0.03, p_t).r_raw


def test_finite_below_asymptotic_and_monotone_in_n():
    q = 0.03
    prev = -np.inf
    for n in np.logspace(3, 12, 19):
        r = kr.finite_rate_ediqkd(q, FiniteKeyParams(n=n, gamma=0.01)).r_raw
        assert r < kr.asymptotic_rate_ediqkd(q)
        assert r >= prev
        prev = r
    # large-n limit of the baseline approaches its asymptote (the CHSH
    # winning probability is 1 - Q, so the test-entropy term folds into h(Q))
    rd = kr.finite_rate_diqkd(q, FiniteKeyParams(n=1e15, gamma=0.01)).r_raw
    assert abs(rd - kr.asymptotic_rate_diqkd(q)) < 1e-3


def test_rate_nondecreasing_in_epsilons():
    q = 0.03
    base = dict(n=10**7, gamma=0.01)
    for name in ("eps_s", "eps_ec", "eps_ec_prime", "eps_pa"):
        vals = []
        for eps in (1e-6, 1e-4, 1e-2, 0.5):
            p = FiniteKeyParams(**base, **{name: eps})
            vals.append(kr.finite_rate_ediqkd(q, p).r_raw)
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_breakdown_consistency():
    for fn in (kr.finite_rate_ediqkd, kr.finite_rate_diqkd):
        res = fn(0.04, FiniteKeyParams(n=10**8, gamma=0.01))
        assert abs((1 - sum(res.terms.values())) - res.r_raw) < 1e-12
        assert res.r == max(res.r_raw, 0.0)
        assert abs(res.l - res.r * 10**8) < 1e-6


def test_rate_at_asymptotic_block_near_critical():
    # at the model's critical QBER the huge-block rate sits at zero
    qc = kr.critical_qber_ediqkd()
    r = kr.finite_rate_ediqkd(qc, FiniteKeyParams(n=1e15, gamma=0.01)).r_raw
    assert abs(r) < 5e-3


PAPER_TABLE2 = {
    0.055: (3.77, 6.23, 2.46),
    0.060: (4.18, 6.56, 2.38),
    0.065: (5.06, 7.10, 2.04),
    0.066: (5.31, 7.26, 1.95),
    0.067: (6.14, 7.45, 1.31),
}


@pytest.mark.parametrize("q", sorted(PAPER_TABLE2))
def test_min_rounds_table(q):
    le, ld, lf = PAPER_TABLE2[q]
    ef, ne, nd = kr.efficiency_factor(q)
    assert abs(np.log10(ne.n) - le) <= 0.3
    assert abs(np.log10(nd.n) - ld) <= 0.3
    assert abs(np.log10(ef) - lf) <= 0.3


def test_min_rounds_monotone_in_q():
    ns = [kr.min_key_rounds(lambda q, p: kr.finite_rate_ediqkd(q, p), q).n
          for q in (0.03, 0.05, 0.06)]
    assert ns[0] < ns[1] < ns[2]


def test_min_rounds_no_solution():
    res = kr.min_key_rounds(lambda q, p: kr.finite_rate_ediqkd(q, p), 0.12)
    assert res.n is None
    ef, ne, nd = kr.efficiency_factor(0.12)
    assert ef is None and ne.n is None


def test_params_validation():
    with pytest.raises(ValueError):
        FiniteKeyParams(n=0)
    with pytest.raises(ValueError):
        FiniteKeyParams(n=10, gamma=1.5)
    with pytest.raises(ValueError):
        FiniteKeyParams(n=10, eps_s=0)
    with pytest.raises(ValueError):
        FiniteKeyParams(n=10, convention="other")

import numpy as np
import pytest

from ediqkd import simulate as sim
from ediqkd.photonic import PhotonicParams

F_GC = (2 + np.sqrt(2)) / 4


def run(channel, n=200_000, seed=11, workers=1, gamma=None):
    cfg = sim.SessionConfig(n_rounds=n, gamma=gamma, channel=channel, seed=seed, workers=workers)
    return sim.run_session(cfg, f_gc=F_GC)


def test_ideal_session():
    res = run("ideal")
    assert not res.aborted
    assert res.q_emp <= 0.005
    assert res.f_expt >= 0.99
    assert len(res.alice_key) == len(res.bob_key)


def test_flip_session_statistics():
    res = run(("flip", 1 / 6), n=10**6)
    assert abs(res.q_emp - 1 / 6) < 0.01
    assert abs(res.f_expt - 0.75) < 0.01
    assert res.aborted  # F = 0.75 <= F_GC


def test_abort_rule_strict():
    res = run(("flip", 1 / 6), n=50_000)
    assert res.aborted == (not res.f_expt > res.f_gc)
    with pytest.raises(ValueError):
        sim.extract_keys(res)


def test_uqcm_channel_matches_flip():
    # uqcm(p') has Bob marginal flip(p'/6)
    res = run(("uqcm", 0.6), n=400_000, seed=3)
    assert abs(res.q_emp - 0.1) < 0.01


def test_depolarizing_channel():
    res = run(("depolarizing", 0.2), n=400_000, seed=5)
    # depolarizing q: flip probability q/2
    assert abs(res.q_emp - 0.1) < 0.01
    assert abs(res.f_expt - 0.85) < 0.01


def test_worker_determinism():
    results = [run(("flip", 0.05), n=30_000, seed=42, workers=w) for w in (1, 4, 16)]
    base = results[0]
    for other in results[1:]:
        assert np.array_equal(base.alice_key, other.alice_key)
        assert np.array_equal(base.bob_key, other.bob_key)
        assert base.f_expt == other.f_expt
        assert base.q_emp == other.q_emp
        assert base.counts == other.counts


def test_setting_frequencies():
    res = run("ideal", n=90_000, seed=7)
    n = res.setting_counts[1:, 1:].sum()
    for i in (1, 2, 3):
        for j in (1, 2, 3):
            p_hat = res.setting_counts[i, j] / n
            sigma = np.sqrt((1 / 9) * (8 / 9) / n)
            assert abs(p_hat - 1 / 9) < 5 * sigma


def test_biased_gamma_mode():
    cfg = sim.SessionConfig(n_rounds=200_000, gamma=0.25, channel="ideal", seed=1)
    res = sim.run_session(cfg, f_gc=F_GC)
    key_frac = len(res.alice_key) / 200_000
    assert abs(key_frac - 0.75) < 0.01  # P(key) = 1 - gamma


def test_f_expt_concentration_scaling():
    # |F_hat - F| stays within 5 binomial-scale deviations at three sizes
    for n in (10**4, 10**5, 10**6):
        res = run(("flip", 0.05), n=n, seed=123)
        assert abs(res.f_expt - (1 - 1.5 * 0.05)) < 5 * 2.0 / np.sqrt(n)


def test_correction_flag():
    # without the anti-correlation correction the raw keys anti-agree
    cfg = sim.SessionConfig(n_rounds=50_000, channel="ideal", seed=2, correction=False)
    res = sim.run_session(cfg, f_gc=F_GC)
    assert res.q_emp > 0.99


def test_photonic_channel_session():
    params = PhotonicParams(eta=0.95, p_dc=1e-6, mu=0.01, f_source=0.998, alpha_deg=45.0)
    res = run(("photonic", params), n=200_000, seed=9)
    from ediqkd.photonic import effective_stats

    photo = effective_stats(params)
    assert abs(res.q_emp - photo.q) < 0.01
    assert abs(res.f_expt - photo.f_expt) < 0.01


def test_iid_block_check_passes_iid_run():
    cfg = sim.SessionConfig(n_rounds=400_000, channel="ideal", seed=21)
    res = sim.run_session(cfg, f_gc=F_GC, block_count=4)
    assert res.block_report is not None
    assert not res.block_report.flagged


def test_iid_block_check_flags_channel_switch():
    # adversarial construction: ideal first half, flip(1/6) second half
    n = 400_000
    cfg_a = sim.SessionConfig(n_rounds=n // 2, channel="ideal", seed=33)
    cfg_b = sim.SessionConfig(n_rounds=n // 2, channel=("flip", 1 / 6), seed=34)
    parts = [sim._simulate_chunk(cfg_a, 0, n // 2), sim._simulate_chunk(cfg_b, 0, n // 2)]
    records = tuple(np.concatenate([p[k] for p in parts]) for k in range(4))
    report = sim.iid_block_check(records, 4)
    assert report.flagged
    assert max(report.f_values) - min(report.f_values) > 0.2


def test_iid_block_check_rejects_m1():
    cfg = sim.SessionConfig(n_rounds=1000, channel="ideal", seed=4)
    i, v, j, b, _ = sim._simulate_chunk(cfg, 0, 1000)
    with pytest.raises(ValueError):
        sim.iid_block_check((i, v, j, b), 1)


def test_insufficient_block_data():
    cfg = sim.SessionConfig(n_rounds=40, channel="ideal", seed=4)
    i, v, j, b, _ = sim._simulate_chunk(cfg, 0, 40)
    with pytest.raises(ValueError):
        sim.iid_block_check((i, v, j, b), 4)


def test_config_validation():
    with pytest.raises(ValueError):
        sim.SessionConfig(n_rounds=0)
    with pytest.raises(ValueError):
        sim.SessionConfig(n_rounds=10, gamma=1.5)
    with pytest.raises(ValueError):
        sim.SessionConfig(n_rounds=10, workers=0)
    with pytest.raises(ValueError):
        sim.run_session(sim.SessionConfig(n_rounds=100, channel="nope"), f_gc=F_GC)

import io

import numpy as np
import pytest

from ediqkd import linalg as la
from ediqkd import tomography as tg

FRAME = tg.protocol_frame()


def random_channel(rng, kraus_rank=2):
    """Random CPTP qubit channel via a Haar-ish random Stinespring isometry."""
    m = rng.normal(size=(2 * kraus_rank, 2)) + 1j * rng.normal(size=(2 * kraus_rank, 2))
    q, _ = np.linalg.qr(m)
    kraus = [q[2 * k : 2 * k + 2, :] for k in range(kraus_rank)]

    def chan(rho):
        return sum(k @ rho @ k.conj().T for k in kraus)

    return chan


def depol(q):
    return lambda rho: (1 - q) * rho + q * np.trace(rho) * np.eye(2) / 2


def test_reconstruct_state_identity_exact():
    stats = tg.ConditionalStats.from_channel(lambda r: r, FRAME)
    for (i, a), rho in FRAME.input_states.items():
        got = tg.reconstruct_state(stats, i, a, FRAME)
        assert np.abs(got - rho).max() < 1e-12


def test_reconstruct_state_uniform_and_depol():
    table = {
        (i, a, j, b): 0.5 for i in tg.SETTINGS for a in (1, -1) for j in tg.SETTINGS for b in (1, -1)
    }
    got = tg.reconstruct_state(tg.ConditionalStats(table), 1, 1, FRAME)
    assert np.abs(got - np.eye(2) / 2).max() < 1e-12
    # Bloch shrink s = 0.8 on |+>
    stats = tg.ConditionalStats.from_channel(depol(0.2), FRAME)
    got = tg.reconstruct_state(stats, 1, +1, FRAME)
    bloch = [np.real(np.trace(got @ la.pauli(ax))) for ax in "XYZ"]
    assert np.allclose(bloch, [0.8, 0, 0], atol=1e-12)


def test_chi_identity_rank_one():
    stats = tg.ConditionalStats.from_channel(lambda r: r, FRAME)
    chi = tg.process_matrix_1q(stats, FRAME)
    assert np.abs(chi - tg.chi_identity()).max() < 1e-12
    w = np.linalg.eigvalsh(chi)
    assert abs(w[-1] - 1) < 1e-12 and np.abs(w[:-1]).max() < 1e-12
    assert abs(tg.process_fidelity(chi, tg.chi_identity()) - 1) < 1e-12


@pytest.mark.parametrize("q", [0.1, 0.2, 0.35])
def test_depolarizing_fidelity(q):
    stats = tg.ConditionalStats.from_channel(depol(q), FRAME)
    chi = tg.process_matrix_1q(stats, FRAME)
    assert abs(tg.process_fidelity(chi, tg.chi_identity()) - (1 - 3 * q / 4)) < 1e-12


def test_qflip_fidelity():
    flip = lambda rho: (1 - 1 / 6) * rho + (1 / 6) * (np.trace(rho) * np.eye(2) - rho)
    stats = tg.ConditionalStats.from_channel(flip, FRAME)
    chi = tg.process_matrix_1q(stats, FRAME)
    assert abs(tg.process_fidelity(chi, tg.chi_identity()) - 0.75) < 1e-12


def test_roundtrip_random_channels():
    # reconstruction from exact statistics matches the analytic chi
    rng = np.random.default_rng(42)
    for _ in range(100):
        chan = random_channel(rng)
        stats = tg.ConditionalStats.from_channel(chan, FRAME)
        chi = tg.process_matrix_1q(stats, FRAME)
        assert np.abs(chi - tg.chi_from_channel(chan, 2)).max() <= 1e-10


def test_fidelity_renormalization_invariance():
    rng = np.random.default_rng(1)
    chan = random_channel(rng)
    stats = tg.ConditionalStats.from_channel(chan, FRAME)
    chi = tg.process_matrix_1q(stats, FRAME)
    f1 = tg.process_fidelity(chi, tg.chi_identity())
    f2 = tg.process_fidelity((3.7 * chi) / np.trace(3.7 * chi).real, tg.chi_identity())
    assert abs(f1 - f2) < 1e-12


def test_apply_process_examples():
    assert np.abs(tg.apply_process(tg.chi_identity(), la.dm([1, 2j])) - la.dm([1, 2j])).max() < 1e-12
    q = 0.3
    chi = tg.chi_from_channel(depol(q), 2)
    out = tg.apply_process(chi, la.dm([1, 0]))
    assert np.allclose(out, np.diag([1 - q / 2, q / 2]), atol=1e-12)


def test_two_qubit_identity_and_swap():
    inputs = tg.two_qubit_input_basis()
    chi = tg.process_matrix_2q(inputs, inputs)
    assert abs(tg.process_fidelity(chi, chi) - 1) < 1e-10
    swap = np.zeros((4, 4), dtype=complex)
    for a in range(2):
        for b in range(2):
            swap[2 * b + a, 2 * a + b] = 1
    chi_swap = tg.process_matrix_2q(inputs, [swap @ m @ swap.conj().T for m in inputs])
    rng = np.random.default_rng(10)
    v1 = rng.normal(size=2) + 1j * rng.normal(size=2)
    v2 = rng.normal(size=2) + 1j * rng.normal(size=2)
    rho = la.tensor(la.dm(v1), la.dm(v2))
    assert np.abs(tg.apply_process(chi_swap, rho) - swap @ rho @ swap.conj().T).max() < 1e-10


def test_two_qubit_product_channel_kron():
    rng = np.random.default_rng(20)
    c1 = random_channel(rng)
    c2 = random_channel(rng)

    def prod(sigma):
        out = np.zeros((4, 4), dtype=complex)
        for i in range(2):
            for j in range(2):
                for k in range(2):
                    for l in range(2):
                        e1 = np.zeros((2, 2), dtype=complex)
                        e1[i, j] = 1
                        e2 = np.zeros((2, 2), dtype=complex)
                        e2[k, l] = 1
                        out += sigma[2 * i + k, 2 * j + l] * np.kron(c1(e1), c2(e2))
        return out

    inputs = tg.two_qubit_input_basis()
    chi = tg.process_matrix_2q(inputs, [prod(m) for m in inputs])
    expect = np.kron(tg.chi_from_channel(c1, 2), tg.chi_from_channel(c2, 2))
    assert np.abs(chi - expect).max() < 1e-10


def test_two_qubit_incomplete_basis_rejected():
    inputs = tg.two_qubit_input_basis()[:8] * 2
    with pytest.raises(ValueError):
        tg.process_matrix_2q(inputs, inputs)


def test_sampling_consistency():
    # 1e6 shots per setting reproduce the exact chi to 5e-3 per entry
    chan = depol(0.15)
    stats = tg.sample_stats(chan, FRAME, shots_per_setting=10**6, seed=2024)
    chi = tg.process_matrix_1q(stats, FRAME)
    assert np.abs(chi - tg.chi_from_channel(chan, 2)).max() < 5e-3


def test_csv_roundtrip():
    stats = tg.sample_stats(depol(0.1), FRAME, shots_per_setting=1000, seed=7)
    buf = io.StringIO(stats.to_csv_string())
    back = tg.ConditionalStats.from_csv(buf)
    for key, val in stats.table.items():
        assert back[key] == val
        assert back.counts[key] == stats.counts[key]


def test_unnormalized_row_rejected():
    table = {
        (i, a, j, b): 0.5 for i in tg.SETTINGS for a in (1, -1) for j in tg.SETTINGS for b in (1, -1)
    }
    table[(1, 1, 1, 1)] = 0.7
    with pytest.raises(ValueError):
        tg.ConditionalStats(table)

import numpy as np
import pytest

from ediqkd import linalg as la


def random_hermitian(rng, d):
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (m + m.conj().T) / 2


def random_unitary(rng, d):
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(m)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def test_pauli_definitions():
    assert np.allclose(la.pauli("Z"), np.diag([1, -1]))
    for ax in "XYZ":
        p = la.pauli(ax)
        assert np.allclose(p @ p, np.eye(2))
    # eigenvectors of Y are the circular states with eigenvalues +-1
    plus, minus = la.eig_plus_minus(la.pauli("Y"))
    r = np.array([1, 1j]) / np.sqrt(2)
    l = np.array([1, -1j]) / np.sqrt(2)
    assert abs(abs(plus.conj() @ r) - 1) < 1e-12
    assert abs(abs(minus.conj() @ l) - 1) < 1e-12
    with pytest.raises(ValueError):
        la.pauli("W")


def test_rotated_observable():
    # U Z U^dag = Z since U is diagonal
    assert np.allclose(la.rotated_observable(la.pauli("Z")), la.pauli("Z"))
    # direct matrix multiplication oracle: U X U^dag = (X + Y)/sqrt(2)
    got = la.rotated_observable(la.pauli("X"))
    expect = la.ROT_U @ la.pauli("X") @ la.ROT_U.conj().T
    assert np.allclose(got, expect)
    assert np.allclose(got, (la.pauli("X") + la.pauli("Y")) / np.sqrt(2), atol=1e-12)
    assert np.allclose(got @ got, np.eye(2), atol=1e-10)


def test_tensor():
    assert np.allclose(la.tensor(np.eye(2), np.eye(2)), np.eye(4))
    e = la.tensor(la.dm([1, 0]), la.dm([0, 1]))
    assert e[1, 1] == 1 and np.trace(e) == 1
    rng = np.random.default_rng(3)
    a, b, c, d = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(4))
    assert np.allclose(la.tensor(a, b) @ la.tensor(c, d), la.tensor(a @ c, b @ d))
    with pytest.raises(ValueError):
        la.tensor(np.eye(8), np.eye(4))


def test_partial_trace():
    rho1 = la.dm([1, 2j])
    rho2 = la.dm([3, -1])
    prod = la.tensor(rho1, rho2)
    assert np.allclose(la.partial_trace(prod, (2, 2), (0,)), rho1, atol=1e-12)
    assert np.allclose(la.partial_trace(prod, (2, 2), (1,)), rho2, atol=1e-12)
    bell = la.dm([1, 0, 0, 1])
    for keep in ((0,), (1,)):
        assert np.allclose(la.partial_trace(bell, (2, 2), keep), np.eye(2) / 2, atol=1e-12)
    # composing over complementary subsystems preserves the trace exactly
    rng = np.random.default_rng(5)
    m = random_hermitian(rng, 8)
    m = m @ m.conj().T
    m /= np.trace(m)
    left = la.partial_trace(m, (2, 2, 2), (0,))
    assert abs(np.trace(left) - np.trace(m)) < 1e-12
    with pytest.raises(ValueError):
        la.partial_trace(m, (2, 2), (0,))


def test_von_neumann_entropy():
    assert abs(la.von_neumann_entropy(la.dm([1, 1]))) < 1e-12
    assert abs(la.von_neumann_entropy(np.eye(2) / 2) - 1) < 1e-12
    # scalar evaluation oracle for the cloner spectrum
    lam = np.diag([3 / 4, 1 / 12, 1 / 12, 1 / 12])
    expect = 0.75 * np.log2(4 / 3) + 3 * (1 / 12) * np.log2(12)
    assert abs(la.von_neumann_entropy(lam) - expect) < 1e-12
    # unitary invariance
    rng = np.random.default_rng(11)
    for _ in range(20):
        m = random_hermitian(rng, 4)
        m = m @ m.conj().T
        m /= np.trace(m)
        u = random_unitary(rng, 4)
        s1 = la.von_neumann_entropy(m)
        s2 = la.von_neumann_entropy(u @ m @ u.conj().T)
        assert abs(s1 - s2) < 1e-10


def test_binary_entropy():
    assert la.binary_entropy(0) == 0
    assert la.binary_entropy(1) == 0
    assert abs(la.binary_entropy(0.5) - 1) < 1e-15
    # scalar evaluation: h(0.069)
    x = 0.069
    expect = -x * np.log2(x) - (1 - x) * np.log2(1 - x)
    assert abs(la.binary_entropy(0.069) - expect) < 1e-15
    assert abs(expect - 0.3622) < 2e-4
    with pytest.raises(ValueError):
        la.binary_entropy(1.2)


def test_trace_distance():
    a = la.dm([1, 0])
    assert la.trace_distance(a, a) == 0
    assert abs(la.trace_distance(a, la.dm([0, 1])) - 1) < 1e-12
    rng = np.random.default_rng(17)
    for _ in range(20):
        x = random_hermitian(rng, 4)
        y = random_hermitian(rng, 4)
        z = random_hermitian(rng, 4)
        # singular-value sum oracle
        sv = np.linalg.svd(x - y, compute_uv=False)
        assert abs(la.trace_distance(x, y) - 0.5 * sv.sum()) < 1e-10
        assert abs(la.trace_distance(x, y) - la.trace_distance(y, x)) < 1e-10
        assert la.trace_distance(x, z) <= la.trace_distance(x, y) + la.trace_distance(y, z) + 1e-10
    with pytest.raises(ValueError):
        la.trace_distance(np.eye(2), np.eye(4))


def test_eigendecomposition_residual():
    rng = np.random.default_rng(23)
    for d in (2, 4, 8, 16):
        m = random_hermitian(rng, d)
        w, v = np.linalg.eigh(m)
        for k in range(d):
            assert np.linalg.norm(m @ v[:, k] - w[k] * v[:, k]) <= 1e-10 * max(1, np.abs(w).max())


def test_eigenvalue_clipping():
    m = np.diag([1.0 + 5e-11, -5e-11])
    assert la.von_neumann_entropy(m) >= 0
    w = la.clipped_eigvalsh(np.diag([-5e-11, 1.0]))
    assert w.min() == 0.0

import time

import numpy as np
import pytest

from ediqkd import classical_bound as cb
from ediqkd import tomography as tg

FRAME = tg.protocol_frame()
ALIGNED = tg.protocol_frame(rotated=False)


def random_stochastic(rng):
    om = rng.random((8, 8))
    return om / om.sum(axis=1, keepdims=True)


def test_gcp_stats_identity_omega():
    stats = cb.gcp_stats(cb.GcpModel(np.eye(8)))
    for i in tg.SETTINGS:
        for a in (1, -1):
            for j in tg.SETTINGS:
                expect = 1.0 if (j == i) else 0.5
                got = stats[(i, a, j, a)] if j == i else stats[(i, a, j, +1)]
                assert abs(got - expect) < 1e-12


def test_gcp_stats_fixed_point_omega():
    om = np.zeros((8, 8))
    om[:, 3] = 1.0  # everything maps to assignment (+1, -1, -1)
    stats = cb.gcp_stats(cb.GcpModel(om))
    target = cb.HIDDEN_ASSIGNMENTS[3]
    for i in tg.SETTINGS:
        for a in (1, -1):
            for j in tg.SETTINGS:
                assert abs(stats[(i, a, j, target[j - 1])] - 1.0) < 1e-12


def test_gcp_stats_rows_normalized():
    rng = np.random.default_rng(0)
    stats = cb.gcp_stats(cb.GcpModel(random_stochastic(rng)))
    for i in tg.SETTINGS:
        for a in (1, -1):
            for j in tg.SETTINGS:
                assert abs(stats[(i, a, j, 1)] + stats[(i, a, j, -1)] - 1) < 1e-12


def test_chi_gc_trace_hermitian():
    rng = np.random.default_rng(1)
    for _ in range(5):
        chi = cb.build_chi_gc(cb.GcpModel(random_stochastic(rng)), FRAME)
        assert abs(np.trace(chi).real - 1) < 1e-9
        assert np.abs(chi - chi.conj().T).max() < 1e-10


def test_objective_affine_in_omega():
    rng = np.random.default_rng(2)
    chi_i = tg.chi_identity()
    for _ in range(10):
        om1, om2 = random_stochastic(rng), random_stochastic(rng)
        lam = rng.random()
        f = lambda om: tg.process_fidelity(cb.build_chi_gc(cb.GcpModel(om), FRAME), chi_i)
        mix = f(lam * om1 + (1 - lam) * om2)
        assert abs(mix - (lam * f(om1) + (1 - lam) * f(om2))) < 1e-10


def test_coefficients_match_direct_evaluation():
    f0, g, _, _ = cb.fidelity_coefficients(FRAME)
    rng = np.random.default_rng(3)
    chi_i = tg.chi_identity()
    for _ in range(5):
        om = random_stochastic(rng)
        direct = tg.process_fidelity(cb.build_chi_gc(cb.GcpModel(om), FRAME), chi_i)
        assert abs(f0 + (g * om).sum() - direct) < 1e-10


def test_enumerate_value_and_runtime():
    t0 = time.time()
    res = cb.enumerate_fgc(FRAME)
    elapsed = time.time() - t0
    assert abs(res.value - 0.8536) < 1e-3
    assert abs(res.value - np.cos(np.pi / 8) ** 2) < 1e-9
    assert elapsed < 300  # full scan with pruning, well under the budget
    chi = cb.build_chi_gc(res.model, FRAME)
    assert np.linalg.eigvalsh(chi).min() >= -1e-7
    assert np.abs(res.model.omega.sum(axis=1) - 1).max() < 1e-7


def test_aligned_frame_reaches_unity():
    res = cb.maximize_fgc(ALIGNED, method="enumerate")
    assert abs(res.value - 1.0) < 1e-9


def test_refine_never_below_enumerate():
    enum = cb.enumerate_fgc(FRAME)
    ref = cb.refine_fgc(FRAME, enum.model)
    assert ref.value >= enum.value - 1e-12
    both = cb.maximize_fgc(FRAME, method="both")
    assert both.value >= enum.value - 1e-12


def test_enumeration_worker_determinism():
    # partitioned scans merge to the identical optimum
    r1 = cb.enumerate_fgc(FRAME, workers=1)
    r3 = cb.enumerate_fgc(FRAME, workers=3)
    r8 = cb.enumerate_fgc(FRAME, workers=8)
    assert r1.value == r3.value == r8.value
    assert np.array_equal(r1.model.omega, r3.model.omega)
    assert np.array_equal(r1.model.omega, r8.model.omega)


def test_certify():
    assert cb.certify(0.8656, 0.8536) is True
    assert cb.certify(0.8536, 0.8536) is False
    assert cb.certify(1.0, 0.8536) is True
    with pytest.raises(ValueError):
        cb.certify(1.2, 0.8)


def test_model_validation():
    with pytest.raises(ValueError):
        cb.GcpModel(np.ones((8, 8)))  # rows don't sum to 1
    om = np.eye(8)
    om[0, 0] = -0.1
    om[0, 1] = 1.1
    with pytest.raises(ValueError):
        cb.GcpModel(om)


def test_cached_fgc(tmp_path):
    v1 = cb.cached_fgc(FRAME, cache_dir=str(tmp_path))
    v2 = cb.cached_fgc(FRAME, cache_dir=str(tmp_path))
    assert v1 == v2
    assert len(list(tmp_path.iterdir())) == 1


def test_sdp_oracle():
    # independent oracle: the same maximization as a semidefinite program
    cvxpy = pytest.importorskip("cvxpy")
    f0, g, c0, cs = cb.fidelity_coefficients(FRAME)
    om = cvxpy.Variable((8, 8), nonneg=True)
    chi = c0.copy()
    expr = cvxpy.Constant(c0)
    for xi in range(8):
        for mu in range(8):
            expr = expr + om[xi, mu] * cs[xi, mu]
    cons = [cvxpy.sum(om, axis=1) == 1, (expr + expr.H) / 2 >> 0]
    prob = cvxpy.Problem(cvxpy.Maximize(f0 + cvxpy.sum(cvxpy.multiply(g, om))), cons)
    prob.solve(solver="SCS", eps=1e-6)
    assert abs(prob.value - cb.maximize_fgc(FRAME).value) < 1e-3

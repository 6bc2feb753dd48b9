"""Exact small-dimension complex linear algebra for qubit systems.

Everything here operates on dense numpy arrays of shape (d, d) with
d in {2, 4, 8, 16} (one to four tensor slots of at most three qubits
plus a classical flag in intermediate constructions; public entry
points enforce d <= 16).  All functions are pure.
"""

from __future__ import annotations

import numpy as np

MAX_DIM = 16

HERM_ATOL = 1e-12
TRACE_ATOL = 1e-10
EIG_CLIP = 1e-10  # eigenvalues in [-EIG_CLIP, 0) are reconstruction noise

ID2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

# Bob's frame rotation: |0><0| + exp(i pi/4)|1><1|
ROT_U = np.diag([1.0, np.exp(1j * np.pi / 4)]).astype(complex)

_PAULIS = {"X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}


def pauli(axis):
    """Return the 2x2 Pauli matrix for axis 'X', 'Y' or 'Z'."""
    try:
        return _PAULIS[axis].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli axis {axis!r}") from None


def rotated_observable(base):
    """Conjugate a 1-qubit observable by U = |0><0| + e^{i pi/4}|1><1|."""
    base = np.asarray(base, dtype=complex)
    if base.shape != (2, 2):
        raise ValueError("rotated_observable expects a 1-qubit observable")
    return ROT_U @ base @ ROT_U.conj().T


def dagger(a):
    return np.asarray(a).conj().T


def is_hermitian(a, atol=HERM_ATOL):
    a = np.asarray(a)
    return bool(np.abs(a - a.conj().T).max() <= atol)


def tensor(*ops):
    """Kronecker product of one or more operators; total dim capped at 16."""
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, np.asarray(op, dtype=complex))
    if out.shape[0] > MAX_DIM:
        raise ValueError(f"tensor dimension {out.shape[0]} exceeds {MAX_DIM}")
    return out


def ket(vec):
    """Normalize a state vector."""
    v = np.asarray(vec, dtype=complex).ravel()
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("zero vector")
    return v / n


def dm(vec):
    """Density operator |v><v| of a (normalized) state vector."""
    v = ket(vec)
    return np.outer(v, v.conj())


def check_density(rho, atol_tr=TRACE_ATOL, atol_eig=EIG_CLIP):
    """Validate Hermiticity, unit trace and positivity of a density operator."""
    rho = np.asarray(rho, dtype=complex)
    if not is_hermitian(rho):
        raise ValueError("density operator not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > atol_tr:
        raise ValueError(f"density operator trace {tr} != 1")
    w = np.linalg.eigvalsh(rho)
    if w.min() < -atol_eig:
        raise ValueError(f"density operator has eigenvalue {w.min()}")
    return rho


def eig_plus_minus(obs):
    """(+1, -1) eigenvectors of a 1-qubit involution observable."""
    obs = np.asarray(obs, dtype=complex)
    w, v = np.linalg.eigh(obs)
    if np.abs(obs @ obs - np.eye(obs.shape[0])).max() > TRACE_ATOL:
        raise ValueError("observable does not square to identity")
    return v[:, np.argmax(w)], v[:, np.argmin(w)]


def projector(obs, outcome):
    """Projector onto the +-1 eigenspace of a 1-qubit observable."""
    plus, minus = eig_plus_minus(obs)
    return dm(plus) if outcome > 0 else dm(minus)


def partial_trace(rho, dims, keep):
    """Trace out all tensor slots not listed in `keep`.

    dims : sequence of slot dimensions whose product matches rho,
    keep : indices of slots retained (original slot order preserved).
    """
    rho = np.asarray(rho, dtype=complex)
    dims = list(dims)
    n = len(dims)
    if int(np.prod(dims)) != rho.shape[0] or rho.shape[0] != rho.shape[1]:
        raise ValueError("dims inconsistent with operator shape")
    keep = sorted(keep)
    if any(k < 0 or k >= n for k in keep):
        raise ValueError("keep index out of range")
    t = rho.reshape(dims + dims)
    for i in reversed([i for i in range(n) if i not in keep]):
        t = np.trace(t, axis1=i, axis2=i + t.ndim // 2)
    d = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(d, d)


def clipped_eigvalsh(a, clip=EIG_CLIP):
    """Hermitian eigenvalues with tiny reconstruction negatives clamped to 0."""
    w = np.linalg.eigvalsh(np.asarray(a, dtype=complex))
    w = w.copy()
    w[(w < 0) & (w >= -clip)] = 0.0
    return w


def von_neumann_entropy(rho):
    """-sum lam log2 lam over the eigenvalues of rho, with 0 log 0 = 0.

    Clamped at 0: an eigenvalue a hair above 1 would otherwise produce a
    tiny negative entropy.
    """
    w = clipped_eigvalsh(rho)
    w = w[w > 0]
    return max(float(-(w * np.log2(w)).sum()), 0.0) if w.size else 0.0


def binary_entropy(x):
    """h(x) = -x log2 x - (1-x) log2 (1-x) on [0, 1]."""
    x = float(x)
    if x < -1e-12 or x > 1 + 1e-12:
        raise ValueError(f"binary_entropy argument {x} outside [0, 1]")
    x = min(max(x, 0.0), 1.0)
    if x == 0.0 or x == 1.0:
        return 0.0
    return float(-x * np.log2(x) - (1 - x) * np.log2(1 - x))


def trace_distance(a, b):
    """(1/2) sum |eig(a - b)| for Hermitian a, b of equal dimension."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError("trace_distance dimension mismatch")
    if not (is_hermitian(a, 1e-9) and is_hermitian(b, 1e-9)):
        raise ValueError("trace_distance expects Hermitian operators")
    w = np.linalg.eigvalsh(a - b)
    return float(0.5 * np.abs(w).sum())

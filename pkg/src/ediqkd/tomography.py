"""Process tomography from conditional statistics.

The 1-qubit process matrix follows the block construction

    chi = 1/2 [[ I_hat + V3,  V1 + i V2 ],
               [ V1 - i V2,   I_hat - V3 ]]

built from the six conditioned output states, trace-normalized to 1.
For honest quantum statistics this equals the Choi matrix of the
channel divided by the dimension; it is Hermitian and unit trace but
deliberately NOT projected to the PSD cone (untrusted-device data may
reconstruct to a non-positive matrix).

Two-qubit process matrices are expressed in the "basis-kron" elementary
operator basis, indexed so that chi of a product channel is exactly the
Kronecker product of the 1-qubit chi matrices.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import linalg as la

SETTINGS = (1, 2, 3)
OUTCOMES = (1, -1)


@dataclass(frozen=True)
class MeasurementFrame:
    """Alice's observables, Bob's observables and the six input states."""

    alice_obs: tuple
    bob_obs: tuple
    input_states: dict = field(compare=False)

    @property
    def inputs(self):
        return self.input_states

    def key(self):
        """Stable hash of the frame (used for the F_GC disk cache)."""
        buf = np.concatenate([np.asarray(o).ravel() for o in self.alice_obs + self.bob_obs])
        import hashlib

        return hashlib.sha256(np.round(buf, 12).tobytes()).hexdigest()[:16]


def protocol_frame(rotated=True):
    """The protocol frame: Alice X, Y, Z; Bob conjugated by U (or aligned)."""
    alice = (la.pauli("X"), la.pauli("Y"), la.pauli("Z"))
    bob = tuple(la.rotated_observable(o) for o in alice) if rotated else alice
    inputs = {}
    for i, obs in zip(SETTINGS, alice):
        plus, minus = la.eig_plus_minus(obs)
        inputs[(i, +1)] = la.dm(plus)
        inputs[(i, -1)] = la.dm(minus)
    return MeasurementFrame(alice, bob, inputs)


class ConditionalStats:
    """Table P(b_j | a_i) for i, j in {1,2,3} and a, b in {+1,-1}."""

    def __init__(self, table, counts=None):
        self.table = dict(table)
        self.counts = dict(counts) if counts else None
        self._check()

    def _check(self):
        for i in SETTINGS:
            for a in OUTCOMES:
                for j in SETTINGS:
                    s = self.table[(i, a, j, +1)] + self.table[(i, a, j, -1)]
                    if abs(s - 1.0) > 1e-9:
                        raise ValueError(f"row (i={i}, a={a}, j={j}) sums to {s}")

    def __getitem__(self, key):
        return self.table[key]

    def expectation(self, i, a, j):
        """<V_j^B> conditioned on preparation (i, a)."""
        return self.table[(i, a, j, +1)] - self.table[(i, a, j, -1)]

    @classmethod
    def from_channel(cls, channel, frame):
        """Exact statistics of a CPTP channel measured in the frame."""
        table = {}
        for (i, a), rho in frame.input_states.items():
            out = channel(rho)
            for j, obs in zip(SETTINGS, frame.bob_obs):
                p_plus = float(np.real(np.trace(out @ la.projector(obs, +1))))
                p_plus = min(max(p_plus, 0.0), 1.0)
                table[(i, a, j, +1)] = p_plus
                table[(i, a, j, -1)] = 1.0 - p_plus
        return cls(table)

    @classmethod
    def from_counts(cls, counts):
        """Normalize raw event counts {(i,a,j,b): n} into probabilities."""
        table = {}
        for i in SETTINGS:
            for a in OUTCOMES:
                for j in SETTINGS:
                    n_p = counts.get((i, a, j, +1), 0)
                    n_m = counts.get((i, a, j, -1), 0)
                    tot = n_p + n_m
                    if tot == 0:
                        raise ValueError(f"no events for row (i={i}, a={a}, j={j})")
                    table[(i, a, j, +1)] = n_p / tot
                    table[(i, a, j, -1)] = n_m / tot
        return cls(table, counts)

    def to_csv(self, path_or_buf):
        """Write rows (i, a, j, b, probability, count)."""
        own = isinstance(path_or_buf, (str, bytes))
        f = open(path_or_buf, "w", newline="") if own else path_or_buf
        try:
            w = csv.writer(f)
            w.writerow(["i", "a", "j", "b", "probability", "count"])
            for i in SETTINGS:
                for a in OUTCOMES:
                    for j in SETTINGS:
                        for b in OUTCOMES:
                            cnt = self.counts.get((i, a, j, b), "") if self.counts else ""
                            w.writerow([i, a, j, b, repr(self.table[(i, a, j, b)]), cnt])
        finally:
            if own:
                f.close()

    @classmethod
    def from_csv(cls, path_or_buf):
        own = isinstance(path_or_buf, (str, bytes))
        f = open(path_or_buf, newline="") if own else path_or_buf
        try:
            rd = csv.DictReader(f)
            table, counts = {}, {}
            for row in rd:
                key = (int(row["i"]), int(row["a"]), int(row["j"]), int(row["b"]))
                table[key] = float(row["probability"])
                if row.get("count"):
                    counts[key] = int(row["count"])
        finally:
            if own:
                f.close()
        return cls(table, counts or None)

    def to_csv_string(self):
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()


def reconstruct_state(stats, i, a, frame):
    """State tomography of the output conditioned on preparation (i, a).

    rho = 1/2 (I + sum_j <V_j^B> V_j^B).  Exact when the devices measure
    the frame observables; Hermitian and unit trace by construction, PSD
    not enforced.
    """
    rho = la.ID2.copy()
    for j, obs in zip(SETTINGS, frame.bob_obs):
        rho = rho + stats.expectation(i, a, j) * obs
    return rho / 2


def process_matrix_1q(stats, frame):
    """Assemble the trace-normalized 4x4 process matrix from full statistics."""
    rhos = {key: reconstruct_state(stats, key[0], key[1], frame) for key in frame.input_states}
    i_hat = sum(rhos[(i, +1)] + rhos[(i, -1)] for i in SETTINGS) / len(SETTINGS)
    v_hat = [rhos[(i, +1)] - rhos[(i, -1)] for i in SETTINGS]
    chi = 0.5 * np.block(
        [
            [i_hat + v_hat[2], v_hat[0] + 1j * v_hat[1]],
            [v_hat[0] - 1j * v_hat[1], i_hat - v_hat[2]],
        ]
    )
    chi = (chi + chi.conj().T) / 2
    return chi / np.trace(chi).real


def chi_identity():
    """Process matrix of the identity channel (rank one, unit trace)."""
    phi = np.zeros(4, dtype=complex)
    phi[0] = phi[3] = 1 / np.sqrt(2)
    return np.outer(phi, phi.conj())


def chi_from_channel(channel, dim):
    """Process matrix of a CPTP channel in the basis-kron elementary basis.

    The index grouping is input-major per qubit (m = 2*j + x for input
    index j, output index x), matching the block construction of
    process_matrix_1q on exact statistics; for two qubits the layout is
    chosen so that chi(E1 (x) E2) = kron(chi(E1), chi(E2)).
    """
    if dim == 2:
        chi = np.zeros((4, 4), dtype=complex)
        for j in range(2):
            for l in range(2):
                e = np.zeros((2, 2), dtype=complex)
                e[j, l] = 1.0
                out = channel(e)
                for x in range(2):
                    for y in range(2):
                        chi[2 * j + x, 2 * l + y] = out[x, y]
        return chi / 2
    if dim == 4:
        chi = np.zeros((16, 16), dtype=complex)
        for j1 in range(2):
            for j2 in range(2):
                for l1 in range(2):
                    for l2 in range(2):
                        e = np.zeros((4, 4), dtype=complex)
                        e[2 * j1 + j2, 2 * l1 + l2] = 1.0
                        out = channel(e)
                        for x1 in range(2):
                            for x2 in range(2):
                                for y1 in range(2):
                                    for y2 in range(2):
                                        r = 4 * (2 * j1 + x1) + (2 * j2 + x2)
                                        c = 4 * (2 * l1 + y1) + (2 * l2 + y2)
                                        chi[r, c] = out[2 * x1 + x2, 2 * y1 + y2]
        return chi / 4
    raise ValueError("chi_from_channel supports dim 2 or 4")


def two_qubit_input_basis():
    """16 product states |s><s| (x) |t><t|, s,t in {0, 1, +, R}; complete."""
    kets = {
        "0": np.array([1, 0], dtype=complex),
        "1": np.array([0, 1], dtype=complex),
        "+": np.array([1, 1], dtype=complex) / np.sqrt(2),
        "R": np.array([1, 1j], dtype=complex) / np.sqrt(2),
    }
    basis = []
    for s in "01+R":
        for t in "01+R":
            basis.append(np.kron(la.dm(kets[s]), la.dm(kets[t])))
    return basis


def process_matrix_2q(input_basis, outputs):
    """16x16 process matrix by linear inversion from input/output pairs.

    The inputs must span the full two-qubit operator space; the channel's
    action on the elementary basis is solved for, then re-expressed in the
    basis-kron layout, Hermitized and trace-normalized.
    """
    if len(input_basis) != len(outputs):
        raise ValueError("input/output count mismatch")
    a = np.column_stack([np.asarray(m, dtype=complex).ravel() for m in input_basis])
    if np.linalg.matrix_rank(a, tol=1e-9) < 16:
        raise ValueError("input basis is not tomographically complete")
    b = np.column_stack([np.asarray(m, dtype=complex).ravel() for m in outputs])
    # superoperator S with vec(out) = S vec(in)
    s = b @ np.linalg.pinv(a)

    def apply(e):
        return (s @ e.ravel()).reshape(4, 4)

    chi = chi_of_superop(apply)
    chi = (chi + chi.conj().T) / 2
    return chi / np.trace(chi).real


def chi_of_superop(apply):
    chi = np.zeros((16, 16), dtype=complex)
    for j1 in range(2):
        for j2 in range(2):
            for l1 in range(2):
                for l2 in range(2):
                    e = np.zeros((4, 4), dtype=complex)
                    e[2 * j1 + j2, 2 * l1 + l2] = 1.0
                    out = apply(e)
                    for x1 in range(2):
                        for x2 in range(2):
                            for y1 in range(2):
                                for y2 in range(2):
                                    r = 4 * (2 * j1 + x1) + (2 * j2 + x2)
                                    c = 4 * (2 * l1 + y1) + (2 * l2 + y2)
                                    chi[r, c] = out[2 * x1 + x2, 2 * y1 + y2]
    return chi / 4


def process_fidelity(chi, target):
    """tr(chi target), real part; both arguments trace-normalized."""
    chi = np.asarray(chi, dtype=complex)
    target = np.asarray(target, dtype=complex)
    if chi.shape != target.shape:
        raise ValueError("process matrix dimension mismatch")
    val = np.trace(chi @ target)
    if abs(val.imag) > 1e-10:
        raise ValueError(f"process fidelity has imaginary residual {val.imag}")
    return float(val.real)


def apply_process(chi, rho):
    """Apply a reconstructed process matrix to a state.

    Inverts the chi convention: for one qubit
    E(rho)_{xy} = 2 sum_{jl} chi[2j+x, 2l+y] rho_{jl}; the two-qubit
    version uses the basis-kron layout.
    """
    chi = np.asarray(chi, dtype=complex)
    rho = np.asarray(rho, dtype=complex)
    if chi.shape == (4, 4) and rho.shape == (2, 2):
        out = np.zeros((2, 2), dtype=complex)
        for x in range(2):
            for y in range(2):
                for j in range(2):
                    for l in range(2):
                        out[x, y] += chi[2 * j + x, 2 * l + y] * rho[j, l]
        return 2 * out
    if chi.shape == (16, 16) and rho.shape == (4, 4):
        out = np.zeros((4, 4), dtype=complex)
        for x1 in range(2):
            for x2 in range(2):
                for y1 in range(2):
                    for y2 in range(2):
                        for j1 in range(2):
                            for j2 in range(2):
                                for l1 in range(2):
                                    for l2 in range(2):
                                        r = 4 * (2 * j1 + x1) + (2 * j2 + x2)
                                        c = 4 * (2 * l1 + y1) + (2 * l2 + y2)
                                        out[2 * x1 + x2, 2 * y1 + y2] += (
                                            chi[r, c] * rho[2 * j1 + j2, 2 * l1 + l2]
                                        )
        return 4 * out
    raise ValueError("incompatible chi/state dimensions")


def sample_stats(channel, frame, shots_per_setting, seed):
    """Multinomial-sampled statistics per (i, a, j) cell (seeded)."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    exact = ConditionalStats.from_channel(channel, frame)
    counts = {}
    for i in SETTINGS:
        for a in OUTCOMES:
            for j in SETTINGS:
                p = exact[(i, a, j, +1)]
                n_p = int(rng.binomial(shots_per_setting, p))
                counts[(i, a, j, +1)] = n_p
                counts[(i, a, j, -1)] = shots_per_setting - n_p
    return ConditionalStats.from_counts(counts)

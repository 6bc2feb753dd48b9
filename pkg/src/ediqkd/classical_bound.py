"""Classical mimicry bound F_GC for the process-fidelity criterion.

A genuinely classical process carries one of 2^3 = 8 hidden property
assignments v = (v1, v2, v3) through a row-stochastic transition matrix
Omega; measurement outcomes read the assignment components directly.
Feeding the resulting conditional statistics through the same tomography
pipeline used on experimental data yields chi_GC, and the bound is

    F_GC = max tr(chi_GC chi_I)   s.t.  chi_GC >= 0, rows of Omega stochastic.

The objective is affine in Omega (the trace of the unnormalized chi is
constant), so the unconstrained polytope optimum sits at deterministic
vertices; enumeration with a branch-and-bound cutoff finds the best
PSD-feasible vertex, and a Frank-Wolfe refinement over the convex
feasible set can only improve on it.
"""

from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .tomography import (
    ConditionalStats,
    SETTINGS,
    chi_identity,
    process_matrix_1q,
    protocol_frame,
)

#: all 2^3 hidden-state assignments, lexicographic with +1 before -1
HIDDEN_ASSIGNMENTS = tuple(itertools.product((1, -1), repeat=3))

PSD_SLACK = 1e-9


@dataclass
class GcpModel:
    """Transition matrix plus preparation distribution over hidden states."""

    omega: np.ndarray
    prep: dict | None = None  # {(i, a): length-8 distribution}; None = uniform

    def __post_init__(self):
        om = np.asarray(self.omega, dtype=float)
        if om.shape != (8, 8):
            raise ValueError("omega must be 8x8")
        if om.min() < -1e-12:
            raise ValueError("omega has negative entries")
        if np.abs(om.sum(axis=1) - 1.0).max() > 1e-9:
            raise ValueError("omega rows must sum to 1")
        self.omega = om
        if self.prep is None:
            self.prep = uniform_prep()
        for (i, a), dist in self.prep.items():
            dist = np.asarray(dist, float)
            if abs(dist.sum() - 1.0) > 1e-9 or dist.min() < -1e-12:
                raise ValueError("prep distribution invalid")
            for xi, v in enumerate(HIDDEN_ASSIGNMENTS):
                if dist[xi] > 0 and v[i - 1] != a:
                    raise ValueError("prep supported on inconsistent assignment")


def uniform_prep():
    """Uniform distribution over the 4 assignments consistent with each preparation."""
    prep = {}
    for i in SETTINGS:
        for a in (+1, -1):
            consistent = [xi for xi, v in enumerate(HIDDEN_ASSIGNMENTS) if v[i - 1] == a]
            dist = np.zeros(8)
            dist[consistent] = 1 / len(consistent)
            prep[(i, a)] = dist
    return prep


def gcp_stats(model):
    """Conditional table of the hidden-state model; final readout is deterministic."""
    table = {}
    for i in SETTINGS:
        for a in (+1, -1):
            post = model.prep[(i, a)] @ model.omega
            for j in SETTINGS:
                p_plus = float(sum(post[mu] for mu, v in enumerate(HIDDEN_ASSIGNMENTS) if v[j - 1] == +1))
                table[(i, a, j, +1)] = p_plus
                table[(i, a, j, -1)] = 1.0 - p_plus
    return ConditionalStats(table)


def build_chi_gc(model, frame=None):
    """chi_GC of a hidden-state model under the given measurement frame."""
    frame = frame or protocol_frame()
    return process_matrix_1q(gcp_stats(model), frame)


def _chi_decomposition(frame):
    """Affine decomposition chi(Omega) = C0 + sum Omega[xi,mu] C[xi,mu] (unnormalized).

    The unnormalized chi always has trace 2, so F(Omega) is exactly
    affine: F = F0 + sum Omega[xi,mu] g[xi,mu].
    """
    prep = uniform_prep()

    def chi_unnorm_from_exps(exps):
        # exps: {(i, a, j): <V_j^B>}; reconstruction without the I/2 offset folded in
        rhos = {}
        for i in SETTINGS:
            for a in (+1, -1):
                rho = la.ID2.copy()
                for j, obs in zip(SETTINGS, frame.bob_obs):
                    rho = rho + exps[(i, a, j)] * obs
                rhos[(i, a)] = rho / 2
        i_hat = sum(rhos[(i, +1)] + rhos[(i, -1)] for i in SETTINGS) / len(SETTINGS)
        v_hat = [rhos[(i, +1)] - rhos[(i, -1)] for i in SETTINGS]
        return 0.5 * np.block(
            [
                [i_hat + v_hat[2], v_hat[0] + 1j * v_hat[1]],
                [v_hat[0] - 1j * v_hat[1], i_hat - v_hat[2]],
            ]
        )

    zero = {(i, a, j): 0.0 for i in SETTINGS for a in (+1, -1) for j in SETTINGS}
    c0 = chi_unnorm_from_exps(zero)
    cs = np.zeros((8, 8, 4, 4), dtype=complex)
    for xi in range(8):
        for mu in range(8):
            exps = dict(zero)
            for i in SETTINGS:
                for a in (+1, -1):
                    w = prep[(i, a)][xi]
                    if w == 0.0:
                        continue
                    for j in SETTINGS:
                        exps[(i, a, j)] += w * HIDDEN_ASSIGNMENTS[mu][j - 1]
            cs[xi, mu] = chi_unnorm_from_exps(exps) - c0
    return c0, cs


def fidelity_coefficients(frame):
    """(F0, g) with F(Omega) = F0 + sum_{xi,mu} g[xi,mu] Omega[xi,mu]."""
    c0, cs = _chi_decomposition(frame)
    chi_i = chi_identity()
    f0 = float(np.real(np.trace(c0 @ chi_i))) / 2
    g = np.real(np.einsum("xmij,ji->xm", cs, chi_i)) / 2
    return f0, g, c0, cs


@dataclass
class FgcResult:
    value: float
    model: GcpModel
    method: str
    vertices_checked: int
    aligned: bool = False


def _min_eig_chi(c0, cs, omega):
    chi = c0 + np.einsum("xm,xmij->ij", omega, cs)
    return float(np.linalg.eigvalsh((chi + chi.conj().T) / 2).min()) / 2  # trace-2 -> unit-trace scale


def _vertex_omega(choice):
    om = np.zeros((8, 8))
    om[np.arange(8), choice] = 1.0
    return om


def enumerate_fgc(frame, workers=1):
    """Exhaustive scan of all 8^8 deterministic transition maps.

    Depth-first over rows in rank order with an upper-bound cutoff; a
    branch is abandoned once its best possible fidelity cannot strictly
    exceed the best PSD-feasible vertex found so far.  Deterministic:
    ties resolve to the lexicographically first row choice in the
    original ordering.  `workers` partitions the first-row choices into
    disjoint ranges; results merge by max, so the outcome is identical
    for any worker count.
    """
    f0, g, c0, cs = fidelity_coefficients(frame)
    order = np.argsort(-g, axis=1, kind="stable")
    gs = np.take_along_axis(g, order, axis=1)
    suffix_max = np.concatenate([np.cumsum(gs.max(axis=1)[::-1])[::-1], [0.0]])

    best = {"F": -np.inf, "choice": None, "count": 0}

    def leaf_check(choice):
        best["count"] += 1
        om = _vertex_omega(choice)
        if _min_eig_chi(c0, cs, om) >= -PSD_SLACK:
            f = f0 + g[np.arange(8), choice].sum()
            if f > best["F"] + 1e-15 or (
                abs(f - best["F"]) <= 1e-15 and tuple(choice) < tuple(best["choice"])
            ):
                best["F"] = f
                best["choice"] = list(choice)

    def dfs(row, partial, choice):
        if row == 8:
            leaf_check(choice)
            return
        if f0 + partial + suffix_max[row] <= best["F"] + 1e-15 and best["choice"] is not None:
            return
        for k in range(8):
            mu = order[row, k]
            val = gs[row, k]
            if f0 + partial + val + suffix_max[row + 1] <= best["F"] + 1e-15 and best["choice"] is not None:
                break  # sorted descending: nothing further in this row can improve
            dfs(row + 1, partial + val, choice + [mu])

    first_row_parts = np.array_split(np.arange(8), max(1, workers))
    for part in first_row_parts:
        for k in part:
            mu = order[0, k]
            dfs(1, gs[0, k], [mu])

    om = _vertex_omega(np.array(best["choice"]))
    return FgcResult(best["F"], GcpModel(om), "enumerate", best["count"])


def refine_fgc(frame, seed_model, iters=200):
    """Frank-Wolfe ascent over the stochastic polytope intersected with the PSD cone.

    Linear objective: the away-step-free variant with a PSD backtracking
    line search is monotone, so the result never falls below the seed.
    """
    f0, g, c0, cs = fidelity_coefficients(frame)
    om = np.asarray(seed_model.omega, float).copy()

    def fval(o):
        return f0 + float((g * o).sum())

    cur = fval(om)
    for _ in range(iters):
        target = _vertex_omega(g.argmax(axis=1))
        d = target - om
        gain = float((g * d).sum())
        if gain <= 1e-13:
            break
        t_hi, t_lo = 1.0, 0.0
        if _min_eig_chi(c0, cs, om + d) >= -PSD_SLACK:
            t_lo = 1.0
        else:
            for _ in range(60):
                t = (t_hi + t_lo) / 2
                if _min_eig_chi(c0, cs, om + t * d) >= -PSD_SLACK:
                    t_lo = t
                else:
                    t_hi = t
        if t_lo <= 1e-15:
            break
        om = om + t_lo * d
        om = np.clip(om, 0.0, None)
        om /= om.sum(axis=1, keepdims=True)
        new = fval(om)
        if new <= cur + 1e-14:
            break
        cur = new
    return FgcResult(cur, GcpModel(om), "refine", 0)


def maximize_fgc(frame=None, method="both", workers=1):
    """Maximum classical-process fidelity and its achieving model.

    method: 'enumerate' scans deterministic vertices, 'refine' runs the
    convex ascent from the best vertex, 'both' returns the max of the two.
    The result satisfies all model constraints within 1e-7.
    """
    frame = frame or protocol_frame()
    if method not in ("enumerate", "refine", "both"):
        raise ValueError(f"unknown method {method!r}")
    enum = enumerate_fgc(frame, workers=workers)
    if method == "enumerate":
        return enum
    ref = refine_fgc(frame, enum.model)
    if method == "refine":
        return ref
    best = ref if ref.value > enum.value else enum
    return FgcResult(best.value, best.model, "both", enum.vertices_checked)


def certify(f_expt, f_gc):
    """Strict criterion F_expt > F_GC."""
    for name, v in (("F_expt", f_expt), ("F_GC", f_gc)):
        if not (-1e-6 <= v <= 1 + 1e-6):
            raise ValueError(f"{name} = {v} outside [0, 1]")
    return bool(f_expt > f_gc)


def cached_fgc(frame=None, cache_dir=None, workers=1):
    """F_GC with a small on-disk cache keyed by the frame hash."""
    frame = frame or protocol_frame()
    cache_dir = cache_dir or os.environ.get("EDIQKD_CACHE_DIR") or os.path.join(
        os.path.expanduser("~"), ".cache", "ediqkd"
    )
    path = os.path.join(cache_dir, f"fgc_{frame.key()}.json")
    if os.path.exists(path):
        with open(path) as f:
            data = json.load(f)
        return data["value"]
    res = maximize_fgc(frame, method="both", workers=workers)
    os.makedirs(cache_dir, exist_ok=True)
    with open(path, "w") as f:
        json.dump({"value": res.value, "omega": res.model.omega.tolist()}, f)
    return res.value

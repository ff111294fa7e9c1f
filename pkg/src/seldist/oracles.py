"""Reference constructions and brute-force solvers used to check the learner.

Nothing here is fast. The generators build workloads whose optimal error is
known (zero, or provably positive), ``exhaustive_opt`` computes the best
error over a discretised candidate support, and ``explicit_mwu`` runs the
multiplicative-weights loop with every point variable materialised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from .geometry import (DiscreteDistribution, Workload, candidate_grid, containment_matrix, empirical_error,
                       normalize_error_mode, selectivities)
from .mwu import MODE_CODES, _choose_u, mwu_constants, rhs_vector, update_weights
from .sampling import as_stream

MAX_OPT_BOXES = 5
MAX_OPT_DIM = 2
MAX_OPT_CANDIDATES = 30
MAX_L2_ASSIGNMENTS = 2_000_000


@dataclass(frozen=True)
class GroundTruth:
    """Hidden distribution that reproduces every selectivity of a generated workload."""

    distribution: DiscreteDistribution


def gen_consistent(n: int, d: int, k: int, rng=None):
    """Workload of ``n`` random boxes in ``[0, 1]^d`` labelled by a hidden ``k``-atom distribution.

    Selectivities are evaluated with :func:`selectivities`, so the hidden
    distribution has error exactly zero in every mode.

    Returns
    -------
    (Workload, GroundTruth)
    """
    if n < 1 or k < 1 or d < 1:
        raise ValueError("n, d and k must be positive")
    g = as_stream(rng).generator()
    points = g.random((k, d))
    weights = g.random(k) + 0.05
    weights /= weights.sum()
    corners = g.random((2, n, d))
    lo = corners.min(axis=0)
    hi = corners.max(axis=0)
    while True:
        D = DiscreteDistribution(points, weights, d=d)
        s = selectivities(D, (lo, hi))
        if np.all(s <= 1.0):
            break
        # roundoff pushed a subset sum past one; shave the weights by an ulp
        weights = np.nextafter(weights, 0.0)
    return Workload(lo, hi, s), GroundTruth(D)


def gen_cover_gadget(d: int, m: int) -> Workload:
    """Unit box with selectivity one, tiled by ``m`` slabs of selectivity zero along axis 0.

    Every point of the unit box lies in some slab, so every distribution
    misses at least one of the ``m + 1`` constraints.
    """
    if d < 1:
        raise ValueError("d must be positive")
    if m < 2:
        raise ValueError("the gadget needs at least two slabs")
    lo = np.zeros((m + 1, d))
    hi = np.ones((m + 1, d))
    for i in range(m):
        lo[i + 1, 0] = i / m
        hi[i + 1, 0] = (i + 1) / m
    s = np.zeros(m + 1)
    s[0] = 1.0
    return Workload(lo, hi, s)


def _signatures(Z: Workload) -> np.ndarray:
    """Distinct non-empty containment vectors realised by candidate points, shape ``(k, n)``."""
    P = candidate_grid(Z.rects, Z.d)
    M = containment_matrix(P, Z.lo, Z.hi)
    M = np.unique(M, axis=0)
    return M[M.any(axis=1)].astype(np.float64)


def _error_from_counts(M, counts, G, s, mode):
    sel = (counts @ M) / G
    dev = np.abs(sel - s)
    if mode == "l1":
        return float(dev.mean())
    if mode == "l2":
        return float((dev * dev).mean())
    return float(dev.max())


def exhaustive_opt(Z: Workload, p="l1", grid_weights: int = 200) -> float:
    """Smallest error over distributions on candidate points with weights in ``(1/G) Z``.

    Only mass placed in distinct containment classes matters, so the search
    runs over integer counts per class with total at most ``G``. ``l1`` and
    ``linf`` are solved exactly as integer programs; ``l2`` enumerates all
    count vectors. The result upper-bounds the optimal error; for ``l1`` it
    exceeds it by at most ``n / G``.

    Raises
    ------
    ValueError
        If the instance is outside the supported size (``n <= 5``, ``d <= 2``,
        at most 30 candidate points, bounded ``l2`` enumeration).
    """
    mode = normalize_error_mode(p)
    G = int(grid_weights)
    if G < 1:
        raise ValueError("grid_weights must be positive")
    if Z.n > MAX_OPT_BOXES or Z.d > MAX_OPT_DIM:
        raise ValueError(f"instance too large: n={Z.n}, d={Z.d} (limits n<={MAX_OPT_BOXES}, d<={MAX_OPT_DIM})")
    n_cand = candidate_grid(Z.rects, Z.d).shape[0]
    if n_cand > MAX_OPT_CANDIDATES:
        raise ValueError(f"instance too large: {n_cand} candidate points (limit {MAX_OPT_CANDIDATES})")
    M = _signatures(Z)
    s = np.asarray(Z.s)
    n, k = Z.n, M.shape[0]
    if k == 0:
        return _error_from_counts(np.zeros((1, n)), np.zeros(1), G, s, mode)
    if mode == "l2":
        total = math.comb(G + k, k)
        if total > MAX_L2_ASSIGNMENTS:
            raise ValueError(f"instance too large: {total} weight assignments to enumerate")
        best = math.inf
        for counts in _bounded_compositions(k, G):
            best = min(best, _error_from_counts(M, np.array(counts, dtype=np.float64), G, s, mode))
        return best
    # variables: k counts, then n deviations (l1) or one bound (linf)
    n_aux = n if mode == "l1" else 1
    c = np.concatenate((np.zeros(k), np.full(n_aux, 1.0 / n if mode == "l1" else 1.0)))
    rows = []
    lb = []
    ub = []
    for i in range(n):
        aux = np.zeros(n_aux)
        aux[i if mode == "l1" else 0] = 1.0
        # e_i >= sel_i - s_i  and  e_i >= s_i - sel_i
        rows.append(np.concatenate((-M[:, i] / G, aux)))
        lb.append(-s[i])
        ub.append(np.inf)
        rows.append(np.concatenate((M[:, i] / G, aux)))
        lb.append(s[i])
        ub.append(np.inf)
    rows.append(np.concatenate((np.ones(k), np.zeros(n_aux))))
    lb.append(0.0)
    ub.append(G)
    res = milp(
        c,
        constraints=LinearConstraint(np.array(rows), lb, ub),
        integrality=np.concatenate((np.ones(k), np.zeros(n_aux))),
        bounds=Bounds(np.zeros(k + n_aux), np.concatenate((np.full(k, G), np.full(n_aux, np.inf)))),
        options={"mip_rel_gap": 0.0},
    )
    if not res.success:
        raise RuntimeError(f"integer program failed: {res.message}")
    counts = np.round(res.x[:k])
    return _error_from_counts(M, counts, G, s, mode)


def _bounded_compositions(k, G):
    """All non-negative integer vectors of length ``k`` with sum at most ``G``."""
    if k == 1:
        for a in range(G + 1):
            yield (a,)
        return
    for a in range(G + 1):
        for rest in _bounded_compositions(k - 1, G - a):
            yield (a,) + rest


@dataclass
class ExplicitRun:
    feasible: bool
    trajectory: np.ndarray
    distribution: Optional[DiscreteDistribution]
    error: Optional[float]
    round: Optional[int] = None


def explicit_mwu(Z: Workload, alpha: float, delta: float, mode: str = "l1") -> ExplicitRun:
    """Multiplicative weights on the full linear program over all candidate points.

    Every candidate point has its own variable ``v_j``; each round sets the one
    with the largest positive coefficient ``psi_j`` (first index on ties) and
    evaluates the rows as an explicit matrix-vector product.
    """
    mode = normalize_error_mode(mode)
    n = Z.n
    eta, T = mwu_constants(delta, n)
    P = candidate_grid(Z.rects, Z.d)
    inside = containment_matrix(P, Z.lo, Z.hi).astype(np.float64)
    m = P.shape[0]
    A = np.zeros((2 * n + 1, n + m))
    A[0, :n] = -1.0 / n
    for k in range(n):
        A[2 * k + 1, k] = 1.0
        A[2 * k + 2, k] = 1.0
        A[2 * k + 1, n:] = -inside[:, k]
        A[2 * k + 2, n:] = inside[:, k]
    b = rhs_vector(Z.s, alpha)
    w = np.full(2 * n + 1, 1.0 / (2 * n + 1))
    traj = [w.copy()]
    chosen = []
    u = np.empty(n)
    for t in range(T):
        _choose_u(w, MODE_CODES[mode], float(alpha), n, u)
        psi = np.zeros(m)
        for j in range(m):
            acc = 0.0
            for k in range(n):
                if inside[j, k]:
                    acc += w[2 * k + 2] - w[2 * k + 1]
            psi[j] = acc
        j_star = int(np.argmax(psi))
        x = np.zeros(n + m)
        x[:n] = u * u if mode == "l2" else u
        if psi[j_star] > 0.0:
            x[n + j_star] = 1.0
        ax = A @ x
        if mode == "l2":
            # the aggregate row reads u**2, the box rows read u
            ax[1:] = A[1:, :n] @ u + A[1:, n:] @ x[n:]
        lhs = float(np.dot(w, ax))
        rhs = float(np.dot(w, b))
        if lhs < rhs - 1e-12:
            return ExplicitRun(False, np.array(traj), None, None, round=t)
        w = update_weights(w, ax - b, eta)
        traj.append(w.copy())
        if psi[j_star] > 0.0:
            chosen.append(j_star)
    if chosen:
        uniq, first, counts = np.unique(chosen, return_index=True, return_counts=True)
        order = np.argsort(first, kind="stable")
        D = DiscreteDistribution(P[uniq[order]], counts[order] / T, d=Z.d)
    else:
        D = DiscreteDistribution(np.zeros((0, Z.d)), np.zeros(0), d=Z.d)
    return ExplicitRun(True, np.array(traj), D, empirical_error(D, Z, mode))

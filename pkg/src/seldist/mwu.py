"""Multiplicative-weights decision procedure for "is error alpha achievable?".

The linear program has one aggregate row (index 0) and two rows per box:
row ``2k + 1`` is ``u_k - sum v >= -s_k`` and row ``2k + 2`` is
``u_k + sum v >= s_k`` (boxes numbered from 0). The point variables ``v``
live on arrangement cells and are never materialised: in every round at most
one of them is set, namely the cell of the deepest point under the weights
``w[2k + 2] - w[2k + 1]``, so a round only needs ``u`` and that point.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from numba import njit

from .depth import Arrangement, DeepestResult, cell_depth, deepest_point, grid_kernel, sweep2d_kernel
from .geometry import DiscreteDistribution, SignedWeightedRanges, Workload, containment_matrix, normalize_error_mode
from .sampling import (DEFAULT_C3, DEFAULT_MU_SCALE, WeightSplit, approx_deepest, as_stream,
                       default_repetitions, default_sample_size)

MODE_CODES = {"l1": 0, "l2": 1, "linf": 2}
SLACK_BOUND = 2.0
ABORT_TOL = 1e-12


def mwu_constants(delta: float, n: int):
    """Learning rate ``delta / 32`` and round count ``ceil(512 ln(2n + 1) / delta**2)``."""
    if not 0 < delta <= 1:
        raise ValueError(f"delta must lie in (0, 1]; got {delta}")
    if n < 1:
        raise ValueError("need at least one box")
    return delta / 32.0, int(math.ceil(512.0 * math.log(2 * n + 1) / (delta * delta)))


def rhs_vector(s, alpha: float) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    b = np.empty(2 * s.shape[0] + 1)
    b[0] = -alpha
    b[1::2] = -s
    b[2::2] = s
    return b


# ---------------------------------------------------------------------------
# per-round arithmetic, shared by the reference round and the jitted loop
# ---------------------------------------------------------------------------

@njit(cache=True)
def _phi(w, n, out):
    share = w[0] / n
    for k in range(n):
        out[k] = w[2 * k + 2] + w[2 * k + 1] - share


@njit(cache=True)
def _choose_u(w, mode, alpha, n, out):
    if mode == 0:
        share = w[0] / n
        for k in range(n):
            out[k] = 1.0 if w[2 * k + 2] + w[2 * k + 1] - share > 0.0 else 0.0
    elif mode == 1:
        w0 = w[0]
        for k in range(n):
            if w0 <= 0.0:
                out[k] = 1.0
            else:
                v = n * (w[2 * k + 2] + w[2 * k + 1]) / (2.0 * w0)
                out[k] = v if v < 1.0 else 1.0
    else:
        for k in range(n):
            out[k] = alpha


@njit(cache=True)
def _row_values(u, inside, present, mode, ax):
    n = u.shape[0]
    total = 0.0
    for k in range(n):
        total += u[k] * u[k] if mode == 1 else u[k]
    ax[0] = -total / n
    for k in range(n):
        hit = 1.0 if (present and inside[k]) else 0.0
        ax[2 * k + 1] = u[k] - hit
        ax[2 * k + 2] = u[k] + hit


@njit(cache=True)
def _dot(a, b):
    total = 0.0
    for q in range(a.shape[0]):
        total += a[q] * b[q]
    return total


@njit(cache=True)
def _update(w, slack, eta, out):
    total = 0.0
    for q in range(w.shape[0]):
        s = slack[q]
        if s > SLACK_BOUND + 1e-9 or s < -SLACK_BOUND - 1e-9:
            raise AssertionError("row slack outside [-2, 2]")
        out[q] = w[q] * (1.0 - eta * s)
        total += out[q]
    for q in range(w.shape[0]):
        out[q] /= total


def phi(w, n: int) -> np.ndarray:
    """Coefficient of ``u_i`` in the weighted constraint sum (linear error modes)."""
    w = np.ascontiguousarray(w, dtype=np.float64)
    out = np.empty(n)
    _phi(w, n, out)
    return out


def choose_u(w, mode: str, alpha: float, n: int) -> np.ndarray:
    """Per-box error allowances that maximise the weighted constraint sum.

    ``l1``: 1 where the coefficient is positive, else 0. ``l2``: the clipped
    maximiser of the concave quadratic. ``linf``: ``alpha`` everywhere.
    """
    mode = normalize_error_mode(mode)
    if mode == "linf" and not 0 <= alpha <= 1:
        raise ValueError(f"alpha must lie in [0, 1]; got {alpha}")
    w = np.ascontiguousarray(w, dtype=np.float64)
    out = np.empty(n)
    _choose_u(w, MODE_CODES[mode], float(alpha), n, out)
    return out


def update_weights(w, slacks, eta: float) -> np.ndarray:
    """One multiplicative step ``w_q (1 - eta * slack_q)``, renormalised to sum one."""
    w = np.ascontiguousarray(w, dtype=np.float64)
    slacks = np.ascontiguousarray(slacks, dtype=np.float64)
    out = np.empty_like(w)
    _update(w, slacks, float(eta), out)
    return out


@dataclass(frozen=True)
class MWUConfig:
    """How the deepest point is found in each round.

    ``exact_depth`` solves it exactly on the full workload; otherwise the
    median of ``repetitions`` signed random samples of ``sample_size`` boxes
    per sign is used (defaults derived from ``c3`` and ``mu_scale``).
    """

    exact_depth: bool = True
    depth_method: str = "auto"
    c3: float = DEFAULT_C3
    mu_scale: float = DEFAULT_MU_SCALE
    sample_size: Optional[int] = None
    repetitions: Optional[int] = None
    record_trajectory: bool = False
    chunk_rounds: int = 4096

    def resolved_method(self, d: int) -> str:
        if self.depth_method == "auto":
            return "sweep" if d == 2 else "grid"
        return self.depth_method

    def resolved_sampling(self, n: int, delta: float):
        r = self.sample_size or default_sample_size(delta, self.c3)
        mu = self.repetitions or default_repetitions(n, self.mu_scale)
        if mu % 2 == 0:
            raise ValueError(f"the number of repetitions must be odd; got {mu}")
        return r, mu


@dataclass
class RoundOutcome:
    u: np.ndarray
    deep_point: Optional[np.ndarray]
    deep_value: float
    lhs: float
    rhs: float
    row_values: np.ndarray
    slacks: np.ndarray

    @property
    def satisfied(self) -> bool:
        return not self.lhs < self.rhs - ABORT_TOL


def run_round(Z: Workload, w, b, mode: str, delta: float, cfg: MWUConfig = None,
              rng=None, exact: bool = None) -> RoundOutcome:
    """One round evaluated directly: the reference for the jitted loop."""
    cfg = cfg or MWUConfig()
    exact = cfg.exact_depth if exact is None else exact
    mode = normalize_error_mode(mode)
    w = np.ascontiguousarray(w, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    n = Z.n
    u = choose_u(w, mode, -b[0], n)
    split = WeightSplit.from_probability_vector(w)
    wr = SignedWeightedRanges(Z.lo, Z.hi, split.omega)
    method = cfg.resolved_method(Z.d)
    if exact:
        found = deepest_point(wr, method)
    else:
        r, mu = cfg.resolved_sampling(n, delta)
        found = approx_deepest(Z, split, delta, r=r, mu=mu, rng=rng, method=method)
    true_depth = depth_in_input_order(found.point, wr)
    present = true_depth > 0.0
    inside = containment_matrix(found.point[None, :], Z.lo, Z.hi)[0]
    ax = np.empty(2 * n + 1)
    _row_values(u, inside, present, MODE_CODES[mode], ax)
    return RoundOutcome(
        u=u,
        deep_point=found.point if present else None,
        deep_value=true_depth,
        lhs=_dot(w, ax),
        rhs=_dot(w, b),
        row_values=ax,
        slacks=ax - b,
    )


def depth_in_input_order(x, wr: SignedWeightedRanges) -> float:
    inside = containment_matrix(np.asarray(x, dtype=np.float64)[None, :], wr.lo, wr.hi)[0]
    total = 0.0
    for flag, om in zip(inside, wr.omega):
        if flag:
            total += om
    return total


# ---------------------------------------------------------------------------
# jitted round loop
# ---------------------------------------------------------------------------

@njit(cache=True)
def _mix_seed(base, t, h):
    x = np.uint64(base) ^ (np.uint64(t) * np.uint64(0x9E3779B97F4A7C15)) ^ (np.uint64(h) * np.uint64(0xBF58476D1CE4E5B9))
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    x = x ^ (x >> np.uint64(31))
    return np.uint32(x & np.uint64(0xFFFFFFFF))


@njit(cache=True)
def _solve(use_sweep, starts, ends, sizes, ptr, ev_rect, ev_sign, leaves, tree, lazy, buf, omega, cell):
    if use_sweep:
        return sweep2d_kernel(starts, ends, ptr, ev_rect, ev_sign, leaves, sizes[1], omega, tree, lazy, cell)
    return grid_kernel(starts, ends, sizes, omega, buf, cell)


@njit(cache=True)
def _sampled_deepest(t, seed, r, mu, w, n, use_sweep, starts, ends, sizes, ptr, ev_rect, ev_sign,
                     leaves, tree, lazy, buf, cell, cells_h, depths_h, omega_bar, p_plus, p_minus):
    s_plus = 0.0
    s_minus = 0.0
    for k in range(n):
        s_plus += w[2 * k + 2]
        s_minus += w[2 * k + 1]
    for k in range(n):
        p_plus[k] = w[2 * k + 2] / s_plus if s_plus > 0.0 else 0.0
        p_minus[k] = w[2 * k + 1] / s_minus if s_minus > 0.0 else 0.0
    for h in range(mu):
        np.random.seed(_mix_seed(seed, t, h))
        for k in range(n):
            omega_bar[k] = 0.0
        # the multiset enters the depth only through per-box multiplicities
        if s_plus > 0.0:
            c = np.random.multinomial(r, p_plus)
            for k in range(n):
                omega_bar[k] += c[k] * (s_plus / r)
        if s_minus > 0.0:
            c = np.random.multinomial(r, p_minus)
            for k in range(n):
                omega_bar[k] -= c[k] * (s_minus / r)
        depths_h[h] = _solve(use_sweep, starts, ends, sizes, ptr, ev_rect, ev_sign, leaves,
                             tree, lazy, buf, omega_bar, cell)
        for j in range(cell.shape[0]):
            cells_h[h, j] = cell[j]
    order = np.argsort(depths_h, kind="mergesort")
    xi = order[mu // 2]
    for j in range(cell.shape[0]):
        cell[j] = cells_h[xi, j]


@njit(cache=True)
def _mwu_chunk(t0, t1, w, b, alpha, eta, mode, starts, ends, sizes, use_sweep, ptr, ev_rect, ev_sign,
               leaves, tree, lazy, buf, sampled, r, mu, seed, cells_out, counters, stats, traj, record):
    """Runs rounds ``t0 .. t1 - 1``; returns the round that failed the check, or -1."""
    n = ends.shape[0]
    d = ends.shape[1]
    u = np.empty(n)
    omega = np.empty(n)
    ax = np.empty(2 * n + 1)
    slack = np.empty(2 * n + 1)
    nxt = np.empty(2 * n + 1)
    inside = np.empty(n, dtype=np.bool_)
    cell = np.zeros(d, dtype=np.int64)
    cells_h = np.zeros((mu, d), dtype=np.int64)
    depths_h = np.zeros(mu)
    omega_bar = np.zeros(n)
    p_plus = np.zeros(n)
    p_minus = np.zeros(n)
    for t in range(t0, t1):
        _choose_u(w, mode, alpha, n, u)
        for k in range(n):
            omega[k] = w[2 * k + 2] - w[2 * k + 1]
        if sampled:
            _sampled_deepest(t, seed, r, mu, w, n, use_sweep, starts, ends, sizes, ptr, ev_rect, ev_sign,
                             leaves, tree, lazy, buf, cell, cells_h, depths_h, omega_bar, p_plus, p_minus)
        else:
            _solve(use_sweep, starts, ends, sizes, ptr, ev_rect, ev_sign, leaves, tree, lazy, buf, omega, cell)
        # presence is decided by the depth against the full workload
        true_depth = cell_depth(cell, starts, ends, omega)
        present = true_depth > 0.0
        for k in range(n):
            hit = True
            for j in range(d):
                if cell[j] < starts[k, j] or cell[j] > ends[k, j]:
                    hit = False
                    break
            inside[k] = hit
        _row_values(u, inside, present, mode, ax)
        lhs = _dot(w, ax)
        rhs = _dot(w, b)
        if lhs < rhs - 1e-12:
            stats[2] = lhs
            stats[3] = rhs
            return t
        for q in range(2 * n + 1):
            slack[q] = ax[q] - b[q]
            a = abs(slack[q])
            if a > stats[0]:
                stats[0] = a
        _update(w, slack, eta, nxt)
        total = 0.0
        for q in range(2 * n + 1):
            w[q] = nxt[q]
            total += nxt[q]
        dev = abs(total - 1.0)
        if dev > stats[1]:
            stats[1] = dev
        if present:
            flat = 0
            for j in range(d):
                flat = flat * sizes[j] + cell[j]
            cells_out[counters[0]] = flat
            counters[0] += 1
        if record:
            for q in range(2 * n + 1):
                traj[t + 1, q] = w[q]
    return -1


class TimeLimitExceeded(RuntimeError):
    pass


@dataclass
class FeasibleOutput:
    """Result of ``T`` completed rounds.

    ``F`` lists one point per round that produced a positive-depth point (with
    repetition); ``distribution`` merges them with weight multiplicity / T.
    """

    F: np.ndarray
    T: int
    distribution: DiscreteDistribution
    rounds: int
    weights: np.ndarray
    max_abs_slack: float
    max_norm_deviation: float
    trajectory: Optional[np.ndarray] = None
    feasible: bool = field(default=True, init=False)

    def __bool__(self):
        return True


@dataclass
class Infeasible:
    """The weighted constraint sum could not be satisfied in round ``round``."""

    round: int
    lhs: float
    rhs: float
    rounds: int
    max_abs_slack: float
    max_norm_deviation: float
    trajectory: Optional[np.ndarray] = None
    feasible: bool = field(default=False, init=False)

    def __bool__(self):
        return False


def is_feasible(Z: Workload, alpha: float, delta: float, mode: str = "l1",
                cfg: MWUConfig = None, rng=None, deadline: float = None,
                arrangement: Arrangement = None) -> Union[FeasibleOutput, Infeasible]:
    """Decide whether empirical error ``alpha`` is achievable, up to ``delta / 2``.

    Returns a :class:`FeasibleOutput` whose distribution has error at most
    ``alpha + delta / 2``, or :class:`Infeasible` when some round shows that no
    distribution reaches ``alpha``. With sampled depth both statements hold
    with high probability only.

    ``deadline`` is a ``time.monotonic()`` value checked between chunks of
    rounds; passing it raises :class:`TimeLimitExceeded`.
    """
    if not 0 <= alpha <= 1:
        raise ValueError(f"alpha must lie in [0, 1]; got {alpha}")
    if not 0 < delta <= 1:
        raise ValueError(f"delta must lie in (0, 1]; got {delta}")
    cfg = cfg or MWUConfig()
    mode = normalize_error_mode(mode)
    n, d = Z.n, Z.d
    eta, T = mwu_constants(delta, n)
    arr = arrangement or Arrangement(Z.lo, Z.hi)
    method = cfg.resolved_method(d)
    use_sweep = method == "sweep"
    if use_sweep:
        ptr, ev_rect, ev_sign, leaves = arr.sweep_events()
        buf = np.zeros(1)
    else:
        ptr, ev_rect, ev_sign, leaves = (np.zeros(2, dtype=np.int64), np.zeros(1, dtype=np.int64),
                                         np.zeros(1), 1)
        buf = np.zeros(int(np.prod(arr.sizes + 1)))
    tree = np.zeros(2 * leaves)
    lazy = np.zeros(2 * leaves)
    if cfg.exact_depth:
        r, mu = 1, 1
    else:
        r, mu = cfg.resolved_sampling(n, delta)
    seed = as_stream(rng).int_seed()

    w = np.full(2 * n + 1, 1.0 / (2 * n + 1))
    b = rhs_vector(Z.s, alpha)
    cells = np.zeros(T, dtype=np.int64)
    counters = np.zeros(1, dtype=np.int64)
    stats = np.zeros(4)
    traj = np.zeros((T + 1, 2 * n + 1)) if cfg.record_trajectory else np.zeros((1, 1))
    if cfg.record_trajectory:
        traj[0] = w
    chunk = max(1, int(cfg.chunk_rounds))
    if deadline is not None:
        # start small and grow towards about a quarter second per chunk
        chunk = min(chunk, 16)
    t = 0
    failed = -1
    while t < T:
        t0, t1 = t, min(T, t + chunk)
        tick = time.monotonic()
        failed = _mwu_chunk(t, t1, w, b, float(alpha), eta, MODE_CODES[mode], arr.starts, arr.ends, arr.sizes,
                            use_sweep, ptr, ev_rect, ev_sign, leaves, tree, lazy, buf, not cfg.exact_depth,
                            r, mu, seed, cells, counters, stats, traj, cfg.record_trajectory)
        if failed >= 0:
            break
        t = t1
        if deadline is not None and t < T:
            now = time.monotonic()
            if now > deadline:
                raise TimeLimitExceeded(f"time limit reached after {t} of {T} rounds")
            per_round = max(now - tick, 1e-9) / (t1 - t0)
            chunk = int(min(max(1.0, 0.25 / per_round), 2.0 * chunk, cfg.chunk_rounds))
    trajectory = None
    if cfg.record_trajectory:
        trajectory = traj[: (failed if failed >= 0 else T) + 1].copy()
    if failed >= 0:
        return Infeasible(round=int(failed), lhs=float(stats[2]), rhs=float(stats[3]), rounds=int(failed) + 1,
                          max_abs_slack=float(stats[0]), max_norm_deviation=float(stats[1]),
                          trajectory=trajectory)
    chosen = cells[: counters[0]]
    F = np.array([arr.point(np.unravel_index(c, tuple(arr.sizes))) for c in chosen]).reshape(-1, d)
    uniq, first, counts = np.unique(chosen, return_index=True, return_counts=True)
    order = np.argsort(first, kind="stable")
    points = F[first[order]] if chosen.size else np.zeros((0, d))
    dist = DiscreteDistribution(points, counts[order] / T, d=d)
    return FeasibleOutput(F=F, T=T, distribution=dist, rounds=T, weights=w,
                          max_abs_slack=float(stats[0]), max_norm_deviation=float(stats[1]),
                          trajectory=trajectory)

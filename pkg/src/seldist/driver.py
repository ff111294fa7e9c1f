"""Top-level learner: binary search over error guesses, size reduction, sink completion."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .depth import Arrangement
from .geometry import DiscreteDistribution, Workload, empirical_error, normalize_error_mode
from .mwu import MWUConfig, TimeLimitExceeded, is_feasible
from .sampling import DEFAULT_C3, DEFAULT_MU_SCALE, as_stream

__all__ = [
    "LearnConfig", "LearnReport", "FeasibilityCall", "TimeLimitExceeded",
    "guess_list", "learn", "reduce_size", "add_sink", "default_reduce_reps", "reduction_sample_size",
]


@dataclass(frozen=True)
class LearnConfig:
    """Settings for :func:`learn`.

    Parameters
    ----------
    delta : float
        Additive slack over the best achievable error, in ``(0, 1]``.
    mode : {"l1", "l2", "linf"}
        Error measure.
    exact_depth : bool
        Solve every deepest-point query exactly instead of by sampling.
    reduce : bool
        Run at ``delta / 2`` and shrink the support to ``ceil(16 / delta**2)``.
    reduce_reps : int, optional
        Number of reduction draws; defaults to ``ceil(4 log2(n + 2))``.
    retries : int
        Extra re-randomised attempts after an infeasible answer (sampled depth only).
    sink : bool
        Complete the result to total weight one with an atom outside every box.
    time_limit : float, optional
        Wall-clock budget in seconds; exceeding it raises :class:`TimeLimitExceeded`.
    """

    delta: float = 0.1
    mode: str = "l1"
    seed: int = 0
    exact_depth: bool = False
    c3: float = DEFAULT_C3
    mu_scale: float = DEFAULT_MU_SCALE
    reduce: bool = True
    reduce_reps: Optional[int] = None
    retries: int = 0
    sink: bool = False
    depth_method: str = "auto"
    time_limit: Optional[float] = None

    def __post_init__(self):
        if not (isinstance(self.delta, (int, float)) and 0 < self.delta <= 1):
            raise ValueError(f"delta must lie in (0, 1]; got {self.delta}")
        object.__setattr__(self, "mode", normalize_error_mode(self.mode))
        if int(self.seed) < 0:
            raise ValueError("seed must be non-negative")
        if self.c3 <= 0 or self.mu_scale <= 0:
            raise ValueError("c3 and mu_scale must be positive")
        if self.reduce_reps is not None and self.reduce_reps < 1:
            raise ValueError("reduce_reps must be positive")
        if self.retries < 0:
            raise ValueError("retries must be non-negative")
        if self.depth_method not in ("auto", "sweep", "grid"):
            raise ValueError(f"unknown depth method {self.depth_method!r}")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ValueError("time_limit must be positive")

    def mwu_config(self) -> MWUConfig:
        return MWUConfig(exact_depth=self.exact_depth, depth_method=self.depth_method,
                         c3=self.c3, mu_scale=self.mu_scale)


@dataclass(frozen=True)
class FeasibilityCall:
    alpha: float
    feasible: bool
    rounds: int
    attempt: int


@dataclass
class LearnReport:
    distribution: DiscreteDistribution
    achieved_error: float
    alpha_final: float
    rounds_used: int
    support_size: int
    pre_reduction_support: int
    delta_internal: float
    calls: List[FeasibilityCall] = field(default_factory=list)
    max_abs_slack: float = 0.0
    max_norm_deviation: float = 0.0
    wall_time: float = 0.0


def guess_list(delta: float) -> np.ndarray:
    """Geometric ladder ``delta/2 * (1 + delta/2)**k`` below one, closed by exactly ``1.0``."""
    if not 0 < delta <= 1:
        raise ValueError(f"delta must lie in (0, 1]; got {delta}")
    out = []
    v = delta / 2.0
    while v < 1.0:
        out.append(v)
        v *= 1.0 + delta / 2.0
    out.append(1.0)
    return np.array(out)


def default_reduce_reps(n: int) -> int:
    return int(math.ceil(4.0 * math.log2(n + 2)))


def reduction_sample_size(delta: float) -> int:
    return int(math.ceil(16.0 / (delta * delta)))


def reduce_size(D: DiscreteDistribution, delta: float, Z: Workload, mode: str = "l1",
                reps: int = None, rng=None) -> DiscreteDistribution:
    """Shrink ``D`` to at most ``ceil(16 / delta**2)`` atoms by resampling.

    Each of ``reps`` draws takes that many i.i.d. atoms proportionally to their
    weights and gives every draw an equal share of ``D``'s total weight, so
    selectivities are unbiased. The draw with the smallest error wins (first
    one on ties).
    """
    if D.size == 0:
        raise ValueError("cannot reduce an empty distribution")
    if not 0 < delta <= 1:
        raise ValueError(f"delta must lie in (0, 1]; got {delta}")
    reps = default_reduce_reps(Z.n) if reps is None else int(reps)
    if reps < 1:
        raise ValueError("reps must be positive")
    m = reduction_sample_size(delta)
    total = D.weights.sum()
    cum = np.cumsum(D.weights)
    stream = as_stream(rng)
    best, best_err = None, math.inf
    for h in range(reps):
        u = stream.spawn(h).generator().random(m) * cum[-1]
        idx = np.minimum(np.searchsorted(cum, u, side="right"), D.size - 1)
        uniq, first, counts = np.unique(idx, return_index=True, return_counts=True)
        order = np.argsort(first, kind="stable")
        cand = DiscreteDistribution(D.points[uniq[order]], counts[order] * (total / m), d=D.d)
        err = empirical_error(cand, Z, mode)
        if err < best_err:
            best, best_err = cand, err
    return best


def add_sink(D: DiscreteDistribution, Z: Workload) -> DiscreteDistribution:
    """Put the missing mass on one point beyond every box, leaving all selectivities unchanged."""
    if D.d != Z.d:
        raise ValueError(f"distribution has dimension {D.d}, workload has {Z.d}")
    missing = 1.0 - D.total_weight
    if missing <= 0.0:
        return D
    sink = Z.hi.max(axis=0) + 1.0
    return DiscreteDistribution(np.vstack((D.points, sink[None, :])),
                                np.append(D.weights, missing), d=D.d)


def learn(Z: Workload, cfg: LearnConfig = None) -> LearnReport:
    """Fit a discrete distribution whose error is within ``cfg.delta`` of the best possible.

    Binary search over :func:`guess_list` keeps the distribution of the last
    feasible guess. With ``cfg.reduce`` the search runs at ``delta / 2`` and the
    winner is passed through :func:`reduce_size`.
    """
    cfg = cfg or LearnConfig()
    if Z.n < 1:
        raise ValueError("empty workload")
    started = time.monotonic()
    deadline = None if cfg.time_limit is None else started + cfg.time_limit
    delta_run = cfg.delta / 2.0 if cfg.reduce else cfg.delta
    E = guess_list(delta_run)
    mcfg = cfg.mwu_config()
    stream = as_stream(cfg.seed)
    arrangement = Arrangement(Z.lo, Z.hi)

    calls = []
    rounds = 0
    max_slack = 0.0
    max_dev = 0.0
    best = None
    lo, hi = 0, len(E) - 1
    step = 0
    while lo <= hi:
        mid = (lo + hi) // 2
        alpha = float(E[mid])
        attempts = 1 if cfg.exact_depth else 1 + cfg.retries
        for attempt in range(attempts):
            out = is_feasible(Z, alpha, delta_run, cfg.mode, mcfg, rng=stream.spawn(step, attempt),
                              deadline=deadline, arrangement=arrangement)
            rounds += out.rounds
            max_slack = max(max_slack, out.max_abs_slack)
            max_dev = max(max_dev, out.max_norm_deviation)
            calls.append(FeasibilityCall(alpha, bool(out), out.rounds, attempt))
            if out:
                break
        step += 1
        if out:
            best = (alpha, out.distribution)
            hi = mid - 1
        else:
            lo = mid + 1
    if best is None:
        raise RuntimeError("no error guess was feasible, including alpha = 1")
    alpha_final, D = best
    pre_support = D.size
    if cfg.reduce and D.size > 0:
        D = reduce_size(D, cfg.delta, Z, cfg.mode, cfg.reduce_reps, rng=stream.spawn(step, 0))
    if cfg.sink:
        D = add_sink(D, Z)
    return LearnReport(
        distribution=D,
        achieved_error=float(empirical_error(D, Z, cfg.mode)),
        alpha_final=alpha_final,
        rounds_used=rounds,
        support_size=D.size,
        pre_reduction_support=pre_support,
        delta_internal=delta_run,
        calls=calls,
        max_abs_slack=max_slack,
        max_norm_deviation=max_dev,
        wall_time=time.monotonic() - started,
    )

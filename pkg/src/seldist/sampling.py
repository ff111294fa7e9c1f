"""Random samples of weighted boxes and the median-of-samples deepest point."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .depth import DeepestResult, deepest_point
from .geometry import BoxesLike, DimensionError, SignedWeightedRanges, box_arrays

DEFAULT_C3 = 64.0
DEFAULT_MU_SCALE = 8.0


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream identified by a master seed and a key path.

    ``RngStream(s).spawn(t, h)`` always yields the same generator for the same
    ``(s, t, h)``; different keys give statistically independent streams.
    """

    seed: int
    key: tuple = ()

    def __post_init__(self):
        if int(self.seed) < 0:
            raise ValueError("seed must be non-negative")
        if any(int(k) < 0 for k in self.key):
            raise ValueError("stream keys must be non-negative integers")

    def spawn(self, *keys) -> "RngStream":
        return RngStream(self.seed, tuple(self.key) + tuple(int(k) for k in keys))

    def _sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence([int(self.seed), *self.key])

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(self._sequence())

    def int_seed(self) -> int:
        """A 32-bit seed derived from this stream, for the jitted samplers."""
        return int(self._sequence().generate_state(1, np.uint32)[0])


def as_stream(rng) -> RngStream:
    if isinstance(rng, RngStream):
        return rng
    if rng is None:
        return RngStream(0)
    return RngStream(int(rng))


@dataclass(frozen=True)
class WeightSplit:
    """Row weights of the two per-box constraints.

    ``wplus[i]`` belongs to the lower-bound row of box ``i``, ``wminus[i]`` to
    its upper-bound row; their difference is the box's signed depth weight.
    """

    wplus: np.ndarray
    wminus: np.ndarray

    def __post_init__(self):
        wp = np.asarray(self.wplus, dtype=np.float64).reshape(-1)
        wm = np.asarray(self.wminus, dtype=np.float64).reshape(-1)
        if wp.shape != wm.shape:
            raise DimensionError("wplus and wminus must have the same length")
        if np.any(wp < 0) or np.any(wm < 0):
            raise ValueError("split weights must be non-negative")
        if wp.sum() > 1 + 1e-9 or wm.sum() > 1 + 1e-9:
            raise ValueError("each half of the split must have total weight at most 1")
        object.__setattr__(self, "wplus", wp)
        object.__setattr__(self, "wminus", wm)

    @classmethod
    def from_probability_vector(cls, w) -> "WeightSplit":
        w = np.asarray(w, dtype=np.float64)
        return cls(wplus=w[2::2], wminus=w[1::2])

    @property
    def omega(self) -> np.ndarray:
        return self.wplus - self.wminus

    @property
    def n(self) -> int:
        return self.wplus.shape[0]


@dataclass(frozen=True)
class EpsApproxSample:
    """Signed multiset of sampled boxes.

    ``indices`` point into the sampled box list; the first ``n_plus`` entries
    come from the positive sample and carry weight ``|w+|_1 / r``, the rest
    carry ``-|w-|_1 / r``.
    """

    lo: np.ndarray
    hi: np.ndarray
    indices: np.ndarray
    omega_bar: np.ndarray
    n_plus: int

    @property
    def n_minus(self) -> int:
        return self.indices.shape[0] - self.n_plus

    def as_ranges(self) -> SignedWeightedRanges:
        return SignedWeightedRanges(self.lo, self.hi, self.omega_bar)


def weighted_sample(rects: BoxesLike, weights, r: int, rng) -> np.ndarray:
    """Draw ``r`` box indices i.i.d. with probability proportional to ``weights``.

    The multiset is returned as an index array into ``rects``. A zero total
    weight yields the empty multiset.
    """
    if r < 0:
        raise ValueError(f"sample size must be non-negative; got {r}")
    weights = np.asarray(weights, dtype=np.float64).reshape(-1)
    lo, _ = box_arrays(rects)
    if lo.shape[0] != weights.shape[0]:
        raise DimensionError(f"{weights.shape[0]} weights for {lo.shape[0]} boxes")
    if np.any(weights < 0):
        raise ValueError("sampling weights must be non-negative")
    cum = np.cumsum(weights)
    if r == 0 or weights.size == 0 or cum[-1] <= 0.0:
        return np.zeros(0, dtype=np.int64)
    u = as_stream(rng).generator().random(r) * cum[-1]
    idx = np.searchsorted(cum, u, side="right")
    return np.minimum(idx, weights.shape[0] - 1).astype(np.int64)


def build_eps_approx(ranges: BoxesLike, split: WeightSplit, r: int, rng) -> EpsApproxSample:
    if r < 1:
        raise ValueError(f"sample size must be positive; got {r}")
    lo, hi = box_arrays(ranges)
    if lo.shape[0] != split.n:
        raise DimensionError(f"split has {split.n} entries for {lo.shape[0]} boxes")
    stream = as_stream(rng)
    plus = weighted_sample(ranges, split.wplus, r, stream.spawn(0))
    minus = weighted_sample(ranges, split.wminus, r, stream.spawn(1))
    idx = np.concatenate((plus, minus))
    omega_bar = np.concatenate((
        np.full(plus.shape[0], split.wplus.sum() / r),
        np.full(minus.shape[0], -split.wminus.sum() / r),
    ))
    return EpsApproxSample(lo[idx], hi[idx], idx, omega_bar, int(plus.shape[0]))


def default_sample_size(delta: float, c3: float = DEFAULT_C3) -> int:
    return max(1, math.ceil(c3 / (delta * delta)))


def default_repetitions(n: int, mu_scale: float = DEFAULT_MU_SCALE) -> int:
    """Smallest odd integer at least ``mu_scale * log2(n + 2)``."""
    mu = max(1, math.ceil(mu_scale * math.log2(n + 2)))
    return mu if mu % 2 else mu + 1


@dataclass(frozen=True)
class ApproxDeepestResult(DeepestResult):
    """Median-trick result. ``value`` is the depth within the chosen sample."""

    sample: EpsApproxSample = None
    sample_depths: np.ndarray = None
    index: int = 0


def approx_deepest(ranges: BoxesLike, split: WeightSplit, delta: float, r: int = None,
                   mu: int = None, rng=None, c3: float = DEFAULT_C3,
                   method: str = "auto") -> ApproxDeepestResult:
    """Approximately deepest point of ``(ranges, split.omega)`` from ``mu`` random samples.

    Each repetition solves the deepest-point problem exactly on a signed
    sample of ``2r`` boxes; the point whose sample depth is the median of
    the ``mu`` values is returned.
    """
    if not 0 < delta <= 1:
        raise ValueError(f"delta must lie in (0, 1]; got {delta}")
    lo, _ = box_arrays(ranges)
    if r is None:
        r = default_sample_size(delta, c3)
    if mu is None:
        mu = default_repetitions(lo.shape[0])
    if r <= 0:
        raise ValueError(f"sample size must be positive; got {r}")
    if mu < 1 or mu % 2 == 0:
        raise ValueError(f"the number of repetitions must be a positive odd integer; got {mu}")
    stream = as_stream(rng)
    results = []
    samples = []
    for h in range(mu):
        sample = build_eps_approx(ranges, split, r, stream.spawn(h))
        results.append(deepest_point(sample.as_ranges(), method))
        samples.append(sample)
    depths = np.array([res.value for res in results])
    xi = int(np.argsort(depths, kind="stable")[mu // 2])
    return ApproxDeepestResult(results[xi].point, results[xi].value,
                               sample=samples[xi], sample_depths=depths, index=xi)


"""Geometric primitives: boxes, workloads, discrete distributions and depth.

All boxes are closed on every face. Coordinates are float64.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

ERROR_MODES = ("l1", "l2", "linf")


class DimensionError(ValueError):
    """Raised when the dimensions of a point, box or distribution disagree."""


@dataclass(frozen=True)
class Rect:
    """Axis-aligned closed box ``prod_j [lo[j], hi[j]]``."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) == 0 or len(lo) != len(hi):
            raise DimensionError(f"lo and hi must have the same positive length; got {len(lo)} and {len(hi)}")
        for j, (a, b) in enumerate(zip(lo, hi)):
            if not (np.isfinite(a) and np.isfinite(b)):
                raise ValueError(f"non-finite coordinate on axis {j}")
            if a > b:
                raise ValueError(f"lo[{j}]={a} > hi[{j}]={b}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def d(self) -> int:
        return len(self.lo)


@dataclass(frozen=True)
class TrainingSample:
    rect: Rect
    s: float

    def __post_init__(self):
        s = float(self.s)
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"selectivity must lie in [0, 1]; got {s}")
        object.__setattr__(self, "s", s)


def _as_float_matrix(a, name):
    arr = np.array(a, dtype=np.float64, ndmin=2)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be two-dimensional")
    return arr


@dataclass(frozen=True, eq=False)
class Workload:
    """A list of ``n`` boxes in ``d`` dimensions together with observed selectivities.

    Stored column-wise: ``lo`` and ``hi`` have shape ``(n, d)`` and ``s`` has
    shape ``(n,)``.
    """

    lo: np.ndarray
    hi: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        lo = _as_float_matrix(self.lo, "lo")
        hi = _as_float_matrix(self.hi, "hi")
        s = np.asarray(self.s, dtype=np.float64).reshape(-1)
        if lo.shape != hi.shape:
            raise DimensionError(f"lo and hi shapes differ: {lo.shape} vs {hi.shape}")
        if lo.shape[0] < 1 or lo.shape[1] < 1:
            raise ValueError("a workload needs at least one sample and one dimension")
        if s.shape[0] != lo.shape[0]:
            raise DimensionError(f"{s.shape[0]} selectivities for {lo.shape[0]} boxes")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)) and np.all(np.isfinite(s))):
            raise ValueError("workload contains non-finite values")
        bad = np.nonzero(np.any(lo > hi, axis=1))[0]
        if bad.size:
            raise ValueError(f"sample {bad[0]}: lo > hi")
        bad = np.nonzero((s < 0.0) | (s > 1.0))[0]
        if bad.size:
            raise ValueError(f"sample {bad[0]}: selectivity {s[bad[0]]} outside [0, 1]")
        for name, arr in (("lo", lo), ("hi", hi), ("s", s)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_samples(cls, samples: Iterable[TrainingSample]) -> "Workload":
        samples = list(samples)
        if not samples:
            raise ValueError("a workload needs at least one sample")
        d = samples[0].rect.d
        if any(z.rect.d != d for z in samples):
            raise DimensionError("all boxes in a workload must share one dimension")
        return cls(
            lo=[z.rect.lo for z in samples],
            hi=[z.rect.hi for z in samples],
            s=[z.s for z in samples],
        )

    @property
    def n(self) -> int:
        return self.lo.shape[0]

    @property
    def d(self) -> int:
        return self.lo.shape[1]

    def __len__(self):
        return self.n

    @property
    def rects(self) -> list:
        return [Rect(tuple(a), tuple(b)) for a, b in zip(self.lo, self.hi)]

    @property
    def samples(self) -> list:
        return [TrainingSample(r, s) for r, s in zip(self.rects, self.s)]

    def __eq__(self, other):
        if not isinstance(other, Workload):
            return NotImplemented
        return (
            self.lo.shape == other.lo.shape
            and np.array_equal(self.lo, other.lo)
            and np.array_equal(self.hi, other.hi)
            and np.array_equal(self.s, other.s)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Finitely many weighted points. Total weight may be below one."""

    points: np.ndarray
    weights: np.ndarray
    d: int = field(default=None)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        d = self.d
        if d is None:
            pts = np.asarray(self.points, dtype=np.float64)
            if pts.ndim != 2:
                raise DimensionError("cannot infer the dimension of an empty distribution")
            d = pts.shape[1]
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, d)
        if pts.shape[0] != w.shape[0]:
            raise DimensionError(f"{pts.shape[0]} points for {w.shape[0]} weights")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(w))):
            raise ValueError("distribution contains non-finite values")
        if np.any(w <= 0.0):
            raise ValueError("atom weights must be positive")
        if w.sum() > 1.0 + 1e-9:
            raise ValueError(f"total weight {w.sum()} exceeds 1")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "d", int(d))

    @classmethod
    def from_atoms(cls, atoms, d=None) -> "DiscreteDistribution":
        atoms = list(atoms)
        if not atoms and d is None:
            raise DimensionError("cannot infer the dimension of an empty distribution")
        if d is None:
            d = len(atoms[0][0])
        return cls(
            points=np.array([p for p, _ in atoms], dtype=np.float64).reshape(-1, d),
            weights=np.array([w for _, w in atoms], dtype=np.float64),
            d=d,
        )

    @property
    def atoms(self) -> list:
        return [(tuple(p), float(w)) for p, w in zip(self.points, self.weights)]

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    def __len__(self):
        return self.size

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def merged(self) -> "DiscreteDistribution":
        """Merge atoms with identical coordinates, keeping first-occurrence order."""
        if self.size == 0:
            return self
        _, first, inverse = np.unique(self.points, axis=0, return_index=True, return_inverse=True)
        inverse = inverse.reshape(-1)
        totals = np.zeros(first.shape[0])
        np.add.at(totals, inverse, self.weights)
        order = np.argsort(first, kind="stable")
        return DiscreteDistribution(self.points[first[order]], totals[order], d=self.d)

    def __eq__(self, other):
        if not isinstance(other, DiscreteDistribution):
            return NotImplemented
        return (
            self.d == other.d
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class SignedWeightedRanges:
    """Boxes carrying real, possibly negative, weights."""

    lo: np.ndarray
    hi: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=np.float64).reshape(-1)
        n = omega.shape[0]
        lo = np.asarray(self.lo, dtype=np.float64)
        hi = np.asarray(self.hi, dtype=np.float64)
        if n == 0:
            d = lo.shape[1] if lo.ndim == 2 else 1
            lo = lo.reshape(0, d)
            hi = hi.reshape(0, d)
        if lo.ndim != 2 or lo.shape != hi.shape or lo.shape[0] != n:
            raise DimensionError("lo, hi and omega disagree in shape")
        if np.any(lo > hi):
            raise ValueError("lo > hi in a weighted range")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "omega", omega)

    @classmethod
    def from_rects(cls, rects: Sequence[Rect], omega, d=None) -> "SignedWeightedRanges":
        rects = list(rects)
        if d is None:
            d = rects[0].d if rects else 1
        lo = np.array([r.lo for r in rects], dtype=np.float64).reshape(-1, d)
        hi = np.array([r.hi for r in rects], dtype=np.float64).reshape(-1, d)
        return cls(lo, hi, omega)

    @property
    def n(self) -> int:
        return self.omega.shape[0]

    @property
    def d(self) -> int:
        return self.lo.shape[1]

    @property
    def rects(self) -> list:
        return [Rect(tuple(a), tuple(b)) for a, b in zip(self.lo, self.hi)]


BoxesLike = Union[Workload, SignedWeightedRanges, Sequence[Rect], tuple]


def box_arrays(boxes: BoxesLike, d=None):
    """Return ``(lo, hi)`` arrays of shape ``(n, d)`` for any box container."""
    if isinstance(boxes, (Workload, SignedWeightedRanges)):
        return boxes.lo, boxes.hi
    if isinstance(boxes, Rect):
        boxes = [boxes]
    if (isinstance(boxes, tuple) and len(boxes) == 2
            and all(isinstance(a, np.ndarray) and a.ndim == 2 for a in boxes)):
        lo, hi = (np.asarray(a, dtype=np.float64) for a in boxes)
        if lo.shape != hi.shape or (d is not None and lo.shape[1] != d):
            raise DimensionError("boxes have inconsistent dimensions")
        return lo, hi
    boxes = list(boxes)
    if not boxes:
        d = 1 if d is None else d
        return np.zeros((0, d)), np.zeros((0, d))
    dim = boxes[0].d
    if any(r.d != dim for r in boxes) or (d is not None and d != dim):
        raise DimensionError("boxes have inconsistent dimensions")
    return (
        np.array([r.lo for r in boxes], dtype=np.float64),
        np.array([r.hi for r in boxes], dtype=np.float64),
    )


def contains(r: Rect, x) -> bool:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != r.d:
        raise DimensionError(f"point of dimension {x.shape[0]} against box of dimension {r.d}")
    return all(a <= v <= b for a, v, b in zip(r.lo, x, r.hi))


def containment_matrix(points, lo, hi) -> np.ndarray:
    """Boolean ``(m, n)`` matrix, entry ``[k, i]`` true iff point k lies in box i."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != lo.shape[1]:
        raise DimensionError("points and boxes have different dimensions")
    p = points[:, None, :]
    return np.all((lo[None, :, :] <= p) & (p <= hi[None, :, :]), axis=2)


def selectivities(D: DiscreteDistribution, boxes: BoxesLike) -> np.ndarray:
    """Selectivity of every box in ``boxes`` under ``D``."""
    lo, hi = box_arrays(boxes, D.d)
    if lo.shape[1] != D.d:
        raise DimensionError(f"distribution has dimension {D.d}, boxes have {lo.shape[1]}")
    if D.size == 0 or lo.shape[0] == 0:
        return np.zeros(lo.shape[0])
    out = np.zeros(lo.shape[0])
    # chunked to bound the (m, n, d) temporary
    step = max(1, 2_000_000 // max(1, lo.shape[0] * D.d))
    for start in range(0, D.size, step):
        inside = containment_matrix(D.points[start:start + step], lo, hi)
        out += D.weights[start:start + step] @ inside
    return out


def selectivity(D: DiscreteDistribution, r: Rect) -> float:
    if r.d != D.d:
        raise DimensionError(f"distribution has dimension {D.d}, box has {r.d}")
    return float(selectivities(D, [r])[0])


def _error_from_residuals(res: np.ndarray, p) -> float:
    p = normalize_error_mode(p)
    res = np.abs(res)
    if p == "l1":
        return float(res.mean())
    if p == "l2":
        return float(np.mean(res * res))
    return float(res.max())


def normalize_error_mode(p) -> str:
    key = str(p).lower()
    aliases = {"1": "l1", "l1": "l1", "2": "l2", "l2": "l2", "inf": "linf", "linf": "linf"}
    if key not in aliases:
        raise ValueError(f"unknown error mode {p!r}; expected one of {ERROR_MODES}")
    return aliases[key]


def empirical_error(D: DiscreteDistribution, Z: Workload, p="l1") -> float:
    """Mean ``|s_D(R_i) - s_i|**p`` for p in {1, 2}, or the maximum deviation for ``linf``."""
    if D.d != Z.d:
        raise DimensionError(f"distribution has dimension {D.d}, workload has {Z.d}")
    return _error_from_residuals(selectivities(D, Z) - Z.s, p)


def depth(x, wr: SignedWeightedRanges) -> float:
    """Signed weighted count of the boxes containing ``x``, summed in input order."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if wr.n and x.shape[0] != wr.d:
        raise DimensionError(f"point of dimension {x.shape[0]} against boxes of dimension {wr.d}")
    inside = np.all((wr.lo <= x) & (x <= wr.hi), axis=1)
    total = 0.0
    for flag, w in zip(inside, wr.omega):
        if flag:
            total += w
    return float(total)


def axis_representatives(coords: np.ndarray) -> np.ndarray:
    """One coordinate per open elementary interval of a sorted, deduplicated axis.

    ``len(coords) + 1`` values: left of the minimum, midpoints, right of the maximum.
    """
    if coords.shape[0] == 0:
        return np.zeros(1)
    mids = (coords[:-1] + coords[1:]) / 2.0
    return np.concatenate(([coords[0] - 1.0], mids, [coords[-1] + 1.0]))


def candidate_grid(rects: BoxesLike, d=None) -> np.ndarray:
    """Representative points covering every full-dimensional cell of the arrangement.

    Returns an ``(m, d)`` array in lexicographic order. With no boxes, a single
    point at the origin.
    """
    lo, hi = box_arrays(rects, d)
    dim = lo.shape[1]
    if lo.shape[0] == 0:
        return np.zeros((1, dim))
    axes = [axis_representatives(np.unique(np.concatenate((lo[:, j], hi[:, j])))) for j in range(dim)]
    return np.array(list(itertools.product(*axes)), dtype=np.float64).reshape(-1, dim)

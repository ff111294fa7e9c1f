"""Maximum weighted-depth points in an arrangement of boxes.

Two exact solvers share one coordinate-compressed view of the boxes
(:class:`Arrangement`): a grid scan for any dimension and a sweepline over
x-slabs with a range-add / max segment tree over y for the plane. Cells are
the full-dimensional cells of the compressed grid; every box covers a
contiguous block of elementary intervals on each axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .geometry import DimensionError, SignedWeightedRanges, axis_representatives

GRID_TIE_TOL = 1e-9


@dataclass(frozen=True)
class DeepestResult:
    point: np.ndarray
    value: float


class Arrangement:
    """Per-axis compression of a fixed list of boxes.

    On axis ``j`` the sorted distinct endpoints ``c_0 < ... < c_{k-1}`` split
    the line into ``k + 1`` open elementary intervals, numbered from 0. Box
    ``i`` covers intervals ``starts[i, j] .. ends[i, j]`` (inclusive); the
    range is empty for zero-width boxes.
    """

    def __init__(self, lo, hi):
        lo = np.asarray(lo, dtype=np.float64)
        hi = np.asarray(hi, dtype=np.float64)
        if lo.ndim != 2 or lo.shape != hi.shape:
            raise DimensionError("lo and hi must both have shape (n, d)")
        self.n, self.d = lo.shape
        self.coords = []
        starts = np.empty((self.n, self.d), dtype=np.int64)
        ends = np.empty((self.n, self.d), dtype=np.int64)
        for j in range(self.d):
            c = np.unique(np.concatenate((lo[:, j], hi[:, j])))
            self.coords.append(c)
            starts[:, j] = np.searchsorted(c, lo[:, j]) + 1
            ends[:, j] = np.searchsorted(c, hi[:, j])
        self.starts = starts
        self.ends = ends
        self.sizes = np.array([c.shape[0] + 1 for c in self.coords], dtype=np.int64)
        self.reps = [axis_representatives(c) for c in self.coords]
        self._events = None

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.sizes))

    def point(self, cell) -> np.ndarray:
        return np.array([self.reps[j][int(c)] for j, c in enumerate(cell)], dtype=np.float64)

    def sweep_events(self):
        """Event lists for the plane sweep, grouped by x-interval (CSR layout)."""
        if self._events is None:
            if self.d != 2:
                raise DimensionError("the sweep needs two-dimensional boxes")
            live = np.nonzero(np.all(self.starts <= self.ends, axis=1))[0]
            pos = np.concatenate((self.starts[live, 0], self.ends[live, 0] + 1))
            rect = np.concatenate((live, live))
            sign = np.concatenate((np.ones(live.shape[0]), -np.ones(live.shape[0])))
            order = np.argsort(pos, kind="stable")
            # event positions lie in [1, sizes[0] - 1]
            counts = np.bincount(pos, minlength=int(self.sizes[0]))
            ptr = np.zeros(int(self.sizes[0]) + 1, dtype=np.int64)
            np.cumsum(counts, out=ptr[1:])
            leaves = 1
            while leaves < self.sizes[1]:
                leaves *= 2
            self._events = (ptr, rect[order].astype(np.int64), sign[order], leaves)
        return self._events


# ---------------------------------------------------------------------------
# jitted kernels
# ---------------------------------------------------------------------------

@njit(cache=True)
def cell_depth(cell, starts, ends, omega):
    """Depth of one cell, summed over boxes in input order."""
    total = 0.0
    n, d = starts.shape
    for i in range(n):
        inside = True
        for j in range(d):
            c = cell[j]
            if c < starts[i, j] or c > ends[i, j]:
                inside = False
                break
        if inside:
            total += omega[i]
    return total


@njit(cache=True)
def _seg_apply(tree, lazy, v, val, size):
    tree[v] += val
    if v < size:
        lazy[v] += val


@njit(cache=True)
def _seg_pull(tree, lazy, v):
    while v > 1:
        v >>= 1
        a = tree[2 * v]
        b = tree[2 * v + 1]
        tree[v] = (a if a >= b else b) + lazy[v]


@njit(cache=True)
def _seg_add(tree, lazy, size, l, r, val):
    # adds val on leaves [l, r)
    l += size
    r += size
    l0 = l
    r0 = r - 1
    while l < r:
        if l & 1:
            _seg_apply(tree, lazy, l, val, size)
            l += 1
        if r & 1:
            r -= 1
            _seg_apply(tree, lazy, r, val, size)
        l >>= 1
        r >>= 1
    _seg_pull(tree, lazy, l0)
    _seg_pull(tree, lazy, r0)


@njit(cache=True)
def sweep2d_kernel(starts, ends, ptr, ev_rect, ev_sign, leaves, n_y, omega, tree, lazy, cell):
    """Writes the deepest cell into ``cell`` and returns its exact depth."""
    for v in range(leaves, 2 * leaves):
        tree[v] = 0.0 if v - leaves < n_y else -np.inf
    for v in range(leaves - 1, 0, -1):
        a = tree[2 * v]
        b = tree[2 * v + 1]
        tree[v] = a if a >= b else b
    for v in range(2 * leaves):
        lazy[v] = 0.0
    best = -np.inf
    bx = 0
    by = 0
    n_x = ptr.shape[0] - 1
    for ix in range(n_x):
        for e in range(ptr[ix], ptr[ix + 1]):
            i = ev_rect[e]
            w = omega[i]
            if w != 0.0:
                _seg_add(tree, lazy, leaves, starts[i, 1], ends[i, 1] + 1, ev_sign[e] * w)
        if tree[1] > best:
            best = tree[1]
            v = 1
            while v < leaves:
                v = 2 * v if tree[2 * v] >= tree[2 * v + 1] else 2 * v + 1
            bx = ix
            by = v - leaves
    cell[0] = bx
    cell[1] = by
    value = cell_depth(cell, starts, ends, omega)
    if value < 0.0:
        # accumulated roundoff picked a cell that is really non-positive
        cell[0] = 0
        cell[1] = 0
        value = 0.0
    return value


@njit(cache=True)
def grid_kernel(starts, ends, sizes, omega, buf, cell):
    """Writes the lexicographically first deepest cell into ``cell`` and returns its depth.

    ``buf`` must hold ``prod(sizes + 1)`` floats.
    """
    n, d = starts.shape
    ext = sizes + 1
    stride = np.empty(d, dtype=np.int64)
    acc = 1
    for j in range(d - 1, -1, -1):
        stride[j] = acc
        acc *= ext[j]
    total = acc
    for k in range(total):
        buf[k] = 0.0
    for i in range(n):
        w = omega[i]
        if w == 0.0:
            continue
        empty = False
        for j in range(d):
            if starts[i, j] > ends[i, j]:
                empty = True
        if empty:
            continue
        for mask in range(1 << d):
            idx = 0
            sign = 1.0
            for j in range(d):
                if (mask >> j) & 1:
                    idx += (ends[i, j] + 1) * stride[j]
                    sign = -sign
                else:
                    idx += starts[i, j] * stride[j]
            buf[idx] += sign * w
    for j in range(d):
        s = stride[j]
        e = ext[j]
        for k in range(total):
            if (k // s) % e >= 1:
                buf[k] += buf[k - s]
    best = -np.inf
    idx_cell = np.empty(d, dtype=np.int64)
    for k in range(total):
        ok = True
        for j in range(d):
            if (k // stride[j]) % ext[j] >= sizes[j]:
                ok = False
                break
        if ok and buf[k] > best:
            best = buf[k]
    # exact tie-break among near-maximal cells
    best_exact = -np.inf
    for k in range(total):
        ok = True
        for j in range(d):
            c = (k // stride[j]) % ext[j]
            if c >= sizes[j]:
                ok = False
                break
            idx_cell[j] = c
        if not ok or buf[k] < best - GRID_TIE_TOL:
            continue
        v = cell_depth(idx_cell, starts, ends, omega)
        if v > best_exact:
            best_exact = v
            for j in range(d):
                cell[j] = idx_cell[j]
    return best_exact


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------

class DepthSolver:
    """Reusable exact deepest-point solver for one fixed list of boxes.

    Only the weights change between calls, so the compression, the event
    lists and the scratch buffers are built once.
    """

    def __init__(self, arrangement: Arrangement, method: str = "auto"):
        if method == "auto":
            method = "sweep" if arrangement.d == 2 else "grid"
        if method not in ("sweep", "grid"):
            raise ValueError(f"unknown depth method {method!r}")
        if method == "sweep" and arrangement.d != 2:
            raise DimensionError("the sweep needs two-dimensional boxes")
        self.arrangement = arrangement
        self.method = method
        self.cell = np.zeros(arrangement.d, dtype=np.int64)
        if method == "sweep":
            ptr, ev_rect, ev_sign, leaves = arrangement.sweep_events()
            self._events = (ptr, ev_rect, ev_sign, leaves)
            self._tree = np.zeros(2 * leaves)
            self._lazy = np.zeros(2 * leaves)
        else:
            self._buf = np.zeros(int(np.prod(arrangement.sizes + 1)))

    def solve(self, omega) -> DeepestResult:
        omega = np.ascontiguousarray(omega, dtype=np.float64)
        a = self.arrangement
        if omega.shape[0] != a.n:
            raise DimensionError(f"{omega.shape[0]} weights for {a.n} boxes")
        if self.method == "sweep":
            ptr, ev_rect, ev_sign, leaves = self._events
            value = sweep2d_kernel(a.starts, a.ends, ptr, ev_rect, ev_sign, leaves,
                                   int(a.sizes[1]), omega, self._tree, self._lazy, self.cell)
        else:
            value = grid_kernel(a.starts, a.ends, a.sizes, omega, self._buf, self.cell)
        return DeepestResult(a.point(self.cell), float(value))


def deepest_point_grid(wr: SignedWeightedRanges) -> DeepestResult:
    """Exact deepest point by scanning every cell of the compressed grid.

    Ties go to the lexicographically smallest representative point; the
    empty region outside all boxes is always a candidate, so the value is
    never negative.
    """
    if wr.n == 0:
        return DeepestResult(np.zeros(wr.d), 0.0)
    return DepthSolver(Arrangement(wr.lo, wr.hi), "grid").solve(wr.omega)


def deepest_point_sweep2d(wr: SignedWeightedRanges) -> DeepestResult:
    """Exact deepest point in the plane by sweeping x-slabs.

    Achieves the same value as :func:`deepest_point_grid`; the point itself
    may be a different cell of equal depth.
    """
    if wr.d != 2:
        raise DimensionError(f"the sweep needs two-dimensional boxes; got d={wr.d}")
    if wr.n == 0:
        return DeepestResult(np.zeros(2), 0.0)
    return DepthSolver(Arrangement(wr.lo, wr.hi), "sweep").solve(wr.omega)


def deepest_point(wr: SignedWeightedRanges, method: str = "auto") -> DeepestResult:
    if method == "auto":
        method = "sweep" if wr.d == 2 else "grid"
    if method == "sweep":
        return deepest_point_sweep2d(wr)
    if method == "grid":
        return deepest_point_grid(wr)
    raise ValueError(f"unknown depth method {method!r}")

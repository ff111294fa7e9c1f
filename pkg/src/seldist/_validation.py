"""Input checks shared by the estimator front end."""

from __future__ import annotations

import numpy as np
from sklearn.utils import check_array, check_consistent_length

from .geometry import DimensionError


def check_boxes(X, d=None):
    """Validate a box matrix and split it into ``(lo, hi)``.

    Each row of ``X`` is ``[lo_1, ..., lo_d, hi_1, ..., hi_d]``.
    """
    X = check_array(X, dtype=np.float64, ensure_all_finite=True)
    if X.shape[1] % 2:
        raise DimensionError(f"box rows need an even number of columns, got {X.shape[1]}")
    k = X.shape[1] // 2
    if d is not None and k != d:
        raise DimensionError(f"expected boxes of dimension {d}, got {k}")
    lo, hi = X[:, :k], X[:, k:]
    bad = np.nonzero(np.any(lo > hi, axis=1))[0]
    if bad.size:
        raise ValueError(f"row {bad[0]}: lo exceeds hi")
    return np.ascontiguousarray(lo), np.ascontiguousarray(hi)


def check_selectivities(y, X):
    y = check_array(y, ensure_2d=False, dtype=np.float64, ensure_all_finite=True)
    if y.ndim != 1:
        raise ValueError("selectivities must be one-dimensional")
    check_consistent_length(X, y)
    if np.any((y < 0.0) | (y > 1.0)):
        raise ValueError("selectivities must lie in [0, 1]")
    return y

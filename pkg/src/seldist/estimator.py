"""scikit-learn style wrapper around :func:`learn`."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_boxes, check_selectivities
from .driver import LearnConfig, learn
from .geometry import Workload, empirical_error, selectivities


class SelectivityEstimator(RegressorMixin, BaseEstimator):
    """Predict box selectivities from a learned discrete distribution.

    Parameters
    ----------
    delta : float, default=0.1
        Additive slack over the best achievable training error.
    error : {"l1", "l2", "linf"}, default="l1"
        Error measure minimised during fitting and reported by ``score``.
    exact_depth : bool, default=False
        Solve deepest-point queries exactly instead of by sampling.
    reduce : bool, default=True
        Shrink the support after fitting.
    sink : bool, default=False
        Complete the distribution to total weight one.
    random_state : int, default=0
        Seed for every random choice.

    Attributes
    ----------
    distribution_ : DiscreteDistribution
    report_ : LearnReport
    n_features_in_ : int
        Twice the box dimension.

    Examples
    --------
    >>> import numpy as np
    >>> X = np.array([[0.0, 1.0]])
    >>> est = SelectivityEstimator(delta=0.5, exact_depth=True).fit(X, [1.0])
    >>> float(est.predict(X)[0]) >= 0.5
    True
    """

    def __init__(self, delta=0.1, error="l1", exact_depth=False, reduce=True, sink=False,
                 c3=64.0, mu_scale=8.0, retries=0, random_state=0):
        self.delta = delta
        self.error = error
        self.exact_depth = exact_depth
        self.reduce = reduce
        self.sink = sink
        self.c3 = c3
        self.mu_scale = mu_scale
        self.retries = retries
        self.random_state = random_state

    def _config(self):
        return LearnConfig(delta=self.delta, mode=self.error, seed=self.random_state,
                           exact_depth=self.exact_depth, c3=self.c3, mu_scale=self.mu_scale,
                           reduce=self.reduce, retries=self.retries, sink=self.sink)

    def fit(self, X, y):
        lo, hi = check_boxes(X)
        y = check_selectivities(y, lo)
        self.report_ = learn(Workload(lo, hi, y), self._config())
        self.distribution_ = self.report_.distribution
        self.n_features_in_ = 2 * lo.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "distribution_")
        lo, hi = check_boxes(X, self.distribution_.d)
        return selectivities(self.distribution_, (lo, hi))

    def score(self, X, y, sample_weight=None):
        """Negative empirical error, so that larger is better."""
        if sample_weight is not None:
            raise ValueError("sample weights are not supported")
        check_is_fitted(self, "distribution_")
        lo, hi = check_boxes(X, self.distribution_.d)
        y = check_selectivities(y, lo)
        return -empirical_error(self.distribution_, Workload(lo, hi, y), self.error)

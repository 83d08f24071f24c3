"""Ranks and rank-based pseudo-observations.

Each scheme maps the rank ``r`` of an observation among ``n`` to a point of
``(0, 1)`` summarising the ``r``-th uniform order statistic, whose law is
``Beta(r, n - r + 1)``:

========================  ===============================================
``canonical``             mean, ``r / (n + 1)``
``median``                approximate median, ``(r - 1/3) / (n + 1/3)``
``median-exact``          exact median of ``Beta(r, n - r + 1)``
``mode``                  ``(r - 1) / (n - 1)``; the extreme ranks fall
                          back to the mean so that values stay inside
``midpoint``              Hazen's plotting position, ``(r - 1/2) / n``
========================  ===============================================
"""

from __future__ import annotations

import enum
import logging

import numpy as np
from scipy import special
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_bivariate
from .exceptions import NumericalError

__all__ = [
    "Scheme",
    "ranks",
    "rank_margin",
    "scheme_values",
    "pseudo_observations",
    "PseudoObservations",
    "beta_median",
]

logger = logging.getLogger(__name__)


class Scheme(str, enum.Enum):
    CANONICAL = "canonical"
    MEDIAN = "median"
    MEDIAN_EXACT = "median-exact"
    MODE = "mode"
    MIDPOINT = "midpoint"

    @classmethod
    def parse(cls, value) -> "Scheme":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        try:
            return cls(key)
        except ValueError:
            names = ", ".join(s.value for s in cls)
            raise ValueError(f"unknown pseudo-observation scheme {value!r}; expected one of {names}") from None


def rank_margin(x, tie_seed: int = 0) -> np.ndarray:
    """Ranks ``1..n`` of a 1-d array, smallest first.

    Tied values are ordered by a pseudo-random key drawn from ``tie_seed``, so
    the result is always a permutation and is the same on every run.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    order = np.argsort(x, kind="stable")
    sorted_x = x[order]
    if n > 1 and np.any(sorted_x[1:] == sorted_x[:-1]):
        n_tied = int(np.count_nonzero(sorted_x[1:] == sorted_x[:-1]))
        logger.warning("broke %d tie(s) with seed %d", n_tied, tie_seed)
        keys = np.random.default_rng(tie_seed).random(n)
        order = np.lexsort((keys, x))
    out = np.empty(n, dtype=np.int64)
    out[order] = np.arange(1, n + 1)
    return out


def ranks(X, tie_seed: int = 0) -> np.ndarray:
    """Column-wise ranks of an ``(n, 2)`` sample, as an integer array of the same shape."""
    X = check_bivariate(X, min_samples=2)
    return np.column_stack(
        [rank_margin(X[:, 0], tie_seed), rank_margin(X[:, 1], tie_seed + 1)]
    )


def beta_median(r, n) -> np.ndarray:
    """Median of ``Beta(r, n - r + 1)``, refined with Newton steps on the incomplete beta."""
    r = np.asarray(r, dtype=float)
    a, b = r, n - r + 1.0
    x = special.betaincinv(a, b, 0.5)
    log_beta = special.betaln(a, b)
    for _ in range(50):
        density = np.exp((a - 1.0) * np.log(x) + (b - 1.0) * np.log1p(-x) - log_beta)
        step = (special.betainc(a, b, x) - 0.5) / density
        x = np.clip(x - step, x / 2.0, (1.0 + x) / 2.0)
        if np.all(np.abs(step) < 1e-15):
            return x
    if np.any(np.abs(special.betainc(a, b, x) - 0.5) > 1e-12):
        raise NumericalError("beta median did not converge", n=n)
    return x


def scheme_values(r, n: int, scheme) -> np.ndarray:
    """Pseudo-observation value for rank(s) ``r`` out of ``n``."""
    scheme = Scheme.parse(scheme)
    r = np.asarray(r, dtype=float)
    if n < 2:
        raise ValueError(f"need at least 2 observations, got {n}")
    if scheme is Scheme.CANONICAL:
        return r / (n + 1.0)
    if scheme is Scheme.MEDIAN:
        return (r - 1.0 / 3.0) / (n + 1.0 / 3.0)
    if scheme is Scheme.MEDIAN_EXACT:
        return beta_median(r, n)
    if scheme is Scheme.MODE:
        out = (r - 1.0) / (n - 1.0)
        out = np.where(r == 1, 1.0 / (n + 1.0), out)
        return np.where(r == n, n / (n + 1.0), out)
    return (r - 0.5) / n


def pseudo_observations(X, scheme="canonical", *, from_ranks: bool = False, tie_seed: int = 0):
    """Map a bivariate sample (or its rank matrix) to pseudo-observations."""
    R = np.asarray(X) if from_ranks else ranks(X, tie_seed)
    return scheme_values(R, R.shape[0], scheme)


class PseudoObservations(TransformerMixin, BaseEstimator):
    """Transform a bivariate sample to pseudo-observations on the unit square.

    The transform is stateless: ranks are taken within whatever sample is
    passed to :meth:`transform`.

    Parameters
    ----------
    scheme : {'canonical', 'median', 'median-exact', 'mode', 'midpoint'}, default='canonical'
    tie_seed : int, default=0
        Seed for the tie-breaking order.

    Examples
    --------
    >>> import numpy as np
    >>> PseudoObservations(scheme="midpoint").fit_transform(np.array([[3.1, 0.], [1.0, 2.], [2.2, 1.]]))
    array([[0.83333333, 0.16666667],
           [0.16666667, 0.83333333],
           [0.5       , 0.5       ]])
    """

    def __init__(self, scheme="canonical", tie_seed=0):
        self.scheme = scheme
        self.tie_seed = tie_seed

    def fit(self, X, y=None):
        X = check_bivariate(X, min_samples=2)
        self.scheme_ = Scheme.parse(self.scheme)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        return pseudo_observations(X, self.scheme, tie_seed=self.tie_seed)

"""scikit-learn style front end to the estimators."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import copulas
from ._validation import check_bivariate
from .copulas import CopulaFamily
from .estimators import FitResult, Method, fit_mm_rho, fit_mm_tau, fit_mpl
from .inference import attach_standard_error
from .pseudo_obs import ranks, scheme_values

__all__ = ["estimate", "CopulaEstimator"]


def estimate(family, X, method="mpl-mode", *, compute_se=True, tie_seed=0,
             from_ranks=False) -> FitResult:
    """Estimate the copula parameter of raw bivariate data ``X`` (or its ranks).

    Parameters
    ----------
    family : {'clayton', 'gumbel', 'plackett'}
    X : array-like of shape (n_samples, 2)
        Observations on the original scale; only their ranks are used.
    method : str, default='mpl-mode'
        One of ``mpl-canonical``, ``mpl-median``, ``mpl-mode``,
        ``mpl-midpoint``, ``mm-tau`` or ``mm-rho``.
    compute_se : bool, default=True
        Attach a standard error and 95% interval.
    """
    family = CopulaFamily.parse(family)
    method = Method.parse(method)
    R = np.asarray(X, dtype=np.int64) if from_ranks else ranks(X, tie_seed)
    if method.is_mpl:
        U = scheme_values(R, R.shape[0], method.scheme)
        fit = fit_mpl(family, U, method=method)
        if compute_se:
            attach_standard_error(fit, U=U)
        return fit
    fit = fit_mm_tau(family, R, from_ranks=True) if method is Method.MM_TAU else \
        fit_mm_rho(family, R, from_ranks=True)
    if compute_se:
        attach_standard_error(fit, R=R)
    return fit


class CopulaEstimator(BaseEstimator):
    """Rank-based estimator of a one-parameter bivariate copula.

    Parameters
    ----------
    family : {'clayton', 'gumbel', 'plackett'}, default='clayton'
    method : str, default='mpl-mode'
        Pseudo-likelihood with canonical, median, mode or midpoint
        pseudo-observations (``mpl-*``), or inversion of Kendall's tau /
        Spearman's rho (``mm-tau``, ``mm-rho``).
    compute_se : bool, default=True
    tie_seed : int, default=0
        Seed for the tie-breaking order when ranking.

    Attributes
    ----------
    theta_ : float
    se_ : float or None
    fit_result_ : FitResult
    copula_ : Copula

    Examples
    --------
    >>> from mplcop import Copula, CopulaEstimator
    >>> X = Copula("gumbel", 2.0).sample(500, seed=1)
    >>> est = CopulaEstimator(family="gumbel", method="mpl-mode").fit(X)
    >>> round(est.theta_, 2)
    1.94
    >>> est.theta_ - 1.96 * est.se_ < 2.0 < est.theta_ + 1.96 * est.se_
    True
    """

    def __init__(self, family="clayton", method="mpl-mode", compute_se=True, tie_seed=0):
        self.family = family
        self.method = method
        self.compute_se = compute_se
        self.tie_seed = tie_seed

    def fit(self, X, y=None):
        X = check_bivariate(X, min_samples=2)
        self.n_features_in_ = 2
        self.fit_result_ = estimate(
            self.family, X, self.method, compute_se=self.compute_se, tie_seed=self.tie_seed
        )
        self.theta_ = self.fit_result_.theta_hat
        self.se_ = self.fit_result_.se
        self.copula_ = copulas.Copula(self.family, self.theta_)
        return self

    def _pseudo(self, X):
        X = check_bivariate(X, min_samples=2)
        scheme = Method.parse(self.method).scheme or "canonical"
        return scheme_values(ranks(X, self.tie_seed), X.shape[0], scheme)

    def score_samples(self, X):
        """Log-density of the fitted copula at the pseudo-observations of ``X``."""
        check_is_fitted(self, "theta_")
        U = self._pseudo(X)
        return self.copula_.log_pdf(U[:, 0], U[:, 1])

    def score(self, X, y=None):
        """Mean log pseudo-likelihood of ``X`` under the fitted copula."""
        return float(np.mean(self.score_samples(X)))

    def sample(self, n_samples=1, random_state=0):
        check_is_fitted(self, "theta_")
        return self.copula_.sample(n_samples, seed=random_state)

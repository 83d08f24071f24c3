"""Rank-based estimation of bivariate copulas with order-statistic pseudo-observations."""

from .copula_estimator import CopulaEstimator, estimate
from .copulas import (
    Copula,
    CopulaFamily,
    rho_of_theta,
    tau_of_theta,
    theta_of_rho,
    theta_of_tau,
)
from .estimators import FitResult, Method, kendall_tau_n, spearman_rho_n
from .pseudo_obs import PseudoObservations, Scheme, pseudo_observations, ranks

__version__ = "0.1.0"

__all__ = [
    "Copula",
    "CopulaEstimator",
    "CopulaFamily",
    "FitResult",
    "Method",
    "PseudoObservations",
    "Scheme",
    "estimate",
    "kendall_tau_n",
    "pseudo_observations",
    "ranks",
    "rho_of_theta",
    "spearman_rho_n",
    "tau_of_theta",
    "theta_of_rho",
    "theta_of_tau",
]

"""Standard errors and Wald intervals for the six estimators.

MPL fits get the rank-based sandwich variance of Genest, Ghoudi and Rivest
(1995): the score at each pseudo-observation is augmented by two terms that
account for the margins having been estimated from ranks, and the variance of
that influence function is scaled by the inverse squared information.  All
derivatives are central finite differences of the log-density.

MM fits get a delta-method error: the jackknife standard deviation of the rank
coefficient times the derivative of the inverse dependence map.
"""

from __future__ import annotations

import math

import numpy as np

from . import copulas
from .copulas import CopulaFamily
from .estimators import FitResult, Method, concordant_partners
from .exceptions import SingularInformationError

__all__ = [
    "Z_95",
    "mpl_standard_error",
    "mm_standard_error",
    "jackknife_tau",
    "jackknife_rho",
    "confidence_interval",
    "attach_standard_error",
]

Z_95 = 1.96
_H_U = 1e-5


def _theta_step(theta):
    return max(1e-5, 1e-4 * abs(theta))


def _centre(family, theta, h):
    # Keep theta - h inside the domain; estimates pinned at the lower edge are
    # differentiated one step inside it.
    lo = 1.0 if CopulaFamily.parse(family) is CopulaFamily.GUMBEL else 0.0
    return max(theta, lo + h * (1.0 + 1e-9)) if theta - h <= lo else theta


def _influence(family, theta, U):
    family = CopulaFamily.parse(family)
    U = np.asarray(U, dtype=float)
    u, v = U[:, 0], U[:, 1]
    n = u.shape[0]
    h = _theta_step(theta)
    theta = _centre(family, theta, h)
    hu = np.minimum(_H_U, np.minimum(u, 1.0 - u) / 2.0)
    hv = np.minimum(_H_U, np.minimum(v, 1.0 - v) / 2.0)

    def ell(t, a, b):
        return copulas.log_pdf(family, t, a, b)

    up, mid, down = ell(theta + h, u, v), ell(theta, u, v), ell(theta - h, u, v)
    score = (up - down) / (2.0 * h)
    information = -float(np.mean(up) - 2.0 * np.mean(mid) + np.mean(down)) / (h * h)

    score_u = (
        ell(theta + h, u + hu, v) - ell(theta + h, u - hu, v)
        - ell(theta - h, u + hu, v) + ell(theta - h, u - hu, v)
    ) / (4.0 * h * hu)
    score_v = (
        ell(theta + h, u, v + hv) - ell(theta + h, u, v - hv)
        - ell(theta - h, u, v + hv) + ell(theta - h, u, v - hv)
    ) / (4.0 * h * hv)

    def upper_mean(coord, values):
        # (1/n) * sum over k with coord[k] >= coord[i] of values[k]
        order = np.argsort(coord, kind="stable")
        tail = np.cumsum(values[order][::-1])[::-1]
        out = np.empty(n)
        out[order] = tail / n
        return out

    correction = upper_mean(u, score_u) + upper_mean(v, score_v)
    return score + correction, information


def mpl_standard_error(family, theta_hat: float, U) -> float:
    """Sandwich standard error of an MPL estimate from its pseudo-observations.

    Raises
    ------
    SingularInformationError
        If the finite-difference information is not positive.
    """
    influence, information = _influence(family, theta_hat, U)
    if not (math.isfinite(information) and information > 0.0):
        raise SingularInformationError(
            "pseudo-likelihood information is not positive", information=information
        )
    n = influence.shape[0]
    variance = float(np.var(influence)) / information**2
    return math.sqrt(variance / n)


def jackknife_tau(R) -> tuple[float, np.ndarray]:
    """Jackknife standard deviation of Kendall's tau and the leave-one-out values."""
    R = np.asarray(R)
    n = R.shape[0]
    partners = concordant_partners(R)
    total = partners.sum() / 2.0
    loo = 4.0 * (total - partners) / ((n - 1.0) * (n - 2.0)) - 1.0
    return _jackknife_sd(loo), loo


def jackknife_rho(R) -> tuple[float, np.ndarray]:
    """Jackknife standard deviation of Spearman's rho and the leave-one-out values."""
    R = np.asarray(R)
    n = R.shape[0]
    r1 = R[:, 0].astype(float)
    r2 = R[:, 1].astype(float)

    def sum_above(key, values):
        # for each i: sum of values[j] over j with key[j] > key[i]
        order = np.argsort(key, kind="stable")
        sorted_values = values[order]
        suffix = np.concatenate([np.cumsum(sorted_values[::-1])[::-1][1:], [0.0]])
        out = np.empty(n)
        out[order] = suffix
        return out

    lower_left = (concordant_partners(R) - (n + 1 - R[:, 0] - R[:, 1])) / 2.0
    upper_right = n + 1.0 - r1 - r2 + lower_left
    cross = float(np.dot(r1, r2))
    reduced = cross - r1 * r2 - sum_above(r2, r1) - sum_above(r1, r2) + upper_right
    m = n - 1.0
    loo = 12.0 * reduced / (m * (m + 1.0) * (m - 1.0)) - 3.0 * (m + 1.0) / (m - 1.0)
    return _jackknife_sd(loo), loo


def _jackknife_sd(loo):
    n = loo.shape[0]
    return math.sqrt((n - 1.0) / n * float(np.sum((loo - loo.mean()) ** 2)))


def mm_standard_error(family, method, R, theta_hat: float) -> float:
    """Delta-method standard error of an MM estimate from the sample's rank matrix."""
    family = CopulaFamily.parse(family)
    method = Method.parse(method)
    if method is Method.MM_TAU:
        sd, _ = jackknife_tau(R)
        coefficient = copulas.tau_of_theta
    elif method is Method.MM_RHO:
        sd, _ = jackknife_rho(R)
        coefficient = copulas.rho_of_theta
    else:
        raise ValueError(f"{method.value} is not a method-of-moments estimator")
    h = _theta_step(theta_hat)
    theta = _centre(family, theta_hat, h)
    slope = (coefficient(family, theta + h) - coefficient(family, theta - h)) / (2.0 * h)
    if not slope > 0.0:
        raise SingularInformationError("dependence map is flat at the estimate", slope=slope)
    return sd / slope


def confidence_interval(fit: FitResult, z: float = Z_95) -> tuple[float, float]:
    """Wald interval ``theta_hat +/- z * se``; not clipped to the parameter domain."""
    if fit.se is None:
        raise ValueError("fit has no standard error")
    return fit.theta_hat - z * fit.se, fit.theta_hat + z * fit.se


def attach_standard_error(fit: FitResult, *, U=None, R=None) -> FitResult:
    """Fill ``se`` and the 95% interval in place.

    MPL fits need their pseudo-observations ``U``; MM fits need the rank
    matrix ``R``.  Clamped MM fits are left without a standard error.
    """
    if fit.method.is_mpl:
        fit.se = mpl_standard_error(fit.family, fit.theta_hat, U)
    elif fit.clamped:
        fit.notes.append("no standard error for a clamped estimate")
        return fit
    else:
        fit.se = mm_standard_error(fit.family, fit.method, R, fit.theta_hat)
    fit.ci_low, fit.ci_high = confidence_interval(fit)
    return fit

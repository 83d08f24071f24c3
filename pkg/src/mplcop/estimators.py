"""Point estimators of a one-parameter bivariate copula.

Maximum pseudo-likelihood (MPL) maximises the copula log-density summed over
pseudo-observations; the four MPL variants differ only in the pseudo-observation
scheme.  The two method-of-moments (MM) estimators invert the family's Kendall's
tau or Spearman's rho at the sample coefficient.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import copulas
from ._validation import check_bivariate, check_unit_square
from .copulas import CopulaFamily
from .exceptions import InversionRangeError
from .pseudo_obs import Scheme, ranks

__all__ = [
    "Method",
    "FitResult",
    "log_pseudo_likelihood",
    "fit_mpl",
    "fit_mm_tau",
    "fit_mm_rho",
    "kendall_tau_n",
    "spearman_rho_n",
    "concordant_partners",
]

MIN_MPL_SAMPLES = 10
# Half-width of the first search window, in transformed parameter units.
_WINDOW = 2.0
_XATOL = 1e-10
_MAXITER = 200


class Method(str, enum.Enum):
    MPL_CANONICAL = "mpl-canonical"
    MPL_MEDIAN = "mpl-median"
    MPL_MODE = "mpl-mode"
    MPL_MIDPOINT = "mpl-midpoint"
    MM_TAU = "mm-tau"
    MM_RHO = "mm-rho"

    @classmethod
    def parse(cls, value) -> "Method":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        try:
            return cls(key)
        except ValueError:
            names = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown estimation method {value!r}; expected one of {names}") from None

    @property
    def is_mpl(self) -> bool:
        return self.value.startswith("mpl")

    @property
    def scheme(self) -> Scheme | None:
        if not self.is_mpl:
            return None
        return Scheme.parse(self.value[len("mpl-"):])


@dataclass
class FitResult:
    """Outcome of one estimation.

    ``se``, ``ci_low`` and ``ci_high`` stay ``None`` until a standard error is
    attached (see :func:`mplcop.inference.attach_standard_error`).
    ``at_boundary`` marks an MPL optimum pinned to the edge of the numerical
    parameter range; ``clamped`` marks an MM coefficient outside the family's
    attainable range.
    """

    method: Method
    family: CopulaFamily
    theta_hat: float
    n: int
    converged: bool = True
    iterations: int = 0
    log_pl_at_opt: float | None = None
    coefficient: float | None = None
    at_boundary: bool = False
    clamped: bool = False
    se: float | None = None
    ci_low: float | None = None
    ci_high: float | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def usable_se(self) -> bool:
        return self.se is not None and math.isfinite(self.se)


# --------------------------------------------------------------------------
# Rank coefficients


def _count_lower_left(r1, r2, block=2048):
    """For each i, the number of j with r1[j] < r1[i] and r2[j] < r2[i].

    Points are visited in r1 order; each block is counted against the sorted
    r2 values of all earlier blocks with ``searchsorted`` and against itself by
    broadcasting.
    """
    n = r1.shape[0]
    order = np.argsort(r1, kind="stable")
    y = r2[order]
    counts = np.empty(n, dtype=np.int64)
    seen = np.empty(0, dtype=y.dtype)
    for start in range(0, n, block):
        chunk = y[start:start + block]
        earlier = np.searchsorted(seen, chunk, side="left")
        within = np.tril(chunk[None, :] < chunk[:, None], k=-1).sum(axis=1)
        counts[start:start + block] = earlier + within
        seen = np.sort(np.concatenate([seen, chunk]), kind="stable")
    out = np.empty(n, dtype=np.int64)
    out[order] = counts
    return out


def concordant_partners(R) -> np.ndarray:
    """Per observation, how many others form a concordant pair with it (tie-free ranks)."""
    R = np.asarray(R)
    n = R.shape[0]
    lower_left = _count_lower_left(R[:, 0], R[:, 1])
    return 2 * lower_left + n + 1 - R[:, 0] - R[:, 1]


def _tau_from_ranks(R) -> float:
    n = R.shape[0]
    concordant_pairs = concordant_partners(R).sum() // 2
    return 4.0 * concordant_pairs / (n * (n - 1.0)) - 1.0


def _rho_from_ranks(R) -> float:
    n = R.shape[0]
    s = float(np.dot(R[:, 0].astype(float), R[:, 1].astype(float)))
    return 12.0 * s / (n * (n + 1.0) * (n - 1.0)) - 3.0 * (n + 1.0) / (n - 1.0)


def kendall_tau_n(X, *, from_ranks: bool = False) -> float:
    """Sample Kendall's tau, counting concordant pairs in O(n log n)."""
    R = np.asarray(X) if from_ranks else ranks(X)
    return _tau_from_ranks(R)


def spearman_rho_n(X, *, from_ranks: bool = False) -> float:
    """Sample Spearman's rho from the rank cross-product."""
    R = np.asarray(X) if from_ranks else ranks(X)
    return _rho_from_ranks(R)


# --------------------------------------------------------------------------
# Maximum pseudo-likelihood


def log_pseudo_likelihood(family, theta: float, U) -> float:
    """Sum of copula log-densities over the pseudo-observations ``U``."""
    family = CopulaFamily.parse(family)
    theta = copulas.check_theta(family, theta)
    U = np.asarray(U, dtype=float)
    return float(np.sum(copulas.log_pdf(family, theta, U[:, 0], U[:, 1])))


def _to_search(family, theta):
    if family is CopulaFamily.GUMBEL:
        return math.log(max(theta - 1.0, 0.0) + 1e-10)
    return math.log(theta)


def _from_search(family, s):
    if family is CopulaFamily.GUMBEL:
        return 1.0 + math.exp(s)
    return math.exp(s)


def _search_limits(family):
    lo, hi = copulas.theta_bounds(family)
    if family is CopulaFamily.GUMBEL:
        return math.log(1e-10), math.log(hi - 1.0)
    return math.log(lo), math.log(hi)


def _start_value(family, U):
    # Plackett's rho has a closed form while its tau needs quadrature; the
    # start only has to land near the optimum.
    if family is CopulaFamily.PLACKETT:
        coefficient, inverse = spearman_rho_n(U), copulas.theta_of_rho
    else:
        coefficient, inverse = kendall_tau_n(U), copulas.theta_of_tau
    lo, hi = copulas.theta_bounds(family)
    try:
        theta = inverse(family, coefficient)
    except InversionRangeError:
        theta = lo if coefficient <= 0 else hi
    return min(max(theta, lo), hi)


def fit_mpl(family, U, *, method=Method.MPL_CANONICAL, start: float | None = None) -> FitResult:
    """Maximise the log pseudo-likelihood over the family's parameter.

    The search runs on ``log(theta)`` (Clayton, Plackett) or
    ``log(theta - 1)`` (Gumbel): a bounded golden-section/parabolic search in
    a window around ``start`` (the Kendall's tau inversion by default), slid
    along while the optimum sits on a window edge, then polished with Newton
    steps on the finite-difference score.

    An optimum on the edge of :func:`mplcop.copulas.theta_bounds` is pinned to
    that edge and reported with ``at_boundary=True``.
    """
    family = CopulaFamily.parse(family)
    method = Method.parse(method)
    U = check_unit_square(U, min_samples=1)
    n = U.shape[0]
    if n < MIN_MPL_SAMPLES:
        raise ValueError(f"MPL needs at least {MIN_MPL_SAMPLES} observations, got {n}")
    u, v = U[:, 0], U[:, 1]
    log_pdf = copulas._LOG_PDF[family]
    uc = np.clip(u, copulas.EPS, 1 - copulas.EPS)
    vc = np.clip(v, copulas.EPS, 1 - copulas.EPS)

    def neg_mean(s):
        value = -float(np.mean(log_pdf(_from_search(family, s), uc, vc)))
        return value if math.isfinite(value) else math.inf

    s_min, s_max = _search_limits(family)
    theta0 = _start_value(family, U) if start is None else float(start)
    s0 = min(max(_to_search(family, theta0), s_min + _WINDOW), s_max - _WINDOW)
    lo, hi = s0 - _WINDOW, s0 + _WINDOW
    iterations = 0
    converged = True
    edge_tol = 1e-6
    while True:
        res = optimize.minimize_scalar(
            neg_mean,
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": _XATOL, "maxiter": _MAXITER},
        )
        iterations += int(res.nfev)
        converged = converged and bool(res.success)
        s = float(res.x)
        if s - lo < edge_tol and lo > s_min:
            hi = lo + edge_tol
            lo = max(lo - 2 * _WINDOW, s_min)
        elif hi - s < edge_tol and hi < s_max:
            lo = hi - edge_tol
            hi = min(hi + 2 * _WINDOW, s_max)
        else:
            break
        if iterations > 50 * _MAXITER:
            converged = False
            break

    at_boundary = False
    if s - s_min < edge_tol:
        at_boundary = True
        theta = copulas.theta_bounds(family)[0]
    elif s_max - s < edge_tol:
        at_boundary = True
        theta = copulas.theta_bounds(family)[1]
    else:
        s, polish_steps = _newton_polish(neg_mean, s, lo, hi)
        iterations += polish_steps
        theta = _from_search(family, s)

    return FitResult(
        method=method,
        family=family,
        theta_hat=theta,
        n=n,
        converged=converged,
        iterations=iterations,
        log_pl_at_opt=log_pseudo_likelihood(family, theta, U),
        at_boundary=at_boundary,
    )


def _newton_polish(f, s, lo, hi, h=1e-5, steps=4):
    """Newton steps on the central-difference derivative; keeps the best point."""
    best_s, best_f = s, f(s)
    evaluations = 1
    for _ in range(steps):
        f_plus, f_minus = f(s + h), f(s - h)
        evaluations += 2
        curvature = (f_plus - 2.0 * f(s) + f_minus) / (h * h)
        evaluations += 1
        if not curvature > 0.0:
            break
        s_new = s - (f_plus - f_minus) / (2.0 * h) / curvature
        if not lo <= s_new <= hi:
            break
        f_new = f(s_new)
        evaluations += 1
        if f_new > best_f + 1e-14 * max(1.0, abs(best_f)):
            break
        s = s_new
        if f_new <= best_f:
            best_s, best_f = s_new, f_new
    return best_s, evaluations


# --------------------------------------------------------------------------
# Method of moments


def _invert_clamped(family, coefficient, inverse, method, n):
    lo, hi = copulas.theta_bounds(family)
    try:
        theta = inverse(family, coefficient)
        clamped = False
        if theta > hi:
            theta, clamped = hi, True
    except InversionRangeError:
        clamped = True
        theta = lo if coefficient <= 0.0 else hi
    result = FitResult(
        method=method,
        family=family,
        theta_hat=theta,
        n=n,
        coefficient=coefficient,
        clamped=clamped,
    )
    if clamped:
        result.notes.append(f"coefficient {coefficient:.6g} outside attainable range; clamped")
    return result


def fit_mm_tau(family, X, *, from_ranks: bool = False) -> FitResult:
    """Invert Kendall's tau; out-of-range coefficients are clamped and flagged."""
    family = CopulaFamily.parse(family)
    R = np.asarray(X) if from_ranks else ranks(check_bivariate(X))
    return _invert_clamped(family, _tau_from_ranks(R), copulas.theta_of_tau, Method.MM_TAU, R.shape[0])


def fit_mm_rho(family, X, *, from_ranks: bool = False) -> FitResult:
    """Invert Spearman's rho; out-of-range coefficients are clamped and flagged."""
    family = CopulaFamily.parse(family)
    R = np.asarray(X) if from_ranks else ranks(check_bivariate(X))
    return _invert_clamped(family, _rho_from_ranks(R), copulas.theta_of_rho, Method.MM_RHO, R.shape[0])

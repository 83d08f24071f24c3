"""Clayton, Gumbel-Hougaard and Plackett bivariate copulas.

Every function here is vectorised over the coordinates and pure in its
arguments.  :class:`Copula` bundles a family with a parameter value and is the
object most callers want; the ``log_pdf``/``cdf`` module functions take
``(family, theta, u, v)`` directly and skip validation, which is what the
estimators use inside their optimisation loops.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize

from .exceptions import InversionRangeError, NumericalError, ParameterDomainError

__all__ = [
    "CopulaFamily",
    "Copula",
    "cdf",
    "pdf",
    "log_pdf",
    "sample",
    "tau_of_theta",
    "rho_of_theta",
    "theta_of_tau",
    "theta_of_rho",
    "theta_bounds",
    "make_rng",
]

# Inputs to log_pdf are clamped to [EPS, 1 - EPS].
EPS = 1e-12
# Plackett at |theta - 1| below this is treated as the independence copula.
PLACKETT_INDEPENDENCE_TOL = 1e-8

_QUAD_NODES = 64
_QUAD_TOL = 1e-7
_QUAD_MAX_NODES = 4096


class CopulaFamily(str, enum.Enum):
    CLAYTON = "clayton"
    GUMBEL = "gumbel"
    PLACKETT = "plackett"

    @classmethod
    def parse(cls, value) -> "CopulaFamily":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            names = ", ".join(f.value for f in cls)
            raise ValueError(f"unknown copula family {value!r}; expected one of {names}") from None


# Numeric limits used by optimisers and root finders.  Clayton and Plackett
# search over log(theta), Gumbel over log(theta - 1).
_THETA_BOUNDS = {
    CopulaFamily.CLAYTON: (1e-6, 1e3),
    CopulaFamily.GUMBEL: (1.0, 1e3),
    CopulaFamily.PLACKETT: (1e-6, 1e6),
}


def theta_bounds(family) -> tuple[float, float]:
    """Smallest and largest parameter value the numerical routines will visit."""
    return _THETA_BOUNDS[CopulaFamily.parse(family)]


def check_theta(family, theta: float) -> float:
    family = CopulaFamily.parse(family)
    theta = float(theta)
    if not math.isfinite(theta):
        raise ParameterDomainError(f"{family.value} parameter must be finite, got {theta}")
    if family is CopulaFamily.GUMBEL:
        if theta < 1.0:
            raise ParameterDomainError(f"gumbel parameter must be >= 1, got {theta}")
    elif theta <= 0.0:
        raise ParameterDomainError(f"{family.value} parameter must be > 0, got {theta}")
    return theta


# --------------------------------------------------------------------------
# Clayton


def _clayton_log_a(theta, lu, lv):
    # log(u**-theta + v**-theta - 1), accurate for tiny theta and for corners.
    a = -theta * lu
    b = -theta * lv
    m = np.maximum(a, b)
    with np.errstate(over="ignore", invalid="ignore"):
        small = np.log1p(np.expm1(a) + np.expm1(b))
        large = m + np.log(np.exp(a - m) + np.exp(b - m) - np.exp(-m))
    return np.where(m < 1.0, small, large)


def _clayton_log_pdf(theta, u, v):
    lu, lv = np.log(u), np.log(v)
    log_a = _clayton_log_a(theta, lu, lv)
    return math.log1p(theta) - (theta + 1.0) * (lu + lv) - (2.0 + 1.0 / theta) * log_a


def _clayton_cdf(theta, u, v):
    return np.exp(-_clayton_log_a(theta, np.log(u), np.log(v)) / theta)


# --------------------------------------------------------------------------
# Gumbel-Hougaard


def _gumbel_parts(theta, u, v):
    x, y = -np.log(u), -np.log(v)
    lx, ly = np.log(x), np.log(y)
    log_a = np.logaddexp(theta * lx, theta * ly) / theta
    return x, y, lx, ly, log_a


def _gumbel_log_pdf(theta, u, v):
    x, y, lx, ly, log_a = _gumbel_parts(theta, u, v)
    a = np.exp(log_a)
    return (
        -a
        + (theta - 1.0) * (lx + ly)
        + x
        + y
        + (1.0 - 2.0 * theta) * log_a
        + np.log(a + theta - 1.0)
    )


def _gumbel_cdf(theta, u, v):
    *_, log_a = _gumbel_parts(theta, u, v)
    return np.exp(-np.exp(log_a))


# --------------------------------------------------------------------------
# Plackett


def _plackett_disc(eta, u, v):
    # (1 + eta(u+v))^2 - 4 theta eta u v, rearranged to avoid cancellation.
    return 1.0 + 2.0 * eta * (u + v - 2.0 * u * v) + eta * eta * (u - v) ** 2


def _plackett_log_pdf(theta, u, v):
    if abs(theta - 1.0) < PLACKETT_INDEPENDENCE_TOL:
        return np.zeros(np.broadcast(u, v).shape)
    eta = theta - 1.0
    num = 1.0 + eta * (u + v - 2.0 * u * v)
    return math.log(theta) + np.log(num) - 1.5 * np.log(_plackett_disc(eta, u, v))


def _plackett_cdf(theta, u, v):
    if abs(theta - 1.0) < PLACKETT_INDEPENDENCE_TOL:
        return u * v
    eta = theta - 1.0
    s = 1.0 + eta * (u + v)
    root = np.sqrt(_plackett_disc(eta, u, v))
    with np.errstate(divide="ignore", invalid="ignore"):
        rationalised = 2.0 * theta * u * v / (s + root)
        direct = (s - root) / (2.0 * eta)
    return np.where(s >= 0.0, rationalised, direct)


_LOG_PDF = {
    CopulaFamily.CLAYTON: _clayton_log_pdf,
    CopulaFamily.GUMBEL: _gumbel_log_pdf,
    CopulaFamily.PLACKETT: _plackett_log_pdf,
}
_CDF = {
    CopulaFamily.CLAYTON: _clayton_cdf,
    CopulaFamily.GUMBEL: _gumbel_cdf,
    CopulaFamily.PLACKETT: _plackett_cdf,
}


def log_pdf(family, theta, u, v):
    """Log copula density, clamping coordinates into ``[EPS, 1 - EPS]``.

    Gumbel at ``theta == 1`` evaluates to 0 via the general formula.

    Raises
    ------
    ParameterDomainError
        If ``theta`` is outside the family's domain.
    """
    family = CopulaFamily.parse(family)
    theta = check_theta(family, theta)
    u = np.clip(np.asarray(u, dtype=float), EPS, 1.0 - EPS)
    v = np.clip(np.asarray(v, dtype=float), EPS, 1.0 - EPS)
    return _LOG_PDF[family](theta, u, v)


def pdf(family, theta, u, v):
    return np.exp(log_pdf(family, theta, u, v))


def cdf(family, theta, u, v):
    """Copula distribution function; exact 0/``u``/``v`` on the square's edges."""
    family = CopulaFamily.parse(family)
    theta = check_theta(family, theta)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    uc = np.clip(u, EPS, 1.0 - EPS)
    vc = np.clip(v, EPS, 1.0 - EPS)
    out = _CDF[family](theta, uc, vc)
    out = np.where(u >= 1.0, v, out)
    out = np.where(v >= 1.0, u, out)
    out = np.where((u <= 0.0) | (v <= 0.0), 0.0, out)
    return np.clip(out, np.maximum(u + v - 1.0, 0.0), np.minimum(u, v))


# --------------------------------------------------------------------------
# Sampling


def make_rng(seed) -> np.random.Generator:
    """Counter-based generator for an integer, a sequence of integers, or a SeedSequence."""
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


def sample(family, theta, n: int, seed=0) -> np.ndarray:
    """Draw ``n`` points from the copula, shape ``(n, 2)``.

    Clayton uses a gamma frailty, Gumbel a positive-stable frailty (Kanter's
    form of the Chambers-Mallows-Stuck generator) and Plackett inverts the
    conditional distribution in closed form.
    """
    family = CopulaFamily.parse(family)
    theta = check_theta(family, theta)
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    rng = make_rng(seed)

    if family is CopulaFamily.CLAYTON:
        frailty = rng.gamma(1.0 / theta, size=(n, 1))
        e = rng.standard_exponential(size=(n, 2))
        out = np.exp(-np.log1p(e / frailty) / theta)
    elif family is CopulaFamily.GUMBEL:
        e = rng.standard_exponential(size=(n, 2))
        if theta == 1.0:
            out = np.exp(-e)
        else:
            alpha = 1.0 / theta
            angle = rng.uniform(0.0, math.pi, size=(n, 1))
            w = rng.standard_exponential(size=(n, 1))
            stable = (
                np.sin(alpha * angle)
                / np.sin(angle) ** (1.0 / alpha)
                * (np.sin((1.0 - alpha) * angle) / w) ** ((1.0 - alpha) / alpha)
            )
            out = np.exp(-((e / stable) ** alpha))
    else:
        u = rng.random(n)
        w = rng.random(n)
        if abs(theta - 1.0) < PLACKETT_INDEPENDENCE_TOL:
            v = w
        else:
            a = w * (1.0 - w)
            b = theta + a * (theta - 1.0) ** 2
            c = 2.0 * a * (u * theta**2 + 1.0 - u) + theta * (1.0 - 2.0 * a)
            d = math.sqrt(theta) * np.sqrt(theta + 4.0 * a * u * (1.0 - u) * (1.0 - theta) ** 2)
            v = (c - (1.0 - 2.0 * w) * d) / (2.0 * b)
        out = np.column_stack([u, v])

    tiny = np.finfo(float).tiny
    return np.clip(out, tiny, np.nextafter(1.0, 0.0))


# --------------------------------------------------------------------------
# Dependence coefficients


@lru_cache(maxsize=None)
def _unit_gauss_legendre(m: int):
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (x + 1.0), 0.5 * w


def _triangle_rule(f, m: int) -> float:
    # Integral of an exchangeable f over the unit square, as twice the integral
    # over {v < u} after the substitution v = u t.  The diagonal, where copula
    # integrands are least smooth, becomes an edge of the tensor grid.
    x, w = _unit_gauss_legendre(m)
    u = x[:, None]
    v = u * x[None, :]
    return 2.0 * float(np.sum(w[:, None] * w[None, :] * u * f(u, v)))


def integrate_exchangeable(f, nodes: int = _QUAD_NODES, tol: float = _QUAD_TOL) -> float:
    """Tensor Gauss-Legendre integral over the unit square, doubling nodes until stable."""
    previous = _triangle_rule(f, nodes)
    while nodes < _QUAD_MAX_NODES:
        nodes *= 2
        current = _triangle_rule(f, nodes)
        if abs(current - previous) < tol:
            return current
        previous = current
    raise NumericalError(
        "quadrature did not converge",
        nodes=nodes,
        last_change=abs(current - previous),
    )


def _plackett_rho(theta: float) -> float:
    eta = theta - 1.0
    if abs(eta) < 1e-3:
        # Series about independence; the closed form cancels catastrophically.
        return sum((-1) ** (k + 1) * 2.0 / ((k + 1) * (k + 2)) * eta**k for k in range(1, 7))
    return (theta + 1.0) / eta - 2.0 * theta * math.log(theta) / eta**2


def tau_of_theta(family, theta: float) -> float:
    """Kendall's tau of the copula."""
    family = CopulaFamily.parse(family)
    theta = check_theta(family, theta)
    if family is CopulaFamily.CLAYTON:
        return theta / (theta + 2.0)
    if family is CopulaFamily.GUMBEL:
        return 1.0 - 1.0 / theta
    if abs(theta - 1.0) < PLACKETT_INDEPENDENCE_TOL:
        return 0.0
    integral = integrate_exchangeable(
        lambda u, v: _plackett_cdf(theta, u, v) * np.exp(_plackett_log_pdf(theta, u, v))
    )
    return 4.0 * integral - 1.0


def rho_of_theta(family, theta: float) -> float:
    """Spearman's rho of the copula."""
    family = CopulaFamily.parse(family)
    theta = check_theta(family, theta)
    if family is CopulaFamily.PLACKETT:
        return _plackett_rho(theta)
    if family is CopulaFamily.GUMBEL and theta == 1.0:
        return 0.0
    kernel = _CDF[family]
    tiny = np.finfo(float).tiny
    integral = integrate_exchangeable(lambda u, v: kernel(theta, u, np.maximum(v, tiny)))
    return 12.0 * integral - 3.0


def _to_search(family, theta):
    if family is CopulaFamily.GUMBEL:
        return math.log(theta - 1.0)
    return math.log(theta)


def _from_search(family, s):
    if family is CopulaFamily.GUMBEL:
        return 1.0 + math.exp(s)
    return math.exp(s)


def _search_limits(family):
    lo, hi = _THETA_BOUNDS[family]
    if family is CopulaFamily.GUMBEL:
        return math.log(1e-10), math.log(hi - 1.0)
    if family is CopulaFamily.PLACKETT:
        return math.log(lo), math.log(hi)
    return math.log(1e-10), math.log(hi)


def _invert(family, target, coefficient, name, guess):
    """Solve coefficient(theta) = target on the transformed parameter."""
    s_min, s_max = _search_limits(family)

    def gap(s):
        return coefficient(family, _from_search(family, s)) - target

    s0 = min(max(_to_search(family, guess), s_min), s_max)
    lo, hi = max(s0 - 0.5, s_min), min(s0 + 0.5, s_max)
    g_lo, g_hi = gap(lo), gap(hi)
    step = 1.0
    while g_lo > 0.0 or g_hi < 0.0:
        if g_lo > 0.0:
            if lo <= s_min:
                break
            hi, g_hi = lo, g_lo
            lo = max(lo - step, s_min)
            g_lo = gap(lo)
        else:
            if hi >= s_max:
                break
            lo, g_lo = hi, g_hi
            hi = min(hi + step, s_max)
            g_hi = gap(hi)
        step *= 2.0
    if g_lo > 0.0 or g_hi < 0.0:
        raise InversionRangeError(
            f"{name}={target} is outside the range reachable by the {family.value} "
            f"family within its numerical parameter limits"
        )
    if g_lo == 0.0:
        return _from_search(family, lo)
    if g_hi == 0.0:
        return _from_search(family, hi)
    root, info = optimize.brentq(gap, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps,
                                 maxiter=200, full_output=True)
    if not info.converged:
        raise NumericalError(f"{name} inversion did not converge", target=target, flag=info.flag)
    return _from_search(family, root)


def _gaussian_tau_from_rho(rho):
    # Rough starting point only: the tau/rho relation of the normal copula.
    r = 2.0 * math.sin(math.pi * rho / 6.0)
    return 2.0 / math.pi * math.asin(max(min(r, 1.0), -1.0))


def theta_of_tau(family, tau: float) -> float:
    """Parameter with Kendall's tau equal to ``tau``.

    Raises
    ------
    InversionRangeError
        If ``tau`` is not attainable: Clayton needs ``0 < tau < 1``, Gumbel
        ``0 <= tau < 1`` and Plackett ``-1 < tau < 1``.
    """
    family = CopulaFamily.parse(family)
    tau = float(tau)
    if family is CopulaFamily.CLAYTON:
        if not 0.0 < tau < 1.0:
            raise InversionRangeError(f"clayton needs 0 < tau < 1, got {tau}")
        return 2.0 * tau / (1.0 - tau)
    if family is CopulaFamily.GUMBEL:
        if not 0.0 <= tau < 1.0:
            raise InversionRangeError(f"gumbel needs 0 <= tau < 1, got {tau}")
        return 1.0 / (1.0 - tau)
    if not -1.0 < tau < 1.0:
        raise InversionRangeError(f"plackett needs -1 < tau < 1, got {tau}")
    if tau == 0.0:
        return 1.0
    # Plackett tau is close to its rho for a guess; use the rho inverse.
    guess_rho = max(min(1.4 * tau, 0.999), -0.999)
    guess = theta_of_rho(family, guess_rho)
    return _invert(family, tau, tau_of_theta, "tau", guess)


def theta_of_rho(family, rho: float) -> float:
    """Parameter with Spearman's rho equal to ``rho``; see :func:`theta_of_tau`."""
    family = CopulaFamily.parse(family)
    rho = float(rho)
    if family is CopulaFamily.PLACKETT:
        if not -1.0 < rho < 1.0:
            raise InversionRangeError(f"plackett needs -1 < rho < 1, got {rho}")
        if rho == 0.0:
            return 1.0
        guess = math.exp(6.0 * math.atanh(rho) / 1.0) if abs(rho) < 0.99 else 1e4
        return _invert(family, rho, rho_of_theta, "rho", guess)
    if family is CopulaFamily.GUMBEL:
        if not 0.0 <= rho < 1.0:
            raise InversionRangeError(f"gumbel needs 0 <= rho < 1, got {rho}")
        if rho == 0.0:
            return 1.0
    elif not 0.0 < rho < 1.0:
        raise InversionRangeError(f"clayton needs 0 < rho < 1, got {rho}")
    tau_guess = min(max(_gaussian_tau_from_rho(rho), 1e-9), 0.999)
    return _invert(family, rho, rho_of_theta, "rho", theta_of_tau(family, tau_guess))


# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Copula:
    """A bivariate copula: family plus dependence parameter.

    Parameters
    ----------
    family : {'clayton', 'gumbel', 'plackett'} or CopulaFamily
    theta : float
        Dependence parameter.  Clayton and Plackett need ``theta > 0``,
        Gumbel ``theta >= 1``; Plackett at 1 is the independence copula.
    """

    family: CopulaFamily
    theta: float

    def __post_init__(self):
        family = CopulaFamily.parse(self.family)
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "theta", check_theta(family, self.theta))

    @classmethod
    def from_tau(cls, family, tau: float) -> "Copula":
        return cls(family, theta_of_tau(family, tau))

    def cdf(self, u, v):
        return cdf(self.family, self.theta, u, v)

    def pdf(self, u, v):
        return pdf(self.family, self.theta, u, v)

    def log_pdf(self, u, v):
        return log_pdf(self.family, self.theta, u, v)

    def sample(self, n: int, seed=0) -> np.ndarray:
        return sample(self.family, self.theta, n, seed)

    @property
    def tau(self) -> float:
        return tau_of_theta(self.family, self.theta)

    @property
    def rho(self) -> float:
        return rho_of_theta(self.family, self.theta)

import math

import numpy as np
import pytest

from mplcop import copulas, estimate, kendall_tau_n, spearman_rho_n
from mplcop.estimators import FitResult, Method, fit_mm_tau
from mplcop.exceptions import SingularInformationError
from mplcop.inference import (
    attach_standard_error,
    confidence_interval,
    jackknife_rho,
    jackknife_tau,
    mm_standard_error,
    mpl_standard_error,
)
from mplcop.pseudo_obs import ranks, scheme_values

METHODS = [m.value for m in Method]


def leave_one_out(R, statistic):
    n = R.shape[0]
    return np.array([statistic(np.delete(R, i, axis=0)) for i in range(n)])


def jackknife_sd(values):
    n = len(values)
    return math.sqrt((n - 1) / n * np.sum((values - values.mean()) ** 2))


class TestJackknife:
    def test_three_points(self):
        R = np.array([[1, 1], [2, 3], [3, 2]])
        sd, loo = jackknife_tau(R)
        expected = leave_one_out(R, lambda S: kendall_tau_n(S))
        np.testing.assert_allclose(loo, expected, atol=1e-14)
        assert sd == pytest.approx(jackknife_sd(expected), abs=1e-14)

    @pytest.mark.parametrize("n", [5, 60, 301])
    def test_tau_against_recomputation(self, n):
        R = ranks(copulas.sample("clayton", 1.5, n, seed=n))
        sd, loo = jackknife_tau(R)
        expected = leave_one_out(R, lambda S: kendall_tau_n(S))
        np.testing.assert_allclose(loo, expected, atol=1e-12)
        assert sd == pytest.approx(jackknife_sd(expected), rel=1e-10)

    @pytest.mark.parametrize("n", [5, 60, 301])
    def test_rho_against_recomputation(self, n):
        R = ranks(copulas.sample("plackett", 5.0, n, seed=n))
        sd, loo = jackknife_rho(R)
        # the remaining points are re-ranked before recomputing rho
        expected = leave_one_out(R, lambda S: spearman_rho_n(S))
        np.testing.assert_allclose(loo, expected, atol=1e-12)
        assert sd == pytest.approx(jackknife_sd(expected), rel=1e-10)


class TestMmStandardError:
    def test_clayton_derivative_factor(self):
        R = ranks(copulas.sample("clayton", 2.0, 200, seed=1))
        sd, _ = jackknife_tau(R)
        # d theta / d tau = 2 / (1 - tau)^2 = 8 at tau = 0.5, i.e. theta = 2
        assert mm_standard_error("clayton", "mm-tau", R, 2.0) == pytest.approx(8 * sd, rel=1e-7)

    def test_rejects_mpl_method(self):
        R = ranks(copulas.sample("clayton", 2.0, 50, seed=1))
        with pytest.raises(ValueError):
            mm_standard_error("clayton", "mpl-mode", R, 2.0)

    def test_clamped_fit_has_no_se(self):
        R = np.column_stack([np.arange(1, 21), np.arange(20, 0, -1)])
        fit = attach_standard_error(fit_mm_tau("clayton", R, from_ranks=True), R=R)
        assert fit.se is None and fit.ci_low is None
        assert any("clamped" in note for note in fit.notes)


def influence_oracle(family, theta, U, h=2e-5, hu=2e-6):
    """O(n^2) version of the rank-corrected score with different step sizes."""
    u, v = U[:, 0], U[:, 1]
    ell = lambda t, a, b: copulas.log_pdf(family, t, a, b)
    score = (ell(theta + h, u, v) - ell(theta - h, u, v)) / (2 * h)

    def mixed(a, b, wrt_u):
        if wrt_u:
            f = lambda t, d: ell(t, a + d, b)
        else:
            f = lambda t, d: ell(t, a, b + d)
        return (f(theta + h, hu) - f(theta + h, -hu) - f(theta - h, hu) + f(theta - h, -hu)) / (4 * h * hu)

    du, dv = mixed(u, v, True), mixed(u, v, False)
    n = len(u)
    w1 = np.array([np.sum(du[u >= u[i]]) for i in range(n)]) / n
    w2 = np.array([np.sum(dv[v >= v[i]]) for i in range(n)]) / n
    second = (ell(theta + h, u, v) - 2 * ell(theta, u, v) + ell(theta - h, u, v)) / h**2
    info = -np.mean(second)
    infl = score + w1 + w2
    return math.sqrt(np.var(infl) / info**2 / n)


class TestMplStandardError:
    @pytest.mark.parametrize("family,theta", [("clayton", 1.3), ("gumbel", 1.7), ("plackett", 6.0)])
    def test_against_quadratic_oracle(self, family, theta):
        U = scheme_values(ranks(copulas.sample(family, theta, 300, seed=2)), 300, "canonical")
        fit = estimate(family, U, "mpl-canonical", compute_se=False)
        got = mpl_standard_error(family, fit.theta_hat, U)
        assert got == pytest.approx(influence_oracle(family, fit.theta_hat, U), rel=1e-3)

    def test_matches_monte_carlo_spread(self):
        estimates = []
        for r in range(200):
            X = copulas.sample("gumbel", 5.0, 1000, seed=[3, r])
            estimates.append(estimate("gumbel", X, "mpl-canonical", compute_se=False).theta_hat)
        target = np.std(estimates, ddof=1) * math.sqrt(1000 / 100_000)
        X = copulas.sample("gumbel", 5.0, 100_000, seed=4)
        se = estimate("gumbel", X, "mpl-canonical").se
        assert se == pytest.approx(target, rel=0.10)

    @pytest.mark.parametrize("method", METHODS)
    def test_root_n_scaling(self, method):
        scaled = []
        for n in (1000, 4000):
            X = copulas.sample("plackett", 4.0, n, seed=n)
            scaled.append(estimate("plackett", X, method).se * math.sqrt(n))
        assert scaled[1] == pytest.approx(scaled[0], rel=0.15)

    def test_singular_information(self):
        # far above the optimum the Plackett pseudo-likelihood turns convex
        U = scheme_values(ranks(copulas.sample("plackett", 500.0, 200, seed=1)), 200, "canonical")
        with pytest.raises(SingularInformationError) as info:
            mpl_standard_error("plackett", 1e4, U)
        assert "information" in info.value.diagnostics

    def test_at_lower_edge(self):
        u = np.arange(1, 51) / 51.0
        U = np.column_stack([u, u[::-1]])
        for family in ("clayton", "gumbel"):
            fit = estimate(family, U, "mpl-canonical", compute_se=False)
            try:
                se = mpl_standard_error(family, fit.theta_hat, U)
            except SingularInformationError:
                continue
            assert math.isfinite(se)


class TestConfidenceInterval:
    def _fit(self, theta, se):
        return FitResult(Method.MPL_MODE, copulas.CopulaFamily.CLAYTON, theta, 10, se=se)

    def test_wald(self):
        assert confidence_interval(self._fit(2.0, 0.5)) == pytest.approx((1.02, 2.98))

    def test_degenerate(self):
        assert confidence_interval(self._fit(2.0, 0.0)) == (2.0, 2.0)

    def test_not_clipped(self):
        low, _ = confidence_interval(self._fit(0.1, 0.5))
        assert low < 0

    def test_requires_se(self):
        with pytest.raises(ValueError):
            confidence_interval(self._fit(2.0, None))

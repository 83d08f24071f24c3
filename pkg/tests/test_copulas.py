import math

import numpy as np
import pytest
from scipy import integrate

from mplcop import Copula, CopulaFamily, kendall_tau_n, spearman_rho_n
from mplcop import copulas
from mplcop.exceptions import InversionRangeError, ParameterDomainError
from mplcop.inference import jackknife_tau
from mplcop.pseudo_obs import ranks

# Kendall's tau grid of the simulation study and the matching parameters.
TAUS = (0.1, 0.2, 0.3, 0.4, 0.6, 0.8)
FAMILIES = ("clayton", "gumbel", "plackett")


# independent closed forms, typed in from the textbook definitions
def clayton_cdf(t, u, v):
    return (u ** -t + v ** -t - 1.0) ** (-1.0 / t)


def gumbel_cdf(t, u, v):
    return math.exp(-(((-math.log(u)) ** t + (-math.log(v)) ** t) ** (1.0 / t)))


def plackett_cdf(t, u, v):
    s = 1.0 + (t - 1.0) * (u + v)
    return (s - math.sqrt(s * s - 4.0 * u * v * t * (t - 1.0))) / (2.0 * (t - 1.0))


ORACLE_CDF = {"clayton": clayton_cdf, "gumbel": gumbel_cdf, "plackett": plackett_cdf}


def fd_density(family, theta, u, v, h=1e-4):
    c = lambda a, b: float(copulas.cdf(family, theta, a, b))
    return (c(u + h, v + h) - c(u + h, v - h) - c(u - h, v + h) + c(u - h, v - h)) / (4 * h * h)


class TestCdf:
    def test_clayton_closed_form(self):
        assert copulas.cdf("clayton", 2.0, 0.5, 0.5) == pytest.approx(7 ** -0.5, rel=1e-12)

    @pytest.mark.parametrize("family", ["gumbel", "plackett"])
    def test_independence(self, family):
        assert copulas.cdf(family, 1.0, 0.3, 0.7) == pytest.approx(0.21, abs=1e-14)

    def test_plackett_near_one_uses_limit(self):
        assert copulas.cdf("plackett", 1.0 + 1e-10, 0.3, 0.7) == pytest.approx(0.21, abs=1e-9)

    @pytest.mark.parametrize("family", FAMILIES)
    @pytest.mark.parametrize("theta_scale", [0.5, 2.0, 8.0])
    def test_matches_oracle(self, family, theta_scale):
        theta = theta_scale + (1.0 if family == "gumbel" else 0.0)
        rng = np.random.default_rng(5)
        for u, v in rng.uniform(0.01, 0.99, size=(25, 2)):
            expected = ORACLE_CDF[family](theta, u, v)
            assert copulas.cdf(family, theta, u, v) == pytest.approx(expected, rel=1e-9, abs=1e-14)

    @pytest.mark.parametrize("family", FAMILIES)
    def test_uniform_margins(self, family):
        theta = 3.0
        u = np.linspace(0.0, 1.0, 11)
        np.testing.assert_allclose(copulas.cdf(family, theta, u, np.zeros_like(u)), 0.0, atol=0)
        np.testing.assert_allclose(copulas.cdf(family, theta, np.zeros_like(u), u), 0.0, atol=0)
        np.testing.assert_allclose(copulas.cdf(family, theta, u, np.ones_like(u)), u, atol=1e-15)
        np.testing.assert_allclose(copulas.cdf(family, theta, np.ones_like(u), u), u, atol=1e-15)

    @pytest.mark.parametrize(
        "family,theta",
        [("clayton", 0.0), ("clayton", -1.0), ("gumbel", 0.99), ("plackett", 0.0), ("plackett", math.nan)],
    )
    def test_domain_error(self, family, theta):
        with pytest.raises(ParameterDomainError):
            copulas.cdf(family, theta, 0.5, 0.5)
        with pytest.raises(ParameterDomainError):
            Copula(family, theta)

    def test_unknown_family(self):
        with pytest.raises(ValueError):
            CopulaFamily.parse("frank")


class TestDensity:
    def test_clayton_against_cdf_differences(self):
        assert copulas.pdf("clayton", 2.0, 0.5, 0.5) == pytest.approx(
            fd_density("clayton", 2.0, 0.5, 0.5), rel=1e-5
        )

    def test_plackett_against_cdf_differences(self):
        assert copulas.pdf("plackett", 4.0, 0.2, 0.8) == pytest.approx(
            fd_density("plackett", 4.0, 0.2, 0.8), rel=1e-5
        )

    def test_gumbel_independence(self):
        u = np.linspace(0.05, 0.95, 7)
        np.testing.assert_allclose(copulas.pdf("gumbel", 1.0, u, u[::-1]), 1.0, rtol=1e-14)
        np.testing.assert_allclose(copulas.log_pdf("gumbel", 1.0, u, u[::-1]), 0.0, atol=1e-14)

    def test_plackett_independence_limit(self):
        np.testing.assert_allclose(copulas.pdf("plackett", 1.0, 0.2, 0.9), 1.0, rtol=1e-14)

    def test_log_pdf_matches_log_of_pdf(self):
        value = copulas.log_pdf("clayton", 2.0, 0.5, 0.5)
        assert value == pytest.approx(math.log(fd_density("clayton", 2.0, 0.5, 0.5)), rel=1e-5)

    @pytest.mark.parametrize("family,theta", [("clayton", 0.22), ("gumbel", 5.0), ("plackett", 115.0)])
    def test_finite_in_corners(self, family, theta):
        pts = [1e-12, 1e-8, 1e-4, 0.9999, 1 - 1e-8, 1 - 1e-12]
        for u in pts:
            for v in pts:
                assert np.isfinite(copulas.log_pdf(family, theta, u, v))
        assert np.isfinite(copulas.log_pdf("clayton", 0.22, 0.9999, 0.9999))

    def test_clamps_boundary_inputs(self):
        assert np.isfinite(copulas.log_pdf("clayton", 2.0, 0.0, 1.0))


class TestDependenceMaps:
    def test_closed_forms(self):
        assert copulas.tau_of_theta("clayton", 2.0) == 0.5
        assert copulas.tau_of_theta("gumbel", 5.0) == pytest.approx(0.8, abs=1e-15)
        assert copulas.rho_of_theta("plackett", 1.0) == 0.0
        assert copulas.rho_of_theta("gumbel", 1.0) == 0.0

    def test_plackett_rho_closed_form(self):
        expected = 5.0 / 3.0 - 8.0 * math.log(4.0) / 9.0
        assert copulas.rho_of_theta("plackett", 4.0) == pytest.approx(expected, rel=1e-14)
        assert expected == pytest.approx(0.434405, abs=1e-6)

    def test_plackett_rho_near_independence_is_smooth(self):
        for eps in (1e-9, 1e-6, 1e-4, 1e-3 - 1e-12, 1e-3 + 1e-12):
            rho = copulas.rho_of_theta("plackett", 1.0 + eps)
            assert rho == pytest.approx(eps / 3.0, rel=1e-3)

    @staticmethod
    def _rho_dblquad(family, theta):
        f = ORACLE_CDF[family]
        val, _ = integrate.dblquad(lambda v, u: f(theta, u, v), 0, 1, 0, 1, epsabs=1e-11, epsrel=1e-11)
        return 12.0 * val - 3.0

    @pytest.mark.parametrize("family,theta", [("clayton", 0.86), ("clayton", 8.0), ("gumbel", 2.5), ("plackett", 4.0)])
    def test_rho_against_adaptive_quadrature(self, family, theta):
        assert copulas.rho_of_theta(family, theta) == pytest.approx(self._rho_dblquad(family, theta), abs=1e-7)

    @pytest.mark.parametrize("theta", [1.5702, 3.99, 21.13])
    def test_plackett_tau_against_adaptive_quadrature(self, theta):
        def integrand(v, u):
            return plackett_cdf(theta, u, v) * float(copulas.pdf("plackett", theta, u, v))

        val, _ = integrate.dblquad(integrand, 0, 1, 0, 1, epsabs=1e-10, epsrel=1e-10)
        assert copulas.tau_of_theta("plackett", theta) == pytest.approx(4 * val - 1, abs=1e-7)

    def test_plackett_tau_published_pair(self):
        assert copulas.tau_of_theta("plackett", 21.13) == pytest.approx(0.6, abs=5e-3)

    @pytest.mark.parametrize("family", FAMILIES)
    def test_monotone(self, family):
        lo = 1.0 if family == "gumbel" else 0.0
        thetas = lo + np.geomspace(0.01, 50, 30)
        taus = [copulas.tau_of_theta(family, t) for t in thetas]
        rhos = [copulas.rho_of_theta(family, t) for t in thetas]
        assert np.all(np.diff(taus) > 0)
        assert np.all(np.diff(rhos) > 0)

    def test_theta_of_tau_examples(self):
        assert copulas.theta_of_tau("clayton", 0.1) == pytest.approx(2 / 9, rel=1e-14)
        assert copulas.theta_of_tau("gumbel", 0.4) == pytest.approx(5 / 3, rel=1e-14)
        assert copulas.theta_of_tau("plackett", 0.3) == pytest.approx(3.99, abs=0.01)
        assert copulas.theta_of_rho("plackett", 0.0) == 1.0

    @pytest.mark.parametrize("family", FAMILIES)
    @pytest.mark.parametrize("tau", TAUS)
    def test_tau_round_trip(self, family, tau):
        theta = copulas.theta_of_tau(family, tau)
        assert copulas.tau_of_theta(family, theta) == pytest.approx(tau, abs=1e-8)

    @pytest.mark.parametrize("family,theta", [("clayton", 0.86), ("gumbel", 2.5), ("plackett", 4.0), ("plackett", 115.0)])
    def test_rho_round_trip(self, family, theta):
        rho = copulas.rho_of_theta(family, theta)
        assert copulas.theta_of_rho(family, rho) == pytest.approx(theta, rel=1e-6)
        assert copulas.rho_of_theta(family, copulas.theta_of_rho(family, rho)) == pytest.approx(rho, abs=1e-8)

    @pytest.mark.parametrize(
        "family,tau", [("clayton", 0.0), ("clayton", -0.1), ("gumbel", -0.05), ("gumbel", 1.0), ("plackett", 1.0)]
    )
    def test_unattainable(self, family, tau):
        with pytest.raises(InversionRangeError):
            copulas.theta_of_tau(family, tau)

    def test_gumbel_tau_zero_is_independence(self):
        assert copulas.theta_of_tau("gumbel", 0.0) == 1.0


class TestSampler:
    def test_deterministic(self):
        a = copulas.sample("gumbel", 2.0, 1000, seed=42)
        b = copulas.sample("gumbel", 2.0, 1000, seed=42)
        assert a.tobytes() == b.tobytes()
        assert not np.array_equal(a, copulas.sample("gumbel", 2.0, 1000, seed=43))

    @pytest.mark.parametrize("family", FAMILIES)
    def test_inside_unit_square(self, family):
        X = copulas.sample(family, copulas.theta_of_tau(family, 0.8), 20000, seed=1)
        assert X.shape == (20000, 2)
        assert np.all((X > 0) & (X < 1))

    def test_independence(self):
        X = copulas.sample("gumbel", 1.0, 100_000, seed=3)
        assert abs(kendall_tau_n(X)) < 0.01

    def test_clayton_tau(self):
        X = copulas.sample("clayton", 2.0, 100_000, seed=4)
        assert kendall_tau_n(X) == pytest.approx(0.5, abs=0.02)

    def test_plackett_rho(self):
        X = copulas.sample("plackett", 21.13, 100_000, seed=5)
        assert spearman_rho_n(X) == pytest.approx(copulas.rho_of_theta("plackett", 21.13), abs=0.02)

    @pytest.mark.parametrize("family", FAMILIES)
    def test_kendall_tau_within_three_standard_errors(self, family):
        for k, tau in enumerate(TAUS):
            theta = copulas.theta_of_tau(family, tau)
            R = ranks(copulas.sample(family, theta, 100_000, seed=100 + k))
            sd, _ = jackknife_tau(R)
            assert abs(kendall_tau_n(R, from_ranks=True) - tau) < 3 * sd, (family, tau)

    @pytest.mark.parametrize("family", FAMILIES)
    def test_uniform_margins(self, family):
        X = copulas.sample(family, copulas.theta_of_tau(family, 0.6), 50_000, seed=9)
        from scipy import stats

        for j in range(2):
            assert stats.kstest(X[:, j], "uniform").pvalue > 1e-3


class TestCopulaObject:
    def test_roundtrip_and_immutability(self):
        c = Copula.from_tau("plackett", 0.3)
        assert c.tau == pytest.approx(0.3, abs=1e-8)
        assert c.family is CopulaFamily.PLACKETT
        with pytest.raises(Exception):
            c.theta = 2.0

    def test_methods_delegate(self):
        c = Copula("clayton", 2.0)
        assert c.cdf(0.5, 0.5) == pytest.approx(7 ** -0.5)
        assert c.pdf(0.3, 0.4) == pytest.approx(math.exp(c.log_pdf(0.3, 0.4)))
        assert c.rho == pytest.approx(copulas.rho_of_theta("clayton", 2.0))
        assert c.sample(5, seed=1).shape == (5, 2)

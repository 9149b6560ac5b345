import math

import numpy as np
import pytest
from scipy import integrate, special as sp, stats

from ordstat.asymptotics import (
    AsymptoticReport, DegenerateDensityError, ScalingSpec, SingularPointError, _scale,
    asymptotic_addend_density, asymptotic_density, asymptotic_factor_density,
    asymptotic_vs_exact_report, beta_of_eta,
)
from ordstat.distributions import Exponential, Gamma, Normal, Uniform
from ordstat.special import DomainError

HETERO = [Gamma(2, 1), Uniform(0, 1)]


class TestBeta:
    def test_examples(self):
        np.testing.assert_allclose(beta_of_eta(Normal(0, 1), 2, "addend", 0.25),
                                   stats.norm(0, math.sqrt(2)).ppf(0.25), atol=1e-9)
        np.testing.assert_allclose(beta_of_eta(Normal(0, 1), 2, "addend", 0.25), -0.9538726, atol=1e-7)
        np.testing.assert_allclose(beta_of_eta(HETERO, 2, "factor", 0.5), math.log(2), atol=1e-12)
        np.testing.assert_allclose(beta_of_eta(Normal(0, 1), 2, "factor", 0.5), 0.0, atol=1e-12)
        np.testing.assert_allclose(beta_of_eta(Normal(0, 1), 3, "addend", 0.5), 0.0, atol=1e-12)

    def test_normal_product_quantile(self):
        # eta(beta) = 1/2 + (1/pi) int_0^beta K0
        for eta in (0.1, 0.25, 0.8):
            b = beta_of_eta(Normal(0, 1), 2, "factor", eta)
            mass = integrate.quad(sp.k0, 0, abs(b))[0] / math.pi
            np.testing.assert_allclose(0.5 + math.copysign(mass, b), eta, atol=1e-9)

    @pytest.mark.parametrize("eta", [0.0, 0.001, 0.999, 1.0, -0.2, 1.5])
    def test_domain(self, eta):
        with pytest.raises(DomainError):
            beta_of_eta(Normal(0, 1), 2, "addend", eta)
        with pytest.raises(DomainError):
            ScalingSpec(eta)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            ScalingSpec(0.5, m=1)
        with pytest.raises(ValueError):
            ScalingSpec(0.5, role="quotient")


class TestAddendLimit:
    @pytest.mark.parametrize("eta", [0.1, 0.25, 0.5, 0.9])
    def test_normal_is_gaussian(self, eta):
        b = beta_of_eta(Normal(0, 1), 2, "addend", eta)
        x = np.linspace(-5, 5, 1001)
        ref = stats.norm(b / 2, math.sqrt(0.5)).pdf(x)
        assert np.max(np.abs(asymptotic_addend_density(Normal(0, 1), 2, eta, x) - ref)) < 1e-12

    def test_median(self):
        np.testing.assert_allclose(asymptotic_addend_density(Normal(0, 1), 2, 0.5, 0.0), 1 / math.sqrt(math.pi),
                                   rtol=1e-14)

    def test_exponential_is_uniform(self):
        # given X1 + X2 = beta, X1 is uniform on [0, beta]
        eta = 0.4
        b = beta_of_eta(Exponential(1.0), 2, "addend", eta)
        x = np.linspace(0.01, b - 0.01, 50)
        np.testing.assert_allclose(asymptotic_addend_density(Exponential(1.0), 2, eta, x), 1 / b, rtol=1e-12)

    @pytest.mark.parametrize("eta", [0.1, 0.25, 0.5, 0.9])
    @pytest.mark.parametrize("parent", [Normal(0, 1), Exponential(1.0)], ids=repr)
    def test_normalisation(self, parent, eta):
        for m in (2, 3):
            f = lambda v: asymptotic_addend_density(parent, m, eta, v)
            lo, hi = parent.effective_range(1e-14)
            b = beta_of_eta(parent, m, "addend", eta)
            pts = [p for p in (0.0, b) if lo < p < hi]
            mass = integrate.quad(f, lo, hi, points=pts or None, epsabs=1e-12, limit=200)[0]
            np.testing.assert_allclose(mass, 1.0, atol=1e-6)


class TestFactorLimit:
    @pytest.mark.parametrize("eta", [0.1, 0.3, 0.75])
    def test_normal_formula(self, eta):
        b = beta_of_eta(Normal(0, 1), 2, "factor", eta)
        x = np.concatenate([np.linspace(-4, -0.05, 60), np.linspace(0.05, 4, 60)])
        ref = np.exp(-(x ** 2 + b ** 2 / x ** 2) / 2) / (2 * np.abs(x) * sp.k0(abs(b)))
        np.testing.assert_allclose(asymptotic_factor_density(Normal(0, 1), 2, eta, x), ref, rtol=1e-10)

    def test_hetero_shifted_exponential(self):
        eta = 0.5
        b = math.log(2)
        x = np.linspace(0.01, 10, 500)
        f = asymptotic_factor_density(HETERO, 2, eta, x)
        np.testing.assert_allclose(f[x >= b], np.exp(b - x[x >= b]), rtol=1e-12)
        assert np.all(f[x < b] == 0)

    @pytest.mark.parametrize("eta", [0.1, 0.5, 0.9])
    def test_hetero_mean(self, eta):
        b = beta_of_eta(HETERO, 2, "factor", eta)
        mean = integrate.quad(lambda v: v * asymptotic_factor_density(HETERO, 2, eta, v), b, np.inf,
                              epsabs=1e-12)[0]
        np.testing.assert_allclose(mean, 1 - math.log(1 - eta), atol=1e-8)
        if eta == 0.5:
            np.testing.assert_allclose(mean, 1.6931472, atol=1e-7)

    @pytest.mark.parametrize("eta", [0.1, 0.25, 0.5, 0.9])
    @pytest.mark.parametrize("parent", [Normal(0, 1), Exponential(1.0)], ids=repr)
    def test_normalisation(self, parent, eta):
        if isinstance(parent, Normal) and eta == 0.5:
            pytest.skip("beta = 0: the normal factor limit is a point mass (see test_degenerate)")
        f = lambda v: asymptotic_factor_density(parent, 2, eta, v)
        lo, hi = parent.effective_range(1e-14)
        mass = 0.0
        for a, c in ((lo, -1e-9), (1e-9, hi)):
            if a < c:
                mass += integrate.quad(f, a, c, epsabs=1e-12, limit=400)[0]
        np.testing.assert_allclose(mass, 1.0, atol=1e-6)

    def test_singular_point(self):
        with pytest.raises(SingularPointError):
            asymptotic_factor_density(Normal(0, 1), 2, 0.3, 0.0)
        with pytest.raises(SingularPointError):
            asymptotic_density(Normal(0, 1), 2, "factor", 0.3, np.array([1.0, 0.0]))

    def test_degenerate(self):
        with pytest.raises(DegenerateDensityError):
            _scale(Uniform(0, 1), 2.0)
        # K0 diverges at 0, so the normal product density is unbounded at beta = 0
        with pytest.raises(DegenerateDensityError):
            asymptotic_factor_density(Normal(0, 1), 2, 0.5, 1.0)

    def test_hetero_addend_rejected(self):
        with pytest.raises(ValueError):
            asymptotic_addend_density(HETERO, 2, 0.5, 1.0)


class TestReport:
    def test_addend_fig_experiment(self):
        rep = asymptotic_vs_exact_report(Normal(0, 1), 40, 10, 2, "addend")
        assert isinstance(rep, AsymptoticReport)
        assert rep.eta == 0.25 and rep.method == "quadrature"
        np.testing.assert_allclose(rep.beta, -0.9538726, atol=1e-7)
        np.testing.assert_allclose(rep.exact.mass(), 1.0, atol=1e-6)
        np.testing.assert_allclose(rep.limit.mass(), 1.0, atol=1e-6)
        assert rep.l1 < 0.05

    @pytest.mark.parametrize("role", ["addend", "factor"])
    def test_trend(self, role):
        l1 = [asymptotic_vs_exact_report(Normal(0, 1), n, n // 4, 2, role).l1 for n in (20, 40, 80)]
        assert l1[0] > l1[1] > l1[2]

    def test_monte_carlo_method(self):
        q = asymptotic_vs_exact_report(Normal(0, 1), 40, 10, 2, "addend")
        mc = asymptotic_vs_exact_report(Normal(0, 1), 40, 10, 2, "addend", method="monte_carlo",
                                        trials=10 ** 5, seed=3)
        assert mc.method == "monte_carlo"
        # binned L1 is a coarsened version of the continuous one, plus sampling noise
        assert abs(mc.l1 - q.l1) < 0.02

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            asymptotic_vs_exact_report(Normal(0, 1), 4, 2, 2, "addend", method="guess")

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "subphi/errors.hpp"
#include "subphi/subgaussian.hpp"

using namespace subphi;

namespace {

const OrliczSpec quadratic = OrliczSpec::power(2.0);  // phi(x) = x^2/2

// Dense-grid maximisation of sqrt(2 L(lambda))/lambda with the log-MGF written
// out directly, independent of the library's stabilised formulas.
double brute_tau_quadratic(double (*L)(double), double lam_lo, double lam_hi, int n)
{
    double best = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double lam = lam_lo * std::pow(lam_hi / lam_lo, static_cast<double>(i) / n);
        best = std::max(best, std::sqrt(2.0 * L(lam)) / lam);
    }
    return best;
}

double L_rademacher(double lam) { return std::log(std::cosh(lam)); }
double L_uniform2(double lam) { return std::log(std::sinh(2 * lam) / (2 * lam)); }

}  // namespace

TEST_CASE("tau_of examples under phi = x^2/2")
{
    CHECK(tau_of(SubGaussianSource::gaussian(1.0), quadratic) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(tau_of(SubGaussianSource::gaussian(2.0), quadratic) == doctest::Approx(2.0).epsilon(1e-6));

    // Grid oracle: the ratio increases towards 1 as lambda -> 0.
    const double oracle = brute_tau_quadratic(L_rademacher, 1e-3, 50.0, 200000);
    CHECK(oracle == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(tau_of(SubGaussianSource::rademacher(), quadratic) == doctest::Approx(1.0).epsilon(1e-6));

    const double oracle_u = brute_tau_quadratic(L_uniform2, 1e-3, 50.0, 200000);
    CHECK(oracle_u == doctest::Approx(2.0 / std::sqrt(3.0)).epsilon(1e-6));
    CHECK(tau_of(SubGaussianSource::uniform(2.0), quadratic) == doctest::Approx(2.0 / std::sqrt(3.0)).epsilon(1e-6));
}

TEST_CASE("tau is an upper value: L(lambda) <= phi(lambda tau) on a fine grid")
{
    for (const auto& spec : {OrliczSpec::power(1.5), OrliczSpec::power(1.2), OrliczSpec::piecewise(4), quadratic}) {
        for (const auto& src : {SubGaussianSource::rademacher(), SubGaussianSource::uniform(0.7)}) {
            const double tau = tau_of(src, spec);
            for (int i = 0; i <= 2000; ++i) {
                const double lam = std::pow(10.0, -4.0 + 8.0 * i / 2000);
                const double L = log_mgf(src, lam);
                CHECK(L <= phi_eval(spec, lam * tau) * (1 + 1e-9) + 1e-300);
            }
        }
    }
}

TEST_CASE("tau homogeneity and the piecewise family")
{
    const double base = tau_of(SubGaussianSource::gaussian(1.0), quadratic);
    for (double c : {0.1, 3.0, 17.5})
        CHECK(tau_of(SubGaussianSource::gaussian(c), quadratic) == doctest::Approx(c * base).epsilon(1e-6));
    // phi(x) = x^2/4 near the origin: sqrt(4 sigma^2 lambda^2 / 2)/lambda = sqrt(2) sigma.
    CHECK(tau_of(SubGaussianSource::gaussian(1.5), OrliczSpec::piecewise(4)) ==
          doctest::Approx(1.5 * std::sqrt(2.0)).epsilon(1e-6));
}

TEST_CASE("Gaussian is not in Sub_phi for phi lighter than quadratic")
{
    CHECK_THROWS_AS(tau_of(SubGaussianSource::gaussian(1.0), OrliczSpec::power(1.5)), CapabilityError);
}

TEST_CASE("tau_sum_bound examples")
{
    const std::vector<double> t34{3, 4}, ones2{1, 1};
    CHECK(tau_sum_bound(t34, ones2, 2.0) == doctest::Approx(5.0));
    for (double s : {0.5, 1.0, 1.7, 2.0}) {
        const std::vector<double> t{2.5}, c{-1.5};
        CHECK(tau_sum_bound(t, c, s) == doctest::Approx(3.75));
    }
    const std::vector<double> ones3{1, 1, 1};
    CHECK(tau_sum_bound(ones3, ones3, 1.5) == doctest::Approx(std::pow(3.0, 1 / 1.5)).epsilon(1e-12));
    CHECK(std::pow(3.0, 1 / 1.5) == doctest::Approx(2.08008).epsilon(1e-5));
    CHECK_THROWS_AS(tau_sum_bound(ones3, ones3, 2.5), DomainError);
    CHECK_THROWS_AS(tau_sum_bound(ones3, ones3, 0.0), DomainError);
    CHECK_THROWS_AS(tau_sum_bound(ones3, ones2, 2.0), PreconditionError);
}

TEST_CASE("tau_sum_bound is attained for independent Gaussians with s = 2")
{
    RandomStream rng(7, 0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> sig, w;
        double var = 0.0;
        for (int k = 0; k < 6; ++k) {
            sig.push_back(0.1 + rng.uniform());
            w.push_back(2.0 * rng.uniform() - 1.0);
            var += w.back() * w.back() * sig.back() * sig.back();
        }
        std::vector<double> taus;
        for (double s : sig)
            taus.push_back(tau_of(SubGaussianSource::gaussian(s), quadratic));
        const double exact = tau_of(SubGaussianSource::gaussian(std::sqrt(var)), quadratic);
        CHECK(std::abs(tau_sum_bound(taus, w, 2.0) - exact) <= 1e-10);
    }
}

TEST_CASE("tau_sum_bound is monotone")
{
    const std::vector<double> t{1.0, 2.0}, c{0.5, -0.25};
    const double base = tau_sum_bound(t, c, 1.5);
    CHECK(tau_sum_bound(std::vector<double>{1.1, 2.0}, c, 1.5) > base);
    CHECK(tau_sum_bound(t, std::vector<double>{0.5, -0.3}, 1.5) > base);
}

TEST_CASE("sampling: determinism, support, moments")
{
    const auto g = SubGaussianSource::gaussian(1.0);
    RandomStream a(42, 3), b(42, 3), c(42, 4);
    const double x = sample(g, a);
    CHECK(x == sample(g, b));
    CHECK(x != sample(g, c));

    RandomStream r(1, 0);
    for (int i = 0; i < 1000; ++i) {
        const double v = sample(SubGaussianSource::rademacher(), r);
        CHECK((v == 1.0 || v == -1.0));
        const double u = sample(SubGaussianSource::uniform(2.0), r);
        CHECK((u >= -2.0 && u <= 2.0));
    }

    constexpr int n = 200000;
    for (const auto& src : {SubGaussianSource::gaussian(1.7), SubGaussianSource::rademacher(),
                            SubGaussianSource::uniform(2.0)}) {
        RandomStream rng(99, 1);
        double s1 = 0.0, s2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double v = sample(src, rng);
            s1 += v;
            s2 += v * v;
        }
        const double var = src.variance();
        CHECK(std::abs(s1 / n) < 5.0 * std::sqrt(var / n));
        CHECK(s2 / n == doctest::Approx(var).epsilon(0.02));
    }
}

TEST_CASE("empirical tails respect the Chernoff bound 2 exp(-phi*(x/tau))")
{
    constexpr int n = 100000;
    for (const auto& spec : {quadratic, OrliczSpec::power(1.5), OrliczSpec::piecewise(3)}) {
        for (const auto& src : {SubGaussianSource::gaussian(1.0), SubGaussianSource::rademacher(),
                                SubGaussianSource::uniform(2.0)}) {
            if (src.kind == SourceKind::Gaussian && spec.family() == OrliczFamily::PowerGamma && spec.gamma() < 2)
                continue;
            const double tau = tau_of(src, spec);
            RandomStream rng(5, 0);
            std::vector<double> draws(n);
            for (auto& d : draws)
                d = sample(src, rng);
            for (double x = 0.25; x <= 4.0; x += 0.25) {
                const double phat = static_cast<double>(std::count_if(draws.begin(), draws.end(),
                                                                      [x](double d) { return d > x; })) / n;
                const double se = std::sqrt(std::max(phat * (1 - phat), 1.0 / n) / n);
                CHECK(phat - 3 * se <= 2.0 * std::exp(-phi_conjugate(spec, x / tau)));
            }
        }
    }
}

TEST_CASE("explicit sources use registered samplers")
{
    register_sampler("two-point", [](RandomStream& r) { return r.uniform() < 0.5 ? -0.5 : 0.5; });
    const auto src = SubGaussianSource::explicit_source(0.5, "two-point");
    CHECK(tau_of(src, quadratic) == 0.5);
    RandomStream rng(0, 0);
    CHECK(std::abs(sample(src, rng)) == 0.5);
    CHECK_THROWS_AS(sample(SubGaussianSource::explicit_source(1.0, "missing"), rng), CapabilityError);
    CHECK_THROWS_AS(log_mgf(src, 1.0), CapabilityError);
}

#include "doctest.h"

#include <cmath>
#include <limits>

#include "subphi/bounds.hpp"
#include "subphi/errors.hpp"
#include "subphi/subgaussian.hpp"

using namespace subphi;

namespace {

const OrliczSpec quadratic = OrliczSpec::power(2.0);

// mpmath (30 digits): 0.1 / (2 ln 40)
constexpr double kBound01 = 0.0135542515340908395789;
// mpmath: ((4/3) ln 40)^{-3/2}
constexpr double kPiecewiseBound = 0.0916748482690366662610;

}  // namespace

TEST_CASE("tail_probability_bound examples")
{
    const AccuracyTarget t{2.0, 4.0, 0.05, 1.0};
    CHECK(tail_probability_bound(1.0, t, quadratic) == doctest::Approx(0.270670566473225384).epsilon(1e-12));
    CHECK(tail_probability_bound(1e300, t, quadratic) == doctest::Approx(1.0));
    CHECK(tail_probability_bound(std::numeric_limits<double>::infinity(), t, quadratic) == 1.0);
    CHECK(tail_probability_bound(0.0, t, quadratic) == 0.0);
}

TEST_CASE("tail_bound_valid examples")
{
    // Reduced form: delta > c^gamma p^{p(gamma-1)} / delta^{gamma-1} = 1e-4 * 4 / 0.1 = 0.004.
    CHECK(1e-4 * 4 / 0.1 == doctest::Approx(0.004));
    CHECK(tail_bound_valid(0.01, AccuracyTarget{2, 0.1, 0.05, 1}, quadratic));

    for (double g : {1.3, 1.5, 2.0})
        for (double p : {1.0, 2.0, 3.5}) {
            const AccuracyTarget t{p, 0.7, 0.05, 1};
            const double boundary = t.delta * std::pow(p, -p * (1 - 1 / g));
            CHECK_FALSE(tail_bound_valid(boundary, t, OrliczSpec::power(g)));
            CHECK(tail_bound_valid(boundary * (1 - 1e-9), t, OrliczSpec::power(g)));
        }
    CHECK(tail_bound_valid(1e-300, AccuracyTarget{2, 0.1, 0.05, 1}, quadratic));
}

TEST_CASE("check_conditions_generic examples")
{
    const AccuracyTarget t{2.0, 0.1, 0.05, 1.0};
    const auto r = check_conditions_generic(0.013, t, quadratic);
    CHECK(r.bound_eq1 == doctest::Approx(kBound01).epsilon(1e-12));
    CHECK(r.eq1_ok);
    CHECK(r.eq2_ok);
    CHECK(r.margin == doctest::Approx(kBound01 - 0.013));

    const auto zero = check_conditions_generic(0.0, t, quadratic);
    CHECK(zero.ok());
    CHECK(zero.tail_bound == 0.0);

    const auto edge = check_conditions_generic(r.bound_eq1, t, quadratic);
    CHECK(edge.eq1_ok);
    CHECK_FALSE(check_conditions_generic(std::nextafter(r.bound_eq1, 1.0), t, quadratic).eq1_ok);
}

TEST_CASE("check_conditions_power examples")
{
    const AccuracyTarget t{2.0, 0.1, 0.05, 1.0};
    const auto r = check_conditions_power(0.0, t, 2.0);
    CHECK(r.bound_eq1 == doctest::Approx(kBound01).epsilon(1e-12));
    CHECK(r.ok());
    // second bound delta / 2^{2(1/2)} = 0.05
    CHECK(check_conditions_power(0.0499, AccuracyTarget{2.0, 0.1, 0.9, 1.0}, 2.0).eq2_ok);
    CHECK_FALSE(check_conditions_power(0.05, AccuracyTarget{2.0, 0.1, 0.9, 1.0}, 2.0).eq2_ok);

    const double alpha = 2.0 / std::exp(2.0);  // ln(2/alpha) = 2
    for (double delta : {0.3, 5.0})
        CHECK(check_conditions_power(0.0, AccuracyTarget{2.0, delta, alpha, 1.0}, 2.0).bound_eq1 ==
              doctest::Approx(delta / 4));
    CHECK_THROWS_AS(check_conditions_power(0.0, t, 2.5), DomainError);
}

TEST_CASE("check_conditions_piecewise examples")
{
    const AccuracyTarget t{2.0, 1.0, 0.05, 1.0};
    const auto r = check_conditions_piecewise(0.0, t, 4.0);
    CHECK(r.bound_eq1 == doctest::Approx(kPiecewiseBound).epsilon(1e-12));
    CHECK(r.closed_form_branch);
    CHECK(r.ok());
    // second condition: c_N < delta / 2^{1.5}
    const double b2 = 1.0 / std::pow(2.0, 1.5);
    CHECK(b2 == doctest::Approx(0.35355).epsilon(1e-5));
    const AccuracyTarget loose{2.0, 1.0, 0.999, 1.0};
    CHECK(check_conditions_piecewise(b2 * 0.999, loose, 4.0).eq2_ok);
    CHECK_FALSE(check_conditions_piecewise(b2, loose, 4.0).eq2_ok);

    // agrees with the generic path where the closed form is proved
    const auto g = check_conditions_generic(0.05, t, OrliczSpec::piecewise(4.0));
    CHECK(g.bound_eq1 == doctest::Approx(kPiecewiseBound).epsilon(1e-10));
    CHECK_THROWS_AS(check_conditions_piecewise(0.0, t, 2.0), DomainError);
}

TEST_CASE("piecewise closed form is flagged outside its branch")
{
    // gamma = 10: 1/beta = 0.9 > ln(2/0.9) = 0.799
    const AccuracyTarget t{2.0, 1.0, 0.9, 1.0};
    const auto spec = OrliczSpec::piecewise(10.0);
    CHECK_FALSE(check_conditions_piecewise(0.01, t, 10.0).closed_form_branch);
    const auto r = check_conditions(0.01, t, spec);
    CHECK_FALSE(r.closed_form_branch);
    const double x = phi_conjugate_inverse(spec, std::log(2.0 / 0.9));
    CHECK(x < 1.0);
    CHECK(r.bound_eq1 == doctest::Approx(1.0 / (x * x)));
}

TEST_CASE("closed-form and generic checkers agree on random tuples")
{
    RandomStream rng(2024, 0);
    int disagreements = 0;
    for (int i = 0; i < 1000; ++i) {
        const double gamma = 1.05 + 0.95 * rng.uniform();
        const double p = 1.0 + 4.0 * rng.uniform();
        const double delta = std::pow(10.0, -3.0 + 4.0 * rng.uniform());
        const double alpha = 0.001 + 0.998 * rng.uniform();
        const double c = delta * std::pow(10.0, -3.0 + 3.5 * rng.uniform());
        const AccuracyTarget t{p, delta, alpha, 1.0};
        const auto a = check_conditions_power(c, t, gamma);
        const auto b = check_conditions_generic(c, t, OrliczSpec::power(gamma));
        disagreements += (a.eq1_ok != b.eq1_ok) + (a.eq2_ok != b.eq2_ok);
        // reduction of the second condition
        CHECK(b.eq2_ok == (c * (1 + 1e-12) < delta / std::pow(p, p * (1 - 1 / gamma))));
    }
    CHECK(disagreements == 0);
}

TEST_CASE("tail bound is monotone")
{
    for (const auto& spec : {quadratic, OrliczSpec::power(1.4), OrliczSpec::piecewise(3)}) {
        double prev = 0.0;
        for (double c = 0.001; c < 10; c *= 1.3) {
            const double v = tail_probability_bound(c, AccuracyTarget{2, 1.0, 0.05, 1}, spec);
            CHECK(v >= prev);
            prev = v;
        }
        prev = 2.0;
        for (double d = 0.01; d < 100; d *= 1.3) {
            const double v = tail_probability_bound(0.1, AccuracyTarget{1.5, d, 0.05, 1}, spec);
            CHECK(v <= prev);
            prev = v;
        }
    }
}

TEST_CASE("max_admissible_cN examples")
{
    const AccuracyTarget t{2.0, 0.1, 0.05, 1.0};
    const double c = max_admissible_cN(t, quadratic);
    CHECK(std::abs(c - kBound01) <= 1e-8 * kBound01);
    CHECK(check_conditions_generic(c, t, quadratic).ok());

    double prev = 0.0;
    for (double alpha : {0.01, 0.1, 0.5, 0.9, 0.999}) {
        const double v = max_admissible_cN(AccuracyTarget{2.0, 0.1, alpha, 1.0}, quadratic);
        CHECK(v >= prev);
        prev = v;
    }
    CHECK(prev <= 0.1 / (2 * std::log(2.0)));

    const double doubled = max_admissible_cN(AccuracyTarget{2.0, 0.2, 0.05, 1.0}, quadratic);
    CHECK(doubled == doctest::Approx(2 * c).epsilon(1e-8));

    for (const auto& spec : {quadratic, OrliczSpec::power(1.2), OrliczSpec::piecewise(5)})
        for (double p : {1.0, 2.0, 6.0}) {
            const double v = max_admissible_cN(AccuracyTarget{p, 0.5, 0.05, 1.0}, spec);
            CHECK(v > 0.0);
            CHECK(std::isfinite(v));
        }
}

TEST_CASE("max_admissible_cN is limited by the second condition when alpha is large")
{
    // gamma = 2, p = 4: second bound delta / 4^2, first bound delta / (2 ln(2/alpha))^2.
    const AccuracyTarget t{4.0, 1.0, 0.9, 1.0};
    const double second = 1.0 / 16.0;
    const double first = 1.0 / std::pow(2 * std::log(2 / 0.9), 2.0);
    REQUIRE(second < first);
    CHECK(max_admissible_cN(t, quadratic) == doctest::Approx(second).epsilon(1e-8));
    CHECK(max_admissible_cN(t, quadratic) < second);
}

TEST_CASE("min_certified_delta examples")
{
    const double d = min_certified_delta(kBound01, 0.05, 2.0, quadratic, 1.0);
    CHECK(d == doctest::Approx(0.1).epsilon(1e-8));
    CHECK(check_conditions_generic(kBound01, AccuracyTarget{2.0, d, 0.05, 1.0}, quadratic).ok());

    for (const auto& spec : {quadratic, OrliczSpec::power(1.5), OrliczSpec::piecewise(4)}) {
        const AccuracyTarget t{3.0, 0.4, 0.02, 1.0};
        const double c = max_admissible_cN(t, spec);
        CHECK(min_certified_delta(c, t.alpha, t.p, spec, t.T) <= t.delta * (1 + 1e-8));
    }
    CHECK(min_certified_delta(1e-12, 0.05, 2.0, quadratic, 1.0) < 1e-10);
    CHECK(min_certified_delta(0.0, 0.05, 2.0, quadratic, 1.0) == 0.0);
}

TEST_CASE("target validation")
{
    CHECK_THROWS_AS((AccuracyTarget{0.5, 0.1, 0.05, 1}.validate()), DomainError);
    CHECK_THROWS_AS((AccuracyTarget{2, 0.1, 1.0, 1}.validate()), DomainError);
    CHECK_THROWS_AS((AccuracyTarget{2, 0.1, 0.05, 0}.validate()), DomainError);
    CHECK(AccuracyTarget{2, 0.25, 0.05, 1}.norm_accuracy() == doctest::Approx(0.5));
}

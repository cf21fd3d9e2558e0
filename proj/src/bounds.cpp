#include "subphi/bounds.hpp"

#include <cmath>
#include <limits>

#include "subphi/detail/optimize.hpp"
#include "subphi/errors.hpp"

namespace subphi {

namespace {

// Guard applied to the strict inequalities so that floating-point ties fail.
constexpr double kStrictGuard = 1e-12;

}  // namespace

void AccuracyTarget::validate() const
{
    if (!(p >= 1.0) || !std::isfinite(p))
        throw DomainError("target: p must be >= 1");
    if (!(delta >= 0.0) || !std::isfinite(delta))
        throw DomainError("target: delta must be non-negative");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw DomainError("target: alpha must lie in (0, 1)");
    if (!(T > 0.0) || !std::isfinite(T))
        throw DomainError("target: T must be positive");
}

double AccuracyTarget::norm_accuracy() const
{
    return std::pow(delta, 1.0 / p);
}

double tail_probability_bound(double c, const AccuracyTarget& target, const OrliczSpec& spec)
{
    if (c < 0.0)
        throw DomainError("tail_probability_bound: c must be non-negative");
    if (c == 0.0)
        return 0.0;
    if (!std::isfinite(c))
        return 1.0;
    const double arg = std::pow(target.delta / c, 1.0 / target.p);
    return std::min(1.0, 2.0 * std::exp(-phi_conjugate(spec, arg)));
}

bool tail_bound_valid(double c, const AccuracyTarget& target, const OrliczSpec& spec)
{
    if (c <= 0.0)
        return target.delta > 0.0;
    const double p = target.p;
    const double u = std::pow(c, 1.0 / p) * p / std::pow(target.delta, 1.0 / p);
    const double rhs = c * std::pow(phi_density(spec, u), p);
    return target.delta > rhs * (1.0 + kStrictGuard);
}

ConditionReport check_conditions_generic(double c_N, const AccuracyTarget& target, const OrliczSpec& spec)
{
    target.validate();
    if (c_N < 0.0)
        throw DomainError("check_conditions: c_N must be non-negative");
    ConditionReport r;
    r.c_N = c_N;
    const double x = phi_conjugate_inverse(spec, std::log(2.0 / target.alpha));
    r.bound_eq1 = target.delta / std::pow(x, target.p);
    r.eq1_ok = c_N <= r.bound_eq1;
    r.eq2_ok = tail_bound_valid(c_N, target, spec);
    r.tail_bound = tail_probability_bound(c_N, target, spec);
    r.margin = r.bound_eq1 - c_N;
    return r;
}

namespace {

ConditionReport closed_form_report(double c_N, const AccuracyTarget& target, double gamma, const OrliczSpec& spec)
{
    target.validate();
    if (c_N < 0.0)
        throw DomainError("check_conditions: c_N must be non-negative");
    const double beta = gamma / (gamma - 1.0);
    const double p = target.p;
    ConditionReport r;
    r.c_N = c_N;
    r.bound_eq1 = target.delta / std::pow(beta * std::log(2.0 / target.alpha), p / beta);
    r.eq1_ok = c_N <= r.bound_eq1;
    const double bound2 = target.delta / std::pow(p, p * (1.0 - 1.0 / gamma));
    r.eq2_ok = c_N * (1.0 + kStrictGuard) < bound2;
    r.tail_bound = tail_probability_bound(c_N, target, spec);
    r.margin = r.bound_eq1 - c_N;
    return r;
}

}  // namespace

ConditionReport check_conditions_power(double c_N, const AccuracyTarget& target, double gamma)
{
    return closed_form_report(c_N, target, gamma, OrliczSpec::power(gamma));
}

ConditionReport check_conditions_piecewise(double c_N, const AccuracyTarget& target, double gamma)
{
    const auto spec = OrliczSpec::piecewise(gamma);
    ConditionReport r = closed_form_report(c_N, target, gamma, spec);
    // phi*(1) = 1/beta: the closed-form conjugate branch needs ln(2/alpha) >= 1/beta.
    r.closed_form_branch = std::log(2.0 / target.alpha) >= 1.0 / spec.beta();
    return r;
}

ConditionReport check_conditions(double c_N, const AccuracyTarget& target, const OrliczSpec& spec)
{
    ConditionReport r = check_conditions_generic(c_N, target, spec);
    ConditionReport special;
    switch (spec.family()) {
    case OrliczFamily::PowerGamma:
        special = check_conditions_power(c_N, target, spec.gamma());
        break;
    case OrliczFamily::PiecewiseGamma:
        special = check_conditions_piecewise(c_N, target, spec.gamma());
        break;
    case OrliczFamily::NumericTable:
        return r;
    }
    r.closed_form_branch = special.closed_form_branch;
    if (special.closed_form_branch) {
        r.eq1_ok = r.eq1_ok && special.eq1_ok;
        r.eq2_ok = r.eq2_ok && special.eq2_ok;
    }
    return r;
}

double max_admissible_cN(const AccuracyTarget& target, const OrliczSpec& spec, const BisectionOptions& opt)
{
    target.validate();
    if (target.delta == 0.0)
        return 0.0;
    auto passes = [&](double c) { return check_conditions_generic(c, target, spec).ok(); };
    double hi = target.delta;
    for (int i = 0; i < 200 && passes(hi); ++i)
        hi *= 2.0;
    const auto [lo, h] = detail::bisect(passes, 0.0, hi, opt.rel_tol, opt.max_iter);
    (void)h;
    return lo;
}

double min_certified_delta(double c_N, double alpha, double p, const OrliczSpec& spec, double T,
                           const BisectionOptions& opt)
{
    if (c_N < 0.0)
        throw DomainError("min_certified_delta: c_N must be non-negative");
    if (c_N == 0.0)
        return 0.0;
    auto passes = [&](double delta) {
        return check_conditions_generic(c_N, AccuracyTarget{p, delta, alpha, T}, spec).ok();
    };
    double hi = c_N;
    for (int i = 0; i < 400 && !passes(hi); ++i)
        hi *= 2.0;
    if (!passes(hi))
        throw RangeError("min_certified_delta: no certifying delta found");
    const auto [lo, h] = detail::bisect(passes, 0.0, hi, opt.rel_tol, opt.max_iter);
    (void)lo;
    return h;
}

}  // namespace subphi

#include "subphi/subgaussian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <vector>

#include "subphi/detail/optimize.hpp"
#include "subphi/errors.hpp"

namespace subphi {

RandomStream::RandomStream(std::uint64_t root_seed, std::uint64_t stream_index)
{
    std::seed_seq seq{static_cast<std::uint32_t>(root_seed), static_cast<std::uint32_t>(root_seed >> 32),
                      static_cast<std::uint32_t>(stream_index), static_cast<std::uint32_t>(stream_index >> 32),
                      0x5eedu};
    engine_.seed(seq);
}

double RandomStream::normal()
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
}

SubGaussianSource SubGaussianSource::gaussian(double sigma)
{
    if (!(sigma > 0.0))
        throw DomainError("gaussian source: sigma must be positive");
    return {SourceKind::Gaussian, sigma, 0.0, {}};
}

SubGaussianSource SubGaussianSource::rademacher()
{
    return {SourceKind::Rademacher, 1.0, 0.0, {}};
}

SubGaussianSource SubGaussianSource::uniform(double b)
{
    if (!(b > 0.0))
        throw DomainError("uniform source: b must be positive");
    return {SourceKind::UniformSymmetric, b, 0.0, {}};
}

SubGaussianSource SubGaussianSource::explicit_source(double tau, std::string sampler_id)
{
    if (!(tau > 0.0))
        throw DomainError("explicit source: tau must be positive");
    return {SourceKind::Explicit, 1.0, tau, std::move(sampler_id)};
}

double SubGaussianSource::variance() const
{
    switch (kind) {
    case SourceKind::Gaussian:
        return scale * scale;
    case SourceKind::Rademacher:
        return 1.0;
    case SourceKind::UniformSymmetric:
        return scale * scale / 3.0;
    case SourceKind::Explicit:
        throw CapabilityError("variance of an explicit source is unknown");
    }
    return 0.0;
}

std::string SubGaussianSource::describe() const
{
    switch (kind) {
    case SourceKind::Gaussian:
        return "gaussian(sigma=" + std::to_string(scale) + ")";
    case SourceKind::Rademacher:
        return "rademacher";
    case SourceKind::UniformSymmetric:
        return "uniform(b=" + std::to_string(scale) + ")";
    case SourceKind::Explicit:
        return "explicit(" + sampler_id + ")";
    }
    return {};
}

double log_mgf(const SubGaussianSource& source, double lambda)
{
    const double l = std::abs(lambda);
    switch (source.kind) {
    case SourceKind::Gaussian:
        return 0.5 * source.scale * source.scale * l * l;
    case SourceKind::Rademacher: {
        // ln cosh, accurate both near 0 and for large arguments.
        if (l < 1.0) {
            const double sh = std::sinh(0.5 * l);
            return std::log1p(2.0 * sh * sh);
        }
        return l - std::numbers::ln2 + std::log1p(std::exp(-2.0 * l));
    }
    case SourceKind::UniformSymmetric: {
        // ln(sinh(x)/x), x = b*lambda.
        const double x = source.scale * l;
        if (x < 0.5) {
            const double x2 = x * x;
            return std::log1p(x2 * (1.0 / 6 + x2 * (1.0 / 120 + x2 * (1.0 / 5040 + x2 * (1.0 / 362880)))));
        }
        if (x < 20.0)
            return std::log(std::sinh(x) / x);
        return x - std::log(2.0 * x) + std::log1p(-std::exp(-2.0 * x));
    }
    case SourceKind::Explicit:
        throw CapabilityError("log-MGF of an explicit source is not available");
    }
    return 0.0;
}

double tau_of(const SubGaussianSource& source, const OrliczSpec& spec, const TauOptions& opt)
{
    if (source.kind == SourceKind::Explicit)
        return source.explicit_tau;

    const double phi_cap = spec.parametric() ? std::numeric_limits<double>::infinity()
                                             : phi_eval(spec, spec.x_max());
    auto ratio = [&](double lambda) {
        const double L = log_mgf(source, lambda);
        return phi_inverse(spec, std::max(L, 0.0)) / lambda;
    };

    const int n = std::max(opt.grid_points, 3);
    const double log_lo = std::log(opt.lambda_min);
    const double log_hi = std::log(opt.lambda_max);
    std::vector<double> lambdas;
    std::vector<double> values;
    bool truncated = false;
    for (int i = 0; i < n; ++i) {
        const double lam = std::exp(log_lo + (log_hi - log_lo) * i / (n - 1));
        if (log_mgf(source, lam) > phi_cap) {
            truncated = true;
            break;
        }
        lambdas.push_back(lam);
        values.push_back(ratio(lam));
    }
    if (lambdas.size() < 3)
        throw CapabilityError("tau_of: tabulated phi does not cover the log-MGF of " + source.describe());

    const auto it = std::max_element(values.begin(), values.end());
    const std::size_t best = static_cast<std::size_t>(it - values.begin());
    double tau = *it;

    if (best + 1 == values.size()) {
        // Maximum on the upper edge: either a plateau (strictly sub-Gaussian
        // under a quadratic phi) or divergence.
        const double lam_ref = lambdas.back() / 10.0;
        const double ref = ratio(lam_ref);
        if (tau > ref * (1.0 + opt.divergence_tol) || truncated)
            throw CapabilityError("tau_of: " + source.describe() + " is not in Sub_phi for " + spec.describe()
                                  + " (phi^{-1}(L(lambda))/lambda still increasing at lambda = "
                                  + std::to_string(lambdas.back()) + ")");
    }

    if (best > 0 && best + 1 < values.size()) {
        auto f = [&](double log_lam) { return ratio(std::exp(log_lam)); };
        const auto [arg, val] =
            detail::golden_section_max(f, std::log(lambdas[best - 1]), std::log(lambdas[best + 1]), 200, 1e-14);
        (void)arg;
        tau = std::max(tau, val);
    }
    return tau;
}

double tau_sum_bound(std::span<const double> taus, std::span<const double> coefficients, double s)
{
    if (!(s > 0.0 && s <= 2.0))
        throw DomainError("tau_sum_bound: s must lie in (0, 2]");
    if (taus.size() != coefficients.size())
        throw PreconditionError("tau_sum_bound: taus and coefficients differ in length");
    double sum = 0.0;
    for (std::size_t k = 0; k < taus.size(); ++k)
        sum += std::pow(std::abs(coefficients[k]) * taus[k], s);
    return std::pow(sum, 1.0 / s);
}

namespace {

std::mutex& registry_mutex()
{
    static std::mutex m;
    return m;
}

std::map<std::string, Sampler>& registry()
{
    static std::map<std::string, Sampler> r;
    return r;
}

}  // namespace

void register_sampler(const std::string& id, Sampler sampler)
{
    std::lock_guard lock(registry_mutex());
    registry()[id] = std::move(sampler);
}

double sample(const SubGaussianSource& source, RandomStream& rng)
{
    switch (source.kind) {
    case SourceKind::Gaussian:
        return source.scale * rng.normal();
    case SourceKind::Rademacher:
        return (rng.next_u64() >> 63) != 0 ? 1.0 : -1.0;
    case SourceKind::UniformSymmetric:
        return source.scale * (2.0 * rng.uniform() - 1.0);
    case SourceKind::Explicit: {
        Sampler sampler;
        {
            std::lock_guard lock(registry_mutex());
            const auto it = registry().find(source.sampler_id);
            if (it == registry().end())
                throw CapabilityError("no sampler registered under '" + source.sampler_id + "'");
            sampler = it->second;
        }
        return sampler(rng);
    }
    }
    return 0.0;
}

}  // namespace subphi

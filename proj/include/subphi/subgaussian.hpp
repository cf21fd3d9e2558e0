#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>

#include "subphi/orlicz.hpp"

namespace subphi {

/// Deterministic random stream. Streams are derived from a root seed and a
/// stream index (one per Monte Carlo path), so results do not depend on the
/// order in which paths are generated.
class RandomStream {
public:
    RandomStream(std::uint64_t root_seed, std::uint64_t stream_index);

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    /// Standard normal (Marsaglia polar method).
    double normal();

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

enum class SourceKind { Gaussian, Rademacher, UniformSymmetric, Explicit };

/// Zero-mean random variable family used for the series coefficients xi_k.
struct SubGaussianSource {
    SourceKind kind = SourceKind::Gaussian;
    double scale = 1.0;          // sigma (Gaussian) or b (uniform on [-b, b])
    double explicit_tau = 0.0;   // Explicit only
    std::string sampler_id;      // Explicit only

    static SubGaussianSource gaussian(double sigma);
    static SubGaussianSource rademacher();
    static SubGaussianSource uniform(double b);
    static SubGaussianSource explicit_source(double tau, std::string sampler_id);

    double variance() const;
    std::string describe() const;
};

/// ln E exp(lambda xi). Throws CapabilityError for Explicit sources.
double log_mgf(const SubGaussianSource& source, double lambda);

struct TauOptions {
    double lambda_min = 1e-4;
    double lambda_max = 1e4;
    int grid_points = 400;
    /// Relative growth of the per-lambda ratio over the last decade of the
    /// grid that is taken as divergence (source not in Sub_phi).
    double divergence_tol = 1e-6;
};

/// Sub-Gaussian standard tau_phi(xi) = inf{a > 0 : L(lambda) <= phi(lambda a) for all lambda},
/// evaluated as the supremum over a lambda grid of phi^{-1}(L(lambda))/lambda,
/// refined around the argmax. Never interpolates below a grid value.
double tau_of(const SubGaussianSource& source, const OrliczSpec& spec, const TauOptions& opt = {});

/// (sum_k |c_k|^s tau_k^s)^{1/s}: upper bound for tau_phi of sum_k c_k xi_k with
/// independent xi_k when phi(|x|^{1/s}) is convex.
double tau_sum_bound(std::span<const double> taus, std::span<const double> coefficients, double s);

using Sampler = std::function<double(RandomStream&)>;

/// Registers a sampler for Explicit sources. Not thread-safe against
/// concurrent sampling; register everything before simulation starts.
void register_sampler(const std::string& id, Sampler sampler);

double sample(const SubGaussianSource& source, RandomStream& rng);

}  // namespace subphi

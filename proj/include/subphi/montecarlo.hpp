#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "subphi/karhunen_loeve.hpp"

namespace subphi {

/// (sum_i w_i |v_i|^p)^{1/p}.
double lp_norm(std::span<const double> values, std::span<const double> weights, double p);

/// 95% Wilson score upper bound for a binomial proportion.
double wilson_upper(std::size_t successes, std::size_t n, double z = 1.959963984540054);

/// Sampler for the reference process X on a grid, independent of any model.
///
/// Gaussian sources: covariance Var(xi) B(t_i, t_j), factorized once by a
/// symmetric square root with negative eigenvalues clipped at 0. When
/// shared_modes = N > 0 (analytic eigendata required) the first N analytic
/// modes are drawn explicitly and only the residual covariance is factorized,
/// so a model can reuse the same mode draws.
///
/// Other sources: KL with analytic eigenpairs truncated at n_ref modes; the
/// unrepresented variance is reported by truncation_remainder().
class ReferenceSampler {
public:
    ReferenceSampler(const KernelSpec& kernel, const SubGaussianSource& source, const Grid& grid,
                     std::size_t shared_modes = 0, std::size_t n_ref = 1000);

    std::size_t shared_modes() const { return shared_; }
    std::size_t grid_size() const { return n_; }
    /// sup_t of the variance not represented by the sampler (0 for Gaussian sources).
    double truncation_remainder() const { return remainder_; }
    /// Largest clipped eigenvalue magnitude of the factorized covariance.
    double clip_magnitude() const { return clip_; }
    /// Trace of the factorized covariance (for relating clip_magnitude).
    double covariance_trace() const { return trace_; }

    /// One path. Draw order: the shared mode variables xi_1..xi_N, then the
    /// remaining variables. The shared draws are returned through shared_xi.
    std::vector<double> draw(RandomStream& rng, std::vector<double>* shared_xi = nullptr) const;

    /// Gaussian sources without shared modes: the path for given standard normals.
    std::vector<double> from_normals(std::span<const double> z) const;

private:
    SubGaussianSource source_;
    std::size_t n_ = 0;
    std::size_t shared_ = 0;
    bool gaussian_ = true;
    std::size_t cols_ = 0;                 // number of independent variables after the shared ones
    std::vector<double> shared_basis_;     // n x shared, row-major: a_k(t_i)/sqrt(lambda_k)
    std::vector<double> factor_;           // n x cols, row-major
    double remainder_ = 0.0;
    double clip_ = 0.0;
    double trace_ = 0.0;
};

/// One reference path using stream (seed, index).
std::vector<double> reference_path(const KernelSpec& kernel, const SubGaussianSource& source, const Grid& grid,
                                   std::uint64_t seed, std::uint64_t index = 0);

enum class Coupling { Auto, Coupled, Uncoupled };

struct VerifyOptions {
    /// Auto couples whenever the kernel has analytic eigendata.
    Coupling coupling = Coupling::Auto;
    /// Verify against this delta instead of the planned one.
    std::optional<double> delta;
    std::size_t n_ref = 1000;
    unsigned threads = 0;
    bool keep_norms = false;
};

struct VerificationReport {
    std::size_t n_paths = 0;
    std::size_t exceed_count = 0;
    double p_hat = 0.0;
    double wilson_upper = 0.0;
    double alpha = 0.0;
    double theoretical_bound = 1.0;
    bool pass = false;

    double delta = 0.0;
    double p = 2.0;
    std::size_t N = 0;
    double c_N = 0.0;
    bool coupled = false;
    double reference_remainder = 0.0;
    std::vector<std::string> warnings;
    std::vector<double> norms;  // ||X - X_N||_p per path when requested
};

/// Monte Carlo check of P{int_0^T |X - X_N|^p dt > delta} <= alpha.
/// Path j draws the reference from stream (seed, j); in coupled mode the
/// model reuses its first N mode draws (sign aligned to the analytic modes),
/// otherwise the model draws from an independent stream.
VerificationReport verify_plan(const KlModel& model, std::size_t n_paths, std::uint64_t seed,
                               const VerifyOptions& opt = {});

}  // namespace subphi

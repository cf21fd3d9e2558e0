#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "subphi/bounds.hpp"
#include "subphi/orlicz.hpp"
#include "subphi/plan.hpp"
#include "subphi/quadrature.hpp"
#include "subphi/series.hpp"
#include "subphi/subgaussian.hpp"

namespace subphi {

enum class KernelKind { BrownianMin, ExponentialOU, Custom };

/// Symmetric covariance kernel B(t, s) on [0, T]^2.
struct KernelSpec {
    KernelKind kind = KernelKind::BrownianMin;
    double T = 1.0;
    double theta = 1.0;  // ExponentialOU only
    std::function<double(double, double)> custom;
    std::string name;

    static KernelSpec brownian(double T = 1.0);
    static KernelSpec ou(double theta, double T = 1.0);
    static KernelSpec from_function(std::function<double(double, double)> B, double T, std::string name = "custom");
    /// Matrix of B values on a uniform grid of [0, T] (row i = t_i), bilinear
    /// interpolation in between. Throws ConfigError if the file is not square.
    static KernelSpec from_csv(const std::filesystem::path& path, double T);

    double operator()(double t, double s) const;
    double diagonal(double t) const { return (*this)(t, t); }
    std::string describe() const;

    /// Closed-form eigenpairs (convention a = lambda int B a) exist.
    bool has_analytic() const { return kind == KernelKind::BrownianMin; }
    /// k is 1-based. Throws CapabilityError without analytic eigenpairs.
    double analytic_lambda(std::size_t k) const;
    double analytic_eigenfunction(std::size_t k, double t) const;
};

struct KernelDiagnostics {
    std::vector<std::string> failures;
    double max_asymmetry = 0.0;
    double min_eigenvalue = 0.0;  // of the weighted kernel matrix, relative to its trace
    bool ok() const { return failures.empty(); }
};

/// Symmetry on sampled pairs and positive semidefiniteness of the discretized
/// kernel matrix.
KernelDiagnostics validate_kernel(const KernelSpec& kernel, std::size_t n_nodes = 64, double tol = 1e-8);

/// Approximate eigendata in the convention a = lambda int B a: lambda_hat ascending,
/// a_hat L2-orthonormal on the grid.
struct EigenSystem {
    Grid grid;
    std::vector<double> lambda_hat;
    std::vector<std::vector<double>> a_hat;      // [k][i]
    std::vector<double> eta;                     // eigenvalue error bounds
    std::vector<std::vector<double>> delta_fun;  // eigenfunction error bounds [k][i]

    std::size_t modes() const { return lambda_hat.size(); }
    /// Checks sizes, eta_k < lambda_hat_k, delta >= 0.
    void validate() const;
};

struct NystromOptions {
    double rank_tol = 1e-12;  // nu_M <= rank_tol * nu_1 is a rank error
    double psd_tol = 1e-8;    // nu < -psd_tol * trace is a kernel error
};

/// Nystrom discretization of a(t) = lambda int_0^T B(t, s) a(s) ds on the
/// composite Gauss-Legendre grid with n_nodes nodes. Returns the M smallest
/// lambda_hat with eta and delta_fun set to zero.
EigenSystem nystrom_eigensystem(const KernelSpec& kernel, std::size_t n_nodes, std::size_t M,
                                const NystromOptions& opt = {});
EigenSystem nystrom_eigensystem(const KernelSpec& kernel, const Grid& grid, std::size_t M,
                                const NystromOptions& opt = {});

/// Number of operator eigenvalues above rank_tol times the largest.
std::size_t numerical_rank(const KernelSpec& kernel, std::size_t n_nodes, const NystromOptions& opt = {});

/// Nystrom extension of mode k (0-based) to an arbitrary t.
double nystrom_extend(const KernelSpec& kernel, const EigenSystem& eig, std::size_t k, double t);

struct ErrorEstimate {
    std::vector<double> eta;
    std::vector<std::vector<double>> delta_fun;
};

/// Two-grid estimate from an already solved coarse and fine system:
/// eta_k = safety |lambda_coarse - lambda_fine|, delta_k(t_i) = safety
/// |a_coarse(t_i) - a_fine(t_i)| with the fine mode extended to the coarse
/// nodes and sign aligned. Throws DegeneracyError when modes cannot be
/// matched by index (|inner product| <= 0.9).
ErrorEstimate compare_grids(const KernelSpec& kernel, const EigenSystem& coarse, const EigenSystem& fine,
                            double safety);

/// Solves at n_nodes and 2 n_nodes and compares.
ErrorEstimate estimate_errors(const KernelSpec& kernel, std::size_t n_nodes, std::size_t M, double safety);

/// nystrom_eigensystem at n_nodes with eta and delta_fun filled by estimate_errors.
EigenSystem solve_with_errors(const KernelSpec& kernel, std::size_t n_nodes, std::size_t M, double safety);

/// Truncation tail of a KL expansion: g_power(N, q) returns, at the grid
/// nodes, sum_{k>N} (a_k(t)^2 / lambda_k)^q (an upper bound for UniformBound).
/// Tail modes share the standard tau.
struct KlTail {
    TailKind kind = TailKind::None;
    std::function<std::vector<double>(std::size_t N, double q)> g_power;
    double tau = 1.0;

    std::vector<double> at(std::size_t N, double q, std::size_t grid_size) const;
};

/// Analytic Brownian tail on the given grid. q = 1 uses the Mercer identity
/// exactly; other q sum the first K modes and add a bound for the rest.
KlTail analytic_tail(const KernelSpec& kernel, const Grid& grid, double tau, std::size_t K = 32768);

/// Mercer bound: max(0, B(t,t) - sum_{k<=N} (|a_hat_k| - delta_k)_+^2 / (lambda_hat_k + eta_k)).
/// Only q = 1 is available.
KlTail mercer_tail(const KernelSpec& kernel, const EigenSystem& eig, double tau);

double cN_theorem9(const EigenSystem& eig, const std::vector<double>& taus, std::size_t N, double p,
                   const KlTail& tail);

/// Constant-tau route through the kernel diagonal; no tail eigenfunctions needed.
double cN_theorem10(const EigenSystem& eig, double tau, std::size_t N, double p,
                    const std::function<double(double)>& diagonal, Mode mode = Mode::Consistent);

double cN_theorem11(const EigenSystem& eig, const std::vector<double>& taus, std::size_t N, double p, double gamma,
                    const KlTail& tail, Mode mode = Mode::Consistent);

struct KlOptions {
    std::size_t n_nodes = 128;
    std::size_t modes = 20;
    double safety = 2.0;
    Route route = Route::Theorem9;
    Mode mode = Mode::Consistent;
    /// Per-mode standards overriding the source's tau (rarely needed).
    std::vector<double> mode_taus;
};

struct KlModel {
    KernelSpec kernel;
    SubGaussianSource source;
    OrliczSpec spec;
    AccuracyTarget target;
    EigenSystem eig;
    double tau = 1.0;
    ModelPlan plan;
    /// c_N of the other mode for routes that have two (10 and 11).
    std::optional<double> cN_alternate;
    std::string tail_kind;
};

/// Eigensolve, error estimation, tau, and the N scan for the selected route.
KlModel build_kl_model(const KernelSpec& kernel, const OrliczSpec& spec, const SubGaussianSource& source,
                       const AccuracyTarget& target, const KlOptions& opt = {});

/// Model values at the grid nodes for the given mode draws xi_1..xi_N.
std::vector<double> kl_path(const EigenSystem& eig, std::size_t N, const std::vector<double>& xi);

/// n_paths model realizations; path j uses stream (seed, j) and draws
/// xi_1..xi_N in order.
std::vector<std::vector<double>> simulate_kl(const KlModel& model, std::size_t n_paths, std::uint64_t seed);

/// Writes eigenfunctions.csv (t, a_1..a_M, then delta_1..delta_M) and
/// eigenvalues.csv (k, lambda_hat, eta) into dir. A non-empty comment is
/// written first as a '#' line.
void export_eigensystem(const EigenSystem& eig, const std::filesystem::path& dir, const std::string& comment = "");

}  // namespace subphi

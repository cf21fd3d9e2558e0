#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "subphi/bounds.hpp"
#include "subphi/orlicz.hpp"
#include "subphi/plan.hpp"
#include "subphi/quadrature.hpp"

namespace subphi {

enum class TailKind { ClosedForm, UniformBound, None };

/// Tail information for X(t) = sum_k xi_k a_k(t): values(N, s) returns
/// sum_{k>N} tau_k^s |a_k(t)|^s at the grid nodes (an upper envelope for
/// UniformBound).
struct SeriesTail {
    TailKind kind = TailKind::None;
    std::function<std::vector<double>(std::size_t N, double s)> values;
    // Common standard of the tail modes, when it is a single number.
    double tau = std::numeric_limits<double>::quiet_NaN();

    static SeriesTail none() { return {}; }
    static SeriesTail zero(std::size_t grid_size);

    /// Throws CapabilityError when no tail information is available.
    std::vector<double> at(std::size_t N, double s, std::size_t grid_size) const;
};

struct CoefficientTerm {
    std::vector<double> a_hat;  // approximate coefficient function at the grid nodes
    std::vector<double> delta;  // pointwise bound on |a_k - a_hat_k|, >= 0
    double tau = 1.0;           // tau_phi(xi_k)
};

struct SeriesDecomposition {
    Grid grid;
    std::vector<CoefficientTerm> terms;
    SeriesTail tail;

    void validate() const;
};

/// (sum_{k<=N} tau_k^s delta_k(t_i)^s + tail_s(N)(t_i))^{1/s}: bound on the
/// sub-Gaussian standard of the residual at node t_i.
double residual_tau_bound(const SeriesDecomposition& dec, std::size_t N, std::size_t t_index, double s);

/// int_0^T (sum_{k<=N} tau_k^s delta_k^s + sum_{k>N} tau_k^s a_k^s)^{p/s} dt.
double cN_power_sum(const SeriesDecomposition& dec, std::size_t N, double p, double s);

/// s = 2 form (phi with phi(|x|^{1/2}) convex).
double cN_theorem7(const SeriesDecomposition& dec, std::size_t N, double p);

/// s = gamma form for phi = |x|^gamma/gamma, 1 < gamma < 2.
double cN_theorem8(const SeriesDecomposition& dec, std::size_t N, double p, double gamma);

/// Linear scan N = 1..N_max for the first c_N passing check_conditions.
ModelPlan choose_N(const std::function<double(std::size_t)>& cN, std::size_t N_max, const AccuracyTarget& target,
                   const OrliczSpec& spec);

/// Series routes: Series7 requires phi(|x|^{1/2}) convex, Series8 requires
/// PowerGamma with gamma < 2.
ModelPlan choose_N(const SeriesDecomposition& dec, const AccuracyTarget& target, const OrliczSpec& spec,
                   std::size_t N_max, Route route = Route::Series7);

/// X_N(t_i) = sum_{k<=N} xi_k a_hat_k(t_i).
std::vector<double> evaluate_model(const SeriesDecomposition& dec, std::size_t N, std::span<const double> xi);

/// Loads a decomposition from a CSV bundle directory:
///   manifest.csv  rows "term,<file>,<tau>" in series order and optionally
///                 "tail,<file>,<s>"; a header row "entry,file,value" is allowed.
///   term files    columns t,a_hat,delta at the grid nodes.
///   tail file     rows "N,v_1,...,v_n": sum_{k>N} tau_k^s |a_k|^s at the nodes
///                 (loaded as a UniformBound tail for that s only).
SeriesDecomposition load_series_bundle(const std::filesystem::path& dir, const Grid& grid);

}  // namespace subphi

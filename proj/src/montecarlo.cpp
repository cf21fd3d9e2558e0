#include "subphi/montecarlo.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "subphi/detail/csv.hpp"
#include "subphi/detail/parallel.hpp"
#include "subphi/errors.hpp"

namespace subphi {

double lp_norm(std::span<const double> values, std::span<const double> weights, double p)
{
    if (!(p >= 1.0))
        throw DomainError("lp_norm: p must be >= 1");
    if (values.size() != weights.size())
        throw PreconditionError("lp_norm: values and weights differ in length");
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
        s += weights[i] * std::pow(std::abs(values[i]), p);
    return std::pow(s, 1.0 / p);
}

double wilson_upper(std::size_t successes, std::size_t n, double z)
{
    if (n == 0)
        return 1.0;
    const double nn = static_cast<double>(n);
    const double ph = static_cast<double>(successes) / nn;
    const double z2 = z * z;
    const double centre = ph + z2 / (2 * nn);
    const double spread = z * std::sqrt(ph * (1 - ph) / nn + z2 / (4 * nn * nn));
    return std::min(1.0, (centre + spread) / (1 + z2 / nn));
}

// ---------------------------------------------------------------- reference sampler

ReferenceSampler::ReferenceSampler(const KernelSpec& kernel, const SubGaussianSource& source, const Grid& grid,
                                   std::size_t shared_modes, std::size_t n_ref)
    : source_(source), n_(grid.size()), shared_(shared_modes), gaussian_(source.kind == SourceKind::Gaussian)
{
    if (!gaussian_ && !kernel.has_analytic())
        throw CapabilityError("reference sampling of " + source.describe() + " needs analytic eigenpairs; "
                              + kernel.describe() + " has none");
    if (shared_ > 0 && !kernel.has_analytic())
        throw CapabilityError("coupled reference sampling needs analytic eigenpairs");
    if (!gaussian_ && shared_ > n_ref)
        throw PreconditionError("reference sampler: shared modes exceed n_ref");

    const double var = source.variance();
    shared_basis_.assign(n_ * shared_, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t k = 0; k < shared_; ++k)
            shared_basis_[i * shared_ + k] =
                kernel.analytic_eigenfunction(k + 1, grid.nodes[i]) / std::sqrt(kernel.analytic_lambda(k + 1));

    if (gaussian_) {
        Eigen::MatrixXd C(n_, n_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j <= i; ++j) {
                double c = kernel(grid.nodes[i], grid.nodes[j]);
                for (std::size_t k = 0; k < shared_; ++k)
                    c -= shared_basis_[i * shared_ + k] * shared_basis_[j * shared_ + k];
                C(i, j) = C(j, i) = var * c;
            }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
        if (es.info() != Eigen::Success)
            throw KernelError("reference covariance factorization failed");
        Eigen::VectorXd d = es.eigenvalues();
        trace_ = C.trace();
        for (Eigen::Index i = 0; i < d.size(); ++i)
            if (d(i) < 0.0) {
                clip_ = std::max(clip_, -d(i));
                d(i) = 0.0;
            }
        const Eigen::MatrixXd S = es.eigenvectors() * d.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
        cols_ = n_;
        factor_.resize(n_ * n_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j)
                factor_[i * n_ + j] = S(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    } else {
        cols_ = n_ref - shared_;
        factor_.resize(n_ * cols_);
        for (std::size_t i = 0; i < n_; ++i) {
            const double t = grid.nodes[i];
            double represented = 0.0;
            for (std::size_t k = 1; k <= n_ref; ++k) {
                const double b = kernel.analytic_eigenfunction(k, t) / std::sqrt(kernel.analytic_lambda(k));
                represented += b * b;
                if (k > shared_)
                    factor_[i * cols_ + (k - 1 - shared_)] = b;
            }
            remainder_ = std::max(remainder_, var * std::max(kernel.diagonal(t) - represented, 0.0));
        }
    }
}

std::vector<double> ReferenceSampler::draw(RandomStream& rng, std::vector<double>* shared_xi) const
{
    std::vector<double> xi(shared_);
    for (auto& x : xi)
        x = sample(source_, rng);
    std::vector<double> z(cols_);
    for (auto& x : z)
        x = gaussian_ ? rng.normal() : sample(source_, rng);

    std::vector<double> v(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < shared_; ++k)
            s += shared_basis_[i * shared_ + k] * xi[k];
        const double* row = &factor_[i * cols_];
        for (std::size_t j = 0; j < cols_; ++j)
            s += row[j] * z[j];
        v[i] = s;
    }
    if (shared_xi)
        *shared_xi = std::move(xi);
    return v;
}

std::vector<double> ReferenceSampler::from_normals(std::span<const double> z) const
{
    if (!gaussian_ || shared_ > 0)
        throw PreconditionError("from_normals: only for Gaussian sources without shared modes");
    if (z.size() != cols_)
        throw PreconditionError("from_normals: need one normal per grid node");
    std::vector<double> v(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < cols_; ++j)
            v[i] += factor_[i * cols_ + j] * z[j];
    return v;
}

std::vector<double> reference_path(const KernelSpec& kernel, const SubGaussianSource& source, const Grid& grid,
                                   std::uint64_t seed, std::uint64_t index)
{
    const ReferenceSampler sampler(kernel, source, grid);
    RandomStream rng(seed, index);
    return sampler.draw(rng);
}

// ---------------------------------------------------------------- verification

namespace {

constexpr std::uint64_t kModelStreamBit = 1ULL << 63;

}  // namespace

VerificationReport verify_plan(const KlModel& model, std::size_t n_paths, std::uint64_t seed,
                               const VerifyOptions& opt)
{
    if (!model.plan.feasible)
        throw PreconditionError("verify_plan: the plan is not feasible");
    if (n_paths == 0)
        throw PreconditionError("verify_plan: n_paths must be positive");

    const auto& eig = model.eig;
    const std::size_t N = model.plan.N;
    const bool coupled = opt.coupling == Coupling::Coupled
                         || (opt.coupling == Coupling::Auto && model.kernel.has_analytic());

    VerificationReport r;
    r.n_paths = n_paths;
    r.alpha = model.target.alpha;
    r.p = model.target.p;
    r.delta = opt.delta.value_or(model.target.delta);
    r.N = N;
    r.c_N = model.plan.c_N;
    r.coupled = coupled;

    AccuracyTarget target = model.target;
    target.delta = r.delta;
    r.theoretical_bound = tail_probability_bound(r.c_N, target, model.spec);

    const ReferenceSampler sampler(model.kernel, model.source, eig.grid, coupled ? N : 0, opt.n_ref);
    r.reference_remainder = sampler.truncation_remainder();
    if (sampler.clip_magnitude() > 1e-8 * sampler.covariance_trace())
        r.warnings.push_back("reference covariance: clipped negative eigenvalue of magnitude "
                             + detail::format_double(sampler.clip_magnitude()));
    if (r.reference_remainder > 0.0)
        r.warnings.push_back("reference truncated at " + std::to_string(opt.n_ref)
                             + " modes; unrepresented variance up to " + detail::format_double(r.reference_remainder));

    // Model modes are sign aligned with the analytic modes they share draws with.
    std::vector<double> sign(N, 1.0);
    if (coupled)
        for (std::size_t k = 0; k < N; ++k) {
            double ip = 0.0;
            for (std::size_t i = 0; i < eig.grid.size(); ++i)
                ip += eig.grid.weights[i] * eig.a_hat[k][i] * model.kernel.analytic_eigenfunction(k + 1, eig.grid.nodes[i]);
            sign[k] = ip < 0.0 ? -1.0 : 1.0;
        }

    const double level = r.delta;
    const double p = r.p;
    std::vector<double> norms(n_paths);
    std::vector<unsigned char> exceed(n_paths, 0);
    detail::parallel_chunks(
        n_paths,
        [&](std::size_t lo, std::size_t hi) {
            std::vector<double> xi;
            for (std::size_t j = lo; j < hi; ++j) {
                RandomStream rng(seed, j);
                const auto x = sampler.draw(rng, &xi);
                if (coupled) {
                    for (std::size_t k = 0; k < N; ++k)
                        xi[k] *= sign[k];
                } else {
                    RandomStream mrng(seed, j | kModelStreamBit);
                    xi.resize(N);
                    for (auto& v : xi)
                        v = sample(model.source, mrng);
                }
                const auto xn = kl_path(eig, N, xi);
                double s = 0.0;
                for (std::size_t i = 0; i < x.size(); ++i)
                    s += eig.grid.weights[i] * std::pow(std::abs(x[i] - xn[i]), p);
                norms[j] = std::pow(s, 1.0 / p);
                exceed[j] = s > level ? 1 : 0;
            }
        },
        opt.threads);

    for (unsigned char e : exceed)
        r.exceed_count += e;
    r.p_hat = static_cast<double>(r.exceed_count) / static_cast<double>(n_paths);
    r.wilson_upper = wilson_upper(r.exceed_count, n_paths);
    r.pass = r.wilson_upper <= r.alpha;
    if (opt.keep_norms)
        r.norms = std::move(norms);
    return r;
}

}  // namespace subphi

#include "subphi/karhunen_loeve.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include "subphi/detail/csv.hpp"
#include "subphi/detail/parallel.hpp"
#include "subphi/errors.hpp"
#include "subphi/series.hpp"

namespace subphi {

using detail::format_double;

// ---------------------------------------------------------------- kernels

KernelSpec KernelSpec::brownian(double T)
{
    if (!(T > 0.0))
        throw DomainError("kernel: T must be positive");
    KernelSpec k;
    k.kind = KernelKind::BrownianMin;
    k.T = T;
    k.name = "brownian";
    return k;
}

KernelSpec KernelSpec::ou(double theta, double T)
{
    if (!(theta > 0.0) || !(T > 0.0))
        throw DomainError("kernel: ou needs theta > 0 and T > 0");
    KernelSpec k;
    k.kind = KernelKind::ExponentialOU;
    k.theta = theta;
    k.T = T;
    k.name = "ou";
    return k;
}

KernelSpec KernelSpec::from_function(std::function<double(double, double)> B, double T, std::string name)
{
    if (!(T > 0.0))
        throw DomainError("kernel: T must be positive");
    KernelSpec k;
    k.kind = KernelKind::Custom;
    k.T = T;
    k.custom = std::move(B);
    k.name = std::move(name);
    return k;
}

KernelSpec KernelSpec::from_csv(const std::filesystem::path& path, double T)
{
    const auto rows = detail::read_csv(path);
    const std::size_t n = rows.size();
    if (n < 2)
        throw ConfigError("kernel file " + path.string() + ": need at least a 2x2 matrix");
    auto values = std::make_shared<std::vector<double>>();
    values->reserve(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != n)
            throw ConfigError("kernel file " + path.string() + ": row " + std::to_string(i + 1) + " has "
                              + std::to_string(rows[i].size()) + " entries, expected " + std::to_string(n));
        for (const auto& f : rows[i]) {
            try {
                values->push_back(detail::parse_double(f));
            } catch (const std::invalid_argument&) {
                throw ConfigError("kernel file " + path.string() + ": row " + std::to_string(i + 1)
                                  + ": not a number: '" + f + "'");
            }
        }
    }
    const double h = T / static_cast<double>(n - 1);
    auto B = [values, n, h](double t, double s) {
        auto locate = [&](double x, std::size_t& i, double& f) {
            double u = std::clamp(x / h, 0.0, static_cast<double>(n - 1));
            i = std::min(static_cast<std::size_t>(u), n - 2);
            f = u - static_cast<double>(i);
        };
        std::size_t i, j;
        double fi, fj;
        locate(t, i, fi);
        locate(s, j, fj);
        const auto& v = *values;
        auto at = [&](std::size_t a, std::size_t b) { return v[a * n + b]; };
        return (1 - fi) * (1 - fj) * at(i, j) + fi * (1 - fj) * at(i + 1, j) + (1 - fi) * fj * at(i, j + 1)
               + fi * fj * at(i + 1, j + 1);
    };
    return from_function(B, T, "custom:" + path.filename().string());
}

double KernelSpec::operator()(double t, double s) const
{
    switch (kind) {
    case KernelKind::BrownianMin:
        return std::min(t, s);
    case KernelKind::ExponentialOU:
        return std::exp(-theta * std::abs(t - s));
    case KernelKind::Custom:
        break;
    }
    if (!custom)
        throw PreconditionError("custom kernel has no function");
    return custom(t, s);
}

std::string KernelSpec::describe() const
{
    std::ostringstream os;
    switch (kind) {
    case KernelKind::BrownianMin:
        os << "brownian(T=" << T << ")";
        break;
    case KernelKind::ExponentialOU:
        os << "ou(theta=" << theta << ", T=" << T << ")";
        break;
    case KernelKind::Custom:
        os << name << "(T=" << T << ")";
        break;
    }
    return os.str();
}

double KernelSpec::analytic_lambda(std::size_t k) const
{
    if (!has_analytic())
        throw CapabilityError("no analytic eigenpairs for " + describe());
    if (k == 0)
        throw PreconditionError("mode index is 1-based");
    const double w = (static_cast<double>(k) - 0.5) * std::numbers::pi / T;
    return w * w;
}

double KernelSpec::analytic_eigenfunction(std::size_t k, double t) const
{
    if (!has_analytic())
        throw CapabilityError("no analytic eigenpairs for " + describe());
    if (k == 0)
        throw PreconditionError("mode index is 1-based");
    return std::sqrt(2.0 / T) * std::sin((static_cast<double>(k) - 0.5) * std::numbers::pi * t / T);
}

namespace {

Eigen::MatrixXd weighted_matrix(const KernelSpec& kernel, const Grid& g)
{
    const std::size_t n = g.size();
    Eigen::MatrixXd A(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const double wi = std::sqrt(g.weights[i]);
        for (std::size_t j = 0; j <= i; ++j) {
            const double v = wi * std::sqrt(g.weights[j]) * kernel(g.nodes[i], g.nodes[j]);
            A(i, j) = v;
            A(j, i) = v;
        }
    }
    return A;
}

}  // namespace

KernelDiagnostics validate_kernel(const KernelSpec& kernel, std::size_t n_nodes, double tol)
{
    KernelDiagnostics d;
    const Grid g = grid_with_nodes(kernel.T, n_nodes);
    double scale = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = 0; j < i; ++j) {
            const double a = kernel(g.nodes[i], g.nodes[j]);
            const double b = kernel(g.nodes[j], g.nodes[i]);
            if (!std::isfinite(a) || !std::isfinite(b)) {
                d.failures.push_back("kernel is not finite at sampled points");
                return d;
            }
            scale = std::max({scale, std::abs(a), std::abs(b)});
            d.max_asymmetry = std::max(d.max_asymmetry, std::abs(a - b));
        }
    if (d.max_asymmetry > tol * std::max(scale, 1.0))
        d.failures.push_back("kernel is not symmetric: max |B(t,s) - B(s,t)| = " + format_double(d.max_asymmetry));

    Eigen::MatrixXd A = weighted_matrix(kernel, g);
    A = 0.5 * (A + A.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
    const double trace = std::max(A.trace(), std::numeric_limits<double>::min());
    d.min_eigenvalue = es.eigenvalues()(0) / trace;
    if (d.min_eigenvalue < -tol)
        d.failures.push_back("kernel is not positive semidefinite: smallest eigenvalue / trace = "
                             + format_double(d.min_eigenvalue));
    return d;
}

// ---------------------------------------------------------------- eigensystem

void EigenSystem::validate() const
{
    const std::size_t M = lambda_hat.size();
    if (a_hat.size() != M || eta.size() != M || delta_fun.size() != M)
        throw PreconditionError("eigensystem: per-mode arrays differ in length");
    for (std::size_t k = 0; k < M; ++k) {
        if (a_hat[k].size() != grid.size() || delta_fun[k].size() != grid.size())
            throw PreconditionError("eigensystem: mode " + std::to_string(k + 1) + " does not match the grid");
        if (!(lambda_hat[k] > 0.0))
            throw PreconditionError("eigensystem: lambda_hat_" + std::to_string(k + 1) + " must be positive");
        if (k > 0 && lambda_hat[k] < lambda_hat[k - 1])
            throw PreconditionError("eigensystem: lambda_hat must be ascending");
        if (!(eta[k] >= 0.0))
            throw PreconditionError("eigensystem: eta_" + std::to_string(k + 1) + " must be non-negative");
        for (double d : delta_fun[k])
            if (!(d >= 0.0))
                throw PreconditionError("eigensystem: delta_" + std::to_string(k + 1) + " must be non-negative");
    }
}

namespace {

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solve_operator(const KernelSpec& kernel, const Grid& g,
                                                              const NystromOptions& opt, Eigen::VectorXd& nu_desc)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(weighted_matrix(kernel, g));
    if (es.info() != Eigen::Success)
        throw KernelError("eigensolver did not converge for " + kernel.describe());
    nu_desc = es.eigenvalues().reverse();
    const double trace = nu_desc.sum();
    if (!(trace > 0.0))
        throw KernelError("kernel " + kernel.describe() + " has non-positive trace");
    if (nu_desc(nu_desc.size() - 1) < -opt.psd_tol * trace)
        throw KernelError("kernel " + kernel.describe() + " is not positive semidefinite: eigenvalue "
                          + format_double(nu_desc(nu_desc.size() - 1)) + " below -" + format_double(opt.psd_tol)
                          + " * trace");
    return es;
}

}  // namespace

EigenSystem nystrom_eigensystem(const KernelSpec& kernel, const Grid& grid, std::size_t M, const NystromOptions& opt)
{
    const std::size_t n = grid.size();
    if (M < 1 || M > n)
        throw PreconditionError("nystrom: need 1 <= M <= n_nodes (M = " + std::to_string(M)
                                + ", n_nodes = " + std::to_string(n) + ")");
    Eigen::VectorXd nu;
    const auto es = solve_operator(kernel, grid, opt, nu);
    if (!(nu(M - 1) > opt.rank_tol * nu(0)))
        throw RankError("nystrom: mode " + std::to_string(M) + " is below the numerical rank of "
                        + kernel.describe() + "; reduce M");

    EigenSystem eig;
    eig.grid = grid;
    for (std::size_t k = 0; k < M; ++k) {
        const Eigen::Index col = static_cast<Eigen::Index>(n - 1 - k);
        std::vector<double> a(n);
        for (std::size_t i = 0; i < n; ++i)
            a[i] = es.eigenvectors()(static_cast<Eigen::Index>(i), col) / std::sqrt(grid.weights[i]);
        for (double v : a)
            if (std::abs(v) > 1e-8) {
                if (v < 0.0)
                    for (double& x : a)
                        x = -x;
                break;
            }
        eig.lambda_hat.push_back(1.0 / nu(static_cast<Eigen::Index>(k)));
        eig.a_hat.push_back(std::move(a));
        eig.eta.push_back(0.0);
        eig.delta_fun.emplace_back(n, 0.0);
    }
    return eig;
}

EigenSystem nystrom_eigensystem(const KernelSpec& kernel, std::size_t n_nodes, std::size_t M,
                                const NystromOptions& opt)
{
    return nystrom_eigensystem(kernel, grid_with_nodes(kernel.T, n_nodes), M, opt);
}

std::size_t numerical_rank(const KernelSpec& kernel, std::size_t n_nodes, const NystromOptions& opt)
{
    Eigen::VectorXd nu;
    solve_operator(kernel, grid_with_nodes(kernel.T, n_nodes), opt, nu);
    std::size_t r = 0;
    while (r < static_cast<std::size_t>(nu.size()) && nu(static_cast<Eigen::Index>(r)) > opt.rank_tol * nu(0))
        ++r;
    return r;
}

double nystrom_extend(const KernelSpec& kernel, const EigenSystem& eig, std::size_t k, double t)
{
    if (k >= eig.modes())
        throw PreconditionError("nystrom_extend: mode index out of range");
    const auto& g = eig.grid;
    double s = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j)
        s += g.weights[j] * kernel(t, g.nodes[j]) * eig.a_hat[k][j];
    return eig.lambda_hat[k] * s;
}

ErrorEstimate compare_grids(const KernelSpec& kernel, const EigenSystem& coarse, const EigenSystem& fine,
                            double safety)
{
    if (!(safety >= 1.0))
        throw DomainError("estimate_errors: safety must be >= 1");
    if (fine.modes() < coarse.modes())
        throw PreconditionError("estimate_errors: fine system has fewer modes");
    const auto& g = coarse.grid;
    const bool same_grid = g.nodes == fine.grid.nodes;
    ErrorEstimate est;
    for (std::size_t k = 0; k < coarse.modes(); ++k) {
        std::vector<double> ext(g.size());
        for (std::size_t i = 0; i < g.size(); ++i)
            ext[i] = same_grid ? fine.a_hat[k][i] : nystrom_extend(kernel, fine, k, g.nodes[i]);
        double ip = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i)
            ip += g.weights[i] * coarse.a_hat[k][i] * ext[i];
        if (!(std::abs(ip) > 0.9))
            throw DegeneracyError("estimate_errors: mode " + std::to_string(k + 1)
                                  + " does not match between grids (inner product " + format_double(ip)
                                  + "); reduce M");
        const double sign = ip < 0.0 ? -1.0 : 1.0;
        est.eta.push_back(safety * std::abs(coarse.lambda_hat[k] - fine.lambda_hat[k]));
        std::vector<double> d(g.size());
        for (std::size_t i = 0; i < g.size(); ++i)
            d[i] = safety * std::abs(coarse.a_hat[k][i] - sign * ext[i]);
        est.delta_fun.push_back(std::move(d));
    }
    return est;
}

ErrorEstimate estimate_errors(const KernelSpec& kernel, std::size_t n_nodes, std::size_t M, double safety)
{
    const EigenSystem coarse = nystrom_eigensystem(kernel, n_nodes, M);
    const EigenSystem fine = nystrom_eigensystem(kernel, 2 * n_nodes, M);
    return compare_grids(kernel, coarse, fine, safety);
}

EigenSystem solve_with_errors(const KernelSpec& kernel, std::size_t n_nodes, std::size_t M, double safety)
{
    EigenSystem eig = nystrom_eigensystem(kernel, n_nodes, M);
    const EigenSystem fine = nystrom_eigensystem(kernel, 2 * n_nodes, M);
    auto est = compare_grids(kernel, eig, fine, safety);
    eig.eta = std::move(est.eta);
    eig.delta_fun = std::move(est.delta_fun);
    return eig;
}

// ---------------------------------------------------------------- tails

std::vector<double> KlTail::at(std::size_t N, double q, std::size_t grid_size) const
{
    if (kind == TailKind::None || !g_power)
        throw CapabilityError("no tail information: the truncation error cannot be certified");
    auto v = g_power(N, q);
    if (v.size() != grid_size)
        throw PreconditionError("tail values do not match the grid size");
    return v;
}

namespace {

// Suffix sums sum_{k>N} g_k^q for the Brownian eigenpairs, cached per q.
class BrownianTailCache {
public:
    BrownianTailCache(KernelSpec kernel, Grid grid, std::size_t K) : kernel_(std::move(kernel)), grid_(std::move(grid)), K_(K) {}

    std::vector<double> get(std::size_t N, double q)
    {
        const std::size_t n = grid_.size();
        if (q == 1.0) {
            std::vector<double> v(n);
            for (std::size_t i = 0; i < n; ++i) {
                double s = kernel_.diagonal(grid_.nodes[i]);
                for (std::size_t k = 1; k <= N; ++k)
                    s -= g(k, grid_.nodes[i]);
                v[i] = std::max(s, 0.0);
            }
            return v;
        }
        if (!(q > 0.5))
            throw CapabilityError("Brownian tail sum of (a_k^2/lambda_k)^q diverges for q <= 1/2");
        if (N >= kCached) {
            std::vector<double> v(n, remainder(q));
            for (std::size_t k = K_; k > N; --k)
                for (std::size_t i = 0; i < n; ++i)
                    v[i] += std::pow(g(k, grid_.nodes[i]), q);
            return v;
        }
        std::lock_guard lock(mutex_);
        auto it = suffix_.find(q);
        if (it == suffix_.end()) {
            std::vector<std::vector<double>> table(kCached + 1);
            std::vector<double> acc(n, remainder(q));
            for (std::size_t k = K_; k > kCached; --k)
                for (std::size_t i = 0; i < n; ++i)
                    acc[i] += std::pow(g(k, grid_.nodes[i]), q);
            table[kCached] = acc;
            for (std::size_t m = kCached; m-- > 0;) {
                for (std::size_t i = 0; i < n; ++i)
                    acc[i] += std::pow(g(m + 1, grid_.nodes[i]), q);
                table[m] = acc;
            }
            it = suffix_.emplace(q, std::move(table)).first;
        }
        return it->second[N];
    }

private:
    static constexpr std::size_t kCached = 256;

    double g(std::size_t k, double t) const
    {
        const double a = kernel_.analytic_eigenfunction(k, t);
        return a * a / kernel_.analytic_lambda(k);
    }

    // sum_{k>K} (a_k^2/lambda_k)^q <= (2T/pi^2)^q (K - 1/2)^{1-2q} / (2q - 1)
    double remainder(double q) const
    {
        const double c = 2.0 * kernel_.T / (std::numbers::pi * std::numbers::pi);
        return std::pow(c, q) * std::pow(static_cast<double>(K_) - 0.5, 1.0 - 2.0 * q) / (2.0 * q - 1.0);
    }

    KernelSpec kernel_;
    Grid grid_;
    std::size_t K_;
    std::mutex mutex_;
    std::map<double, std::vector<std::vector<double>>> suffix_;
};

}  // namespace

KlTail analytic_tail(const KernelSpec& kernel, const Grid& grid, double tau, std::size_t K)
{
    if (!kernel.has_analytic())
        throw CapabilityError("no analytic eigenpairs for " + kernel.describe());
    if (K <= 256)
        throw PreconditionError("analytic_tail: K must exceed 256");
    auto cache = std::make_shared<BrownianTailCache>(kernel, grid, K);
    KlTail tail;
    tail.kind = TailKind::ClosedForm;
    tail.tau = tau;
    tail.g_power = [cache](std::size_t N, double q) { return cache->get(N, q); };
    return tail;
}

KlTail mercer_tail(const KernelSpec& kernel, const EigenSystem& eig, double tau)
{
    KlTail tail;
    tail.kind = TailKind::UniformBound;
    tail.tau = tau;
    tail.g_power = [kernel, eig](std::size_t N, double q) {
        if (q != 1.0)
            throw CapabilityError("the Mercer tail bound only covers the quadratic (s = 2) sum");
        if (N > eig.modes())
            throw PreconditionError("mercer tail: N exceeds the number of modes");
        const auto& g = eig.grid;
        std::vector<double> v(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            double s = kernel.diagonal(g.nodes[i]);
            for (std::size_t k = 0; k < N; ++k) {
                const double lo = std::max(std::abs(eig.a_hat[k][i]) - eig.delta_fun[k][i], 0.0);
                s -= lo * lo / (eig.lambda_hat[k] + eig.eta[k]);
            }
            v[i] = std::max(s, 0.0);
        }
        return v;
    };
    return tail;
}

// ---------------------------------------------------------------- c_N

namespace {

void check_modes(const EigenSystem& eig, std::size_t N, std::size_t n_taus, double p)
{
    if (!(p >= 1.0))
        throw DomainError("c_N: p must be >= 1");
    if (N > eig.modes())
        throw PreconditionError("c_N: N = " + std::to_string(N) + " exceeds the " + std::to_string(eig.modes())
                                + " computed modes");
    if (n_taus < N)
        throw PreconditionError("c_N: need a tau for each retained mode");
    for (std::size_t k = 0; k < N; ++k)
        if (!(eig.eta[k] < eig.lambda_hat[k]))
            throw PreconditionError("c_N: eta_" + std::to_string(k + 1) + " >= lambda_hat_" + std::to_string(k + 1)
                                    + "; the eigenvalue error is too large for this mode");
}

// sqrt(l) - sqrt(l - eta) without cancellation.
double sqrt_gap(double l, double eta) { return eta / (std::sqrt(l) + std::sqrt(l - eta)); }

// Per-node quadratic error of mode k: delta^2/(l-eta) + a^2 gap^2/(l(l-eta)).
double quadratic_error(const EigenSystem& eig, std::size_t k, std::size_t i)
{
    const double l = eig.lambda_hat[k];
    const double e = eig.eta[k];
    const double d = eig.delta_fun[k][i];
    const double a = eig.a_hat[k][i];
    const double gap = sqrt_gap(l, e);
    return d * d / (l - e) + a * a * gap * gap / (l * (l - e));
}

double integrate_power(const Grid& g, std::vector<double> v, double power)
{
    for (double& x : v)
        x = std::pow(std::max(x, 0.0), power);
    return g.integrate(v);
}

}  // namespace

double cN_theorem9(const EigenSystem& eig, const std::vector<double>& taus, std::size_t N, double p,
                   const KlTail& tail)
{
    check_modes(eig, N, taus.size(), p);
    const std::size_t n = eig.grid.size();
    std::vector<double> v = tail.at(N, 1.0, n);
    const double t2 = tail.tau * tail.tau;
    for (double& x : v)
        x *= t2;
    for (std::size_t k = 0; k < N; ++k) {
        const double tk2 = taus[k] * taus[k];
        for (std::size_t i = 0; i < n; ++i)
            v[i] += tk2 * quadratic_error(eig, k, i);
    }
    return integrate_power(eig.grid, std::move(v), p / 2.0);
}

double cN_theorem10(const EigenSystem& eig, double tau, std::size_t N, double p,
                    const std::function<double(double)>& diagonal, Mode mode)
{
    check_modes(eig, N, N, p);
    if (!(tau > 0.0))
        throw DomainError("cN_theorem10: tau must be positive");
    const auto& g = eig.grid;
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        double bracket = diagonal(g.nodes[i]);
        double corr = 0.0;
        for (std::size_t k = 0; k < N; ++k) {
            const double a = eig.a_hat[k][i];
            const double d = eig.delta_fun[k][i];
            const double lo = mode == Mode::Consistent ? std::max(std::abs(a) - d, 0.0) : a - d;
            bracket -= lo * lo / (eig.lambda_hat[k] + eig.eta[k]);
            corr += quadratic_error(eig, k, i);
        }
        v[i] = std::max(bracket, 0.0) + corr;
    }
    const double prefactor = std::pow(tau, mode == Mode::Consistent ? p : p / 2.0);
    return prefactor * integrate_power(g, std::move(v), p / 2.0);
}

double cN_theorem11(const EigenSystem& eig, const std::vector<double>& taus, std::size_t N, double p, double gamma,
                    const KlTail& tail, Mode mode)
{
    if (!(gamma > 1.0 && gamma < 2.0))
        throw DomainError("cN_theorem11: gamma must lie in (1, 2)");
    check_modes(eig, N, taus.size(), p);
    const std::size_t n = eig.grid.size();
    const bool literal = mode == Mode::PaperLiteral;
    std::vector<double> v = tail.at(N, literal ? gamma : gamma / 2.0, n);
    const double tg = std::pow(tail.tau, gamma);
    for (double& x : v)
        x *= tg;
    for (std::size_t k = 0; k < N; ++k) {
        const double l = eig.lambda_hat[k];
        const double e = eig.eta[k];
        const double gap = sqrt_gap(l, e);
        const double tk = std::pow(taus[k], gamma);
        for (std::size_t i = 0; i < n; ++i) {
            const double d = eig.delta_fun[k][i];
            const double a = std::abs(eig.a_hat[k][i]);
            double term;
            if (literal)
                term = std::pow(d, gamma) / std::pow(l - e, gamma)
                       + std::pow(a, gamma) * std::pow(gap, gamma) / std::pow(l * (l - e), gamma);
            else
                term = std::pow(d / std::sqrt(l - e), gamma) + std::pow(a * gap / std::sqrt(l * (l - e)), gamma);
            v[i] += tk * term;
        }
    }
    return integrate_power(eig.grid, std::move(v), p / gamma);
}

// ---------------------------------------------------------------- model

KlModel build_kl_model(const KernelSpec& kernel, const OrliczSpec& spec, const SubGaussianSource& source,
                       const AccuracyTarget& target, const KlOptions& opt)
{
    target.validate();
    if (std::abs(target.T - kernel.T) > 1e-12 * kernel.T)
        throw PreconditionError("target T does not match the kernel's T");

    switch (opt.route) {
    case Route::Theorem9:
    case Route::Theorem10:
        if (!check_power_convexity(spec, 2.0))
            throw RouteError(to_string(opt.route) + " needs phi(|x|^{1/2}) convex; " + spec.describe() + " is not");
        break;
    case Route::Theorem11:
        if (spec.family() != OrliczFamily::PowerGamma || !(spec.gamma() < 2.0))
            throw RouteError("theorem11 needs phi = |x|^gamma/gamma with 1 < gamma < 2; got " + spec.describe());
        break;
    default:
        throw RouteError(to_string(opt.route) + " is a series route, not a Karhunen-Loeve route");
    }

    KlModel model;
    model.kernel = kernel;
    model.source = source;
    model.spec = spec;
    model.target = target;

    const std::size_t M = std::min({opt.modes, opt.n_nodes, numerical_rank(kernel, opt.n_nodes)});
    if (M == 0)
        throw RankError("kernel " + kernel.describe() + " has numerical rank 0");
    model.eig = solve_with_errors(kernel, opt.n_nodes, M, opt.safety);

    std::vector<double> taus;
    double tail_tau;
    if (!opt.mode_taus.empty()) {
        if (opt.mode_taus.size() < M)
            throw PreconditionError("mode_taus: need at least " + std::to_string(M) + " entries");
        taus.assign(opt.mode_taus.begin(), opt.mode_taus.begin() + static_cast<std::ptrdiff_t>(M));
        tail_tau = *std::max_element(opt.mode_taus.begin(), opt.mode_taus.end());
        const bool constant = std::all_of(taus.begin(), taus.end(), [&](double t) { return t == taus.front(); });
        if (opt.route == Route::Theorem10 && !constant)
            throw RouteError("theorem10 needs the same tau for every mode");
        model.tau = tail_tau;
    } else {
        model.tau = tau_of(source, spec);
        taus.assign(M, model.tau);
        tail_tau = model.tau;
    }

    // Largest N whose eigenvalue errors keep the denominators positive.
    std::size_t N_max = 0;
    while (N_max < M && model.eig.eta[N_max] < model.eig.lambda_hat[N_max])
        ++N_max;
    if (N_max == 0)
        throw PreconditionError("eta_1 >= lambda_hat_1: refine n_nodes");

    KlTail tail;
    if (opt.route != Route::Theorem10) {
        tail = kernel.has_analytic() ? analytic_tail(kernel, model.eig.grid, tail_tau)
                                     : mercer_tail(kernel, model.eig, tail_tau);
        model.tail_kind = kernel.has_analytic() ? "analytic" : "mercer";
    } else {
        model.tail_kind = "mercer";
    }

    const auto& eig = model.eig;
    const double p = target.p;
    auto diag = [&kernel](double t) { return kernel.diagonal(t); };
    std::function<double(std::size_t, Mode)> cN;
    switch (opt.route) {
    case Route::Theorem9:
        cN = [&](std::size_t N, Mode) { return cN_theorem9(eig, taus, N, p, tail); };
        break;
    case Route::Theorem10:
        cN = [&](std::size_t N, Mode m) { return cN_theorem10(eig, taus.front(), N, p, diag, m); };
        break;
    default:
        cN = [&](std::size_t N, Mode m) { return cN_theorem11(eig, taus, N, p, spec.gamma(), tail, m); };
        break;
    }

    model.plan = choose_N([&](std::size_t N) { return cN(N, opt.mode); }, N_max, target, spec);
    model.plan.route = opt.route;
    model.plan.mode = opt.mode;
    if (opt.route != Route::Theorem9) {
        const Mode other = opt.mode == Mode::Consistent ? Mode::PaperLiteral : Mode::Consistent;
        model.cN_alternate = cN(model.plan.N, other);
    }
    return model;
}

std::vector<double> kl_path(const EigenSystem& eig, std::size_t N, const std::vector<double>& xi)
{
    if (N > eig.modes() || xi.size() < N)
        throw PreconditionError("kl_path: need N <= modes and N draws");
    std::vector<double> v(eig.grid.size(), 0.0);
    for (std::size_t k = 0; k < N; ++k) {
        const double c = xi[k] / std::sqrt(eig.lambda_hat[k]);
        for (std::size_t i = 0; i < v.size(); ++i)
            v[i] += c * eig.a_hat[k][i];
    }
    return v;
}

std::vector<std::vector<double>> simulate_kl(const KlModel& model, std::size_t n_paths, std::uint64_t seed)
{
    if (!model.plan.feasible)
        throw PreconditionError("simulate_kl: the plan is not feasible");
    const std::size_t N = model.plan.N;
    std::vector<std::vector<double>> paths(n_paths);
    detail::parallel_chunks(n_paths, [&](std::size_t lo, std::size_t hi) {
        std::vector<double> xi(N);
        for (std::size_t j = lo; j < hi; ++j) {
            RandomStream rng(seed, j);
            for (auto& x : xi)
                x = sample(model.source, rng);
            paths[j] = kl_path(model.eig, N, xi);
        }
    });
    return paths;
}

void export_eigensystem(const EigenSystem& eig, const std::filesystem::path& dir, const std::string& comment)
{
    std::filesystem::create_directories(dir);
    const std::size_t M = eig.modes();
    std::ofstream f(dir / "eigenfunctions.csv");
    std::ofstream m(dir / "eigenvalues.csv");
    if (!comment.empty()) {
        f << "# " << comment << "\n";
        m << "# " << comment << "\n";
    }
    f << "t";
    for (std::size_t k = 1; k <= M; ++k)
        f << ",a_" << k;
    for (std::size_t k = 1; k <= M; ++k)
        f << ",delta_" << k;
    f << "\n";
    for (std::size_t i = 0; i < eig.grid.size(); ++i) {
        f << format_double(eig.grid.nodes[i]);
        for (std::size_t k = 0; k < M; ++k)
            f << "," << format_double(eig.a_hat[k][i]);
        for (std::size_t k = 0; k < M; ++k)
            f << "," << format_double(eig.delta_fun[k][i]);
        f << "\n";
    }
    m << "k,lambda_hat,eta\n";
    for (std::size_t k = 0; k < M; ++k)
        m << k + 1 << "," << format_double(eig.lambda_hat[k]) << "," << format_double(eig.eta[k]) << "\n";
    if (!f || !m)
        throw ConfigError("could not write eigensystem files to " + dir.string());
}

}  // namespace subphi

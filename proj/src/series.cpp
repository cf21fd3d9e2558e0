#include "subphi/series.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "subphi/detail/csv.hpp"
#include "subphi/errors.hpp"

namespace subphi {

SeriesTail SeriesTail::zero(std::size_t grid_size)
{
    SeriesTail t;
    t.kind = TailKind::ClosedForm;
    t.values = [grid_size](std::size_t, double) { return std::vector<double>(grid_size, 0.0); };
    return t;
}

std::vector<double> SeriesTail::at(std::size_t N, double s, std::size_t grid_size) const
{
    if (kind == TailKind::None || !values)
        throw CapabilityError("no tail information: the truncation error cannot be certified");
    auto v = values(N, s);
    if (v.size() != grid_size)
        throw PreconditionError("tail values do not match the grid size");
    return v;
}

void SeriesDecomposition::validate() const
{
    const std::size_t n = grid.size();
    for (std::size_t k = 0; k < terms.size(); ++k) {
        const auto& t = terms[k];
        if (t.a_hat.size() != n || t.delta.size() != n)
            throw PreconditionError("term " + std::to_string(k + 1) + ": values do not match the grid");
        if (!(t.tau > 0.0))
            throw PreconditionError("term " + std::to_string(k + 1) + ": tau must be positive");
        for (double d : t.delta)
            if (!(d >= 0.0))
                throw PreconditionError("term " + std::to_string(k + 1) + ": delta must be non-negative");
    }
}

namespace {

void check_N(const SeriesDecomposition& dec, std::size_t N)
{
    if (N > dec.terms.size())
        throw PreconditionError("N = " + std::to_string(N) + " exceeds the number of terms ("
                                + std::to_string(dec.terms.size()) + ")");
}

// sum_{k<=N} tau_k^s delta_k^s + tail_s(N) at every node.
std::vector<double> power_sum_profile(const SeriesDecomposition& dec, std::size_t N, double s)
{
    check_N(dec, N);
    std::vector<double> v = dec.tail.at(N, s, dec.grid.size());
    for (std::size_t k = 0; k < N; ++k) {
        const auto& term = dec.terms[k];
        const double ts = std::pow(term.tau, s);
        for (std::size_t i = 0; i < v.size(); ++i)
            v[i] += ts * std::pow(term.delta[i], s);
    }
    return v;
}

}  // namespace

double residual_tau_bound(const SeriesDecomposition& dec, std::size_t N, std::size_t t_index, double s)
{
    if (!(s > 0.0 && s <= 2.0))
        throw DomainError("residual_tau_bound: s must lie in (0, 2]");
    const auto v = power_sum_profile(dec, N, s);
    if (t_index >= v.size())
        throw PreconditionError("residual_tau_bound: node index out of range");
    return std::pow(v[t_index], 1.0 / s);
}

double cN_power_sum(const SeriesDecomposition& dec, std::size_t N, double p, double s)
{
    if (!(p >= 1.0))
        throw DomainError("c_N: p must be >= 1");
    auto v = power_sum_profile(dec, N, s);
    for (double& x : v)
        x = std::pow(std::max(x, 0.0), p / s);
    return dec.grid.integrate(v);
}

double cN_theorem7(const SeriesDecomposition& dec, std::size_t N, double p)
{
    return cN_power_sum(dec, N, p, 2.0);
}

double cN_theorem8(const SeriesDecomposition& dec, std::size_t N, double p, double gamma)
{
    if (!(gamma > 1.0 && gamma < 2.0))
        throw DomainError("cN_theorem8: gamma must lie in (1, 2)");
    return cN_power_sum(dec, N, p, gamma);
}

ModelPlan choose_N(const std::function<double(std::size_t)>& cN, std::size_t N_max, const AccuracyTarget& target,
                   const OrliczSpec& spec)
{
    target.validate();
    if (N_max == 0)
        throw PreconditionError("choose_N: N_max must be at least 1");
    ModelPlan plan;
    std::size_t best_N = 0;
    double best_c = std::numeric_limits<double>::infinity();
    for (std::size_t N = 1; N <= N_max; ++N) {
        const double c = cN(N);
        plan.cN_trace.push_back(c);
        if (c < best_c) {
            best_c = c;
            best_N = N;
        }
        const ConditionReport r = check_conditions(c, target, spec);
        if (r.ok()) {
            plan.feasible = true;
            plan.N = N;
            plan.c_N = c;
            plan.report = r;
            return plan;
        }
    }
    plan.feasible = false;
    plan.N = best_N;
    plan.c_N = best_c;
    plan.report = check_conditions(best_c, target, spec);
    return plan;
}

ModelPlan choose_N(const SeriesDecomposition& dec, const AccuracyTarget& target, const OrliczSpec& spec,
                   std::size_t N_max, Route route)
{
    dec.validate();
    if (dec.terms.empty())
        throw PreconditionError("choose_N: decomposition has no terms");
    if (N_max > dec.terms.size())
        throw PreconditionError("choose_N: N_max exceeds the number of terms");

    std::function<double(std::size_t)> cN;
    switch (route) {
    case Route::Series7:
        if (!check_power_convexity(spec, 2.0))
            throw RouteError("series7 needs phi(|x|^{1/2}) convex; " + spec.describe() + " is not");
        cN = [&](std::size_t N) { return cN_theorem7(dec, N, target.p); };
        break;
    case Route::Series8: {
        if (spec.family() != OrliczFamily::PowerGamma || !(spec.gamma() < 2.0))
            throw RouteError("series8 needs phi = |x|^gamma/gamma with 1 < gamma < 2");
        const double g = spec.gamma();
        cN = [&dec, &target, g](std::size_t N) { return cN_theorem8(dec, N, target.p, g); };
        break;
    }
    default:
        throw RouteError("choose_N: route " + to_string(route) + " is not a series route");
    }
    ModelPlan plan = choose_N(cN, N_max, target, spec);
    plan.route = route;
    return plan;
}

std::vector<double> evaluate_model(const SeriesDecomposition& dec, std::size_t N, std::span<const double> xi)
{
    check_N(dec, N);
    if (xi.size() < N)
        throw PreconditionError("evaluate_model: need at least N draws");
    std::vector<double> out(dec.grid.size(), 0.0);
    for (std::size_t k = 0; k < N; ++k) {
        const auto& a = dec.terms[k].a_hat;
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] += xi[k] * a[i];
    }
    return out;
}

SeriesDecomposition load_series_bundle(const std::filesystem::path& dir, const Grid& grid)
{
    SeriesDecomposition dec;
    dec.grid = grid;
    const auto manifest = detail::read_csv(dir / "manifest.csv");
    const double tol = 1e-9 * grid.T;
    for (const auto& row : manifest) {
        if (row.empty() || row[0] == "entry")
            continue;
        if (row.size() < 3)
            throw ConfigError("manifest.csv: rows need entry,file,value");
        if (row[0] == "term") {
            CoefficientTerm term;
            term.tau = detail::parse_double(row[2]);
            const auto rows = detail::read_csv(dir / row[1]);
            for (const auto& r : rows) {
                if (r.size() < 3 || !detail::is_number(r[0]))
                    continue;
                const std::size_t i = term.a_hat.size();
                if (i >= grid.size() || std::abs(detail::parse_double(r[0]) - grid.nodes[i]) > tol)
                    throw ConfigError(row[1] + ": t column does not match the quadrature nodes");
                term.a_hat.push_back(detail::parse_double(r[1]));
                term.delta.push_back(detail::parse_double(r[2]));
            }
            if (term.a_hat.size() != grid.size())
                throw ConfigError(row[1] + ": expected " + std::to_string(grid.size()) + " rows");
            dec.terms.push_back(std::move(term));
        } else if (row[0] == "tail") {
            const double s_file = detail::parse_double(row[2]);
            std::map<std::size_t, std::vector<double>> table;
            for (const auto& r : detail::read_csv(dir / row[1])) {
                if (r.empty() || !detail::is_number(r[0]))
                    continue;
                if (r.size() != grid.size() + 1)
                    throw ConfigError(row[1] + ": each row needs N followed by one value per node");
                std::vector<double> v;
                for (std::size_t i = 1; i < r.size(); ++i)
                    v.push_back(detail::parse_double(r[i]));
                table[static_cast<std::size_t>(detail::parse_double(r[0]))] = std::move(v);
            }
            dec.tail.kind = TailKind::UniformBound;
            dec.tail.values = [table = std::move(table), s_file](std::size_t N, double s) {
                if (std::abs(s - s_file) > 1e-12)
                    throw CapabilityError("bundle tail is tabulated for s = " + std::to_string(s_file));
                const auto it = table.find(N);
                if (it == table.end())
                    throw CapabilityError("bundle tail has no row for N = " + std::to_string(N));
                return it->second;
            };
        } else {
            throw ConfigError("manifest.csv: unknown entry '" + row[0] + "'");
        }
    }
    dec.validate();
    return dec;
}

}  // namespace subphi

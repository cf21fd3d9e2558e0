#include "subphi/orlicz.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "subphi/detail/optimize.hpp"
#include "subphi/errors.hpp"

namespace subphi {

OrliczSpec OrliczSpec::power(double gamma)
{
    if (!(gamma > 1.0 && gamma <= 2.0))
        throw DomainError("PowerGamma requires 1 < gamma <= 2, got " + std::to_string(gamma));
    OrliczSpec s;
    s.family_ = OrliczFamily::PowerGamma;
    s.gamma_ = gamma;
    return s;
}

OrliczSpec OrliczSpec::piecewise(double gamma)
{
    if (!(gamma > 2.0) || !std::isfinite(gamma))
        throw DomainError("PiecewiseGamma requires gamma > 2, got " + std::to_string(gamma));
    OrliczSpec s;
    s.family_ = OrliczFamily::PiecewiseGamma;
    s.gamma_ = gamma;
    return s;
}

OrliczSpec OrliczSpec::table(std::vector<double> x, std::vector<double> phi)
{
    if (x.size() != phi.size())
        throw DomainError("Orlicz table: x and phi columns differ in length");
    if (x.empty())
        throw DomainError("Orlicz table: no points");
    if (x.front() < 0.0)
        throw DomainError("Orlicz table: x must be non-negative");
    if (x.front() > 0.0) {
        x.insert(x.begin(), 0.0);
        phi.insert(phi.begin(), 0.0);
    } else if (phi.front() != 0.0) {
        throw DomainError("Orlicz table: phi(0) must be 0");
    }
    if (x.size() < 3)
        throw DomainError("Orlicz table: need at least two points with x > 0");
    for (std::size_t i = 1; i < x.size(); ++i) {
        if (!(x[i] > x[i - 1]))
            throw DomainError("Orlicz table: x must be strictly increasing");
        if (!(phi[i] > phi[i - 1]))
            throw DomainError("Orlicz table: phi must be strictly increasing for x > 0");
    }
    OrliczSpec s;
    s.family_ = OrliczFamily::NumericTable;
    s.gamma_ = std::numeric_limits<double>::quiet_NaN();
    s.x_ = std::move(x);
    s.phi_ = std::move(phi);
    return s;
}

OrliczSpec OrliczSpec::load_table(const std::filesystem::path& csv)
{
    std::ifstream in(csv);
    if (!in)
        throw RangeError("cannot open Orlicz table " + csv.string());
    std::vector<double> x, phi;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#')
            continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        double a = 0.0, b = 0.0;
        if (!(ss >> a >> b)) {
            if (lineno == 1)
                continue;  // header
            throw DomainError(csv.string() + ":" + std::to_string(lineno) + ": expected two numbers");
        }
        x.push_back(a);
        phi.push_back(b);
    }
    return table(std::move(x), std::move(phi));
}

double OrliczSpec::gamma() const
{
    if (!parametric())
        throw CapabilityError("gamma is undefined for a tabulated Orlicz function");
    return gamma_;
}

double OrliczSpec::beta() const
{
    const double g = gamma();
    return g / (g - 1.0);
}

double OrliczSpec::x_max() const
{
    return parametric() ? std::numeric_limits<double>::infinity() : x_.back();
}

std::string OrliczSpec::describe() const
{
    switch (family_) {
    case OrliczFamily::PowerGamma:
        return "power(gamma=" + std::to_string(gamma_) + ")";
    case OrliczFamily::PiecewiseGamma:
        return "piecewise(gamma=" + std::to_string(gamma_) + ")";
    case OrliczFamily::NumericTable:
        return "table(" + std::to_string(x_.size()) + " points)";
    }
    return {};
}

namespace {

// Index i of the segment [x_i, x_{i+1}] containing u (u inside the table).
std::size_t segment(std::span<const double> xs, double u)
{
    auto it = std::upper_bound(xs.begin(), xs.end(), u);
    std::size_t i = static_cast<std::size_t>(it - xs.begin());
    if (i == 0)
        return 0;
    return std::min(i - 1, xs.size() - 2);
}

double segment_slope(const OrliczSpec& spec, std::size_t i)
{
    const auto xs = spec.table_x();
    const auto ps = spec.table_phi();
    return (ps[i + 1] - ps[i]) / (xs[i + 1] - xs[i]);
}

}  // namespace

double phi_eval(const OrliczSpec& spec, double x)
{
    const double a = std::abs(x);
    switch (spec.family()) {
    case OrliczFamily::PowerGamma:
        return std::pow(a, spec.gamma()) / spec.gamma();
    case OrliczFamily::PiecewiseGamma:
        return a < 1.0 ? a * a / spec.gamma() : std::pow(a, spec.gamma()) / spec.gamma();
    case OrliczFamily::NumericTable: {
        const auto xs = spec.table_x();
        const auto ps = spec.table_phi();
        if (a > xs.back())
            throw RangeError("phi_eval: |x| = " + std::to_string(a) + " beyond the tabulated range");
        const std::size_t i = segment(xs, a);
        const double t = (a - xs[i]) / (xs[i + 1] - xs[i]);
        return ps[i] + t * (ps[i + 1] - ps[i]);
    }
    }
    return 0.0;
}

double phi_density(const OrliczSpec& spec, double u)
{
    if (u < 0.0)
        throw DomainError("phi_density: u must be non-negative");
    switch (spec.family()) {
    case OrliczFamily::PowerGamma:
        return std::pow(u, spec.gamma() - 1.0);
    case OrliczFamily::PiecewiseGamma:
        return u < 1.0 ? 2.0 * u / spec.gamma() : std::pow(u, spec.gamma() - 1.0);
    case OrliczFamily::NumericTable: {
        const auto xs = spec.table_x();
        if (u > xs.back())
            throw RangeError("phi_density: u beyond the tabulated range");
        return segment_slope(spec, segment(xs, u));
    }
    }
    return 0.0;
}

double phi_inverse(const OrliczSpec& spec, double y)
{
    if (y < 0.0)
        throw DomainError("phi_inverse: y must be non-negative");
    switch (spec.family()) {
    case OrliczFamily::PowerGamma:
        return std::pow(spec.gamma() * y, 1.0 / spec.gamma());
    case OrliczFamily::PiecewiseGamma: {
        const double g = spec.gamma();
        return y < 1.0 / g ? std::sqrt(g * y) : std::pow(g * y, 1.0 / g);
    }
    case OrliczFamily::NumericTable: {
        const auto xs = spec.table_x();
        const auto ps = spec.table_phi();
        if (y > ps.back())
            throw RangeError("phi_inverse: value beyond the tabulated range");
        const std::size_t i = segment(ps, y);
        const double t = (y - ps[i]) / (ps[i + 1] - ps[i]);
        return xs[i] + t * (xs[i + 1] - xs[i]);
    }
    }
    return 0.0;
}

namespace {

double table_conjugate(const OrliczSpec& spec, double x, const ConjugateOptions& opt)
{
    const auto xs = spec.table_x();
    const auto ps = spec.table_phi();
    std::size_t best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double v = x * xs[i] - ps[i];
        if (v > best_val) {
            best_val = v;
            best = i;
        }
    }
    const double a = xs[best == 0 ? 0 : best - 1];
    const double b = xs[std::min(best + 1, xs.size() - 1)];
    if (b > a) {
        auto g = [&](double y) { return x * y - phi_eval(spec, y); };
        const auto [arg, val] = detail::golden_section_max(g, a, b, opt.golden_iterations);
        (void)arg;
        best_val = std::max(best_val, val);
    }
    return best_val;
}

}  // namespace

double numeric_conjugate(const OrliczSpec& spec, double x, const ConjugateOptions& opt)
{
    if (x < 0.0)
        throw DomainError("phi_conjugate: x must be non-negative");
    if (x == 0.0)
        return 0.0;
    if (spec.family() == OrliczFamily::NumericTable)
        return table_conjugate(spec, x, opt);

    // The maximiser y* of x*y - phi(y) satisfies f(y*-) <= x <= f(y*+).
    double hi = 1.0;
    for (int i = 0; i < 4000 && phi_density(spec, hi) < x; ++i)
        hi *= 2.0;
    double lo = 0.5 * hi;
    for (int i = 0; i < 4000 && lo > 0.0 && phi_density(spec, lo) > x; ++i)
        lo *= 0.5;

    auto g = [&](double y) { return x * y - phi_eval(spec, y); };

    // Grid argmax inside the bracket, then golden-section between its neighbours.
    const int n = std::max(opt.grid_points, 3);
    int best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double y = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        const double v = g(y);
        if (v > best_val) {
            best_val = v;
            best = i;
        }
    }
    const double step = (hi - lo) / static_cast<double>(n - 1);
    const double a = lo + step * std::max(best - 1, 0);
    const double b = lo + step * std::min(best + 1, n - 1);
    const auto [arg, val] = detail::golden_section_max(g, a, b, opt.golden_iterations);
    (void)arg;
    return std::max(best_val, val);
}

double phi_conjugate(const OrliczSpec& spec, double x, const ConjugateOptions& opt)
{
    if (x < 0.0)
        throw DomainError("phi_conjugate: x must be non-negative");
    switch (spec.family()) {
    case OrliczFamily::PowerGamma: {
        const double b = spec.beta();
        return std::pow(x, b) / b;
    }
    case OrliczFamily::PiecewiseGamma:
        if (x >= 1.0) {
            const double b = spec.beta();
            return std::pow(x, b) / b;
        }
        return numeric_conjugate(spec, x, opt);
    case OrliczFamily::NumericTable:
        return numeric_conjugate(spec, x, opt);
    }
    return 0.0;
}

double phi_conjugate_inverse(const OrliczSpec& spec, double y, const ConjugateOptions& opt)
{
    if (y < 0.0)
        throw DomainError("phi_conjugate_inverse: y must be non-negative");
    if (y == 0.0)
        return 0.0;

    double hi_limit = std::numeric_limits<double>::infinity();
    switch (spec.family()) {
    case OrliczFamily::PowerGamma: {
        const double b = spec.beta();
        return std::pow(b * y, 1.0 / b);
    }
    case OrliczFamily::PiecewiseGamma: {
        const double b = spec.beta();
        if (y >= 1.0 / b)  // phi*(1) = 1/beta
            return std::pow(b * y, 1.0 / b);
        hi_limit = 1.0;
        break;
    }
    case OrliczFamily::NumericTable: {
        // Beyond the last slope the maximiser sits on the table boundary and
        // phi* is no longer determined by the data.
        const auto xs = spec.table_x();
        hi_limit = segment_slope(spec, xs.size() - 2);
        if (y > numeric_conjugate(spec, hi_limit, opt))
            throw RangeError("phi_conjugate_inverse: y beyond the attainable range of the tabulated phi*");
        break;
    }
    }

    double hi = std::min(1.0, hi_limit);
    for (int i = 0; i < 4000 && phi_conjugate(spec, hi, opt) < y && hi < hi_limit; ++i)
        hi = std::min(2.0 * hi, hi_limit);
    auto below = [&](double x) { return phi_conjugate(spec, x, opt) < y; };
    const auto [lo, h] = detail::bisect(below, 0.0, hi, opt.bisection_rel_tol, opt.bisection_iterations);
    return 0.5 * (lo + h);
}

bool check_power_convexity(const OrliczSpec& spec, double s)
{
    if (!(s > 0.0))
        throw DomainError("check_power_convexity: s must be positive");
    switch (spec.family()) {
    case OrliczFamily::PowerGamma:
        return s <= spec.gamma();
    case OrliczFamily::PiecewiseGamma:
        return s <= 2.0;
    case OrliczFamily::NumericTable: {
        // Discrete convexity of z -> phi(z^{1/s}) on the tabulated nodes z_i = x_i^s:
        // chord slopes must be nondecreasing.
        const auto xs = spec.table_x();
        const auto ps = spec.table_phi();
        double prev = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 1; i < xs.size(); ++i) {
            const double slope = (ps[i] - ps[i - 1]) / (std::pow(xs[i], s) - std::pow(xs[i - 1], s));
            if (slope < prev - 1e-10 * std::abs(prev))
                return false;
            prev = slope;
        }
        return true;
    }
    }
    return false;
}

OrliczDiagnostics validate_orlicz(const OrliczSpec& spec)
{
    OrliczDiagnostics d;
    std::vector<double> xs;
    if (spec.parametric()) {
        for (int i = 0; i <= 120; ++i)
            xs.push_back(std::pow(10.0, -3.0 + 6.0 * i / 120.0));
    } else {
        const auto tx = spec.table_x();
        xs.assign(tx.begin() + 1, tx.end());
    }

    if (phi_eval(spec, 0.0) != 0.0)
        d.failures.push_back("phi(0) != 0");

    std::vector<double> ph(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
        ph[i] = phi_eval(spec, xs[i]);

    for (std::size_t i = 1; i < xs.size(); ++i)
        if (!(ph[i] > ph[i - 1])) {
            d.failures.push_back("phi is not increasing on x > 0 (at x = " + std::to_string(xs[i]) + ")");
            break;
        }

    // Convexity: chord slopes nondecreasing, starting from the origin.
    double prev_x = 0.0, prev_phi = 0.0, prev_slope = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double slope = (ph[i] - prev_phi) / (xs[i] - prev_x);
        if (slope < prev_slope * (1.0 - 1e-12)) {
            d.failures.push_back("phi is not convex (at x = " + std::to_string(xs[i]) + ")");
            break;
        }
        prev_slope = slope;
        prev_x = xs[i];
        prev_phi = ph[i];
    }

    // phi(x)/x must grow from its small-x value.
    const double r_first = ph.front() / xs.front();
    const double r_last = ph.back() / xs.back();
    if (!(r_last > r_first))
        d.failures.push_back("phi(x)/x does not increase over the sampled range");

    // liminf_{x->0} phi(x)/x^2 > 0, probed on the smallest sample points.
    const std::size_t probe = std::min<std::size_t>(3, xs.size());
    for (std::size_t i = 0; i < probe; ++i)
        if (!(ph[i] / (xs[i] * xs[i]) > 0.0) || !std::isfinite(ph[i] / (xs[i] * xs[i]))) {
            d.failures.push_back("phi(x)/x^2 is not bounded away from 0 near the origin");
            break;
        }
    return d;
}

}  // namespace subphi

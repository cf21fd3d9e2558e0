#include "subphi/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "subphi/errors.hpp"

namespace subphi {

double Grid::integrate(std::span<const double> values) const
{
    if (values.size() != weights.size())
        throw PreconditionError("Grid::integrate: value count does not match the grid");
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
        sum += weights[i] * values[i];
    return sum;
}

void gauss_legendre(std::size_t n, std::vector<double>& x, std::vector<double>& w)
{
    if (n == 0)
        throw DomainError("gauss_legendre: need at least one node");
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        // Newton iteration on P_n from the Chebyshev-like initial guess.
        double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = 0.0;
            for (std::size_t j = 1; j <= n; ++j) {
                const double p2 = p1;
                p1 = p0;
                const auto jd = static_cast<double>(j);
                p0 = ((2.0 * jd - 1.0) * z * p1 - (jd - 1.0) * p2) / jd;
            }
            dp = static_cast<double>(n) * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16)
                break;
        }
        // Re-evaluate the derivative at the converged root for the weight.
        double p0 = 1.0;
        double p1 = 0.0;
        for (std::size_t j = 1; j <= n; ++j) {
            const double p2 = p1;
            p1 = p0;
            const auto jd = static_cast<double>(j);
            p0 = ((2.0 * jd - 1.0) * z * p1 - (jd - 1.0) * p2) / jd;
        }
        dp = static_cast<double>(n) * (z * p0 - p1) / (z * z - 1.0);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    if (n % 2 == 1)
        x[n / 2] = 0.0;
}

Grid composite_gauss_legendre(double T, std::size_t panels, std::size_t nodes_per_panel)
{
    if (!(T > 0.0))
        throw DomainError("composite_gauss_legendre: T must be positive");
    if (panels == 0 || nodes_per_panel == 0)
        throw DomainError("composite_gauss_legendre: panels and nodes per panel must be positive");

    std::vector<double> x, w;
    gauss_legendre(nodes_per_panel, x, w);

    Grid g;
    g.T = T;
    g.panels = panels;
    g.nodes_per_panel = nodes_per_panel;
    g.nodes.reserve(panels * nodes_per_panel);
    g.weights.reserve(panels * nodes_per_panel);
    const double h = T / static_cast<double>(panels);
    for (std::size_t p = 0; p < panels; ++p) {
        const double a = h * static_cast<double>(p);
        for (std::size_t j = 0; j < nodes_per_panel; ++j) {
            g.nodes.push_back(a + 0.5 * h * (x[j] + 1.0));
            g.weights.push_back(0.5 * h * w[j]);
        }
    }
    return g;
}

Grid grid_with_nodes(double T, std::size_t n_nodes)
{
    if (n_nodes == 0)
        throw DomainError("grid_with_nodes: n_nodes must be positive");
    if (n_nodes % 8 == 0)
        return composite_gauss_legendre(T, n_nodes / 8, 8);
    return composite_gauss_legendre(T, 1, n_nodes);
}

}  // namespace subphi

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace subphi {

/// Composite Gauss-Legendre rule on [0, T]. The nodes double as the
/// evaluation grid for every function-on-grid in the library.
struct Grid {
    double T = 1.0;
    std::size_t panels = 0;
    std::size_t nodes_per_panel = 0;
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }

    /// Sum of w_i * values_i.
    double integrate(std::span<const double> values) const;
};

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1], ascending.
void gauss_legendre(std::size_t n, std::vector<double>& x, std::vector<double>& w);

Grid composite_gauss_legendre(double T, std::size_t panels, std::size_t nodes_per_panel = 8);

/// Grid with n_nodes total nodes: 8-point panels when n_nodes is a multiple
/// of 8, otherwise a single panel of n_nodes points.
Grid grid_with_nodes(double T, std::size_t n_nodes);

}  // namespace subphi

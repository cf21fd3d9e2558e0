#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

namespace subphi::detail {

/// Golden-section search for the maximum of a unimodal function on [a, b].
/// Returns (argmax, max).
template <class F>
std::pair<double, double> golden_section_max(F&& f, double a, double b, int max_iter = 300, double rel_tol = 1e-15)
{
    constexpr double inv_phi = 0.6180339887498948482;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    for (int i = 0; i < max_iter; ++i) {
        if (std::abs(b - a) <= rel_tol * (std::abs(a) + std::abs(b)))
            break;
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return fc >= fd ? std::pair{c, fc} : std::pair{d, fd};
}

/// Bisection for a monotone predicate with pred(lo) != pred(hi). Returns the
/// final (lo, hi) bracket; pred(lo) keeps the value it had on entry.
template <class P>
std::pair<double, double> bisect(P&& pred, double lo, double hi, double rel_tol, int max_iter)
{
    const bool lo_value = pred(lo);
    for (int i = 0; i < max_iter; ++i) {
        if (hi - lo <= rel_tol * std::max(std::abs(lo), std::abs(hi)))
            break;
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi)
            break;
        if (pred(mid) == lo_value)
            lo = mid;
        else
            hi = mid;
    }
    return {lo, hi};
}

}  // namespace subphi::detail

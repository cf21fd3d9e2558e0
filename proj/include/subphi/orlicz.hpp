#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace subphi {

enum class OrliczFamily { PowerGamma, PiecewiseGamma, NumericTable };

/// An even N-Orlicz function phi.
///
///  - PowerGamma(gamma), 1 < gamma <= 2: phi(x) = |x|^gamma / gamma.
///  - PiecewiseGamma(gamma), gamma > 2: phi(x) = x^2/gamma for |x| < 1 and
///    |x|^gamma/gamma for |x| >= 1.
///  - NumericTable: (x, phi(x)) pairs for x >= 0, linearly interpolated.
///    A missing (0, 0) point is prepended.
class OrliczSpec {
public:
    static OrliczSpec power(double gamma);
    static OrliczSpec piecewise(double gamma);
    static OrliczSpec table(std::vector<double> x, std::vector<double> phi);
    /// CSV with columns x,phi (an optional non-numeric header line is skipped).
    static OrliczSpec load_table(const std::filesystem::path& csv);

    OrliczFamily family() const { return family_; }
    bool parametric() const { return family_ != OrliczFamily::NumericTable; }

    /// gamma of a parametric family; throws for tables.
    double gamma() const;
    /// Conjugate exponent beta with 1/beta + 1/gamma = 1.
    double beta() const;

    std::span<const double> table_x() const { return x_; }
    std::span<const double> table_phi() const { return phi_; }
    /// Largest tabulated argument (infinity for parametric families).
    double x_max() const;

    std::string describe() const;

private:
    OrliczFamily family_ = OrliczFamily::PowerGamma;
    double gamma_ = 2.0;
    std::vector<double> x_;
    std::vector<double> phi_;
};

struct ConjugateOptions {
    int grid_points = 33;
    int golden_iterations = 300;
    double bisection_rel_tol = 1e-15;
    int bisection_iterations = 400;
};

double phi_eval(const OrliczSpec& spec, double x);

/// f(u) = phi'(u) with phi(u) = int_0^u f. One-sided (forward) differences for tables.
double phi_density(const OrliczSpec& spec, double u);

/// Inverse of phi on [0, inf).
double phi_inverse(const OrliczSpec& spec, double y);

/// sup_y (x y - phi(y)) by bracketing, grid argmax and golden-section search,
/// for every family. For tables the supremum is taken over the tabulated range.
double numeric_conjugate(const OrliczSpec& spec, double x, const ConjugateOptions& opt = {});

/// Young-Fenchel transform phi*(x), x >= 0. Closed form x^beta/beta for
/// PowerGamma and for PiecewiseGamma with x >= 1; numeric otherwise.
double phi_conjugate(const OrliczSpec& spec, double x, const ConjugateOptions& opt = {});

/// The x >= 0 with phi*(x) = y.
double phi_conjugate_inverse(const OrliczSpec& spec, double y, const ConjugateOptions& opt = {});

/// Whether x -> phi(|x|^{1/s}) is convex.
bool check_power_convexity(const OrliczSpec& spec, double s);

struct OrliczDiagnostics {
    std::vector<std::string> failures;
    bool ok() const { return failures.empty(); }
};

/// N-function conditions (phi(0) = 0, increasing, convex, phi(x)/x -> 0 at 0)
/// and the quadratic lower bound liminf phi(x)/x^2 > 0, checked on a grid.
OrliczDiagnostics validate_orlicz(const OrliczSpec& spec);

}  // namespace subphi

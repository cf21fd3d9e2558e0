#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "subphi/bounds.hpp"

namespace subphi {

/// Which c_N formula certifies the model.
enum class Route { Series7, Series8, Theorem9, Theorem10, Theorem11 };

/// Evaluation mode for formulas where the displayed statement and its
/// derivation disagree (theorem10 and theorem11 routes).
enum class Mode { Consistent, PaperLiteral };

std::string to_string(Route r);
std::string to_string(Mode m);
Route parse_route(const std::string& s);
Mode parse_mode(const std::string& s);

/// Result of an N search. `feasible == false` is the typed
/// "unachievable with the given terms" outcome; N and c_N then hold the best
/// (smallest c_N) candidate seen.
struct ModelPlan {
    bool feasible = false;
    std::size_t N = 0;
    double c_N = 0.0;
    ConditionReport report;
    std::vector<double> cN_trace;  // c_N for N = 1, 2, ... as scanned
    Route route = Route::Theorem9;
    Mode mode = Mode::Consistent;
};

}  // namespace subphi

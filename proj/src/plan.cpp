#include "subphi/plan.hpp"

#include "subphi/errors.hpp"

namespace subphi {

std::string to_string(Route r)
{
    switch (r) {
    case Route::Series7:
        return "series7";
    case Route::Series8:
        return "series8";
    case Route::Theorem9:
        return "theorem9";
    case Route::Theorem10:
        return "theorem10";
    case Route::Theorem11:
        return "theorem11";
    }
    return {};
}

std::string to_string(Mode m)
{
    return m == Mode::Consistent ? "consistent" : "paper-literal";
}

Route parse_route(const std::string& s)
{
    for (Route r : {Route::Series7, Route::Series8, Route::Theorem9, Route::Theorem10, Route::Theorem11})
        if (to_string(r) == s)
            return r;
    throw RouteError("unknown route '" + s + "'");
}

Mode parse_mode(const std::string& s)
{
    if (s == "consistent")
        return Mode::Consistent;
    if (s == "paper-literal")
        return Mode::PaperLiteral;
    throw RouteError("unknown mode '" + s + "' (expected consistent | paper-literal)");
}

}  // namespace subphi

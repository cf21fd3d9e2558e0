#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include <unistd.h>

#include "subphi/config.hpp"
#include "subphi/errors.hpp"

using namespace subphi;
namespace fs = std::filesystem;

namespace {

fs::path write_ini(const std::string& name, const std::string& text)
{
    const auto dir = fs::temp_directory_path() / ("subphi_cfg_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const auto p = dir / name;
    std::ofstream(p) << text;
    return p;
}

const char* kMinimal = "[target]\np = 2\ndelta = 0.35\nalpha = 0.05\nT = 1\n";

std::string error_of(const fs::path& p)
{
    try {
        load_config(p);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("defaults fill missing sections")
{
    const auto c = load_config(write_ini("min.ini", kMinimal));
    CHECK(c.orlicz_family == "power");
    CHECK(c.gamma == 2.0);
    CHECK(c.kernel_kind == "brownian");
    CHECK(c.route == Route::Theorem9);
    CHECK(c.mode == Mode::Consistent);
    CHECK(c.target.delta == 0.35);
    for (const auto& chk : validate_config(c))
        CHECK_MESSAGE(chk.ok, chk.name << ": " << chk.detail);
}

TEST_CASE("inline comments and quotes")
{
    const auto c = load_config(write_ini("q.ini", std::string(kMinimal)
                                                      + "[model]\nroute = \"theorem10\"   ; constant tau\n"
                                                        "[numerics]\nseed = 42 # root seed\nn_nodes = 64\n"));
    CHECK(c.route == Route::Theorem10);
    CHECK(c.seed == 42);
    CHECK(c.n_nodes == 64);
}

TEST_CASE("errors name line and field")
{
    const auto unknown = error_of(write_ini("u.ini", std::string(kMinimal) + "[kernel]\nkind = brownian\nthetta = 2\n"));
    CHECK(unknown.find(":8:") != std::string::npos);
    CHECK(unknown.find("thetta") != std::string::npos);

    const auto number = error_of(write_ini("n.ini", "[target]\np = 2\ndelta = abc\n"));
    CHECK(number.find(":3:") != std::string::npos);
    CHECK(number.find("delta") != std::string::npos);

    const auto choice = error_of(write_ini("c.ini", std::string(kMinimal) + "[model]\nroute = theorem12\n"));
    CHECK(choice.find("route") != std::string::npos);

    CHECK(error_of(write_ini("s.ini", std::string(kMinimal) + "[extra]\na = 1\n")).find("extra") != std::string::npos);
    CHECK(!error_of(write_ini("b.ini", "[target\np = 2\n")).empty());
    CHECK(!error_of(write_ini("series.ini", std::string(kMinimal) + "[model]\nroute = series7\n")).empty());
    CHECK(!error_of("/nonexistent/x.ini").empty());
}

TEST_CASE("relative paths resolve against the config directory")
{
    const auto p = write_ini("rel.ini", std::string(kMinimal) + "[kernel]\nkind = custom\ncustom_file = k.csv\n");
    const auto c = load_config(p);
    CHECK(c.custom_file == p.parent_path() / "k.csv");
}

TEST_CASE("hash is stable and sensitive")
{
    const auto a = load_config(write_ini("h.ini", kMinimal));
    const auto b = load_config(write_ini("h2.ini", std::string("; comment\n") + kMinimal));
    CHECK(a.hash().size() == 16);
    CHECK(a.hash() == b.hash());

    auto c = a;
    c.target.alpha = 0.04;
    CHECK(c.hash() != a.hash());
    c = a;
    c.mode = Mode::PaperLiteral;
    CHECK(c.hash() != a.hash());
    c = a;
    c.safety = 3.0;
    CHECK(c.hash() != a.hash());
}

TEST_CASE("validation reports route incompatibility")
{
    auto c = load_config(write_ini("r.ini", kMinimal));
    c.route = Route::Theorem11;
    c.gamma = 4.0;
    bool route_failed = false;
    for (const auto& chk : validate_config(c))
        if (chk.name == "route")
            route_failed = !chk.ok;
    CHECK(route_failed);

    c.gamma = 1.5;
    c.source_kind = "rademacher";
    for (const auto& chk : validate_config(c))
        CHECK_MESSAGE(chk.ok, chk.name << ": " << chk.detail);

    c.route = Route::Theorem9;
    c.orlicz_family = "piecewise";
    c.gamma = 4.0;
    for (const auto& chk : validate_config(c))
        if (chk.name == "route")
            CHECK(chk.ok);
}

// End-to-end checks of the subphi binary: exit codes, output files,
// determinism and the frozen first path.
#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "subphi/detail/csv.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kBinary = SUBPHI_CLI_PATH;
const fs::path kConfigs = SUBPHI_CONFIG_DIR;
const fs::path kData = SUBPHI_TEST_DATA_DIR;

fs::path scratch()
{
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / ("subphi_cli_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void put(const fs::path& p, const std::string& text)
{
    std::ofstream(p, std::ios::binary) << text;
}

struct Run {
    int rc;
    std::string out;
};

Run run(const std::string& args, const std::string& tag)
{
    const fs::path out = scratch() / (tag + ".stdout");
    const std::string cmd = kBinary.string() + " " + args + " > " + out.string() + " 2> " + out.string() + ".err";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out)};
}

// The shipped example with some lines replaced.
fs::path variant(const std::string& tag, const std::vector<std::pair<std::string, std::string>>& edits)
{
    std::istringstream in(slurp(kConfigs / "brownian.ini"));
    std::string text, line;
    while (std::getline(in, line)) {
        for (const auto& [from, to] : edits)
            if (line.rfind(from, 0) == 0)
                line = to;
        text += line + "\n";
    }
    const fs::path p = scratch() / (tag + ".ini");
    put(p, text);
    return p;
}

std::string cfg(const fs::path& p) { return "--config " + p.string(); }

std::vector<std::vector<double>> numeric_rows(const std::string& csv)
{
    std::vector<std::vector<double>> rows;
    std::istringstream in(csv);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        std::vector<double> r;
        std::istringstream ls(line);
        std::string f;
        while (std::getline(ls, f, ','))
            r.push_back(subphi::detail::parse_double(f));
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace

TEST_CASE("validate")
{
    const fs::path base = kConfigs / "brownian.ini";
    CHECK(run("validate " + cfg(base), "v_ok").rc == 0);

    const auto t11 = variant("t11", {{"gamma", "gamma = 4"}, {"route", "route = theorem11"}});
    const auto r = run("validate " + cfg(t11), "v_t11");
    CHECK(r.rc == 3);
    const auto j = nlohmann::json::parse(r.out);
    bool named = false;
    for (const auto& c : j["checks"])
        if (c["name"] == "route" && !c["ok"].get<bool>())
            named = c["detail"].get<std::string>().find("theorem11") != std::string::npos;
    CHECK(named);

    put(scratch() / "asym.csv", "1,0.9,0.1\n0.2,1,0.5\n0.3,0.4,1\n");
    const auto asym = variant("asym", {{"kind = brownian", "kind = custom"}, {"theta", "custom_file = asym.csv"}});
    const auto ra = run("validate " + cfg(asym), "v_asym");
    CHECK(ra.rc == 3);
    const auto ja = nlohmann::json::parse(ra.out);
    bool symmetric_named = false;
    for (const auto& c : ja["checks"])
        if (c["name"] == "kernel" && !c["ok"].get<bool>())
            symmetric_named = c["detail"].get<std::string>().find("symmetr") != std::string::npos;
    CHECK(symmetric_named);
}

TEST_CASE("malformed config names line and field")
{
    const auto bad = variant("bad", {{"alpha", "alpha = 0.o5"}});
    const fs::path err = scratch() / "bad_v.stdout.err";
    CHECK(run("validate " + cfg(bad), "bad_v").rc == 3);
    const std::string msg = slurp(err);
    CHECK(msg.find("alpha") != std::string::npos);
    CHECK(msg.find("bad.ini:") != std::string::npos);
}

TEST_CASE("plan")
{
    const fs::path base = kConfigs / "brownian.ini";
    const auto a = run("plan " + cfg(base), "plan_a");
    REQUIRE(a.rc == 0);
    const auto j = nlohmann::json::parse(a.out);
    CHECK(j["schema_version"] == 1);
    CHECK(j["feasible"] == true);
    CHECK(j["N"] == 3);
    CHECK(j["eq1_ok"] == true);

    const auto b = run("plan " + cfg(base), "plan_b");
    CHECK(b.out == a.out);

    const auto zero = variant("zero", {{"delta", "delta = 0"}});
    CHECK(run("plan " + cfg(zero), "plan_zero").rc == 2);

    const fs::path out = scratch() / "plan_out";
    CHECK(run("plan " + cfg(base) + " --out " + out.string(), "plan_dir").rc == 0);
    CHECK(fs::exists(out / "plan.json"));
    CHECK(fs::exists(out / "eigen" / "eigenfunctions.csv"));
    CHECK(fs::exists(out / "eigen" / "eigenvalues.csv"));
}

TEST_CASE("simulate")
{
    const fs::path base = kConfigs / "brownian.ini";
    const fs::path plan = scratch() / "sim_plan.json";
    put(plan, run("plan " + cfg(base), "sim_plan").out);

    const auto a = run("simulate " + cfg(base) + " --plan " + plan.string() + " --paths 5", "sim_a");
    const auto b = run("simulate " + cfg(base) + " --plan " + plan.string() + " --paths 5", "sim_b");
    REQUIRE(a.rc == 0);
    CHECK(a.out == b.out);
    const auto rows = numeric_rows(a.out);
    REQUIRE(rows.size() == 6);
    CHECK(rows[0].size() == 128);
    for (const auto& r : rows)
        CHECK(r.size() == rows[0].size());

    const auto other = run("simulate " + cfg(base) + " --plan " + plan.string() + " --paths 5 --seed 7", "sim_c");
    CHECK(other.out != a.out);

    // Golden first path, frozen from this implementation.
    const auto golden = numeric_rows(slurp(kData / "brownian_first_path.csv"));
    REQUIRE(golden.size() == 2);
    REQUIRE(golden[1].size() == rows[1].size());
    for (std::size_t i = 0; i < golden[0].size(); ++i) {
        CHECK(std::abs(rows[0][i] - golden[0][i]) <= 1e-12);
        CHECK(std::abs(rows[1][i] - golden[1][i]) <= 1e-12 * std::max(1.0, std::abs(golden[1][i])));
    }

    // A plan made under a different config is rejected.
    const auto moved = variant("moved", {{"delta", "delta = 0.4"}});
    CHECK(run("simulate " + cfg(moved) + " --plan " + plan.string(), "sim_stale").rc == 3);
    const auto literal = run("simulate " + cfg(base) + " --plan " + plan.string() + " --mode paper-literal",
                             "sim_stale_mode");
    CHECK(literal.rc == 3);
}

TEST_CASE("verify")
{
    const fs::path base = kConfigs / "brownian.ini";
    const auto a = run("verify " + cfg(base) + " --paths 4000", "ver_a");
    REQUIRE(a.rc == 0);
    const auto j = nlohmann::json::parse(a.out);
    CHECK(j["pass"] == true);
    CHECK(j["n_paths"] == 4000);
    CHECK(run("verify " + cfg(base) + " --paths 4000", "ver_b").out == a.out);

    const auto tight = run("verify " + cfg(base) + " --paths 500 --delta 1e-6", "ver_tight");
    CHECK(tight.rc == 1);
    CHECK(nlohmann::json::parse(tight.out)["p_hat"] == 1.0);
}

TEST_CASE("config hash tracks every setting")
{
    const fs::path base = kConfigs / "brownian.ini";
    const auto h0 = nlohmann::json::parse(run("validate " + cfg(base), "h0").out)["config_hash"];
    const auto h1 = nlohmann::json::parse(
        run("validate " + cfg(variant("h1", {{"n_nodes", "n_nodes = 96"}})), "h1").out)["config_hash"];
    const auto h2 = nlohmann::json::parse(
        run("validate " + cfg(variant("h2", {{"alpha", "alpha = 0.04"}})), "h2").out)["config_hash"];
    CHECK(h0 != h1);
    CHECK(h0 != h2);
    CHECK(h1 != h2);
}

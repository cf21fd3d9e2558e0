// subphi: plan, simulate and verify sub-Gaussian process models from a config file.
//
// Exit status: 0 success / verification passed, 1 verification failed,
// 2 target not achievable, 3 configuration or validation error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "subphi/config.hpp"
#include "subphi/detail/csv.hpp"
#include "subphi/errors.hpp"
#include "subphi/karhunen_loeve.hpp"
#include "subphi/montecarlo.hpp"
#include "subphi/series.hpp"

using json = nlohmann::ordered_json;
using namespace subphi;
namespace fs = std::filesystem;

namespace {

constexpr int kSchemaVersion = 1;

enum Exit { kOk = 0, kVerifyFail = 1, kInfeasible = 2, kConfigError = 3 };

struct Options {
    std::string config;
    std::string out;
    std::string plan;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    std::optional<double> delta;
    std::string mode;
};

// Config with command-line overrides applied. --mode changes the planned
// model and therefore the hash; --seed and --paths do not.
struct Loaded {
    RunConfig cfg;
    std::string hash;
};

Loaded load(const Options& o)
{
    Loaded l{load_config(o.config), {}};
    if (!o.mode.empty())
        l.cfg.mode = parse_mode(o.mode);
    l.hash = l.cfg.hash();
    if (o.seed)
        l.cfg.seed = *o.seed;
    if (o.paths)
        l.cfg.n_paths = *o.paths;
    return l;
}

json header(const std::string& kind, const std::string& hash)
{
    return json{{"schema_version", kSchemaVersion}, {"kind", kind}, {"config_hash", hash}};
}

std::string csv_comment(const std::string& hash)
{
    return "schema_version=" + std::to_string(kSchemaVersion) + ",config_hash=" + hash;
}

void write_file(const fs::path& p, const std::string& text)
{
    if (p.has_parent_path())
        fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    f << text;
    if (!f)
        throw ConfigError("could not write " + p.string());
}

void emit(const json& j, const Options& o, const std::string& file)
{
    const std::string text = j.dump(2) + "\n";
    std::cout << text;
    if (!o.out.empty())
        write_file(fs::path(o.out) / file, text);
}

bool run_validation(const Loaded& l, bool print)
{
    const auto checks = validate_config(l.cfg);
    bool ok = true;
    json arr = json::array();
    for (const auto& c : checks) {
        ok = ok && c.ok;
        arr.push_back({{"name", c.name}, {"ok", c.ok}, {"detail", c.detail}});
    }
    if (print) {
        json j = header("validation", l.hash);
        j["ok"] = ok;
        j["checks"] = arr;
        std::cout << j.dump(2) << "\n";
    } else if (!ok) {
        for (const auto& c : checks)
            if (!c.ok)
                std::cerr << "validation failed: " << c.name << ": " << c.detail << "\n";
    }
    return ok;
}

// The planned model: a KL model, or a series decomposition with its plan.
struct Planned {
    std::optional<KlModel> kl;
    std::optional<SeriesDecomposition> series;
    ModelPlan plan;
};

Planned build(const RunConfig& cfg)
{
    Planned p;
    const auto spec = cfg.orlicz();
    if (cfg.kl_route()) {
        p.kl = build_kl_model(cfg.kernel(), spec, cfg.source(), cfg.target, cfg.kl_options());
        p.plan = p.kl->plan;
    } else {
        p.series = load_series_bundle(cfg.series_bundle, composite_gauss_legendre(cfg.target.T, cfg.panels));
        p.plan = choose_N(*p.series, cfg.target, spec, p.series->terms.size(), cfg.route);
    }
    return p;
}

json plan_json(const Loaded& l, const Planned& p)
{
    const auto& plan = p.plan;
    json j = header("plan", l.hash);
    j["route"] = to_string(plan.route);
    j["mode"] = to_string(plan.mode);
    j["feasible"] = plan.feasible;
    j["N"] = plan.N;
    j["c_N"] = plan.c_N;
    j["bound_eq1"] = plan.report.bound_eq1;
    j["eq1_ok"] = plan.report.eq1_ok;
    j["eq2_ok"] = plan.report.eq2_ok;
    j["margin"] = plan.report.margin;
    j["tail_bound"] = plan.report.tail_bound;
    j["target"] = {{"p", l.cfg.target.p},
                   {"delta", l.cfg.target.delta},
                   {"alpha", l.cfg.target.alpha},
                   {"T", l.cfg.target.T},
                   {"norm_accuracy", l.cfg.target.norm_accuracy()}};
    if (p.kl) {
        const auto& m = *p.kl;
        j["tau"] = m.tau;
        j["tail"] = m.tail_kind;
        if (m.cN_alternate)
            j["c_N_other_mode"] = *m.cN_alternate;
        j["eigen"] = {{"n_nodes", m.eig.grid.size()},
                      {"modes", m.eig.modes()},
                      {"lambda_hat", m.eig.lambda_hat},
                      {"eta", m.eig.eta}};
    } else {
        j["terms"] = p.series->terms.size();
    }
    j["cN_trace"] = plan.cN_trace;
    return j;
}

std::optional<std::string> read_plan_hash(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("plan file not found: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("plan file " + path + ": " + e.what());
    }
    if (!j.contains("config_hash") || j.value("kind", "") != "plan")
        throw ConfigError("plan file " + path + " is not a plan");
    return j["config_hash"].get<std::string>();
}

void require_fresh_plan(const Options& o, const Loaded& l, bool required)
{
    if (o.plan.empty()) {
        if (required)
            throw ConfigError("--plan is required");
        return;
    }
    const auto h = read_plan_hash(o.plan);
    if (h != l.hash)
        throw ConfigError("stale plan: " + o.plan + " was made for config " + *h + ", current config is " + l.hash
                          + "; re-run plan");
}

int cmd_validate(const Options& o)
{
    const auto l = load(o);
    return run_validation(l, true) ? kOk : kConfigError;
}

int cmd_plan(const Options& o)
{
    const auto l = load(o);
    if (!run_validation(l, false))
        return kConfigError;
    const auto p = build(l.cfg);
    emit(plan_json(l, p), o, "plan.json");
    if (!o.out.empty() && p.kl)
        export_eigensystem(p.kl->eig, fs::path(o.out) / "eigen", csv_comment(l.hash));
    if (!p.plan.feasible) {
        std::cerr << "target not achievable with the available terms; best c_N = "
                  << detail::format_double(p.plan.c_N) << " at N = " << p.plan.N << "\n";
        return kInfeasible;
    }
    return kOk;
}

int cmd_eigen(const Options& o)
{
    const auto l = load(o);
    if (!l.cfg.kl_route())
        throw ConfigError("eigen needs a Karhunen-Loeve route (theorem9, theorem10, theorem11)");
    if (!run_validation(l, false))
        return kConfigError;
    const auto eig = solve_with_errors(l.cfg.kernel(), l.cfg.n_nodes, l.cfg.modes, l.cfg.safety);
    const fs::path dir = o.out.empty() ? fs::path("eigen") : fs::path(o.out);
    export_eigensystem(eig, dir, csv_comment(l.hash));
    json j = header("eigen", l.hash);
    j["directory"] = dir.string();
    j["modes"] = eig.modes();
    j["lambda_hat"] = eig.lambda_hat;
    j["eta"] = eig.eta;
    std::cout << j.dump(2) << "\n";
    return kOk;
}

int cmd_simulate(const Options& o)
{
    const auto l = load(o);
    require_fresh_plan(o, l, true);
    if (!run_validation(l, false))
        return kConfigError;
    const auto p = build(l.cfg);
    if (!p.plan.feasible) {
        std::cerr << "plan is not feasible; nothing to simulate\n";
        return kInfeasible;
    }
    const std::size_t n = o.paths.value_or(100);
    const std::uint64_t seed = l.cfg.seed;

    std::vector<std::vector<double>> paths;
    const Grid* grid;
    if (p.kl) {
        paths = simulate_kl(*p.kl, n, seed);
        grid = &p.kl->eig.grid;
    } else {
        const auto src = l.cfg.source();
        paths.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            RandomStream rng(seed, j);
            std::vector<double> xi(p.plan.N);
            for (auto& x : xi)
                x = sample(src, rng);
            paths[j] = evaluate_model(*p.series, p.plan.N, xi);
        }
        grid = &p.series->grid;
    }

    std::string text = "# " + csv_comment(l.hash) + ",seed=" + std::to_string(seed) + "\n";
    for (std::size_t i = 0; i < grid->size(); ++i)
        text += (i ? "," : "") + detail::format_double(grid->nodes[i]);
    text += "\n";
    for (const auto& row : paths) {
        for (std::size_t i = 0; i < row.size(); ++i)
            text += (i ? "," : "") + detail::format_double(row[i]);
        text += "\n";
    }
    if (o.out.empty())
        std::cout << text;
    else
        write_file(fs::path(o.out) / "paths.csv", text);
    return kOk;
}

json report_json(const Loaded& l, const VerificationReport& r)
{
    json j = header("verification", l.hash);
    j["n_paths"] = r.n_paths;
    j["seed"] = l.cfg.seed;
    j["exceed_count"] = r.exceed_count;
    j["p_hat"] = r.p_hat;
    j["wilson_upper"] = r.wilson_upper;
    j["alpha"] = r.alpha;
    j["theoretical_bound"] = r.theoretical_bound;
    j["pass"] = r.pass;
    j["delta"] = r.delta;
    j["p"] = r.p;
    j["N"] = r.N;
    j["c_N"] = r.c_N;
    j["coupled"] = r.coupled;
    j["reference_remainder"] = r.reference_remainder;
    j["warnings"] = r.warnings;
    return j;
}

std::optional<VerificationReport> verify(const Options& o, const Loaded& l, const Planned& p)
{
    if (!p.kl)
        throw CapabilityError("verification needs a reference process; series bundles do not define one");
    if (!p.plan.feasible)
        return std::nullopt;
    VerifyOptions vo;
    vo.keep_norms = !o.out.empty();
    vo.delta = o.delta;
    return verify_plan(*p.kl, l.cfg.n_paths, l.cfg.seed, vo);
}

void write_norms(const Options& o, const Loaded& l, const VerificationReport& r)
{
    if (o.out.empty())
        return;
    std::string text = "# " + csv_comment(l.hash) + ",seed=" + std::to_string(l.cfg.seed) + "\npath,lp_norm\n";
    for (std::size_t j = 0; j < r.norms.size(); ++j)
        text += std::to_string(j) + "," + detail::format_double(r.norms[j]) + "\n";
    write_file(fs::path(o.out) / "norms.csv", text);
}

int cmd_verify(const Options& o)
{
    const auto l = load(o);
    require_fresh_plan(o, l, false);
    if (!run_validation(l, false))
        return kConfigError;
    const auto p = build(l.cfg);
    const auto r = verify(o, l, p);
    if (!r) {
        std::cerr << "plan is not feasible; nothing to verify\n";
        return kInfeasible;
    }
    emit(report_json(l, *r), o, "verify.json");
    write_norms(o, l, *r);
    return r->pass ? kOk : kVerifyFail;
}

int cmd_report(const Options& o)
{
    const auto l = load(o);
    if (!run_validation(l, false))
        return kConfigError;
    const auto p = build(l.cfg);
    const auto& plan = p.plan;

    json j = header("report", l.hash);
    j["plan"] = plan_json(l, p);
    std::optional<VerificationReport> r;
    if (p.kl)
        r = verify(o, l, p);
    if (r)
        j["verification"] = report_json(l, *r);
    if (!o.out.empty()) {
        write_file(fs::path(o.out) / "report.json", j.dump(2) + "\n");
        if (r)
            write_norms(o, l, *r);
    }

    const auto& t = l.cfg.target;
    std::printf("config      %s (hash %s)\n", o.config.c_str(), l.hash.c_str());
    std::printf("phi         %s\n", l.cfg.orlicz().describe().c_str());
    if (p.kl)
        std::printf("process     %s, coefficients %s, tau = %.6g\n", p.kl->kernel.describe().c_str(),
                    p.kl->source.describe().c_str(), p.kl->tau);
    std::printf("target      p = %g, delta = %g (L_p accuracy %.6g), alpha = %g, T = %g\n", t.p, t.delta,
                t.norm_accuracy(), t.alpha, t.T);
    std::printf("route       %s (%s)\n", to_string(plan.route).c_str(), to_string(plan.mode).c_str());
    std::printf("plan        %s: N = %zu, c_N = %.6g, bound %.6g, margin %.3g\n",
                plan.feasible ? "feasible" : "NOT achievable", plan.N, plan.c_N, plan.report.bound_eq1,
                plan.report.margin);
    if (p.kl && p.kl->cN_alternate)
        std::printf("            c_N in the other mode: %.6g\n", *p.kl->cN_alternate);
    std::printf("tail bound  P{int |X - X_N|^p > delta} <= %.6g\n", plan.report.tail_bound);
    if (r) {
        std::printf("monte carlo %zu paths (seed %llu, %s): %zu exceedances, p_hat = %.6g, upper 95%% = %.6g -> %s\n",
                    r->n_paths, static_cast<unsigned long long>(l.cfg.seed), r->coupled ? "coupled" : "uncoupled",
                    r->exceed_count, r->p_hat, r->wilson_upper, r->pass ? "PASS" : "FAIL");
        for (const auto& w : r->warnings)
            std::printf("warning     %s\n", w.c_str());
    } else if (!p.kl) {
        std::printf("monte carlo skipped: series bundles define no reference process\n");
    }

    if (!plan.feasible)
        return kInfeasible;
    if (r && !r->pass)
        return kVerifyFail;
    return kOk;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Plan, simulate and verify sub-Gaussian process models with given reliability and accuracy in L_p"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "Config file (INI)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "Output directory");
        sub->add_option("--mode", o.mode, "c_N evaluation mode")->check(CLI::IsMember({"consistent", "paper-literal"}));
    };
    auto add_mc = [&](CLI::App* sub) {
        sub->add_option("--seed", o.seed, "Root seed (overrides numerics.seed)");
        sub->add_option("--paths", o.paths, "Number of paths");
    };

    auto* validate = app.add_subcommand("validate", "Check the config: phi, route, tau, kernel");
    add_common(validate);
    auto* plan = app.add_subcommand("plan", "Choose N and write the plan as JSON");
    add_common(plan);
    auto* eigen = app.add_subcommand("eigen", "Write the eigensystem with error estimates as CSV");
    add_common(eigen);
    auto* simulate = app.add_subcommand("simulate", "Simulate model paths (CSV)");
    add_common(simulate);
    add_mc(simulate);
    simulate->add_option("--plan", o.plan, "Plan JSON from the plan command")->required();
    auto* verifyc = app.add_subcommand("verify", "Monte Carlo check of the reliability guarantee");
    add_common(verifyc);
    add_mc(verifyc);
    verifyc->add_option("--plan", o.plan, "Plan JSON; rejected if made for a different config");
    verifyc->add_option("--delta", o.delta, "Check the planned N against this level instead of target.delta")
        ->check(CLI::NonNegativeNumber);
    auto* report = app.add_subcommand("report", "Plan and verify, with a readable summary");
    add_common(report);
    add_mc(report);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    try {
        if (validate->parsed())
            return cmd_validate(o);
        if (plan->parsed())
            return cmd_plan(o);
        if (eigen->parsed())
            return cmd_eigen(o);
        if (simulate->parsed())
            return cmd_simulate(o);
        if (verifyc->parsed())
            return cmd_verify(o);
        return cmd_report(o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigError;
    }
}

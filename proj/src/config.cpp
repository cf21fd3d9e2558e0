#include "subphi/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "subphi/detail/csv.hpp"
#include "subphi/errors.hpp"

namespace subphi {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>> kKnownKeys = {
    {"orlicz", {"family", "gamma", "table"}},
    {"source", {"kind", "scale"}},
    {"kernel", {"kind", "theta", "custom_file", "n_nodes", "modes", "safety"}},
    {"target", {"p", "delta", "alpha", "T"}},
    {"model", {"route", "series_bundle"}},
    {"numerics", {"n_nodes", "panels", "safety", "n_paths", "seed", "mode"}},
};

// Line of "key" inside [section], for error messages (0 if not found).
int find_line(const std::filesystem::path& path, const std::string& section, const std::string& key)
{
    std::ifstream in(path);
    std::string line, current;
    for (int n = 1; std::getline(in, line); ++n) {
        const auto b = line.find_first_not_of(" \t");
        if (b == std::string::npos)
            continue;
        if (line[b] == '[') {
            const auto e = line.find(']', b);
            current = line.substr(b + 1, e == std::string::npos ? std::string::npos : e - b - 1);
            continue;
        }
        if (current != section)
            continue;
        const auto eq = line.find('=', b);
        if (eq == std::string::npos)
            continue;
        std::string k = line.substr(b, eq - b);
        k.erase(k.find_last_not_of(" \t") + 1);
        if (k == key)
            return n;
    }
    return 0;
}

class Reader {
public:
    explicit Reader(const std::filesystem::path& path) : path_(path)
    {
        try {
            pt::read_ini(path.string(), tree_);
        } catch (const pt::ini_parser_error& e) {
            throw ConfigError(path.string() + ":" + std::to_string(e.line()) + ": " + e.message());
        }
        for (const auto& [section, body] : tree_) {
            const auto it = kKnownKeys.find(section);
            if (it == kKnownKeys.end()) {
                if (body.empty())
                    fail(section, "", "top-level key outside any section");
                fail(section, "", "unknown section [" + section + "]");
            }
            for (const auto& [key, value] : body)
                if (!it->second.contains(key))
                    fail(section, key, "unknown key");
        }
    }

    [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& what) const
    {
        const int line = key.empty() ? 0 : find_line(path_, section, key);
        std::string where = path_.string();
        if (line > 0)
            where += ":" + std::to_string(line);
        where += ": [" + section + "]";
        if (!key.empty())
            where += " " + key;
        throw ConfigError(where + ": " + what);
    }

    bool has(const std::string& section, const std::string& key) const
    {
        return static_cast<bool>(tree_.get_optional<std::string>(pt::ptree::path_type(section + "/" + key, '/')));
    }

    std::string text(const std::string& section, const std::string& key, const std::string& fallback) const
    {
        auto v = tree_.get_optional<std::string>(pt::ptree::path_type(section + "/" + key, '/'));
        if (!v)
            return fallback;
        std::string s = *v;
        // inline comments and surrounding quotes
        for (const char* c : {" ;", " #", "\t;", "\t#"}) {
            const auto pos = s.find(c);
            if (pos != std::string::npos)
                s.erase(pos);
        }
        s.erase(0, s.find_first_not_of(" \t"));
        s.erase(s.find_last_not_of(" \t") + 1);
        if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front())
            s = s.substr(1, s.size() - 2);
        if (s.empty())
            fail(section, key, "empty value");
        return s;
    }

    double number(const std::string& section, const std::string& key, double fallback) const
    {
        if (!has(section, key))
            return fallback;
        const std::string s = text(section, key, "");
        try {
            return detail::parse_double(s);
        } catch (const std::invalid_argument&) {
            fail(section, key, "expected a number, got '" + s + "'");
        }
    }

    std::uint64_t integer(const std::string& section, const std::string& key, std::uint64_t fallback) const
    {
        if (!has(section, key))
            return fallback;
        const std::string s = text(section, key, "");
        std::uint64_t v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size())
            fail(section, key, "expected a non-negative integer, got '" + s + "'");
        return v;
    }

    std::string choice(const std::string& section, const std::string& key, const std::string& fallback,
                       std::initializer_list<const char*> options) const
    {
        const std::string s = text(section, key, fallback);
        for (const char* o : options)
            if (s == o)
                return s;
        std::string list;
        for (const char* o : options)
            list += (list.empty() ? "" : " | ") + std::string(o);
        fail(section, key, "expected " + list + ", got '" + s + "'");
    }

private:
    std::filesystem::path path_;
    pt::ptree tree_;
};

std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ULL)
{
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string file_digest(const std::filesystem::path& p)
{
    std::error_code ec;
    if (std::filesystem::is_directory(p, ec)) {
        std::vector<std::filesystem::path> files;
        for (const auto& e : std::filesystem::directory_iterator(p))
            if (e.is_regular_file())
                files.push_back(e.path());
        std::sort(files.begin(), files.end());
        std::string acc;
        for (const auto& f : files)
            acc += f.filename().string() + ":" + file_digest(f) + ";";
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(acc)));
        return buf;
    }
    std::ifstream in(p, std::ios::binary);
    if (!in)
        return "missing";
    std::ostringstream os;
    os << in.rdbuf();
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(os.str())));
    return buf;
}

}  // namespace

RunConfig load_config(const std::filesystem::path& path)
{
    if (!std::filesystem::exists(path))
        throw ConfigError("config file not found: " + path.string());
    const Reader r(path);
    RunConfig c;
    c.base_dir = std::filesystem::absolute(path).parent_path();
    auto resolve = [&](const std::string& p) {
        const std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : c.base_dir / fp;
    };

    c.orlicz_family = r.choice("orlicz", "family", "power", {"power", "piecewise", "table"});
    c.gamma = r.number("orlicz", "gamma", c.orlicz_family == "piecewise" ? 4.0 : 2.0);
    if (c.orlicz_family == "table") {
        if (!r.has("orlicz", "table"))
            r.fail("orlicz", "table", "family = table needs a table file");
        c.orlicz_table = resolve(r.text("orlicz", "table", ""));
    }

    c.source_kind = r.choice("source", "kind", "gaussian", {"gaussian", "rademacher", "uniform"});
    c.source_scale = r.number("source", "scale", 1.0);

    c.kernel_kind = r.choice("kernel", "kind", "brownian", {"brownian", "ou", "custom"});
    c.theta = r.number("kernel", "theta", 1.0);
    if (c.kernel_kind == "custom") {
        if (!r.has("kernel", "custom_file"))
            r.fail("kernel", "custom_file", "kind = custom needs a custom_file");
        c.custom_file = resolve(r.text("kernel", "custom_file", ""));
    }
    // n_nodes and safety are accepted in either [kernel] or [numerics]
    const char* nodes_section = r.has("kernel", "n_nodes") ? "kernel" : "numerics";
    c.n_nodes = r.integer(nodes_section, "n_nodes", c.n_nodes);
    c.modes = r.integer("kernel", "modes", c.modes);
    const char* safety_section = r.has("kernel", "safety") ? "kernel" : "numerics";
    c.safety = r.number(safety_section, "safety", c.safety);

    c.target.p = r.number("target", "p", c.target.p);
    c.target.delta = r.number("target", "delta", c.target.delta);
    c.target.alpha = r.number("target", "alpha", c.target.alpha);
    c.target.T = r.number("target", "T", c.target.T);

    const std::string route =
        r.choice("model", "route", "theorem9", {"theorem9", "theorem10", "theorem11", "series7", "series8"});
    c.route = parse_route(route);
    if (r.has("model", "series_bundle"))
        c.series_bundle = resolve(r.text("model", "series_bundle", ""));
    if (!c.kl_route() && c.series_bundle.empty())
        r.fail("model", "series_bundle", "route = " + route + " needs a series_bundle directory");

    c.panels = r.integer("numerics", "panels", c.panels);
    c.n_paths = r.integer("numerics", "n_paths", c.n_paths);
    c.seed = r.integer("numerics", "seed", c.seed);
    c.mode = parse_mode(r.choice("numerics", "mode", "consistent", {"consistent", "paper-literal"}));

    if (c.n_nodes < 8)
        r.fail(nodes_section, "n_nodes", "must be at least 8");
    if (c.modes < 1)
        r.fail("kernel", "modes", "must be at least 1");
    if (c.panels < 1)
        r.fail("numerics", "panels", "must be at least 1");
    if (c.n_paths < 1)
        r.fail("numerics", "n_paths", "must be at least 1");
    return c;
}

OrliczSpec RunConfig::orlicz() const
{
    if (orlicz_family == "power")
        return OrliczSpec::power(gamma);
    if (orlicz_family == "piecewise")
        return OrliczSpec::piecewise(gamma);
    return OrliczSpec::load_table(orlicz_table);
}

SubGaussianSource RunConfig::source() const
{
    if (source_kind == "rademacher")
        return SubGaussianSource::rademacher();
    if (source_kind == "uniform")
        return SubGaussianSource::uniform(source_scale);
    return SubGaussianSource::gaussian(source_scale);
}

KernelSpec RunConfig::kernel() const
{
    if (kernel_kind == "ou")
        return KernelSpec::ou(theta, target.T);
    if (kernel_kind == "custom")
        return KernelSpec::from_csv(custom_file, target.T);
    return KernelSpec::brownian(target.T);
}

KlOptions RunConfig::kl_options() const
{
    KlOptions o;
    o.n_nodes = n_nodes;
    o.modes = modes;
    o.safety = safety;
    o.route = route;
    o.mode = mode;
    return o;
}

std::string RunConfig::normalized() const
{
    using detail::format_double;
    std::ostringstream os;
    os << "[orlicz]\nfamily=" << orlicz_family << "\ngamma=" << format_double(gamma) << "\n";
    if (!orlicz_table.empty())
        os << "table=" << file_digest(orlicz_table) << "\n";
    os << "[source]\nkind=" << source_kind << "\nscale=" << format_double(source_scale) << "\n";
    os << "[kernel]\nkind=" << kernel_kind << "\ntheta=" << format_double(theta) << "\n";
    if (!custom_file.empty())
        os << "custom_file=" << file_digest(custom_file) << "\n";
    os << "n_nodes=" << n_nodes << "\nmodes=" << modes << "\nsafety=" << format_double(safety) << "\n";
    os << "[target]\np=" << format_double(target.p) << "\ndelta=" << format_double(target.delta)
       << "\nalpha=" << format_double(target.alpha) << "\nT=" << format_double(target.T) << "\n";
    os << "[model]\nroute=" << to_string(route) << "\n";
    if (!series_bundle.empty())
        os << "series_bundle=" << file_digest(series_bundle) << "\n";
    os << "[numerics]\npanels=" << panels << "\nn_paths=" << n_paths << "\nseed=" << seed
       << "\nmode=" << to_string(mode) << "\n";
    return os.str();
}

std::string RunConfig::hash() const
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(normalized())));
    return buf;
}

std::vector<ConfigCheck> validate_config(const RunConfig& cfg)
{
    std::vector<ConfigCheck> checks;
    auto add = [&](std::string name, bool ok, std::string detail = "") {
        checks.push_back({std::move(name), ok, std::move(detail)});
        return ok;
    };
    auto guarded = [&](const std::string& name, auto&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            add(name, false, e.what());
        }
    };

    try {
        cfg.target.validate();
        add("target", true);
    } catch (const std::exception& e) {
        add("target", false, e.what());
    }

    bool have_spec = false;
    OrliczSpec spec;
    guarded("orlicz", [&] {
        spec = cfg.orlicz();
        const auto d = validate_orlicz(spec);
        std::string msg;
        for (const auto& f : d.failures)
            msg += (msg.empty() ? "" : "; ") + f;
        add("orlicz", d.ok(), d.ok() ? spec.describe() : msg);
        have_spec = d.ok();
    });

    switch (cfg.route) {
    case Route::Series7:
    case Route::Theorem9:
    case Route::Theorem10:
        if (have_spec) {
            const bool ok = check_power_convexity(spec, 2.0);
            add("route", ok,
                to_string(cfg.route) + " needs phi(|x|^{1/2}) convex; " + spec.describe()
                    + (ok ? " satisfies it" : " does not"));
        }
        break;
    case Route::Series8:
    case Route::Theorem11: {
        // checked on the raw settings so the incompatibility is named even
        // when phi itself is invalid
        const bool ok = cfg.orlicz_family == "power" && cfg.gamma > 1.0 && cfg.gamma < 2.0;
        add("route", ok,
            to_string(cfg.route) + " needs family = power with 1 < gamma < 2; config has family = "
                + cfg.orlicz_family + ", gamma = " + detail::format_double(cfg.gamma));
        break;
    }
    }

    if (have_spec) {
        if (cfg.kl_route())
            guarded("tau", [&] {
                const double tau = tau_of(cfg.source(), spec);
                add("tau", true, cfg.source().describe() + ": tau = " + detail::format_double(tau));
            });
    }

    if (cfg.kl_route()) {
        guarded("kernel", [&] {
            const auto k = cfg.kernel();
            const auto d = validate_kernel(k, std::min<std::size_t>(cfg.n_nodes, 128));
            std::string msg;
            for (const auto& f : d.failures)
                msg += (msg.empty() ? "" : "; ") + f;
            add("kernel", d.ok(), d.ok() ? k.describe() : msg);
        });
        add("numerics", cfg.modes <= cfg.n_nodes && cfg.safety >= 1.0,
            "modes <= n_nodes and safety >= 1 required");
    } else {
        guarded("series_bundle", [&] {
            const auto dec = load_series_bundle(cfg.series_bundle, composite_gauss_legendre(cfg.target.T, cfg.panels));
            dec.validate();
            add("series_bundle", true, std::to_string(dec.terms.size()) + " terms");
        });
    }
    return checks;
}

}  // namespace subphi

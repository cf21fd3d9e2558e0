#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "subphi/bounds.hpp"
#include "subphi/karhunen_loeve.hpp"
#include "subphi/orlicz.hpp"
#include "subphi/plan.hpp"
#include "subphi/subgaussian.hpp"

namespace subphi {

/// Run configuration read from an INI file with sections
/// [orlicz] [source] [kernel] [target] [model] [numerics].
/// Relative paths are resolved against the config file's directory.
struct RunConfig {
    std::filesystem::path base_dir;

    std::string orlicz_family = "power";  // power | piecewise | table
    double gamma = 2.0;
    std::filesystem::path orlicz_table;

    std::string source_kind = "gaussian";  // gaussian | rademacher | uniform
    double source_scale = 1.0;

    std::string kernel_kind = "brownian";  // brownian | ou | custom
    double theta = 1.0;
    std::filesystem::path custom_file;
    std::size_t n_nodes = 128;
    std::size_t modes = 20;
    double safety = 2.0;

    AccuracyTarget target{2.0, 0.1, 0.05, 1.0};

    Route route = Route::Theorem9;
    std::filesystem::path series_bundle;

    std::size_t panels = 64;
    std::size_t n_paths = 20000;
    std::uint64_t seed = 1;
    Mode mode = Mode::Consistent;

    OrliczSpec orlicz() const;
    SubGaussianSource source() const;
    KernelSpec kernel() const;
    KlOptions kl_options() const;
    bool kl_route() const { return route == Route::Theorem9 || route == Route::Theorem10 || route == Route::Theorem11; }

    /// Canonical text of every effective setting (defaults included) plus
    /// the contents of referenced files.
    std::string normalized() const;
    /// FNV-1a 64 of normalized(), as 16 hex digits.
    std::string hash() const;
};

/// Parses a config file. Malformed input throws ConfigError naming the line
/// and the field.
RunConfig load_config(const std::filesystem::path& path);

struct ConfigCheck {
    std::string name;
    bool ok = true;
    std::string detail;
};

/// Orlicz conditions, route compatibility, tau availability, kernel probes
/// and target ranges. Never throws for configuration problems.
std::vector<ConfigCheck> validate_config(const RunConfig& cfg);

}  // namespace subphi

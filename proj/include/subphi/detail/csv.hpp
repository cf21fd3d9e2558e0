#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace subphi::detail {

/// Comma-separated rows with surrounding whitespace trimmed; blank lines and
/// lines starting with '#' are skipped.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

/// Parses a full field as double; throws std::invalid_argument otherwise.
double parse_double(const std::string& field);

bool is_number(const std::string& field);

/// Shortest round-trip representation ("%.17g").
std::string format_double(double v);

}  // namespace subphi::detail

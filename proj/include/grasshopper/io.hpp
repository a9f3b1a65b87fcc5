#pragma once

#include <filesystem>
#include <string>

namespace grasshopper {

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

/// Shortest round-trip decimal for a double ("%.17g").
std::string format_double(double x);

}  // namespace grasshopper

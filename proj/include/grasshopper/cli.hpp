#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace grasshopper {

/// Runs one CLI command (args excludes the program name). The result JSON is
/// printed to `out` and, with --out, written to <out>/result.json. Failures
/// print {"schema":1,"error":{"code":...,"message":...}} to `err`.
/// Exit status: 0 success, 2 UnknownCommand/BadFlag, 1 any other error.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Angle token: "<decimal>pi" or plain radians.
double parse_angle(const std::string& token);

/// Comma-separated angle tokens and/or inclusive ranges "a:b:count".
std::vector<double> parse_angle_list(const std::string& spec);

}  // namespace grasshopper

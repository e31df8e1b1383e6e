#pragma once

#include <istream>
#include <string>

#include "petto/problem_config.hpp"

namespace petto {

/// Parses the flat key-value config format. A `preset = <name>` line applies
/// that preset's defaults first; every other key overrides one field.
/// Validates before returning. Parse errors carry the line number.
ProblemConfig load_config(const std::string& path);
ProblemConfig parse_config(std::istream& in, const std::string& origin);

std::string serialize_config(const ProblemConfig& cfg);
void save_config(const ProblemConfig& cfg, const std::string& path);

} // namespace petto

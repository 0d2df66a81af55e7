#pragma once

#include <string>

#include <json.hpp>

#include "fbsmp/presets.hpp"

namespace fbsmp {

using json = nlohmann::ordered_json;

// Problem documents: either {"preset": name, ...overrides} or a fully inline
// specification. Unknown keys are rejected with the offending path.
Problem problem_from_json(const json& doc);
Problem load_problem_file(const std::string& path);

// Configuration echo for reports (stable key order).
json problem_to_json(const Problem& problem);

}  // namespace fbsmp

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace fbsmp {

inline constexpr const char* kVersion = "0.1.0";

using json = nlohmann::ordered_json;

// Report skeleton with stable key order. Reports must serialize identically
// for identical config + seed, so no timestamps or timings belong here.
json report_skeleton(const std::string& command, const json& config_echo);

std::string dump_report(const json& report);

void write_text_file(const std::string& path, const std::string& content);

// Minimal CSV writer: header row then data rows, '\n' line ends, full
// round-trip double formatting.
std::string csv_table(const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows);

}  // namespace fbsmp

#include "fbsmp/report.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

namespace fbsmp {

json report_skeleton(const std::string& command, const json& config_echo) {
    json out;
    out["tool"] = "fbsde-smp";
    out["version"] = kVersion;
    out["command"] = command;
    out["config"] = config_echo;
    out["results"] = json::object();
    out["pass"] = true;
    return out;
}

std::string dump_report(const json& report) { return report.dump(2) + "\n"; }

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << content;
}

std::string csv_table(const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out += ',';
        out += header[i];
    }
    out += '\n';
    char buf[64];
    for (const auto& row : rows) {
        if (row.size() != header.size())
            throw std::invalid_argument("csv_table: row width mismatch");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            const auto res = std::to_chars(buf, buf + sizeof buf, row[i]);
            out.append(buf, res.ptr);
        }
        out += '\n';
    }
    return out;
}

}  // namespace fbsmp

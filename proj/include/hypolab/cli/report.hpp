#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hypolab/cli/config.hpp"
#include "hypolab/error.hpp"

namespace hypolab::cli {

inline constexpr const char* tool_version = "0.3.0";

enum class Status { pass, fail, skipped };

inline std::string_view to_string(Status s) {
    switch (s) {
    case Status::pass: return "pass";
    case Status::fail: return "fail";
    case Status::skipped: return "skipped";
    }
    return "unknown";
}

struct Verdict {
    std::string name;
    Status status = Status::skipped;
    std::optional<double> margin;  ///< positive when passing with room to spare
    std::string detail;
};

inline Verdict verdict(std::string name, bool ok, std::optional<double> margin = {}, std::string detail = {}) {
    return {std::move(name), ok ? Status::pass : Status::fail, margin, std::move(detail)};
}

inline Verdict skipped(std::string name, std::string detail) {
    return {std::move(name), Status::skipped, {}, std::move(detail)};
}

struct CsvTable {
    std::string file;
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;  ///< column-major, equal lengths
};

struct RunReport {
    std::string command;
    ExperimentConfig config;
    nlohmann::ordered_json sections = nlohmann::ordered_json::object();
    std::vector<Verdict> verdicts;
    std::vector<CsvTable> tables;
    nlohmann::ordered_json timings = nlohmann::ordered_json::object();
    std::optional<std::string> numerical_failure;  ///< set when a stage aborted

    bool any_failed() const {
        for (const auto& v : verdicts)
            if (v.status == Status::fail) return true;
        return false;
    }
    std::vector<std::string> manifest() const {
        std::vector<std::string> m;
        for (const auto& t : tables) m.push_back(t.file);
        return m;
    }
};

inline nlohmann::ordered_json to_json(const RunReport& r) {
    nlohmann::ordered_json j;
    j["tool"] = "hypolab";
    j["version"] = tool_version;
    j["command"] = r.command;
    auto& cfg = j["config"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : config_entries(r.config)) cfg[k] = v;
    for (const auto& [k, v] : r.sections.items()) j[k] = v;
    auto& vs = j["verdicts"] = nlohmann::ordered_json::array();
    for (const auto& v : r.verdicts) {
        nlohmann::ordered_json e;
        e["name"] = v.name;
        e["status"] = std::string(to_string(v.status));
        e["margin"] = v.margin ? nlohmann::ordered_json(*v.margin) : nlohmann::ordered_json(nullptr);
        if (!v.detail.empty()) e["detail"] = v.detail;
        vs.push_back(std::move(e));
    }
    j["numerical_failure"] = r.numerical_failure ? nlohmann::ordered_json(*r.numerical_failure)
                                                 : nlohmann::ordered_json(nullptr);
    j["manifest"] = r.manifest();
    j["timings"] = r.timings;
    return j;
}

inline void write_csv(const CsvTable& t, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write '" + path.string() + "'");
    for (std::size_t i = 0; i < t.header.size(); ++i) f << (i ? "," : "") << t.header[i];
    f << '\n';
    const std::size_t rows = t.columns.empty() ? 0 : t.columns.front().size();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < t.columns.size(); ++c)
            f << (c ? "," : "") << detail::format_double(t.columns[c][r]);
        f << '\n';
    }
    if (!f) throw IoError("write failed for '" + path.string() + "'");
}

/// Writes report.json, every CSV table and summary.txt into `dir`.
inline std::vector<std::string> emit_report(const RunReport& r, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw IoError("cannot create output directory '" + dir.string() + "'");
    for (const auto& t : r.tables) write_csv(t, dir / t.file);
    {
        std::ofstream f(dir / "report.json", std::ios::binary);
        if (!f) throw IoError("cannot write '" + (dir / "report.json").string() + "'");
        f << to_json(r).dump(2) << '\n';
        if (!f) throw IoError("write failed for report.json");
    }
    {
        std::ofstream f(dir / "summary.txt", std::ios::binary);
        if (!f) throw IoError("cannot write '" + (dir / "summary.txt").string() + "'");
        for (const auto& v : r.verdicts) {
            f << to_string(v.status) << "  " << v.name;
            if (v.margin) f << "  margin=" << detail::format_double(*v.margin);
            if (!v.detail.empty()) f << "  " << v.detail;
            f << '\n';
        }
        if (!f) throw IoError("write failed for summary.txt");
    }
    return r.manifest();
}

}  // namespace hypolab::cli

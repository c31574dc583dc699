#pragma once

#include <chrono>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "wpflow/boundary.hpp"
#include "wpflow/geodesic.hpp"
#include "wpflow/rng.hpp"

namespace wpflow {

/// Fixed, locale-independent float formatting; CSV outputs must be
/// byte-identical across runs and worker counts.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class CsvWriter {
  public:
    CsvWriter(std::filesystem::path path, std::vector<std::string> header)
        : path_(std::move(path)) {
        std::string line;
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) line += ',';
            line += header[i];
        }
        rows_.push_back(line);
    }

    void add_row(const std::vector<std::string>& cells) {
        std::string line;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) line += ',';
            line += cells[i];
        }
        rows_.push_back(line);
    }

    void add_numeric_row(const std::vector<double>& cells) {
        std::vector<std::string> s;
        s.reserve(cells.size());
        for (double c : cells) s.push_back(format_double(c));
        add_row(s);
    }

    /// Writes the file and returns its path.
    std::filesystem::path write() const {
        std::filesystem::create_directories(path_.parent_path());
        std::ofstream out(path_, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path_.string());
        for (const auto& r : rows_) out << r << '\n';
        return path_;
    }

  private:
    std::filesystem::path path_;
    std::vector<std::string> rows_;
};

inline std::string file_checksum(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string bytes = ss.str();
    const std::uint64_t h = fnv1a64(bytes);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a64:%016" PRIx64, h);
    return buf;
}

inline const char* event_kind_name(EventKind kind) {
    switch (kind) {
        case EventKind::BoundaryHit: return "boundary_hit";
        case EventKind::WallReflection: return "wall_reflection";
        case EventKind::ThresholdCross: return "threshold_cross";
    }
    return "unknown";
}

/// Writes a trajectory in the standard column layout
/// (t, x, tau, y1, y2, vx, vtau, vy1, vy2, f, r).
inline std::filesystem::path trajectory_csv(const Trajectory& traj, const MetricSpec& spec,
                                            const std::filesystem::path& path) {
    CsvWriter csv(path, {"t", "x", "tau", "y1", "y2", "vx", "vtau", "vy1", "vy2", "f", "r"});
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const PhasePoint& s = traj.states[i];
        const BoundaryState bs = boundary_state(s, spec);
        csv.add_numeric_row({traj.times[i], s.point.x, s.point.tau, s.point.y1, s.point.y2,
                             s.velocity.vx, s.velocity.vtau, s.velocity.vy1, s.velocity.vy2,
                             bs.f, bs.r});
    }
    return csv.write();
}

inline nlohmann::json trajectory_manifest_json(const Trajectory& traj) {
    nlohmann::json j;
    j["steps"] = traj.stats.steps;
    j["rejected_steps"] = traj.stats.rejected;
    j["max_energy_drift"] = traj.stats.max_energy_drift;
    j["final_time"] = traj.final_time;
    j["hit_floor"] = traj.hit_floor;
    j["events"] = nlohmann::json::array();
    for (const auto& ev : traj.events)
        j["events"].push_back({{"t", ev.t}, {"kind", event_kind_name(ev.kind)}});
    return j;
}

/// Run manifest: config echo, version, timings, per-experiment summaries and
/// the list of emitted files with checksums. Written last, as the atomic
/// completion marker of a run.
class RunManifest {
  public:
    RunManifest(std::string experiment, std::uint64_t seed, std::string version)
        : started_(std::chrono::system_clock::now()) {
        doc_["tool"] = "wpflow";
        doc_["version"] = std::move(version);
        doc_["experiment"] = std::move(experiment);
        doc_["seed"] = seed;
        doc_["status"] = "failed";  // flipped on successful write()
    }

    void echo_config(const std::map<std::string, std::string>& entries) {
        doc_["config"] = entries;
    }

    void add_file(const std::filesystem::path& path) {
        nlohmann::json f;
        f["name"] = path.filename().string();
        f["checksum"] = file_checksum(path);
        doc_["files"].push_back(f);
    }

    void set_summary(const nlohmann::json& summary) { doc_["summary"] = summary; }

    nlohmann::json& summary() { return doc_["summary"]; }

    std::filesystem::path write(const std::filesystem::path& dir, bool success) {
        const auto finished = std::chrono::system_clock::now();
        doc_["started_unix_ms"] =
            std::chrono::duration_cast<std::chrono::milliseconds>(started_.time_since_epoch())
                .count();
        doc_["finished_unix_ms"] =
            std::chrono::duration_cast<std::chrono::milliseconds>(finished.time_since_epoch())
                .count();
        doc_["status"] = success ? "ok" : "failed";
        std::filesystem::create_directories(dir);
        const auto path = dir / ("manifest_" + doc_["experiment"].get<std::string>() + "_s" +
                                 std::to_string(doc_["seed"].get<std::uint64_t>()) + ".json");
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out << doc_.dump(2) << '\n';
        return path;
    }

  private:
    nlohmann::json doc_;
    std::chrono::system_clock::time_point started_;
};

}  // namespace wpflow

#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wpflow/metric.hpp"

namespace wpflow {

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Flat key = value configuration with [section] headers and '#' comments.
class Config {
  public:
    Config() = default;

    static Config parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str(), path);
    }

    static Config parse(const std::string& text, const std::string& origin = "<string>") {
        Config cfg;
        std::istringstream in(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            if (trimmed.front() == '[') {
                if (trimmed.back() != ']')
                    throw ConfigError(origin + ":" + std::to_string(lineno) +
                                      ": malformed section header");
                section = trim(trimmed.substr(1, trimmed.size() - 2));
                continue;
            }
            const auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": expected key = value");
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty())
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
            cfg.values_[section + "." + key] = value;
        }
        return cfg;
    }

    bool has(const std::string& section, const std::string& key) const {
        return values_.count(section + "." + key) > 0;
    }

    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
        const auto it = values_.find(section + "." + key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& section, const std::string& key,
                      double fallback) const {
        const auto it = values_.find(section + "." + key);
        if (it == values_.end()) return fallback;
        return to_double(it->second, section + "." + key);
    }

    std::int64_t get_int(const std::string& section, const std::string& key,
                         std::int64_t fallback) const {
        const auto it = values_.find(section + "." + key);
        if (it == values_.end()) return fallback;
        try {
            return std::stoll(it->second);
        } catch (const std::exception&) {
            throw ConfigError("config field " + section + "." + key + ": not an integer: " +
                              it->second);
        }
    }

    std::vector<double> get_list(const std::string& section, const std::string& key,
                                 const std::vector<double>& fallback) const {
        const auto it = values_.find(section + "." + key);
        if (it == values_.end()) return fallback;
        std::vector<double> out;
        std::istringstream ss(it->second);
        std::string tok;
        while (ss >> tok) {
            if (tok == ",") continue;
            if (!tok.empty() && tok.back() == ',') tok.pop_back();
            if (tok.empty()) continue;
            out.push_back(to_double(tok, section + "." + key));
        }
        if (out.empty())
            throw ConfigError("config field " + section + "." + key + ": empty list");
        return out;
    }

    const std::map<std::string, std::string>& entries() const { return values_; }

    void set(const std::string& section, const std::string& key, const std::string& value) {
        values_[section + "." + key] = value;
    }

  private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    static double to_double(const std::string& s, const std::string& where) {
        try {
            std::size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config field " + where + ": not a number: " + s);
        }
    }

    std::map<std::string, std::string> values_;
};

/// Reads the [metric] block; field names match the MetricSpec fields.
inline MetricSpec metric_spec_from_config(const Config& cfg) {
    MetricSpec spec;
    spec.x_max = cfg.get_double("metric", "x_max", spec.x_max);
    spec.x_floor = cfg.get_double("metric", "x_floor", spec.x_floor);
    spec.tau_period = cfg.get_double("metric", "tau_period", spec.tau_period);
    const auto sides =
        cfg.get_list("metric", "torus_sides", {spec.torus_sides[0], spec.torus_sides[1]});
    if (sides.size() != 2) throw ConfigError("metric.torus_sides: expected two values");
    spec.torus_sides = {sides[0], sides[1]};
    spec.eta = cfg.get_double("metric", "eta", spec.eta);
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid [metric] block: ") + e.what());
    }
    return spec;
}

inline std::string metric_spec_to_config(const MetricSpec& spec) {
    std::ostringstream out;
    out.precision(17);
    out << "[metric]\n";
    out << "x_max = " << spec.x_max << "\n";
    out << "x_floor = " << spec.x_floor << "\n";
    out << "tau_period = " << spec.tau_period << "\n";
    out << "torus_sides = " << spec.torus_sides[0] << " " << spec.torus_sides[1] << "\n";
    out << "eta = " << spec.eta << "\n";
    return out.str();
}

}  // namespace wpflow

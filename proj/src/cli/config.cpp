#include "geomphase/cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>

namespace geomphase::cli {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// section -> allowed keys
const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> table = {
        {"run", {"model", "basis_size", "order", "levels", "grid_points"}},
        {"physics", {"hbar", "mass", "l0"}},
        {"custom", {"h0", "h"}},
        {"perturb", {"l", "eps"}},
        {"path",
         {"type", "l_min", "l_max", "r_min", "r_max", "samples_per_edge", "l_from", "l_to",
          "r_from", "r_to", "samples"}},
        {"schedule", {"type", "l_start", "l_end", "amplitude", "tau", "dt", "store_dt"}},
        {"connection", {"sn_cutoff"}},
        {"sweep", {"key", "values", "command"}},
        {"output", {"table", "metadata", "states"}},
    };
    return table;
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str(), path);
}

ConfigFile ConfigFile::parse_text(const std::string& text, const std::string& origin) {
    ConfigFile cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (section.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": key outside a section");
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        if (cfg.sections_[section].count(key))
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key " + key);
        cfg.sections_[section][key] = Entry{value, lineno};
    }
    return cfg;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
}

void ConfigFile::set(const std::string& section, const std::string& key,
                     const std::string& value) {
    sections_[section][key] = Entry{value, 0};
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   const std::string& fallback) const {
    auto s = sections_.find(section);
    if (s == sections_.end()) return fallback;
    auto k = s->second.find(key);
    return k == s->second.end() ? fallback : k->second.value;
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double fallback) const {
    if (!has(section, key)) return fallback;
    const Entry& e = sections_.at(section).at(key);
    try {
        size_t used = 0;
        double v = std::stod(e.value, &used);
        if (used != e.value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": " + section + "." + key +
                          " is not a number: " + e.value);
    }
}

long long ConfigFile::get_int(const std::string& section, const std::string& key,
                              long long fallback) const {
    if (!has(section, key)) return fallback;
    const Entry& e = sections_.at(section).at(key);
    try {
        size_t used = 0;
        long long v = std::stoll(e.value, &used);
        if (used != e.value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": " + section + "." + key +
                          " is not an integer: " + e.value);
    }
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key,
                          bool fallback) const {
    if (!has(section, key)) return fallback;
    const Entry& e = sections_.at(section).at(key);
    if (e.value == "true" || e.value == "1") return true;
    if (e.value == "false" || e.value == "0") return false;
    throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": " + section + "." + key +
                      " is not a boolean: " + e.value);
}

std::vector<double> ConfigFile::get_doubles(const std::string& section,
                                            const std::string& key) const {
    std::vector<double> out;
    if (!has(section, key)) return out;
    const Entry& e = sections_.at(section).at(key);
    std::istringstream in(e.value);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": " + section + "." + key +
                              " has a bad list entry: " + item);
        }
    }
    return out;
}

void ConfigFile::reject_unknown_keys() const {
    const auto& registry = known_keys();
    for (const auto& [section, entries] : sections_) {
        auto reg = registry.find(section);
        if (reg == registry.end()) {
            int line = entries.empty() ? 0 : entries.begin()->second.line;
            throw ConfigError(origin_ + ":" + std::to_string(line) + ": unknown section [" +
                              section + "]");
        }
        for (const auto& [key, entry] : entries)
            if (!reg->second.count(key))
                throw ConfigError(origin_ + ":" + std::to_string(entry.line) + ": unknown key " +
                                  section + "." + key);
    }
}

std::string ConfigFile::canonical_dump() const {
    std::ostringstream out;
    for (const auto& [section, entries] : sections_) {
        out << "[" << section << "]\n";
        for (const auto& [key, entry] : entries) out << key << " = " << entry.value << "\n";
    }
    return out.str();
}

std::string ConfigFile::hash() const {
    std::string dump = canonical_dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

Matrix parse_matrix(const std::string& text, const std::string& what) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string row;
    while (std::getline(in, row, ';')) {
        std::vector<double> values;
        std::istringstream rin(row);
        std::string item;
        while (std::getline(rin, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            try {
                values.push_back(std::stod(item));
            } catch (const std::exception&) {
                throw ConfigError(what + ": bad matrix entry " + item);
            }
        }
        if (!values.empty()) rows.push_back(values);
    }
    if (rows.empty()) throw ConfigError(what + ": empty matrix");
    const size_t n = rows.size();
    Matrix m(n, n);
    for (size_t i = 0; i < n; ++i) {
        if (rows[i].size() != n) throw ConfigError(what + ": matrix is not square");
        for (size_t j = 0; j < n; ++j) m(i, j) = rows[i][j];
    }
    return m;
}

}  // namespace

models::BoxModel RunConfig::box_model() const {
    if (custom_model) throw ConfigError("this command does not accept the custom model");
    return models::BoxModel{kind, physics, basis_size, {}};
}

ParameterPath RunConfig::build_path() const {
    switch (path_type) {
        case PathType::rectangle:
            return models::rectangle_loop(l_min, l_max, r_min, r_max, samples_per_edge);
        case PathType::line:
            return models::line_path(ParameterPoint{{"L", line_l_from}, {"R", line_r_from}},
                                     ParameterPoint{{"L", line_l_to}, {"R", line_r_to}},
                                     line_samples);
        case PathType::retrace:
            return models::retraced_path(ParameterPoint{{"L", line_l_from}, {"R", line_r_from}},
                                         ParameterPoint{{"L", line_l_to}, {"R", line_r_to}},
                                         line_samples);
        case PathType::none:
            break;
    }
    throw ConfigError("no [path] section configured");
}

RunConfig make_run_config(const std::string& command, ConfigFile file,
                          const CliOverrides& overrides) {
    if (overrides.order) file.set("run", "order", std::to_string(*overrides.order));
    if (overrides.basis_size) file.set("run", "basis_size", std::to_string(*overrides.basis_size));
    if (overrides.model) file.set("run", "model", *overrides.model);
    if (overrides.out) file.set("output", "table", *overrides.out);
    file.reject_unknown_keys();

    RunConfig cfg;
    cfg.command = command;
    cfg.raw = file;

    std::string model = file.get_string("run", "model", "transformed");
    if (model == "custom") {
        cfg.custom_model = true;
        cfg.custom_h0 = parse_matrix(file.get_string("custom", "h0", ""), "custom.h0");
        cfg.custom_h = parse_matrix(file.get_string("custom", "h", ""), "custom.h");
        if (cfg.custom_h0.rows() != cfg.custom_h.rows())
            throw ConfigError("custom.h0 and custom.h dimensions differ");
        cfg.basis_size = static_cast<int>(cfg.custom_h0.rows());
    } else {
        cfg.kind = models::model_kind_from_string(model);
        cfg.basis_size = static_cast<int>(file.get_int("run", "basis_size", 64));
        if (cfg.basis_size < 4 || cfg.basis_size > 4096)
            throw ConfigError("run.basis_size out of range [4, 4096]");
    }

    cfg.order = static_cast<int>(file.get_int("run", "order", 2));
    if (cfg.order < 0 || cfg.order > 12) throw ConfigError("run.order out of range [0, 12]");

    cfg.levels.clear();
    std::vector<double> levels = file.get_doubles("run", "levels");
    if (levels.empty()) levels = {1.0};
    for (double v : levels) {
        int level = static_cast<int>(v);
        if (level < 1 || level > cfg.basis_size)
            throw ConfigError("run.levels entry out of range [1, basis_size]");
        cfg.levels.push_back(level);
    }

    cfg.grid_points = static_cast<int>(file.get_int("run", "grid_points", kDefaultGridPoints));
    if (cfg.grid_points < 16) throw ConfigError("run.grid_points too small");

    cfg.physics.hbar = file.get_double("physics", "hbar", 1.0);
    cfg.physics.mass = file.get_double("physics", "mass", 1.0);
    cfg.physics.l0 = file.get_double("physics", "l0", 1.0);
    try {
        cfg.physics.validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("[physics] invalid: ") + e.what());
    }

    cfg.perturb_l = file.get_double("perturb", "l", cfg.physics.l0);
    cfg.perturb_eps = file.get_doubles("perturb", "eps");

    std::string ptype = file.get_string("path", "type", "");
    if (!ptype.empty()) {
        if (ptype == "rectangle")
            cfg.path_type = PathType::rectangle;
        else if (ptype == "line")
            cfg.path_type = PathType::line;
        else if (ptype == "retrace")
            cfg.path_type = PathType::retrace;
        else
            throw ConfigError("path.type must be rectangle, line or retrace");
        cfg.l_min = file.get_double("path", "l_min", cfg.l_min);
        cfg.l_max = file.get_double("path", "l_max", cfg.l_max);
        cfg.r_min = file.get_double("path", "r_min", cfg.r_min);
        cfg.r_max = file.get_double("path", "r_max", cfg.r_max);
        cfg.samples_per_edge = static_cast<int>(file.get_int("path", "samples_per_edge", 40));
        cfg.line_l_from = file.get_double("path", "l_from", cfg.line_l_from);
        cfg.line_l_to = file.get_double("path", "l_to", cfg.line_l_to);
        cfg.line_r_from = file.get_double("path", "r_from", cfg.line_r_from);
        cfg.line_r_to = file.get_double("path", "r_to", cfg.line_r_to);
        cfg.line_samples = static_cast<int>(file.get_int("path", "samples", 64));
    }

    std::string stype = file.get_string("schedule", "type", "");
    if (!stype.empty()) {
        if (stype == "constant")
            cfg.schedule_type = ScheduleType::constant;
        else if (stype == "linear")
            cfg.schedule_type = ScheduleType::linear;
        else if (stype == "bump")
            cfg.schedule_type = ScheduleType::bump;
        else if (stype == "smoothstep")
            cfg.schedule_type = ScheduleType::smoothstep;
        else
            throw ConfigError("schedule.type must be constant, linear, bump or smoothstep");
        cfg.l_start = file.get_double("schedule", "l_start", cfg.l_start);
        cfg.l_end = file.get_double("schedule", "l_end", cfg.l_end);
        cfg.amplitude = file.get_double("schedule", "amplitude", cfg.amplitude);
        cfg.tau = file.get_double("schedule", "tau", cfg.tau);
        cfg.dt = file.get_double("schedule", "dt", 0.0);
        cfg.store_dt = file.get_double("schedule", "store_dt", 0.0);
        if (!(cfg.tau > 0.0)) throw ConfigError("schedule.tau must be positive");
    }

    cfg.sn_cutoff = file.get_int("connection", "sn_cutoff", 100000);

    cfg.sweep_key = file.get_string("sweep", "key", "");
    cfg.sweep_values = file.get_doubles("sweep", "values");
    cfg.sweep_command = file.get_string("sweep", "command", "");

    cfg.out_table = file.get_string("output", "table", "out.csv");
    cfg.out_metadata = file.get_string("output", "metadata", "");
    cfg.out_states = file.get_string("output", "states", "");
    return cfg;
}

}  // namespace geomphase::cli

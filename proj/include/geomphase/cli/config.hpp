#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geomphase/models.hpp"
#include "geomphase/types.hpp"

namespace geomphase::cli {

/// Parsed key-value configuration with [sections]; keeps source line numbers
/// for error context and rejects keys outside the registry.
class ConfigFile {
public:
    struct Entry {
        std::string value;
        int line = 0;
    };

    static ConfigFile parse_file(const std::string& path);
    static ConfigFile parse_text(const std::string& text, const std::string& origin = "<text>");

    bool has(const std::string& section, const std::string& key) const;
    void set(const std::string& section, const std::string& key, const std::string& value);

    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    long long get_int(const std::string& section, const std::string& key,
                      long long fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    std::vector<double> get_doubles(const std::string& section, const std::string& key) const;

    /// Throws ConfigError naming the offending line for any key outside the
    /// known-keys registry.
    void reject_unknown_keys() const;

    /// Sorted, normalized dump; identical configurations dump identically.
    std::string canonical_dump() const;

    /// FNV-1a 64 of the canonical dump, hex encoded.
    std::string hash() const;

    const std::map<std::string, std::map<std::string, Entry>>& sections() const {
        return sections_;
    }

private:
    std::string origin_;
    std::map<std::string, std::map<std::string, Entry>> sections_;
};

enum class PathType { none, rectangle, line, retrace };
enum class ScheduleType { none, constant, linear, bump, smoothstep };

/// Fully validated run description: one command applied to one model.
struct RunConfig {
    std::string command;
    ConfigFile raw;

    bool custom_model = false;
    models::ModelKind kind = models::ModelKind::transformed;
    Matrix custom_h0;  // custom model: real symmetric input
    Matrix custom_h;

    PhysicalConfig physics;
    int basis_size = 64;
    int order = 2;
    std::vector<int> levels = {1};  // 1-based
    int grid_points = kDefaultGridPoints;

    double perturb_l = 1.0;
    std::vector<double> perturb_eps;

    PathType path_type = PathType::none;
    double l_min = 1.0, l_max = 1.1, r_min = 0.0, r_max = 1e-3;
    int samples_per_edge = 40;
    double line_l_from = 1.0, line_l_to = 1.1, line_r_from = 0.0, line_r_to = 0.0;
    int line_samples = 64;

    ScheduleType schedule_type = ScheduleType::none;
    double l_start = 1.0, l_end = 1.1, amplitude = 0.1, tau = 10.0;
    double dt = 0.0;        // 0: use the model default
    double store_dt = 0.0;  // 0: tau / 256

    long long sn_cutoff = 100000;

    std::string sweep_key;
    std::vector<double> sweep_values;
    std::string sweep_command;

    std::string out_table = "out.csv";
    std::string out_metadata;
    std::string out_states;

    models::BoxModel box_model() const;
    ParameterPath build_path() const;
    struct ScheduleBundle {
        double tau;
        ScheduleType type;
    };
};

struct CliOverrides {
    std::optional<int> order;
    std::optional<int> basis_size;
    std::optional<std::string> model;
    std::optional<std::string> out;
};

RunConfig make_run_config(const std::string& command, ConfigFile file,
                          const CliOverrides& overrides = {});

}  // namespace geomphase::cli

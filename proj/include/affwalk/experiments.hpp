// Experiment registry, configuration, and report emission for the command-line
// runner. Reports are a JSON summary plus numeric tables written as CSV or JSON.
#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "affwalk/measure.hpp"

namespace affwalk {

using json = nlohmann::json;

inline constexpr const char* kArtifactName = "affwalk";
const char* artifact_version();

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct HfSweep {
    std::string group;
    std::vector<int> r_outer;
    int inner_fixed = -1;   // used when >= 0
    int inner_offset = -1;  // used when inner_fixed < 0
};

struct GrowthSweep {
    std::string group;
    std::vector<int> radii;
};

struct ExperimentConfig {
    std::string experiment = "full-suite";
    int dim = 1;
    CourteousSpec measure = CourteousSpec::critical(1);

    // stationary / harmonic
    int steps = 200'000;
    int chains = 16;
    int blocks = 8;
    double ref_radius = 1.0;
    std::vector<double> test_boxes{1.0, 2.0, 4.0};
    int convolution_samples = 2000;
    std::vector<double> z_grid{2, 4, 8, 16, 32, 64, 128, 256, 512, 1024};
    int test_points = 50;
    int laplacian_samples = 1000;
    std::vector<double> radius_grid{1, 2, 4, 8, 12, 16, 20, 25, 30};
    int random_per_radius = 16;

    // stopping and trajectories
    int trials = 1000;
    int horizon = 10'000;
    std::vector<double> stop_z_grid{2, 4, 8, 16, 32, 64, 128, 256};
    double k0 = 4.0;
    double ost_u = 8.0;
    double ost_v = 4.0;

    // discrete groups
    std::vector<GrowthSweep> growth{{"free-abelian-2", {2, 4, 6, 8, 10, 12, 16, 20, 24, 28, 32}},
                                    {"heisenberg", {2, 4, 6, 8, 10, 12, 14, 16}},
                                    {"lamplighter", {2, 4, 6, 8, 10, 12}}};
    std::vector<HfSweep> hf{{"free-abelian-1", {8, 9, 10, 11, 12, 13, 14}, 4, -1},
                            {"free-abelian-2", {8, 9, 10, 11, 12, 13, 14}, 1, -1},
                            {"bs12", {4, 5, 6, 7, 8}, -1, 2}};
    int hitting_samples = 100'000;

    // representations
    int words = 1000;
    int word_length = 8;

    std::uint64_t seed = 1;
    std::string out_dir = "affwalk-out";
    std::string format = "csv";
    int threads = 1;

    /// Throws ConfigError on any invalid field.
    void validate() const;
    json to_json() const;
    /// Missing keys keep their defaults; unknown keys are rejected.
    static ExperimentConfig from_json(const json& j);
};

/// Numeric table with a header row.
struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add(std::vector<double> row);
    std::size_t column(const std::string& name) const;
};

struct Report {
    std::string experiment;
    json summary = json::object();  // per-experiment verdicts and key statistics
    std::vector<Table> tables;

    const Table* find(const std::string& name) const;
};

struct ExperimentInfo {
    std::string tag;
    std::string description;
    std::string anchor;
};

const std::vector<ExperimentInfo>& list_experiments();
bool is_experiment(const std::string& tag);

/// Runs the tagged experiment (every registered one for "full-suite").
Report run_experiment(const ExperimentConfig& config);

/// Writes summary.json and one file per table into config.out_dir; returns the
/// written paths, summary first.
std::vector<std::filesystem::path> write_report(const Report& report, const ExperimentConfig& config,
                                                double wall_seconds);

/// Reads a report written by write_report.
Report load_report(const std::filesystem::path& dir);

class MissingSeries : public std::invalid_argument {
public:
    explicit MissingSeries(const std::string& kind)
        : std::invalid_argument("report has no series for plot kind '" + kind + "'") {}
};

/// Plot kinds: "stationary" (z, mass), "stopping" (z, P (1 + log z)),
/// "harmonic" (r, sup h), "hf-dim" (rOuter, epsRank, one block per group).
std::vector<std::string> plot_kinds();
void emit_plot_data(const Report& report, const std::string& kind, const std::filesystem::path& path);

/// "%.17g"; nan and inf spelled out.
std::string format_number(double v);

}  // namespace affwalk

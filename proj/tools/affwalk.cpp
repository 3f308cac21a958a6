// Command-line runner: affwalk run | list | plot.
//
// Exit codes: 0 on success (scientific verdicts live in the report), 1 on an
// invalid configuration or command line, 2 on a runtime failure.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "affwalk/cayley.hpp"
#include "affwalk/experiments.hpp"
#include "affwalk/stationary.hpp"

namespace {

constexpr int kExitInvalid = 1;
constexpr int kExitRuntime = 2;

int run(const std::string& config_path, const std::optional<std::string>& experiment,
        const std::optional<std::uint64_t>& seed, const std::optional<std::string>& out,
        const std::optional<int>& threads, const std::optional<std::string>& format) {
    using namespace affwalk;
    ExperimentConfig config;
    try {
        json j = json::object();
        if (!config_path.empty()) {
            std::ifstream f(config_path);
            if (!f) throw ConfigError("cannot open config file " + config_path);
            try {
                j = json::parse(f);
            } catch (const json::parse_error& e) {
                throw ConfigError(std::string("config is not valid JSON: ") + e.what());
            }
        }
        if (!j.is_object()) throw ConfigError("config must be a JSON object");
        if (!j.contains("out_dir"))
            if (const char* env = std::getenv("AFFWALK_OUT_DIR"); env && *env) j["out_dir"] = env;
        if (experiment) j["experiment"] = *experiment;
        if (seed) j["seed"] = *seed;
        if (out) j["out_dir"] = *out;
        if (threads) j["threads"] = *threads;
        if (format) j["format"] = *format;
        config = ExperimentConfig::from_json(j);
    } catch (const ConfigError& e) {
        std::cerr << "affwalk: " << e.what() << '\n';
        return kExitInvalid;
    }

    try {
        const auto start = std::chrono::steady_clock::now();
        const Report report = run_experiment(config);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        for (const auto& path : write_report(report, config, wall)) std::cout << path.string() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "affwalk: runtime failure: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random walks on similarity groups and discrete groups: experiment runner"};
    app.require_subcommand(1);

    auto* run_cmd = app.add_subcommand("run", "run an experiment and write its report");
    std::string config_path;
    std::optional<std::string> experiment, out, format;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    run_cmd->add_option("--config", config_path, "JSON configuration file");
    run_cmd->add_option("--experiment", experiment, "experiment tag (overrides the config)");
    run_cmd->add_option("--seed", seed, "master seed (overrides the config)");
    run_cmd->add_option("--out", out, "output directory (default: $AFFWALK_OUT_DIR, then ./affwalk-out)");
    run_cmd->add_option("--threads", threads, "worker count");
    run_cmd->add_option("--format", format, "table format: csv or json");

    auto* list_cmd = app.add_subcommand("list", "list registered experiments");

    auto* plot_cmd = app.add_subcommand("plot", "write plot data from a report directory");
    std::string report_dir, kind, plot_out;
    plot_cmd->add_option("--report", report_dir, "report directory")->required();
    plot_cmd->add_option("--kind", kind, "stationary | stopping | harmonic | hf-dim")->required();
    plot_cmd->add_option("--out", plot_out, "output file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInvalid;
    }

    if (*run_cmd) return run(config_path, experiment, seed, out, threads, format);

    if (*list_cmd) {
        for (const auto& e : affwalk::list_experiments())
            std::cout << e.tag << "\t" << e.description << "\t[" << e.anchor << "]\n";
        std::cout << "full-suite\tevery experiment above in one report\n";
        return 0;
    }

    if (*plot_cmd) {
        try {
            affwalk::emit_plot_data(affwalk::load_report(report_dir), kind, plot_out);
        } catch (const std::invalid_argument& e) {
            std::cerr << "affwalk: " << e.what() << '\n';
            return kExitInvalid;
        } catch (const std::exception& e) {
            std::cerr << "affwalk: runtime failure: " << e.what() << '\n';
            return kExitRuntime;
        }
        std::cout << plot_out << '\n';
    }
    return 0;
}

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lcfl/scenario.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct RunRow {
    std::string path;
    std::string algorithm;
    std::string name;
    double accuracy = 0.0;
    double wall_time = 0.0;
    long long transfers = 0;
};

lcfl::ScenarioConfig resolve_config(const std::string& source) {
    if (lcfl::is_preset(source)) {
        return lcfl::preset(source);
    }
    return lcfl::load_scenario_file(source);
}

std::string default_out_dir(const lcfl::ScenarioConfig& cfg) {
    const char* root = std::getenv("LCFL_OUT_ROOT");
    fs::path base = root != nullptr && *root != '\0' ? fs::path(root) : fs::path("runs");
    return (base / (cfg.name + "-seed" + std::to_string(cfg.seed))).string();
}

int cmd_run(const std::string& source, long long seed_override, std::string out_dir) {
    lcfl::ScenarioConfig cfg;
    try {
        cfg = resolve_config(source);
        if (seed_override >= 0) {
            cfg.seed = static_cast<std::uint64_t>(seed_override);
        }
        cfg.validate();
    } catch (const lcfl::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    }

    if (out_dir.empty()) {
        out_dir = default_out_dir(cfg);
    }
    try {
        auto summary = lcfl::run_scenario(cfg, out_dir);
        std::printf("run %s (%s), seed %llu\n", summary.name.c_str(), summary.algorithm.c_str(),
                    static_cast<unsigned long long>(summary.seed));
        std::printf("  clients:            %d\n", summary.n_clients);
        std::printf("  model transfers:    %zu\n", summary.model_transfers);
        if (summary.algorithm == "lcfl") {
            std::printf("  selected examples:  %ld\n", summary.selected_examples);
            std::printf("  margin loss:        %.4f -> %.4f\n", summary.margin_loss_start,
                        summary.margin_loss_end);
        }
        std::printf("  mean accuracy:      %.4f -> %.4f\n", summary.mean_accuracy_pre,
                    summary.mean_accuracy_post);
        std::printf("  wall time:          %.2f s\n", summary.wall_time_s);
        std::printf("  artifacts:          %s\n", out_dir.c_str());
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << "\n";
        return kExitRuntime;
    }
}

bool load_row(const std::string& dir, RunRow& row, std::string& error) {
    const fs::path summary = fs::path(dir) / "summary.txt";
    if (!fs::exists(summary)) {
        error = dir + ": missing summary.txt";
        return false;
    }
    for (const char* artifact : {"metrics.csv", "ledger.csv", "records.jsonl"}) {
        if (!fs::exists(fs::path(dir) / artifact)) {
            error = dir + ": missing " + std::string(artifact);
            return false;
        }
    }
    row.path = dir;
    try {
        for (const auto& [key, value] : lcfl::read_summary_txt(summary.string())) {
            if (key == "algorithm") {
                row.algorithm = value;
            } else if (key == "name") {
                row.name = value;
            } else if (key == "mean_accuracy_post") {
                row.accuracy = std::stod(value);
            } else if (key == "wall_time_s") {
                row.wall_time = std::stod(value);
            } else if (key == "model_transfers") {
                row.transfers = std::stoll(value);
            }
        }
    } catch (const std::exception& e) {
        error = dir + ": unreadable summary (" + std::string(e.what()) + ")";
        return false;
    }
    return true;
}

int cmd_compare(const std::vector<std::string>& dirs, const std::string& format) {
    std::vector<RunRow> rows;
    bool missing = false;
    for (const auto& dir : dirs) {
        RunRow row;
        std::string error;
        if (load_row(dir, row, error)) {
            rows.push_back(row);
        } else {
            std::cerr << error << "\n";
            missing = true;
        }
    }
    if (missing) {
        return kExitRuntime;
    }
    if (rows.size() < 2) {
        std::cerr << "compare needs at least 2 completed runs\n";
        return kExitRuntime;
    }

    // Repeats of the same (algorithm, scenario) aggregate into one row.
    struct Group {
        std::vector<double> accuracies;
        std::vector<double> wall_times;
        long long transfers = 0;
        std::size_t runs = 0;
    };
    std::map<std::pair<std::string, std::string>, Group> groups;
    for (const auto& row : rows) {
        auto& g = groups[{row.algorithm, row.name}];
        g.accuracies.push_back(row.accuracy);
        g.wall_times.push_back(row.wall_time);
        g.transfers = row.transfers;
        g.runs++;
    }

    long long min_transfers = rows.front().transfers;
    for (const auto& [key, g] : groups) {
        min_transfers = std::min(min_transfers, g.transfers);
    }
    if (min_transfers < 1) {
        min_transfers = 1;
    }

    auto mean = [](const std::vector<double>& v) {
        double acc = 0.0;
        for (double x : v) {
            acc += x;
        }
        return acc / static_cast<double>(v.size());
    };
    auto sample_std = [&](const std::vector<double>& v) {
        if (v.size() < 2) {
            return 0.0;
        }
        const double m = mean(v);
        double acc = 0.0;
        for (double x : v) {
            acc += (x - m) * (x - m);
        }
        return std::sqrt(acc / static_cast<double>(v.size() - 1));
    };

    if (format == "csv") {
        std::printf(
            "method,scenario,runs,accuracy_mean,accuracy_std,wall_time_s,transmissions,"
            "transmission_ratio\n");
        for (const auto& [key, g] : groups) {
            std::printf("%s,%s,%zu,%.6f,%.6f,%.3f,%lld,%.2f\n", key.first.c_str(),
                        key.second.c_str(), g.runs, mean(g.accuracies), sample_std(g.accuracies),
                        mean(g.wall_times), g.transfers,
                        static_cast<double>(g.transfers) / static_cast<double>(min_transfers));
        }
    } else {
        std::printf("%-8s %-16s %4s %19s %11s %13s %7s\n", "method", "scenario", "runs",
                    "accuracy", "wall time", "transmissions", "ratio");
        for (const auto& [key, g] : groups) {
            char acc[64];
            std::snprintf(acc, sizeof(acc), "%.4f +- %.4f", mean(g.accuracies),
                          sample_std(g.accuracies));
            char wt[32];
            std::snprintf(wt, sizeof(wt), "%.2f s", mean(g.wall_times));
            std::printf("%-8s %-16s %4zu %19s %11s %13lld %6.1fx\n", key.first.c_str(),
                        key.second.c_str(), g.runs, acc, wt, g.transfers,
                        static_cast<double>(g.transfers) / static_cast<double>(min_transfers));
        }
    }
    return 0;
}

int cmd_presets_list() {
    for (const auto& name : lcfl::preset_names()) {
        std::printf("%-16s %s\n", name.c_str(), lcfl::preset_description(name).c_str());
    }
    std::printf("\nrun one with: lcfl run <preset> [--seed K] [--out DIR]\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LC-FL simulator: loosely coupled federated learning with "
                 "MPMC-margin sample selection, plus FedAvg/FedProx baselines"};
    app.require_subcommand(1);

    std::string run_source;
    long long run_seed = -1;
    std::string run_out;
    auto* run = app.add_subcommand("run", "execute a scenario config or preset");
    run->add_option("config", run_source, "config file path or preset name")->required();
    run->add_option("--seed", run_seed, "override the config seed");
    run->add_option("--out", run_out, "output directory (default: $LCFL_OUT_ROOT or ./runs)");

    std::vector<std::string> compare_dirs;
    std::string compare_format = "table";
    auto* compare = app.add_subcommand("compare", "merge completed runs into one table");
    compare->add_option("dirs", compare_dirs, "run output directories")->expected(-1)->required();
    compare->add_option("--format", compare_format, "table or csv")
        ->check(CLI::IsMember({"table", "csv"}));

    auto* presets = app.add_subcommand("presets", "built-in scenario presets");
    auto* presets_list = presets->add_subcommand("list", "list available presets");
    presets->require_subcommand(1);

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        return cmd_run(run_source, run_seed, run_out);
    }
    if (compare->parsed()) {
        return cmd_compare(compare_dirs, compare_format);
    }
    if (presets->parsed() && presets_list->parsed()) {
        return cmd_presets_list();
    }
    return 0;
}

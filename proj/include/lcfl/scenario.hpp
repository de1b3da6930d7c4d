#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lcfl/baselines.hpp"
#include "lcfl/dataset.hpp"
#include "lcfl/generator.hpp"
#include "lcfl/server.hpp"

namespace lcfl {

/// Configuration problems carry a human-readable location (file/line for
/// syntax, JSON path for semantics).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DatasetSpec {
    std::string type = "blobs";  // blobs | csv
    int n_per_class = 100;
    int classes = 5;
    int dim = 2;
    double spread = 0.5;
    std::string csv_path;
};

struct ModelSpec {
    std::string type = "mlp";  // logistic | mlp | stumps
    int hidden = 32;           // mlp only
    TrainConfig train;
};

struct GeneratorSpecCfg {
    std::string type = "gmm";  // gmm | kde
    int components_per_class = 1;
    double bandwidth = 0.1;
};

struct DpSpec {
    bool enabled = false;
    DpParams params;
};

/// Declarative description of one experiment: data, partition regime,
/// per-client model and generator types, and the algorithm's loop
/// hyperparameters.
struct ScenarioConfig {
    std::string name = "scenario";
    std::string algorithm = "lcfl";  // lcfl | fedavg | fedprox
    std::uint64_t seed = 1;
    DatasetSpec dataset;
    double test_fraction = 0.2;
    PartitionSpec partition;
    std::vector<ModelSpec> models;          // length 1 broadcasts to all clients
    std::vector<GeneratorSpecCfg> generators;
    DpSpec dp;
    bool relabel_artificial = false;
    LcflConfig lcfl;
    FedConfig fed;

    void validate() const;  // throws ConfigError
    std::vector<ModelSpec> expanded_models() const;
    std::vector<GeneratorSpecCfg> expanded_generators() const;
};

/// Parse + validate a JSON config. `origin` names the source in diagnostics.
ScenarioConfig parse_scenario_text(const std::string& text, const std::string& origin);
ScenarioConfig load_scenario_file(const std::string& path);

std::vector<std::string> preset_names();
bool is_preset(const std::string& name);
ScenarioConfig preset(const std::string& name);
/// One-line description shown by `presets list`.
std::string preset_description(const std::string& name);

std::unique_ptr<ConfidenceModel> make_model(const ModelSpec& spec, int dim, int classes,
                                            std::uint64_t init_seed);

struct RunSummary {
    std::string name;
    std::string algorithm;
    std::uint64_t seed = 0;
    int n_clients = 0;
    std::size_t model_transfers = 0;   // ledger count
    long selected_examples = 0;        // LC-FL transmissions T
    std::vector<double> client_accuracy_pre;
    std::vector<double> client_accuracy_post;
    double mean_accuracy_pre = 0.0;
    double mean_accuracy_post = 0.0;
    double margin_loss_start = 0.0;  // LC-FL only
    double margin_loss_end = 0.0;
    double wall_time_s = 0.0;
};

/// Full in-memory result of one run; the file writers serialize this.
struct RunOutcome {
    RunSummary summary;
    std::vector<TracePoint> trace;
    std::vector<SelectionRecord> records;
    TransmissionLedger ledger;
};

/// Execute the configured algorithm end to end (no files written).
RunOutcome run_config(const ScenarioConfig& cfg);

/// Execute and write metrics.csv, ledger.csv, records.jsonl and summary.txt
/// into out_dir (created if missing).
RunSummary run_scenario(const ScenarioConfig& cfg, const std::string& out_dir);

/// Artifact writers, exposed for tests.
void write_metrics_csv(const std::string& path, const std::vector<TracePoint>& trace,
                       const std::vector<int>& client_ids);
void write_ledger_csv(const std::string& path, const TransmissionLedger& ledger);
void write_records_jsonl(const std::string& path, const std::vector<SelectionRecord>& records);
void write_summary_txt(const std::string& path, const RunSummary& summary);

/// Parse a summary.txt back into key/value pairs (used by `compare`).
std::vector<std::pair<std::string, std::string>> read_summary_txt(const std::string& path);

}  // namespace lcfl

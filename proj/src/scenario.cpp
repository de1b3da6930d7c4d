#include "lcfl/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lcfl/logistic.hpp"
#include "lcfl/mlp.hpp"
#include "lcfl/rng.hpp"
#include "lcfl/stumps.hpp"

namespace lcfl {

using json = nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw ConfigError("config error at " + path + ": " + msg);
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* key : allowed) {
            if (item.key() == key) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            fail(path, "unknown key '" + item.key() + "'");
        }
    }
}

double get_num(const json& j, const std::string& path, const char* key, double def) {
    if (!j.contains(key)) {
        return def;
    }
    if (!j.at(key).is_number()) {
        fail(path + "." + key, "expected a number");
    }
    return j.at(key).get<double>();
}

long long get_int(const json& j, const std::string& path, const char* key, long long def) {
    if (!j.contains(key)) {
        return def;
    }
    if (!j.at(key).is_number_integer()) {
        fail(path + "." + key, "expected an integer");
    }
    return j.at(key).get<long long>();
}

bool get_bool(const json& j, const std::string& path, const char* key, bool def) {
    if (!j.contains(key)) {
        return def;
    }
    if (!j.at(key).is_boolean()) {
        fail(path + "." + key, "expected a boolean");
    }
    return j.at(key).get<bool>();
}

std::string get_str(const json& j, const std::string& path, const char* key, std::string def) {
    if (!j.contains(key)) {
        return def;
    }
    if (!j.at(key).is_string()) {
        fail(path + "." + key, "expected a string");
    }
    return j.at(key).get<std::string>();
}

// Key whitelisting happens in the callers, which know the enclosing object.
TrainConfig parse_train(const json& j, const std::string& path, const TrainConfig& defaults) {
    TrainConfig t = defaults;
    t.epochs = static_cast<int>(get_int(j, path, "epochs", defaults.epochs));
    t.learning_rate = get_num(j, path, "learning_rate", defaults.learning_rate);
    t.batch_size = static_cast<int>(get_int(j, path, "batch_size", defaults.batch_size));
    t.l2 = get_num(j, path, "l2", defaults.l2);
    return t;
}

ModelSpec parse_model(const json& j, const std::string& path) {
    check_keys(j, path,
               {"type", "hidden", "epochs", "learning_rate", "batch_size", "l2"});
    ModelSpec spec;
    spec.type = get_str(j, path, "type", "mlp");
    spec.hidden = static_cast<int>(get_int(j, path, "hidden", 32));
    spec.train = parse_train(j, path, spec.train);
    return spec;
}

GeneratorSpecCfg parse_generator(const json& j, const std::string& path) {
    check_keys(j, path, {"type", "components_per_class", "bandwidth"});
    GeneratorSpecCfg spec;
    spec.type = get_str(j, path, "type", "gmm");
    spec.components_per_class = static_cast<int>(get_int(j, path, "components_per_class", 1));
    spec.bandwidth = get_num(j, path, "bandwidth", 0.1);
    return spec;
}

std::pair<std::size_t, std::size_t> line_of_offset(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            line++;
            col = 1;
        } else {
            col++;
        }
    }
    return {line, col};
}

}  // namespace

std::vector<ModelSpec> ScenarioConfig::expanded_models() const {
    if (models.empty()) {
        return std::vector<ModelSpec>(static_cast<std::size_t>(partition.n_clients), ModelSpec{});
    }
    if (models.size() == 1) {
        return std::vector<ModelSpec>(static_cast<std::size_t>(partition.n_clients), models[0]);
    }
    return models;
}

std::vector<GeneratorSpecCfg> ScenarioConfig::expanded_generators() const {
    if (generators.empty()) {
        return std::vector<GeneratorSpecCfg>(static_cast<std::size_t>(partition.n_clients),
                                             GeneratorSpecCfg{});
    }
    if (generators.size() == 1) {
        return std::vector<GeneratorSpecCfg>(static_cast<std::size_t>(partition.n_clients),
                                             generators[0]);
    }
    return generators;
}

void ScenarioConfig::validate() const {
    if (name.empty()) {
        fail("name", "must not be empty");
    }
    if (algorithm != "lcfl" && algorithm != "fedavg" && algorithm != "fedprox") {
        fail("algorithm", "must be one of lcfl, fedavg, fedprox");
    }
    if (dataset.type == "blobs") {
        if (dataset.n_per_class < 1 || dataset.classes < 2 || dataset.dim < 1 ||
            dataset.spread <= 0.0) {
            fail("dataset", "blobs need n_per_class >= 1, classes >= 2, dim >= 1, spread > 0");
        }
    } else if (dataset.type == "csv") {
        if (dataset.csv_path.empty()) {
            fail("dataset.path", "required for csv datasets");
        }
    } else {
        fail("dataset.type", "must be blobs or csv");
    }
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        fail("test_fraction", "must lie in (0, 1)");
    }
    if (partition.n_clients < 1) {
        fail("partition.n_clients", "must be >= 1");
    }
    if (partition.min_classes < 1 || partition.max_classes < partition.min_classes) {
        fail("partition.classes_per_client", "range [lo, hi] with 1 <= lo <= hi required");
    }
    if (partition.balance == Balance::equal && partition.unequal_skew != 1.0) {
        fail("partition.unequal_skew", "equal balance forces skew 1");
    }

    const auto n = static_cast<std::size_t>(partition.n_clients);
    if (!models.empty() && models.size() != 1 && models.size() != n) {
        fail("models", "need 1 entry or exactly n_clients=" + std::to_string(n) + " entries, got " +
                           std::to_string(models.size()));
    }
    if (!generators.empty() && generators.size() != 1 && generators.size() != n) {
        fail("generators", "need 1 entry or exactly n_clients entries, got " +
                               std::to_string(generators.size()));
    }
    for (std::size_t i = 0; i < models.size(); ++i) {
        const auto& m = models[i];
        const std::string path = "models[" + std::to_string(i) + "]";
        if (m.type != "logistic" && m.type != "mlp" && m.type != "stumps") {
            fail(path + ".type", "must be logistic, mlp or stumps");
        }
        if (m.type == "mlp" && m.hidden < 1) {
            fail(path + ".hidden", "must be >= 1");
        }
        if (m.train.epochs < 0 || m.train.learning_rate <= 0.0 || m.train.batch_size < 1 ||
            m.train.l2 < 0.0) {
            fail(path, "invalid training hyperparameters");
        }
    }
    for (std::size_t i = 0; i < generators.size(); ++i) {
        const auto& g = generators[i];
        const std::string path = "generators[" + std::to_string(i) + "]";
        if (g.type != "gmm" && g.type != "kde") {
            fail(path + ".type", "must be gmm or kde");
        }
        if (g.type == "gmm" && g.components_per_class < 1) {
            fail(path + ".components_per_class", "must be >= 1");
        }
        if (g.type == "kde" && !(g.bandwidth > 0.0)) {
            fail(path + ".bandwidth", "must be > 0");
        }
    }
    if (dp.enabled) {
        try {
            dp.params.validate();
        } catch (const std::exception& e) {
            fail("dp", e.what());
        }
    }

    if (algorithm == "lcfl") {
        try {
            lcfl.validate();
        } catch (const std::exception& e) {
            fail("lcfl", e.what());
        }
    } else {
        try {
            fed.validate();
        } catch (const std::exception& e) {
            fail("fed", e.what());
        }
        // Aggregation requires one parametric architecture across clients.
        auto specs = expanded_models();
        for (const auto& m : specs) {
            if (m.type == "stumps") {
                fail("models", "fedavg/fedprox require parametric models (logistic or mlp)");
            }
            if (m.type != specs[0].type ||
                (m.type == "mlp" && m.hidden != specs[0].hidden)) {
                fail("models", "fedavg/fedprox require an identical architecture on every client");
            }
        }
    }
}

ScenarioConfig parse_scenario_text(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        auto [line, col] = line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0);
        throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) +
                          ": JSON syntax error: " + e.what());
    }
    if (!j.is_object()) {
        throw ConfigError(origin + ": top-level JSON object required");
    }

    check_keys(j, "(top level)",
               {"name", "algorithm", "seed", "dataset", "test_fraction", "partition", "models",
                "generators", "dp", "relabel_artificial", "lcfl", "fed"});

    ScenarioConfig cfg;
    cfg.name = get_str(j, "(top level)", "name", "scenario");
    cfg.algorithm = get_str(j, "(top level)", "algorithm", "lcfl");
    cfg.seed = static_cast<std::uint64_t>(get_int(j, "(top level)", "seed", 1));
    cfg.test_fraction = get_num(j, "(top level)", "test_fraction", 0.2);
    cfg.relabel_artificial = get_bool(j, "(top level)", "relabel_artificial", false);

    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        check_keys(d, "dataset", {"type", "n_per_class", "classes", "dim", "spread", "path"});
        cfg.dataset.type = get_str(d, "dataset", "type", "blobs");
        cfg.dataset.n_per_class = static_cast<int>(get_int(d, "dataset", "n_per_class", 100));
        cfg.dataset.classes = static_cast<int>(get_int(d, "dataset", "classes", 5));
        cfg.dataset.dim = static_cast<int>(get_int(d, "dataset", "dim", 2));
        cfg.dataset.spread = get_num(d, "dataset", "spread", 0.5);
        cfg.dataset.csv_path = get_str(d, "dataset", "path", "");
    }

    if (j.contains("partition")) {
        const auto& p = j.at("partition");
        check_keys(p, "partition", {"n_clients", "classes_per_client", "balance", "unequal_skew"});
        cfg.partition.n_clients = static_cast<int>(get_int(p, "partition", "n_clients", 1));
        if (p.contains("classes_per_client")) {
            const auto& r = p.at("classes_per_client");
            if (!r.is_array() || r.size() != 2 || !r[0].is_number_integer() ||
                !r[1].is_number_integer()) {
                fail("partition.classes_per_client", "expected [lo, hi] integers");
            }
            cfg.partition.min_classes = r[0].get<int>();
            cfg.partition.max_classes = r[1].get<int>();
        } else {
            cfg.partition.min_classes = cfg.dataset.classes;
            cfg.partition.max_classes = cfg.dataset.classes;
        }
        std::string balance = get_str(p, "partition", "balance", "equal");
        if (balance == "equal") {
            cfg.partition.balance = Balance::equal;
        } else if (balance == "unequal") {
            cfg.partition.balance = Balance::unequal;
        } else {
            fail("partition.balance", "must be equal or unequal");
        }
        cfg.partition.unequal_skew = get_num(p, "partition", "unequal_skew",
                                             cfg.partition.balance == Balance::equal ? 1.0 : 4.0);
    }

    if (j.contains("models")) {
        const auto& ms = j.at("models");
        if (ms.is_object()) {
            cfg.models.push_back(parse_model(ms, "models"));
        } else if (ms.is_array()) {
            for (std::size_t i = 0; i < ms.size(); ++i) {
                cfg.models.push_back(parse_model(ms[i], "models[" + std::to_string(i) + "]"));
            }
        } else {
            fail("models", "expected an object or an array");
        }
    }
    if (j.contains("generators")) {
        const auto& gs = j.at("generators");
        if (gs.is_object()) {
            cfg.generators.push_back(parse_generator(gs, "generators"));
        } else if (gs.is_array()) {
            for (std::size_t i = 0; i < gs.size(); ++i) {
                cfg.generators.push_back(
                    parse_generator(gs[i], "generators[" + std::to_string(i) + "]"));
            }
        } else {
            fail("generators", "expected an object or an array");
        }
    }

    if (j.contains("dp")) {
        const auto& d = j.at("dp");
        check_keys(d, "dp", {"enabled", "epsilon", "delta", "sensitivity", "sigma"});
        cfg.dp.enabled = get_bool(d, "dp", "enabled", false);
        cfg.dp.params.epsilon = get_num(d, "dp", "epsilon", 1.0);
        cfg.dp.params.delta = get_num(d, "dp", "delta", 1e-5);
        cfg.dp.params.sensitivity = get_num(d, "dp", "sensitivity", 1.0);
        cfg.dp.params.sigma = get_num(d, "dp", "sigma", 1.0);
    }

    if (j.contains("lcfl")) {
        const auto& l = j.at("lcfl");
        check_keys(l, "lcfl",
                   {"iterations", "update_threshold", "update_epochs", "artificial_per_client",
                    "finetune_epochs", "finetune_replay_fraction", "safety_cap", "trace_every"});
        cfg.lcfl.iterations = get_int(l, "lcfl", "iterations", 200);
        cfg.lcfl.update_threshold = static_cast<int>(get_int(l, "lcfl", "update_threshold", 16));
        cfg.lcfl.update_epochs = static_cast<int>(get_int(l, "lcfl", "update_epochs", 5));
        cfg.lcfl.artificial_per_client = get_int(l, "lcfl", "artificial_per_client", 0);
        cfg.lcfl.finetune_epochs = static_cast<int>(get_int(l, "lcfl", "finetune_epochs", 2));
        cfg.lcfl.finetune_replay_fraction = get_num(l, "lcfl", "finetune_replay_fraction", 0.25);
        cfg.lcfl.safety_cap = get_int(l, "lcfl", "safety_cap", 0);
        cfg.lcfl.trace_every = get_int(l, "lcfl", "trace_every", 10);
    }
    if (j.contains("fed")) {
        const auto& f = j.at("fed");
        check_keys(f, "fed",
                   {"rounds", "participation", "local_epochs", "learning_rate", "batch_size", "l2",
                    "mu"});
        cfg.fed.rounds = static_cast<int>(get_int(f, "fed", "rounds", 10));
        cfg.fed.participation = get_num(f, "fed", "participation", 0.3);
        cfg.fed.local_epochs = static_cast<int>(get_int(f, "fed", "local_epochs", 1));
        cfg.fed.learning_rate = get_num(f, "fed", "learning_rate", 0.05);
        cfg.fed.batch_size = static_cast<int>(get_int(f, "fed", "batch_size", 32));
        cfg.fed.l2 = get_num(f, "fed", "l2", 0.0);
        cfg.fed.mu = get_num(f, "fed", "mu", 0.0);
    }

    cfg.validate();
    return cfg;
}

ScenarioConfig load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario_text(buf.str(), path);
}

std::unique_ptr<ConfidenceModel> make_model(const ModelSpec& spec, int dim, int classes,
                                            std::uint64_t init_seed) {
    if (spec.type == "logistic") {
        return std::make_unique<LogisticRegression>(dim, classes);
    }
    if (spec.type == "mlp") {
        return std::make_unique<Mlp>(dim, classes, spec.hidden, init_seed);
    }
    if (spec.type == "stumps") {
        return std::make_unique<StumpEnsemble>(dim, classes);
    }
    throw ConfigError("unknown model type " + spec.type);
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

namespace {

ScenarioConfig hom_base() {
    ScenarioConfig cfg;
    cfg.algorithm = "lcfl";
    cfg.seed = 1;
    cfg.dataset = {"blobs", 120, 10, 2, 0.5, ""};
    cfg.test_fraction = 0.2;
    cfg.partition.n_clients = 7;
    cfg.partition.min_classes = 10;
    cfg.partition.max_classes = 10;
    cfg.partition.balance = Balance::equal;
    cfg.partition.unequal_skew = 1.0;
    ModelSpec mlp;
    mlp.type = "mlp";
    mlp.hidden = 32;
    mlp.train.epochs = 30;
    mlp.train.learning_rate = 0.1;
    mlp.train.batch_size = 32;
    mlp.train.l2 = 1e-4;
    cfg.models = {mlp};
    cfg.generators = {GeneratorSpecCfg{"gmm", 1, 0.1}};
    cfg.lcfl.iterations = 350;
    cfg.lcfl.update_threshold = 16;
    cfg.lcfl.update_epochs = 5;
    cfg.lcfl.finetune_epochs = 3;
    cfg.lcfl.finetune_replay_fraction = 0.5;
    return cfg;
}

void set_range(ScenarioConfig& cfg, int lo, int hi, Balance balance, double skew) {
    cfg.partition.min_classes = lo;
    cfg.partition.max_classes = hi;
    cfg.partition.balance = balance;
    cfg.partition.unequal_skew = skew;
}

std::vector<ModelSpec> het_model_mix(int n_clients) {
    ModelSpec mlp;
    mlp.type = "mlp";
    mlp.hidden = 32;
    mlp.train = {30, 0.1, 32, 1e-4, 0};
    ModelSpec logistic;
    logistic.type = "logistic";
    logistic.train = {60, 0.2, 32, 1e-4, 0};
    ModelSpec stumps;
    stumps.type = "stumps";
    stumps.train = {50, 0.1, 32, 0.0, 0};  // epochs = boosting rounds
    std::vector<ModelSpec> mix;
    const ModelSpec kinds[3] = {mlp, logistic, stumps};
    for (int i = 0; i < n_clients; ++i) {
        mix.push_back(kinds[i % 3]);
    }
    return mix;
}

ScenarioConfig make_preset(const std::string& name) {
    if (name == "hom-A") {
        auto cfg = hom_base();
        cfg.name = name;
        return cfg;
    }
    if (name == "hom-B") {
        auto cfg = hom_base();
        cfg.name = name;
        set_range(cfg, 10, 10, Balance::unequal, 4.0);
        return cfg;
    }
    if (name == "hom-C") {
        auto cfg = hom_base();
        cfg.name = name;
        set_range(cfg, 8, 9, Balance::unequal, 4.0);
        return cfg;
    }
    if (name == "hom-D") {
        auto cfg = hom_base();
        cfg.name = name;
        set_range(cfg, 2, 4, Balance::unequal, 4.0);
        cfg.lcfl.iterations = 500;
        return cfg;
    }
    if (name == "het-A" || name == "het-B") {
        auto cfg = hom_base();
        cfg.name = name;
        cfg.partition.n_clients = 8;
        if (name == "het-B") {
            set_range(cfg, 3, 4, Balance::unequal, 4.0);
            cfg.lcfl.iterations = 500;
        }
        cfg.models = het_model_mix(8);
        return cfg;
    }
    if (name == "hom-A-fedavg" || name == "hom-D-fedavg" || name == "hom-A-fedprox") {
        auto cfg = hom_base();
        cfg.name = name;
        cfg.algorithm = name.ends_with("fedprox") ? "fedprox" : "fedavg";
        if (name.starts_with("hom-D")) {
            set_range(cfg, 2, 4, Balance::unequal, 4.0);
        }
        cfg.generators.clear();
        cfg.fed.rounds = 450;
        cfg.fed.participation = 0.3;
        cfg.fed.local_epochs = 1;
        cfg.fed.learning_rate = 0.1;
        cfg.fed.batch_size = 32;
        cfg.fed.mu = cfg.algorithm == "fedprox" ? 0.1 : 0.0;
        return cfg;
    }
    if (name == "smoke") {
        ScenarioConfig cfg;
        cfg.name = name;
        cfg.seed = 1;
        cfg.dataset = {"blobs", 40, 4, 2, 0.5, ""};
        cfg.partition.n_clients = 3;
        set_range(cfg, 2, 4, Balance::unequal, 4.0);
        ModelSpec logistic;
        logistic.type = "logistic";
        logistic.train = {15, 0.2, 16, 0.0, 0};
        cfg.models = {logistic};
        cfg.generators = {GeneratorSpecCfg{"gmm", 1, 0.1}};
        cfg.lcfl.iterations = 40;
        cfg.lcfl.update_threshold = 8;
        cfg.lcfl.update_epochs = 3;
        cfg.lcfl.finetune_epochs = 2;
        return cfg;
    }
    throw ConfigError("unknown preset '" + name + "'");
}

const std::vector<std::pair<std::string, std::string>>& preset_table() {
    static const std::vector<std::pair<std::string, std::string>> table = {
        {"hom-A", "7 homogeneous MLP clients, 10 classes each, equal data"},
        {"hom-B", "7 homogeneous MLP clients, 10 classes each, unequal data"},
        {"hom-C", "7 homogeneous MLP clients, 8-9 classes each, unequal data"},
        {"hom-D", "7 homogeneous MLP clients, 2-4 classes each, unequal data"},
        {"het-A", "8 clients mixing mlp/logistic/stumps, 10 classes each, equal data"},
        {"het-B", "8 clients mixing mlp/logistic/stumps, 3-4 classes each, unequal data"},
        {"hom-A-fedavg", "FedAvg baseline on the hom-A data layout (450 rounds, ratio 0.3)"},
        {"hom-A-fedprox", "FedProx baseline on the hom-A data layout (mu 0.1)"},
        {"hom-D-fedavg", "FedAvg baseline on the hom-D data layout"},
        {"smoke", "3 tiny logistic clients, finishes in seconds"},
    };
    return table;
}

}  // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& [name, desc] : preset_table()) {
        names.push_back(name);
    }
    return names;
}

bool is_preset(const std::string& name) {
    for (const auto& [preset_name, desc] : preset_table()) {
        if (preset_name == name) {
            return true;
        }
    }
    return false;
}

ScenarioConfig preset(const std::string& name) {
    auto cfg = make_preset(name);
    cfg.validate();
    return cfg;
}

std::string preset_description(const std::string& name) {
    for (const auto& [preset_name, desc] : preset_table()) {
        if (preset_name == name) {
            return desc;
        }
    }
    throw ConfigError("unknown preset '" + name + "'");
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

namespace {

Dataset build_dataset(const ScenarioConfig& cfg) {
    if (cfg.dataset.type == "blobs") {
        return make_blobs(cfg.dataset.n_per_class, cfg.dataset.classes, cfg.dataset.dim,
                          cfg.dataset.spread, derive_seed(cfg.seed, "dataset"));
    }
    return load_csv(cfg.dataset.csv_path);
}

double mean_of(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) {
        acc += x;
    }
    return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

RunOutcome run_lcfl_config(const ScenarioConfig& cfg) {
    RunOutcome out;
    Dataset full = build_dataset(cfg);
    auto [train, test] = train_test_split(full, cfg.test_fraction, derive_seed(cfg.seed, "split"));
    auto shards = partition(train, cfg.partition, derive_seed(cfg.seed, "partition"));
    const auto model_specs = cfg.expanded_models();
    const auto gen_specs = cfg.expanded_generators();
    const auto n = static_cast<std::size_t>(cfg.partition.n_clients);

    std::vector<ClientSetup> clients;
    clients.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        ClientSetup c;
        c.client_id = static_cast<int>(i);
        c.shard = shards[i];
        c.model = make_model(model_specs[i], train.dim, train.num_classes,
                             derive_seed(cfg.seed, "model-init", i));
        c.train_cfg = model_specs[i].train;
        c.train_cfg.seed = derive_seed(cfg.seed, "pretrain", i);
        if (gen_specs[i].type == "kde") {
            c.generator_kind = ClientSetup::GeneratorKind::kde;
            c.kde_bandwidth = gen_specs[i].bandwidth;
        } else {
            c.generator_kind = ClientSetup::GeneratorKind::gmm;
            c.gmm_components = gen_specs[i].components_per_class;
        }
        if (cfg.dp.enabled) {
            c.dp = cfg.dp.params;
        }
        clients.push_back(std::move(c));
    }

    auto party = pretrain_and_upload(clients, out.ledger);

    out.summary.client_accuracy_pre.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.summary.client_accuracy_pre.push_back(evaluate(*party.models[i], test));
    }

    LcflConfig lc = cfg.lcfl;
    lc.seed = derive_seed(cfg.seed, "lcfl");
    auto artificial = materialize_artificial(party, lc);
    auto model_set = party.model_set();
    if (cfg.relabel_artificial) {
        for (auto& d : artificial) {
            relabel_by_ensemble(d, model_set, party.shard_sizes);
        }
    }

    auto loop = selection_loop(model_set, artificial, party.shard_sizes, party.update_cfgs, lc,
                               &test);

    finetune_and_download(party.models, party.client_ids, shards, loop.retained,
                          party.update_cfgs, lc, out.ledger);

    out.summary.client_accuracy_post.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.summary.client_accuracy_post.push_back(evaluate(*party.models[i], test));
    }

    out.summary.selected_examples = loop.transmissions;
    out.summary.margin_loss_start = loop.margin_loss_start;
    out.summary.margin_loss_end = loop.margin_loss_end;
    out.trace = std::move(loop.trace);
    out.records = std::move(loop.records);
    return out;
}

RunOutcome run_fed_config(const ScenarioConfig& cfg) {
    RunOutcome out;
    Dataset full = build_dataset(cfg);
    auto [train, test] = train_test_split(full, cfg.test_fraction, derive_seed(cfg.seed, "split"));
    auto shards = partition(train, cfg.partition, derive_seed(cfg.seed, "partition"));
    const auto n = static_cast<std::size_t>(cfg.partition.n_clients);

    auto spec = cfg.expanded_models().front();
    auto global_any = make_model(spec, train.dim, train.num_classes,
                                 derive_seed(cfg.seed, "global-init"));
    auto* global = dynamic_cast<ParametricModel*>(global_any.get());
    if (global == nullptr) {
        throw ConfigError("fedavg/fedprox require a parametric model");
    }

    const double pre = evaluate(*global, test);
    out.summary.client_accuracy_pre.assign(n, pre);

    FedConfig fc = cfg.fed;
    fc.seed = derive_seed(cfg.seed, "fed");
    auto fed = run_fed(*global, shards, fc, cfg.algorithm == "fedprox", out.ledger, &test);

    const double post = evaluate(*global, test);
    out.summary.client_accuracy_post.assign(n, post);
    out.trace = std::move(fed.trace);
    return out;
}

}  // namespace

RunOutcome run_config(const ScenarioConfig& cfg) {
    cfg.validate();
    const auto started = std::chrono::steady_clock::now();
    RunOutcome out = cfg.algorithm == "lcfl" ? run_lcfl_config(cfg) : run_fed_config(cfg);
    out.summary.name = cfg.name;
    out.summary.algorithm = cfg.algorithm;
    out.summary.seed = cfg.seed;
    out.summary.n_clients = cfg.partition.n_clients;
    out.summary.model_transfers = out.ledger.model_transfers();
    out.summary.mean_accuracy_pre = mean_of(out.summary.client_accuracy_pre);
    out.summary.mean_accuracy_post = mean_of(out.summary.client_accuracy_post);
    out.summary.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return out;
}

// ---------------------------------------------------------------------------
// Artifacts
// ---------------------------------------------------------------------------

namespace {

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    out << content;
}

}  // namespace

void write_metrics_csv(const std::string& path, const std::vector<TracePoint>& trace,
                       const std::vector<int>& client_ids) {
    std::string body = "step,transmissions,client_id,test_accuracy,margin_loss\n";
    for (const auto& point : trace) {
        for (std::size_t i = 0; i < point.client_accuracy.size(); ++i) {
            body += std::to_string(point.step);
            body += ',';
            body += std::to_string(point.transmissions);
            body += ',';
            body += std::to_string(i < client_ids.size() ? client_ids[i] : static_cast<int>(i));
            body += ',';
            body += fmt6(point.client_accuracy[i]);
            body += ',';
            body += fmt6(point.pool_margin_loss);
            body += '\n';
        }
    }
    write_text_file(path, body);
}

void write_ledger_csv(const std::string& path, const TransmissionLedger& ledger) {
    std::string body = "index,direction,kind,client_id,bytes\n";
    std::size_t idx = 0;
    for (const auto& e : ledger.events()) {
        body += std::to_string(idx++);
        body += ',';
        body += e.direction == TransferDirection::upload ? "upload" : "download";
        body += ',';
        body += e.kind == TransferKind::model ? "model" : "generator";
        body += ',';
        body += std::to_string(e.client_id);
        body += ',';
        body += std::to_string(e.bytes);
        body += '\n';
    }
    write_text_file(path, body);
}

void write_records_jsonl(const std::string& path, const std::vector<SelectionRecord>& records) {
    std::string body;
    for (const auto& r : records) {
        nlohmann::ordered_json j;
        j["iteration"] = r.iteration;
        j["origin"] = r.origin_client;
        j["y"] = r.y;
        j["y_minus"] = r.y_minus;
        j["i_plus"] = r.i_plus;
        j["i_minus"] = r.i_minus;
        j["rho"] = r.rho;
        body += j.dump();
        body += '\n';
    }
    write_text_file(path, body);
}

void write_summary_txt(const std::string& path, const RunSummary& s) {
    std::string body;
    auto add = [&body](const std::string& key, const std::string& value) {
        body += key;
        body += ": ";
        body += value;
        body += '\n';
    };
    auto join6 = [](const std::vector<double>& v) {
        std::string out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i > 0) {
                out += ',';
            }
            out += fmt6(v[i]);
        }
        return out;
    };
    add("name", s.name);
    add("algorithm", s.algorithm);
    add("seed", std::to_string(s.seed));
    add("clients", std::to_string(s.n_clients));
    add("model_transfers", std::to_string(s.model_transfers));
    add("selected_examples", std::to_string(s.selected_examples));
    add("mean_accuracy_pre", fmt6(s.mean_accuracy_pre));
    add("mean_accuracy_post", fmt6(s.mean_accuracy_post));
    add("client_accuracy_pre", join6(s.client_accuracy_pre));
    add("client_accuracy_post", join6(s.client_accuracy_post));
    if (s.algorithm == "lcfl") {
        add("margin_loss_start", fmt6(s.margin_loss_start));
        add("margin_loss_end", fmt6(s.margin_loss_end));
    }
    {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.3f", s.wall_time_s);
        add("wall_time_s", buf);
    }
    write_text_file(path, body);
}

std::vector<std::pair<std::string, std::string>> read_summary_txt(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    std::vector<std::pair<std::string, std::string>> pairs;
    std::string line;
    while (std::getline(in, line)) {
        auto colon = line.find(": ");
        if (colon == std::string::npos) {
            continue;
        }
        pairs.emplace_back(line.substr(0, colon), line.substr(colon + 2));
    }
    return pairs;
}

RunSummary run_scenario(const ScenarioConfig& cfg, const std::string& out_dir) {
    auto outcome = run_config(cfg);
    std::filesystem::create_directories(out_dir);
    std::vector<int> client_ids(static_cast<std::size_t>(cfg.partition.n_clients));
    std::iota(client_ids.begin(), client_ids.end(), 0);
    const std::filesystem::path dir(out_dir);
    write_metrics_csv((dir / "metrics.csv").string(), outcome.trace, client_ids);
    write_ledger_csv((dir / "ledger.csv").string(), outcome.ledger);
    write_records_jsonl((dir / "records.jsonl").string(), outcome.records);
    write_summary_txt((dir / "summary.txt").string(), outcome.summary);
    return outcome.summary;
}

}  // namespace lcfl

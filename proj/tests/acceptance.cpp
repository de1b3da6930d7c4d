// Acceptance suite: one pass/fail line per criterion, non-zero exit on any
// failure. Each criterion pins its tolerances in code; scenario
// hyperparameters live in the builders below.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "lcfl/baselines.hpp"
#include "lcfl/logistic.hpp"
#include "lcfl/margin.hpp"
#include "lcfl/mlp.hpp"
#include "lcfl/rng.hpp"
#include "lcfl/scenario.hpp"
#include "lcfl/server.hpp"
#include "support/fixed_model.hpp"

using namespace lcfl;
using lcfl::testing::FixedModel;
using lcfl::testing::random_simplex;
namespace fs = std::filesystem;

namespace {

double now_s() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

double mean_of(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) {
        acc += x;
    }
    return acc / static_cast<double>(v.size());
}

// ---- scenario builders -----------------------------------------------------

ModelSpec mlp_spec() {
    ModelSpec spec;
    spec.type = "mlp";
    spec.hidden = 32;
    spec.train = {30, 0.1, 32, 1e-4, 0};
    return spec;
}

LcflConfig loop_defaults() {
    LcflConfig lc;
    lc.iterations = 400;
    lc.update_threshold = 16;
    lc.update_epochs = 5;
    lc.artificial_per_client = 500;
    lc.finetune_epochs = 3;
    lc.finetune_replay_fraction = 0.5;
    return lc;
}

// 6 clients on 5-class 2-D blobs (200/class), 2 classes per client, GMM
// generators, MLP models.
ScenarioConfig noniid_scenario(std::uint64_t seed) {
    ScenarioConfig cfg;
    cfg.name = "noniid-6c";
    cfg.seed = seed;
    cfg.dataset = {"blobs", 200, 5, 2, 0.5, ""};
    cfg.partition = {6, 2, 2, Balance::equal, 1.0};
    cfg.models = {mlp_spec()};
    cfg.generators = {GeneratorSpecCfg{"gmm", 1, 0.1}};
    cfg.lcfl = loop_defaults();
    return cfg;
}

// 6 clients mixing logistic regression, MLP and stumps.
ScenarioConfig heterogeneous_scenario(std::uint64_t seed) {
    ScenarioConfig cfg;
    cfg.name = "het-6c";
    cfg.seed = seed;
    cfg.dataset = {"blobs", 200, 5, 2, 0.5, ""};
    cfg.partition = {6, 2, 3, Balance::equal, 1.0};
    ModelSpec logistic;
    logistic.type = "logistic";
    logistic.train = {60, 0.2, 32, 0.0, 0};
    ModelSpec stumps;
    stumps.type = "stumps";
    stumps.train = {50, 0.1, 32, 0.0, 0};
    cfg.models = {logistic, mlp_spec(), stumps, logistic, mlp_spec(), stumps};
    cfg.generators = {GeneratorSpecCfg{"gmm", 1, 0.1}};
    cfg.lcfl = loop_defaults();
    return cfg;
}

struct NonIidResult {
    double pre = 0.0;
    double post = 0.0;
    double centralized = 0.0;
    double margin_start = 0.0;
    double margin_end = 0.0;
    double seconds = 0.0;
};

NonIidResult run_noniid_seed(std::uint64_t seed) {
    const double t0 = now_s();
    auto cfg = noniid_scenario(seed);
    auto outcome = run_config(cfg);

    // Centralized oracle: the same MLP architecture trained on the pooled
    // training split (identical split derivation as run_config).
    auto full = make_blobs(cfg.dataset.n_per_class, cfg.dataset.classes, cfg.dataset.dim,
                           cfg.dataset.spread, derive_seed(seed, "dataset"));
    auto [train, test] = train_test_split(full, cfg.test_fraction, derive_seed(seed, "split"));
    auto central = make_model(mlp_spec(), 2, 5, derive_seed(seed, "central"));
    TrainConfig tcfg = mlp_spec().train;
    tcfg.seed = derive_seed(seed, "central-train");
    central->fit(train, tcfg);

    NonIidResult r;
    r.pre = outcome.summary.mean_accuracy_pre;
    r.post = outcome.summary.mean_accuracy_post;
    r.centralized = evaluate(*central, test);
    r.margin_start = outcome.summary.margin_loss_start;
    r.margin_end = outcome.summary.margin_loss_end;
    r.seconds = now_s() - t0;
    return r;
}

// One LC-FL pass on the non-iid scenario with the artificial pools taken
// either from the generators or from held-out real data.
double run_parity_arm(std::uint64_t seed, bool use_holdout) {
    auto full = make_blobs(400, 5, 2, 0.5, derive_seed(seed, "parity-data"));
    Dataset main(2, 5), holdout(2, 5);
    for (std::size_t i = 0; i < full.size(); ++i) {
        ((i % 400) < 200 ? main : holdout).examples.push_back(full.examples[i]);
    }

    auto [train, test] = train_test_split(main, 0.2, derive_seed(seed, "parity-split"));
    PartitionSpec ps{6, 2, 2, Balance::equal, 1.0};
    auto shards = partition(train, ps, derive_seed(seed, "parity-part"));

    std::vector<ClientSetup> clients;
    for (int i = 0; i < 6; ++i) {
        ClientSetup c;
        c.client_id = i;
        c.shard = shards[static_cast<std::size_t>(i)];
        c.model = make_model(mlp_spec(), 2, 5, derive_seed(seed, "parity-model", i));
        c.train_cfg = mlp_spec().train;
        c.train_cfg.seed = derive_seed(seed, "parity-pretrain", i);
        clients.push_back(std::move(c));
    }
    TransmissionLedger ledger;
    auto party = pretrain_and_upload(clients, ledger);

    LcflConfig lc = loop_defaults();
    lc.seed = derive_seed(seed, "parity-loop");

    std::vector<Dataset> artificial;
    if (use_holdout) {
        std::vector<std::vector<std::size_t>> hists;
        for (const auto& c : clients) {
            hists.push_back(c.shard.label_histogram());
        }
        artificial = materialize_from_holdout(holdout, hists, party.shard_sizes, lc);
    } else {
        artificial = materialize_artificial(party, lc);
    }

    auto set = party.model_set();
    auto loop = selection_loop(set, artificial, party.shard_sizes, party.update_cfgs, lc);
    finetune_and_download(party.models, party.client_ids, shards, loop.retained,
                          party.update_cfgs, lc, ledger);

    std::vector<double> accs;
    for (const auto& m : party.models) {
        accs.push_back(evaluate(*m, test));
    }
    return mean_of(accs);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---- criteria ---------------------------------------------------------------

std::string criterion_margin_oracle() {
    const double t0 = now_s();
    Rng rng(20240);
    const std::vector<double> probe = {0.0, 0.0};
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 1 + static_cast<int>(rng.index(5));
        const int classes = 2 + static_cast<int>(rng.index(5));
        std::vector<std::unique_ptr<FixedModel>> owners;
        ModelSet set;
        for (int i = 0; i < n; ++i) {
            owners.push_back(std::make_unique<FixedModel>(2, random_simplex(rng, classes)));
            set.add(i, owners.back().get());
        }
        const int y = static_cast<int>(rng.index(static_cast<std::size_t>(classes)));
        const auto fast = mpmc_margin(set, probe, y);
        const auto slow = margin_oracle(set, probe, y);
        if (std::abs(fast.rho - slow.rho) > 1e-9 || fast.i_plus != slow.i_plus ||
            fast.i_minus != slow.i_minus || fast.y_minus != slow.y_minus) {
            return "disagreement at trial " + std::to_string(trial);
        }
    }
    const double dt = now_s() - t0;
    if (dt >= 5.0) {
        return "runtime " + fmt("%.2f", dt) + " s exceeds 5 s";
    }
    return "";
}

std::string criterion_transmission_accounting() {
    const double t0 = now_s();

    // LC-FL, 7 homogeneous clients -> 21 transfers.
    ScenarioConfig hom;
    hom.name = "count-hom7";
    hom.seed = 1;
    hom.dataset = {"blobs", 40, 10, 2, 0.5, ""};
    hom.partition = {7, 10, 10, Balance::equal, 1.0};
    ModelSpec small_mlp = mlp_spec();
    small_mlp.train.epochs = 10;
    hom.models = {small_mlp};
    hom.generators = {GeneratorSpecCfg{"gmm", 1, 0.1}};
    hom.lcfl = loop_defaults();
    hom.lcfl.iterations = 60;
    auto hom_out = run_config(hom);
    if (hom_out.summary.model_transfers != 21) {
        return "7 homogeneous clients gave " + std::to_string(hom_out.summary.model_transfers) +
               " transfers, expected 21";
    }

    // LC-FL, 8 heterogeneous clients -> 24 transfers.
    ScenarioConfig het;
    het.name = "count-het8";
    het.seed = 1;
    het.dataset = {"blobs", 60, 10, 2, 0.5, ""};
    het.partition = {8, 3, 4, Balance::unequal, 4.0};
    ModelSpec logistic;
    logistic.type = "logistic";
    logistic.train = {30, 0.2, 32, 0.0, 0};
    ModelSpec stumps;
    stumps.type = "stumps";
    stumps.train = {30, 0.1, 32, 0.0, 0};
    het.models = {small_mlp, logistic, stumps, small_mlp, logistic, stumps, small_mlp, logistic};
    het.generators = {GeneratorSpecCfg{"gmm", 1, 0.1}};
    het.lcfl = loop_defaults();
    het.lcfl.iterations = 60;
    auto het_out = run_config(het);
    if (het_out.summary.model_transfers != 24) {
        return "8 heterogeneous clients gave " + std::to_string(het_out.summary.model_transfers) +
               " transfers, expected 24";
    }

    // FedAvg, ratio 0.3 over 7 clients, 450 rounds -> 1800 transfers.
    ScenarioConfig fed;
    fed.name = "count-fedavg";
    fed.algorithm = "fedavg";
    fed.seed = 1;
    fed.dataset = {"blobs", 40, 10, 2, 0.5, ""};
    fed.partition = {7, 10, 10, Balance::equal, 1.0};
    ModelSpec fed_model;
    fed_model.type = "logistic";
    fed_model.train = {10, 0.2, 32, 0.0, 0};
    fed.models = {fed_model};
    fed.fed.rounds = 450;
    fed.fed.participation = 0.3;
    fed.fed.local_epochs = 1;
    fed.fed.learning_rate = 0.1;
    auto fed_out = run_config(fed);
    if (fed_out.summary.model_transfers != 1800) {
        return "FedAvg gave " + std::to_string(fed_out.summary.model_transfers) +
               " transfers, expected 1800";
    }

    const double dt = now_s() - t0;
    if (dt >= 300.0) {
        return "runtime " + fmt("%.1f", dt) + " s exceeds 5 min";
    }
    return "";
}

std::vector<NonIidResult> g_noniid;  // shared by criteria 3 and 5

std::string criterion_noniid_improvement() {
    g_noniid.clear();
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto r = run_noniid_seed(seed);
        g_noniid.push_back(r);
        if (r.seconds >= 120.0) {
            return "seed " + std::to_string(seed) + " took " + fmt("%.1f", r.seconds) + " s";
        }
        if (r.pre > 0.55) {
            return "seed " + std::to_string(seed) + ": pre-trained mean " + fmt("%.4f", r.pre) +
                   " exceeds 0.55";
        }
        if (r.post < r.pre + 0.20) {
            return "seed " + std::to_string(seed) + ": post " + fmt("%.4f", r.post) +
                   " < pre + 20 points (pre " + fmt("%.4f", r.pre) + ")";
        }
        if (r.post < 0.80 * r.centralized) {
            return "seed " + std::to_string(seed) + ": post " + fmt("%.4f", r.post) +
                   " < 0.80 x centralized " + fmt("%.4f", r.centralized);
        }
    }
    return "";
}

std::string criterion_artificial_parity() {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const double with_gen = run_parity_arm(seed, false);
        const double with_real = run_parity_arm(seed, true);
        if (std::abs(with_gen - with_real) > 0.05) {
            return "seed " + std::to_string(seed) + ": generator arm " + fmt("%.4f", with_gen) +
                   " vs real arm " + fmt("%.4f", with_real) + " differ by more than 5 points";
        }
    }
    return "";
}

std::string criterion_margin_descent() {
    if (g_noniid.empty()) {
        return "non-iid runs unavailable";
    }
    for (std::size_t i = 0; i < g_noniid.size(); ++i) {
        if (g_noniid[i].margin_end > g_noniid[i].margin_start) {
            return "seed " + std::to_string(i + 1) + ": margin loss rose from " +
                   fmt("%.4f", g_noniid[i].margin_start) + " to " +
                   fmt("%.4f", g_noniid[i].margin_end);
        }
    }
    return "";
}

std::string criterion_heterogeneous_workflow() {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        auto cfg = heterogeneous_scenario(seed);
        auto outcome = run_config(cfg);
        const auto& pre = outcome.summary.client_accuracy_pre;
        const auto& post = outcome.summary.client_accuracy_post;
        for (std::size_t i = 0; i < pre.size(); ++i) {
            if (post[i] < pre[i] - 0.01 - 1e-12) {
                return "seed " + std::to_string(seed) + ": client " + std::to_string(i) +
                       " regressed " + fmt("%.4f", pre[i]) + " -> " + fmt("%.4f", post[i]);
            }
        }
        if (outcome.summary.mean_accuracy_post < outcome.summary.mean_accuracy_pre + 0.10) {
            return "seed " + std::to_string(seed) + ": mean improved only " +
                   fmt("%.4f", outcome.summary.mean_accuracy_post -
                                   outcome.summary.mean_accuracy_pre);
        }
    }
    return "";
}

std::string criterion_dp_statistics() {
    const double t0 = now_s();
    const std::vector<std::pair<double, double>> settings = {{1.0, 1.0}, {1.0, 2.0}, {0.5, 4.0}};
    std::uint64_t seed = 11;
    for (const auto& [sens, sigma] : settings) {
        DpParams dp;
        dp.sensitivity = sens;
        dp.sigma = sigma;
        std::vector<double> zeros(100000, 0.0);
        auto noisy = gaussian_mechanism(zeros, dp, seed++);
        double mean = 0.0;
        for (double v : noisy) {
            mean += v;
        }
        mean /= static_cast<double>(noisy.size());
        double var = 0.0;
        for (double v : noisy) {
            var += (v - mean) * (v - mean);
        }
        var /= static_cast<double>(noisy.size());
        const double expected = sens * sens * sigma * sigma;
        if (std::abs(var - expected) / expected > 0.02) {
            return "(s_f=" + fmt("%.1f", sens) + ", sigma=" + fmt("%.1f", sigma) +
                   "): empirical variance " + fmt("%.4f", var) + " vs " + fmt("%.4f", expected);
        }
    }
    const double dt = now_s() - t0;
    if (dt >= 10.0) {
        return "runtime " + fmt("%.2f", dt) + " s exceeds 10 s";
    }
    return "";
}

std::string criterion_baseline_reductions() {
    auto ds = make_blobs(60, 4, 2, 0.5, 91);
    PartitionSpec ps{4, 4, 4, Balance::equal, 1.0};
    auto shards = partition(ds, ps, 91);

    // FedProx(mu = 0) must follow FedAvg round by round, bit-exactly.
    FedConfig cfg;
    cfg.participation = 0.5;
    cfg.seed = 17;
    Mlp avg(2, 4, 16, 7), prox(2, 4, 16, 7);
    for (int round = 0; round < 3; ++round) {
        std::vector<const Dataset*> sel = {&shards[0], &shards[2]};
        std::vector<int> ids = {0, 2};
        fedavg_round(avg, sel, ids, cfg, round, nullptr);
        fedprox_round(prox, sel, ids, cfg, round, nullptr);
        if (avg.parameters() != prox.parameters()) {
            return "trajectories diverged at round " + std::to_string(round);
        }
    }

    // Single-client round: the aggregate equals the local update exactly.
    Mlp global(2, 4, 16, 9);
    Mlp expected = global;
    TrainConfig tcfg;
    tcfg.epochs = cfg.local_epochs;
    tcfg.learning_rate = cfg.learning_rate;
    tcfg.batch_size = cfg.batch_size;
    tcfg.l2 = cfg.l2;
    tcfg.seed = derive_seed(cfg.seed, "fed-local", (0ULL << 32) | 3ULL);
    expected.train_sgd(shards[3], tcfg, {}, 0.0);
    fedavg_round(global, {&shards[3]}, {3}, cfg, 0, nullptr);
    if (global.parameters() != expected.parameters()) {
        return "single-client aggregate is not the local model";
    }
    return "";
}

std::string criterion_determinism() {
    for (const char* name : {"smoke", "hom-D"}) {
        auto cfg = preset(name);
        const fs::path d1 = fs::temp_directory_path() / ("lcfl_acc_det1_" + std::string(name));
        const fs::path d2 = fs::temp_directory_path() / ("lcfl_acc_det2_" + std::string(name));
        fs::remove_all(d1);
        fs::remove_all(d2);
        run_scenario(cfg, d1.string());
        run_scenario(cfg, d2.string());
        const bool records_equal = slurp(d1 / "records.jsonl") == slurp(d2 / "records.jsonl");
        const bool metrics_equal = slurp(d1 / "metrics.csv") == slurp(d2 / "metrics.csv");
        fs::remove_all(d1);
        fs::remove_all(d2);
        if (!records_equal) {
            return std::string(name) + ": records.jsonl differs between runs";
        }
        if (!metrics_equal) {
            return std::string(name) + ": metrics.csv differs between runs";
        }
    }
    return "";
}

std::string criterion_gradient_checks() {
    auto data = make_blobs(40, 3, 2, 0.5, 55);
    const double h = 1e-5;

    auto check_model = [&](ParametricModel& model, const std::string& label,
                           const std::vector<double>& anchor, double mu) -> std::string {
        const auto params = model.parameters();
        auto ce_grad = model.cross_entropy_gradient(data);
        Rng rng(77);
        for (int probe = 0; probe < 20; ++probe) {
            const auto k = rng.index(params.size());
            double analytic = ce_grad[k];
            if (mu > 0.0) {
                analytic += mu * (params[k] - anchor[k]);
            }
            auto objective = [&](const std::vector<double>& p) {
                model.set_parameters(p);
                double value = model.mean_cross_entropy(data);
                if (mu > 0.0) {
                    double prox = 0.0;
                    for (std::size_t j = 0; j < p.size(); ++j) {
                        prox += (p[j] - anchor[j]) * (p[j] - anchor[j]);
                    }
                    value += 0.5 * mu * prox;
                }
                return value;
            };
            auto p = params;
            p[k] += h;
            const double up = objective(p);
            p[k] -= 2 * h;
            const double down = objective(p);
            model.set_parameters(params);
            const double fd = (up - down) / (2 * h);
            if (std::abs(fd - analytic) / std::max(1e-8, std::abs(fd)) > 1e-4) {
                return label + ": probe " + std::to_string(probe) + " relative error above 1e-4";
            }
        }
        return "";
    };

    TrainConfig warm;
    warm.epochs = 5;
    warm.seed = 3;

    LogisticRegression lr(2, 3);
    lr.fit(data, warm);
    if (auto err = check_model(lr, "logistic", {}, 0.0); !err.empty()) {
        return err;
    }

    Mlp mlp(2, 3, 16, 5);
    mlp.fit(data, warm);
    if (auto err = check_model(mlp, "mlp", {}, 0.0); !err.empty()) {
        return err;
    }

    LogisticRegression anchor_model(2, 3);
    anchor_model.fit(data, warm);
    LogisticRegression prox_model(2, 3);
    if (auto err = check_model(prox_model, "fedprox-proximal", anchor_model.parameters(), 0.7);
        !err.empty()) {
        return err;
    }
    return "";
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<std::string()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "margin oracle equivalence (1000 random instances)", criterion_margin_oracle},
        {2, "transmission accounting (21 / 24 / 1800)", criterion_transmission_accounting},
        {3, "non-iid improvement (6 clients, 5 seeds)", criterion_noniid_improvement},
        {4, "artificial-data parity (3 seeds, within 5 points)", criterion_artificial_parity},
        {5, "margin-loss descent (every seed)", criterion_margin_descent},
        {6, "heterogeneous workflow (3 seeds)", criterion_heterogeneous_workflow},
        {7, "dp mechanism variance (within 2%)", criterion_dp_statistics},
        {8, "baseline reductions (fedprox mu=0, single client)", criterion_baseline_reductions},
        {9, "determinism (byte-identical artifacts)", criterion_determinism},
        {10, "gradient checks (logistic, mlp, proximal)", criterion_gradient_checks},
    };

    int failed = 0;
    for (const auto& criterion : criteria) {
        const double t0 = now_s();
        std::string detail;
        try {
            detail = criterion.run();
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double dt = now_s() - t0;
        if (detail.empty()) {
            std::printf("[PASS] %2d %s (%.2f s)\n", criterion.id, criterion.name, dt);
        } else {
            std::printf("[FAIL] %2d %s (%.2f s): %s\n", criterion.id, criterion.name, dt,
                        detail.c_str());
            failed++;
        }
        std::fflush(stdout);
    }
    std::printf("ACCEPTANCE: %zu/%zu criteria passed\n", criteria.size() - failed,
                criteria.size());
    return failed == 0 ? 0 : 1;
}

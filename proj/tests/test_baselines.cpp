#include <doctest.h>

#include <cmath>

#include "lcfl/baselines.hpp"
#include "lcfl/logistic.hpp"
#include "lcfl/mlp.hpp"
#include "lcfl/rng.hpp"

using namespace lcfl;

namespace {

std::vector<Dataset> shard_blobs(int n_clients, int classes, int n_per_class, std::uint64_t seed) {
    auto ds = make_blobs(n_per_class, classes, 2, 0.5, seed);
    PartitionSpec spec;
    spec.n_clients = n_clients;
    spec.min_classes = classes;
    spec.max_classes = classes;
    return partition(ds, spec, seed);
}

}  // namespace

TEST_SUITE("baselines") {

TEST_CASE("participants per round floor the participation fraction") {
    FedConfig cfg;
    cfg.participation = 0.3;
    CHECK(cfg.clients_per_round(7) == 2);
    CHECK(cfg.clients_per_round(8) == 2);
    CHECK(cfg.clients_per_round(10) == 3);
    cfg.participation = 1.0;
    CHECK(cfg.clients_per_round(7) == 7);
    cfg.participation = 0.01;
    CHECK(cfg.clients_per_round(7) == 1);  // never zero
}

TEST_CASE("a single selected client becomes the new global model") {
    auto shards = shard_blobs(3, 4, 40, 7);
    Mlp global(2, 4, 8, 3);
    FedConfig cfg;
    cfg.seed = 5;

    Mlp expected = global;
    TrainConfig tcfg;
    tcfg.epochs = cfg.local_epochs;
    tcfg.learning_rate = cfg.learning_rate;
    tcfg.batch_size = cfg.batch_size;
    tcfg.l2 = cfg.l2;
    tcfg.seed = derive_seed(cfg.seed, "fed-local", (0ULL << 32) | 1ULL);
    expected.train_sgd(shards[1], tcfg, {}, 0.0);

    fedavg_round(global, {&shards[1]}, {1}, cfg, 0, nullptr);
    CHECK(global.parameters() == expected.parameters());
}

TEST_CASE("two equal shards average parameters elementwise") {
    auto shards = shard_blobs(2, 4, 40, 9);  // equal partition -> equal sizes
    REQUIRE(shards[0].size() == shards[1].size());
    LogisticRegression global(2, 4);
    FedConfig cfg;
    cfg.seed = 3;

    // Reproduce the two local trainings by hand.
    std::vector<std::vector<double>> locals;
    for (int j = 0; j < 2; ++j) {
        LogisticRegression local = global;
        TrainConfig tcfg;
        tcfg.epochs = cfg.local_epochs;
        tcfg.learning_rate = cfg.learning_rate;
        tcfg.batch_size = cfg.batch_size;
        tcfg.seed = derive_seed(cfg.seed, "fed-local", (0ULL << 32) | static_cast<std::uint64_t>(j));
        local.train_sgd(shards[static_cast<std::size_t>(j)], tcfg, {}, 0.0);
        locals.push_back(local.parameters());
    }

    fedavg_round(global, {&shards[0], &shards[1]}, {0, 1}, cfg, 0, nullptr);
    auto got = global.parameters();
    for (std::size_t k = 0; k < got.size(); ++k) {
        CHECK(got[k] == doctest::Approx((locals[0][k] + locals[1][k]) / 2.0).epsilon(1e-15));
    }
}

TEST_CASE("ledger counts two transfers per selected client per round") {
    auto shards = shard_blobs(7, 4, 70, 11);
    Mlp global(2, 4, 8, 1);
    FedConfig cfg;
    cfg.rounds = 5;
    cfg.participation = 0.3;  // 2 of 7
    cfg.seed = 13;
    TransmissionLedger ledger;
    run_fed(global, shards, cfg, false, ledger, nullptr);
    CHECK(ledger.model_transfers() == 5u * 2u * 2u);
}

TEST_CASE("fedprox with mu = 0 is trajectory-identical to fedavg") {
    auto shards = shard_blobs(4, 4, 50, 15);
    FedConfig cfg;
    cfg.rounds = 3;
    cfg.participation = 0.5;
    cfg.mu = 0.0;
    cfg.seed = 17;

    Mlp avg_global(2, 4, 8, 2), prox_global(2, 4, 8, 2);
    TransmissionLedger l1, l2;
    run_fed(avg_global, shards, cfg, false, l1, nullptr);
    run_fed(prox_global, shards, cfg, true, l2, nullptr);
    CHECK(avg_global.parameters() == prox_global.parameters());  // bit-identical
}

TEST_CASE("huge mu pins local parameters to the broadcast model") {
    auto shards = shard_blobs(2, 4, 60, 19);
    Mlp global(2, 4, 8, 4);
    TrainConfig pre;
    pre.epochs = 10;
    pre.seed = 1;
    global.fit(shards[0], pre);  // non-trivial anchor

    auto anchor = global.parameters();
    Mlp local = global;
    TrainConfig tcfg;
    tcfg.epochs = 1;
    tcfg.learning_rate = 0.01;
    tcfg.seed = 23;
    local.train_sgd(shards[1], tcfg, anchor, 1e6);
    auto moved = local.parameters();
    double max_move = 0.0;
    for (std::size_t k = 0; k < moved.size(); ++k) {
        max_move = std::max(max_move, std::abs(moved[k] - anchor[k]));
    }
    CHECK(max_move < 1e-3);
}

TEST_CASE("proximal objective gradient matches finite differences") {
    auto shards = shard_blobs(2, 3, 40, 25);
    LogisticRegression model(2, 3);
    TrainConfig pre;
    pre.epochs = 5;
    pre.seed = 2;
    model.fit(shards[0], pre);

    LogisticRegression anchor_model(2, 3);
    anchor_model.fit(shards[1], pre);
    const auto anchor = anchor_model.parameters();
    const double mu = 0.7;
    const Dataset& data = shards[0];

    auto objective = [&](const std::vector<double>& p) {
        model.set_parameters(p);
        double prox = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) {
            const double d = p[k] - anchor[k];
            prox += d * d;
        }
        return model.mean_cross_entropy(data) + 0.5 * mu * prox;
    };

    const auto params = model.parameters();
    auto ce_grad = model.cross_entropy_gradient(data);
    Rng rng(29);
    const double h = 1e-5;
    for (int probe = 0; probe < 20; ++probe) {
        const auto k = rng.index(params.size());
        const double analytic = ce_grad[k] + mu * (params[k] - anchor[k]);
        auto p = params;
        p[k] += h;
        const double up = objective(p);
        p[k] -= 2 * h;
        const double down = objective(p);
        model.set_parameters(params);
        const double fd = (up - down) / (2 * h);
        CHECK(std::abs(fd - analytic) / std::max(1e-8, std::abs(fd)) < 1e-4);
    }
}

TEST_CASE("aggregation preserves the simplex contract") {
    auto shards = shard_blobs(3, 4, 40, 27);
    Mlp global(2, 4, 8, 5);
    FedConfig cfg;
    cfg.rounds = 2;
    cfg.participation = 1.0;
    cfg.seed = 31;
    TransmissionLedger ledger;
    run_fed(global, shards, cfg, false, ledger, nullptr);
    Rng rng(33);
    for (int i = 0; i < 200; ++i) {
        auto conf = global.confidence(std::vector<double>{rng.normal() * 4, rng.normal() * 4});
        double total = 0.0;
        for (double v : conf) {
            CHECK(v >= 0.0);
            total += v;
        }
        CHECK(std::abs(total - 1.0) < 1e-6);
    }
}

TEST_CASE("empty or invalid selections are rejected") {
    Mlp global(2, 4, 8, 6);
    FedConfig cfg;
    CHECK_THROWS(fedavg_round(global, {}, {}, cfg, 0, nullptr));
    Dataset empty(2, 4);
    CHECK_THROWS(fedavg_round(global, {&empty}, {0}, cfg, 0, nullptr));
    FedConfig bad;
    bad.participation = 0.0;
    CHECK_THROWS(bad.validate());
}

}  // TEST_SUITE

#include <doctest.h>

#include <cmath>

#include "lcfl/dataset.hpp"
#include "lcfl/logistic.hpp"
#include "lcfl/mlp.hpp"
#include "lcfl/rng.hpp"
#include "lcfl/stumps.hpp"
#include "support/fixed_model.hpp"

using namespace lcfl;
using lcfl::testing::FixedModel;

namespace {

Dataset two_blobs(int n_per_class, std::uint64_t seed) {
    return make_blobs(n_per_class, 2, 2, 0.5, seed);
}

std::vector<double> random_point(Rng& rng, int dim, double scale) {
    std::vector<double> x(static_cast<std::size_t>(dim));
    for (double& v : x) {
        v = scale * rng.normal();
    }
    return x;
}

void check_simplex(const std::vector<double>& conf) {
    double total = 0.0;
    for (double v : conf) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        total += v;
    }
    CHECK(std::abs(total - 1.0) < 1e-6);
}

// Central finite differences on 20 random coordinates.
void gradient_check(ParametricModel& model, const Dataset& data) {
    const auto analytic = model.cross_entropy_gradient(data);
    auto params = model.parameters();
    Rng rng(123);
    const double h = 1e-5;
    for (int probe = 0; probe < 20; ++probe) {
        const auto k = rng.index(params.size());
        auto p = params;
        p[k] += h;
        model.set_parameters(p);
        const double up = model.mean_cross_entropy(data);
        p[k] -= 2 * h;
        model.set_parameters(p);
        const double down = model.mean_cross_entropy(data);
        model.set_parameters(params);
        const double fd = (up - down) / (2 * h);
        const double rel = std::abs(fd - analytic[k]) / std::max(1e-8, std::abs(fd));
        CHECK(rel < 1e-4);
    }
}

}  // namespace

TEST_SUITE("models") {

TEST_CASE("untrained logistic regression is uniform") {
    LogisticRegression model(3, 4);
    auto conf = model.confidence(std::vector<double>{1.0, -2.0, 0.5});
    for (double v : conf) {
        CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
    }
}

TEST_CASE("every model type emits simplex confidences on random probes") {
    auto data = make_blobs(40, 3, 2, 0.5, 4);
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.seed = 1;

    LogisticRegression lr(2, 3);
    lr.fit(data, cfg);
    Mlp mlp(2, 3, 16, 5);
    mlp.fit(data, cfg);
    StumpEnsemble stumps(2, 3);
    stumps.fit(data, cfg);

    Rng rng(99);
    for (int i = 0; i < 10000; ++i) {
        auto x = random_point(rng, 2, 5.0);
        check_simplex(lr.confidence(x));
        check_simplex(mlp.confidence(x));
        check_simplex(stumps.confidence(x));
    }
}

TEST_CASE("fit is deterministic given the seed") {
    auto data = make_blobs(50, 3, 2, 0.5, 8);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.seed = 42;

    Mlp a(2, 3, 16, 7), b(2, 3, 16, 7);
    a.fit(data, cfg);
    b.fit(data, cfg);
    CHECK(a.parameters() == b.parameters());  // bit-identical

    LogisticRegression la(2, 3), lb(2, 3);
    la.fit(data, cfg);
    lb.fit(data, cfg);
    CHECK(la.parameters() == lb.parameters());

    StumpEnsemble sa(2, 3), sb(2, 3);
    sa.fit(data, cfg);
    sb.fit(data, cfg);
    REQUIRE(sa.stumps().size() == sb.stumps().size());
    for (std::size_t i = 0; i < sa.stumps().size(); ++i) {
        CHECK(sa.stumps()[i].threshold == sb.stumps()[i].threshold);
        CHECK(sa.stumps()[i].weight == sb.stumps()[i].weight);
    }
}

TEST_CASE("logistic regression separates separable blobs") {
    auto data = two_blobs(100, 6);
    LogisticRegression model(2, 2);
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.learning_rate = 0.2;
    cfg.seed = 6;
    model.fit(data, cfg);
    CHECK(evaluate(model, data) >= 0.99);
}

TEST_CASE("training does not increase train cross-entropy") {
    auto data = make_blobs(60, 3, 2, 0.5, 10);
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.learning_rate = 0.05;
    cfg.seed = 3;

    LogisticRegression lr(2, 3);
    const double lr_before = mean_cross_entropy(lr, data);
    lr.fit(data, cfg);
    CHECK(mean_cross_entropy(lr, data) <= lr_before);

    Mlp mlp(2, 3, 16, 2);
    const double mlp_before = mean_cross_entropy(mlp, data);
    mlp.fit(data, cfg);
    CHECK(mean_cross_entropy(mlp, data) <= mlp_before);

    StumpEnsemble st(2, 3);
    const double st_before = mean_cross_entropy(st, data);
    TrainConfig scfg = cfg;
    scfg.epochs = 30;
    st.fit(data, scfg);
    CHECK(mean_cross_entropy(st, data) <= st_before);
}

TEST_CASE("zero epochs is a no-op") {
    auto data = two_blobs(30, 5);
    TrainConfig cfg;
    cfg.epochs = 0;

    Mlp mlp(2, 2, 8, 3);
    auto before = mlp.parameters();
    mlp.fit(data, cfg);
    CHECK(mlp.parameters() == before);

    StumpEnsemble st(2, 2);
    st.fit(data, cfg);
    CHECK(st.stumps().empty());
}

TEST_CASE("update on the training data keeps cross-entropy from rising") {
    auto data = make_blobs(60, 3, 2, 0.5, 14);
    LogisticRegression model(2, 3);
    TrainConfig cfg;
    cfg.epochs = 15;
    cfg.learning_rate = 0.1;
    cfg.seed = 9;
    model.fit(data, cfg);
    const double before = model.mean_cross_entropy(data);
    TrainConfig ucfg;
    ucfg.epochs = 3;
    ucfg.learning_rate = 0.01;
    ucfg.seed = 10;
    model.update(data, ucfg);
    CHECK(model.mean_cross_entropy(data) <= before + 1e-3);
}

TEST_CASE("update on one repeated example raises its confidence") {
    Dataset batch(2, 3);
    for (int i = 0; i < 8; ++i) {
        batch.add({1.5, -0.5}, 2);
    }
    TrainConfig ucfg;
    ucfg.epochs = 5;
    ucfg.learning_rate = 0.1;
    ucfg.seed = 4;
    const std::vector<double> probe = {1.5, -0.5};

    LogisticRegression lr(2, 3);
    const double lr_before = lr.confidence(probe)[2];
    lr.update(batch, ucfg);
    CHECK(lr.confidence(probe)[2] > lr_before);

    Mlp mlp(2, 3, 16, 8);
    const double mlp_before = mlp.confidence(probe)[2];
    mlp.update(batch, ucfg);
    CHECK(mlp.confidence(probe)[2] > mlp_before);

    StumpEnsemble st(2, 3);
    const double st_before = st.confidence(probe)[2];
    st.update(batch, ucfg);
    CHECK(st.confidence(probe)[2] > st_before);
}

TEST_CASE("empty batches are rejected") {
    Dataset empty(2, 3);
    TrainConfig cfg;
    LogisticRegression lr(2, 3);
    CHECK_THROWS(lr.update(empty, cfg));
    CHECK_THROWS(lr.fit(empty, cfg));
    Mlp mlp(2, 3);
    CHECK_THROWS(mlp.update(empty, cfg));
    StumpEnsemble st(2, 3);
    CHECK_THROWS(st.update(empty, cfg));
}

TEST_CASE("evaluate applies the lowest-index tie-break") {
    // A perfect predictor scores 1.0.
    Dataset data(1, 2);
    for (int i = 0; i < 10; ++i) {
        data.add({i < 5 ? -3.0 : 3.0}, i < 5 ? 0 : 1);
    }
    LogisticRegression sharp(1, 2);
    sharp.set_parameters(std::vector<double>{-10.0, 10.0, 0.0, 0.0});  // W = [-10; 10], b = 0
    CHECK(evaluate(sharp, data) == 1.0);

    // A uniform predictor picks class 0 everywhere.
    Dataset balanced(1, 5);
    for (int c = 0; c < 5; ++c) {
        for (int i = 0; i < 4; ++i) {
            balanced.add({static_cast<double>(i)}, c);
        }
    }
    FixedModel uniform(1, {0.2, 0.2, 0.2, 0.2, 0.2});
    CHECK(evaluate(uniform, balanced) == doctest::Approx(0.2));
}

TEST_CASE("evaluate equals a brute-force recount") {
    auto data = make_blobs(50, 4, 2, 0.5, 15);
    Mlp model(2, 4, 16, 1);
    TrainConfig cfg;
    cfg.epochs = 8;
    cfg.seed = 2;
    model.fit(data, cfg);

    std::size_t hits = 0;
    for (const auto& e : data.examples) {
        auto conf = model.confidence(e.x);
        int best = 0;
        for (int c = 1; c < 4; ++c) {
            if (conf[static_cast<std::size_t>(c)] > conf[static_cast<std::size_t>(best)]) {
                best = c;
            }
        }
        if (best == e.y) {
            hits++;
        }
    }
    CHECK(evaluate(model, data) == static_cast<double>(hits) / data.size());
}

TEST_CASE("stump votes normalize and smooth as specified") {
    // Votes [3, 1, 0] from three stumps: shares [0.75, 0.25, 0] before
    // smoothing, (votes + 1) / (total + C) after.
    std::vector<Stump> stumps = {
        {0, 0.0, 0, 0, 2.0},  // always votes class 0 (left == right)
        {0, 0.0, 0, 0, 1.0},
        {0, 5.0, 1, 1, 1.0},  // always votes class 1
    };
    StumpEnsemble ensemble(1, 3, stumps);
    auto conf = ensemble.confidence(std::vector<double>{1.0});
    std::vector<double> votes = {3.0, 1.0, 0.0};
    const double total = 4.0;
    CHECK(votes[0] / total == 0.75);
    CHECK(votes[1] / total == 0.25);
    for (int c = 0; c < 3; ++c) {
        CHECK(conf[static_cast<std::size_t>(c)] ==
              doctest::Approx((votes[static_cast<std::size_t>(c)] + 1.0) / (total + 3.0)));
    }
    // No exact zeros after smoothing.
    CHECK(conf[2] > 0.0);
}

TEST_CASE("serialization round-trips bit-exactly") {
    auto data = make_blobs(40, 3, 2, 0.5, 16);
    TrainConfig cfg;
    cfg.epochs = 6;
    cfg.seed = 5;

    std::vector<std::unique_ptr<ConfidenceModel>> models;
    models.push_back(std::make_unique<LogisticRegression>(2, 3));
    models.push_back(std::make_unique<Mlp>(2, 3, 8, 4));
    models.push_back(std::make_unique<StumpEnsemble>(2, 3));
    for (auto& m : models) {
        m->fit(data, cfg);
        auto bytes = m->serialize();
        auto copy = deserialize_model(bytes);
        CHECK(copy->type_tag() == m->type_tag());
        Rng rng(77);
        for (int i = 0; i < 100; ++i) {
            auto x = random_point(rng, 2, 4.0);
            CHECK(copy->confidence(x) == m->confidence(x));
        }
        CHECK(copy->serialize() == bytes);
    }
}

TEST_CASE("malformed model blobs are rejected with diagnostics") {
    LogisticRegression model(2, 3);
    auto bytes = model.serialize();

    auto truncated = bytes;
    truncated.resize(bytes.size() - 5);
    CHECK_THROWS_WITH_AS(deserialize_model(truncated), doctest::Contains("truncated"),
                         std::runtime_error);

    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_WITH_AS(deserialize_model(bad_magic), doctest::Contains("magic"),
                         std::runtime_error);

    auto unknown_tag = bytes;
    unknown_tag[4] = 0x66;
    CHECK_THROWS_AS(deserialize_model(unknown_tag), std::runtime_error);

    auto trailing = bytes;
    trailing.push_back(0);
    CHECK_THROWS_WITH_AS(deserialize_model(trailing), doctest::Contains("trailing"),
                         std::runtime_error);
}

TEST_CASE("a new model type registers without touching anything else") {
    lcfl::testing::register_fixed_model();
    FixedModel fixed(2, {0.5, 0.25, 0.25});
    auto bytes = fixed.serialize();
    auto copy = deserialize_model(bytes);
    CHECK(copy->confidence(std::vector<double>{0.0, 0.0}) ==
          std::vector<double>{0.5, 0.25, 0.25});
}

TEST_CASE("analytic gradients match finite differences") {
    auto data = make_blobs(30, 3, 2, 0.5, 18);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.seed = 12;

    LogisticRegression lr(2, 3);
    lr.fit(data, cfg);
    gradient_check(lr, data);

    Mlp mlp(2, 3, 8, 3);
    mlp.fit(data, cfg);
    gradient_check(mlp, data);
}

TEST_CASE("dimension mismatches are rejected") {
    LogisticRegression model(3, 2);
    CHECK_THROWS(model.confidence(std::vector<double>{1.0}));
    Dataset wrong(2, 2);
    wrong.add({1.0, 2.0}, 0);
    TrainConfig cfg;
    CHECK_THROWS(model.fit(wrong, cfg));
}

}  // TEST_SUITE

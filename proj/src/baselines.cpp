#include "lcfl/baselines.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lcfl/margin.hpp"
#include "lcfl/rng.hpp"

namespace lcfl {

void FedConfig::validate() const {
    if (rounds < 1) {
        throw std::invalid_argument("FedConfig: rounds must be >= 1");
    }
    if (!(participation > 0.0 && participation <= 1.0)) {
        throw std::invalid_argument("FedConfig: participation must lie in (0, 1]");
    }
    if (local_epochs < 1 || learning_rate <= 0.0 || batch_size < 1 || l2 < 0.0 || mu < 0.0) {
        throw std::invalid_argument("FedConfig: invalid training parameters");
    }
}

int FedConfig::clients_per_round(int n_clients) const {
    return std::max(1, static_cast<int>(std::floor(participation * n_clients)));
}

namespace {

void fed_round_impl(ParametricModel& global, const std::vector<const Dataset*>& selected_shards,
                    const std::vector<int>& selected_ids, const FedConfig& cfg, double mu,
                    int round_index, TransmissionLedger* ledger) {
    if (selected_shards.empty() || selected_shards.size() != selected_ids.size()) {
        throw std::invalid_argument("fed round: bad client selection");
    }

    const auto anchor = global.parameters();
    std::vector<std::vector<double>> locals;
    std::vector<double> weights;
    locals.reserve(selected_shards.size());

    for (std::size_t j = 0; j < selected_shards.size(); ++j) {
        const Dataset* shard = selected_shards[j];
        if (shard == nullptr || shard->empty()) {
            throw std::invalid_argument("fed round: empty shard");
        }
        auto local_any = global.clone();
        auto* local = dynamic_cast<ParametricModel*>(local_any.get());

        if (ledger != nullptr) {
            ledger->record(TransferDirection::download, TransferKind::model, selected_ids[j],
                           global.serialize().size());
        }

        TrainConfig tcfg;
        tcfg.epochs = cfg.local_epochs;
        tcfg.learning_rate = cfg.learning_rate;
        tcfg.batch_size = cfg.batch_size;
        tcfg.l2 = cfg.l2;
        tcfg.seed = derive_seed(cfg.seed, "fed-local",
                                (static_cast<std::uint64_t>(round_index) << 32) |
                                    static_cast<std::uint64_t>(selected_ids[j]));
        local->train_sgd(*shard, tcfg, anchor, mu);

        if (ledger != nullptr) {
            ledger->record(TransferDirection::upload, TransferKind::model, selected_ids[j],
                           local->serialize().size());
        }

        locals.push_back(local->parameters());
        weights.push_back(static_cast<double>(shard->size()));
    }

    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<double> averaged(anchor.size(), 0.0);
    for (std::size_t j = 0; j < locals.size(); ++j) {
        const double w = weights[j] / total;
        for (std::size_t k = 0; k < averaged.size(); ++k) {
            averaged[k] += w * locals[j][k];
        }
    }
    global.set_parameters(averaged);
}

}  // namespace

void fedavg_round(ParametricModel& global, const std::vector<const Dataset*>& selected_shards,
                  const std::vector<int>& selected_ids, const FedConfig& cfg, int round_index,
                  TransmissionLedger* ledger) {
    cfg.validate();
    fed_round_impl(global, selected_shards, selected_ids, cfg, 0.0, round_index, ledger);
}

void fedprox_round(ParametricModel& global, const std::vector<const Dataset*>& selected_shards,
                   const std::vector<int>& selected_ids, const FedConfig& cfg, int round_index,
                   TransmissionLedger* ledger) {
    cfg.validate();
    fed_round_impl(global, selected_shards, selected_ids, cfg, cfg.mu, round_index, ledger);
}

FedRunResult run_fed(ParametricModel& global, const std::vector<Dataset>& shards,
                     const FedConfig& cfg, bool proximal, TransmissionLedger& ledger,
                     const Dataset* global_test) {
    cfg.validate();
    if (shards.empty()) {
        throw std::invalid_argument("run_fed: no shards");
    }
    const int n = static_cast<int>(shards.size());
    const int per_round = cfg.clients_per_round(n);

    FedRunResult result;
    for (int round = 0; round < cfg.rounds; ++round) {
        Rng rng(derive_seed(cfg.seed, "fed-select", static_cast<std::uint64_t>(round)));
        std::vector<int> ids(static_cast<std::size_t>(n));
        std::iota(ids.begin(), ids.end(), 0);
        rng.shuffle(ids);
        ids.resize(static_cast<std::size_t>(per_round));
        std::sort(ids.begin(), ids.end());

        std::vector<const Dataset*> selected;
        selected.reserve(ids.size());
        for (int id : ids) {
            selected.push_back(&shards[static_cast<std::size_t>(id)]);
        }
        if (proximal) {
            fedprox_round(global, selected, ids, cfg, round, &ledger);
        } else {
            fedavg_round(global, selected, ids, cfg, round, &ledger);
        }

        TracePoint p;
        p.step = round + 1;
        p.transmissions = static_cast<long>(ledger.model_transfers());
        if (global_test != nullptr) {
            p.client_accuracy.assign(static_cast<std::size_t>(n), evaluate(global, *global_test));
            ModelSet single;
            single.add(0, &global);
            p.pool_margin_loss = margin_loss(single, *global_test);
        }
        result.trace.push_back(std::move(p));
        result.rounds_run = round + 1;
    }
    return result;
}

}  // namespace lcfl

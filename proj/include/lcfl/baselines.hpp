#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "lcfl/dataset.hpp"
#include "lcfl/model.hpp"
#include "lcfl/server.hpp"

namespace lcfl {

/// Aggregation-baseline hyperparameters. mu == 0 makes FedProx coincide with
/// FedAvg exactly (same code path, same trajectory).
struct FedConfig {
    int rounds = 10;
    double participation = 0.3;  // fraction of clients selected per round
    int local_epochs = 1;
    double learning_rate = 0.05;
    int batch_size = 32;
    double l2 = 0.0;
    double mu = 0.0;  // proximal coefficient, FedProx only
    std::uint64_t seed = 0;

    void validate() const;
    /// Clients selected per round: max(1, floor(participation * n)).
    int clients_per_round(int n_clients) const;
};

/// One FedAvg round over the already-selected clients: broadcast the global
/// model, train each local copy, aggregate by shard-size-weighted parameter
/// average. Two ledger entries (download + upload) per selected client.
void fedavg_round(ParametricModel& global, const std::vector<const Dataset*>& selected_shards,
                  const std::vector<int>& selected_ids, const FedConfig& cfg, int round_index,
                  TransmissionLedger* ledger);

/// FedProx round: local objective gains (mu/2)*||w - w_global||^2; with
/// cfg.mu == 0 this is bit-identical to fedavg_round.
void fedprox_round(ParametricModel& global, const std::vector<const Dataset*>& selected_shards,
                   const std::vector<int>& selected_ids, const FedConfig& cfg, int round_index,
                   TransmissionLedger* ledger);

struct FedRunResult {
    std::vector<TracePoint> trace;  // one point per round; accuracy of the global model
    long rounds_run = 0;
};

/// Full baseline run: per round, select clients uniformly without
/// replacement, run the round, record accuracy. All client models must share
/// the global model's architecture; the caller provides the initial global
/// model. proximal == true selects FedProx (uses cfg.mu).
FedRunResult run_fed(ParametricModel& global, const std::vector<Dataset>& shards,
                     const FedConfig& cfg, bool proximal, TransmissionLedger& ledger,
                     const Dataset* global_test);

}  // namespace lcfl

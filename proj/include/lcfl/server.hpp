#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "lcfl/dataset.hpp"
#include "lcfl/generator.hpp"
#include "lcfl/margin.hpp"
#include "lcfl/model.hpp"

namespace lcfl {

/// Provenance of one transmitted artificial example: which client's
/// artificial pool produced it and which clients received it.
struct SelectionRecord {
    long iteration = 0;  // transmission counter T when recorded, 1-based
    int origin_client = -1;
    std::vector<double> x;
    int y = -1;
    int y_minus = -1;
    int i_plus = -1;
    int i_minus = -1;
    double rho = 0.0;
};

enum class TransferDirection { upload, download };
enum class TransferKind { model, generator };

struct TransferEvent {
    TransferDirection direction;
    TransferKind kind;
    int client_id;
    std::size_t bytes;
};

/// Global model-transfer counter; the counter is the event-log length by
/// construction. Generators count as model transfers, matching the
/// same-size-as-model accounting convention.
class TransmissionLedger {
public:
    void record(TransferDirection direction, TransferKind kind, int client_id, std::size_t bytes) {
        events_.push_back({direction, kind, client_id, bytes});
    }
    std::size_t model_transfers() const { return events_.size(); }
    const std::vector<TransferEvent>& events() const { return events_; }

private:
    std::vector<TransferEvent> events_;
};

struct LcflConfig {
    long iterations = 200;           // transmission budget N
    int update_threshold = 16;       // pending-buffer size that triggers an update
    int update_epochs = 5;
    long artificial_per_client = 0;  // 0 means 2x the client's shard size
    int finetune_epochs = 2;
    double finetune_replay_fraction = 0.25;
    long safety_cap = 0;             // max total loop passes; 0 means 50x iterations
    long trace_every = 10;           // transmissions between trace points
    std::uint64_t seed = 0;

    long effective_safety_cap() const { return safety_cap > 0 ? safety_cap : 50 * iterations; }
    void validate() const;
};

/// One client as configured before pre-training: its private shard, an
/// untrained model and an unfitted generator recipe.
struct ClientSetup {
    int client_id = 0;
    Dataset shard;
    std::unique_ptr<ConfidenceModel> model;
    TrainConfig train_cfg;

    enum class GeneratorKind { gmm, kde };
    GeneratorKind generator_kind = GeneratorKind::gmm;
    int gmm_components = 1;
    double kde_bandwidth = 0.1;
    std::optional<DpParams> dp;  // privatize the fitted generator before upload
};

/// Server-side state after pre-training: models and generators obtained by
/// decoding the uploaded blobs. Shards never cross this boundary; only their
/// sizes do.
struct PretrainOutcome {
    std::vector<int> client_ids;
    std::vector<std::unique_ptr<ConfidenceModel>> models;
    std::vector<std::unique_ptr<Generator>> generators;
    std::vector<std::size_t> shard_sizes;
    std::vector<TrainConfig> update_cfgs;

    ModelSet model_set() const;
};

/// Fits every client's model and generator on its own shard and simulates
/// the upload of both through serialization. Two ledger entries per client.
PretrainOutcome pretrain_and_upload(std::vector<ClientSetup>& clients, TransmissionLedger& ledger);

/// Draws each client's artificial dataset D_i from its uploaded generator.
std::vector<Dataset> materialize_artificial(const PretrainOutcome& party, const LcflConfig& cfg);

/// Ablation counterpart: D_i drawn from a pool of held-out real examples,
/// class proportions matched to each client's shard label histogram.
std::vector<Dataset> materialize_from_holdout(const Dataset& holdout,
                                              const std::vector<std::vector<std::size_t>>& shard_hists,
                                              const std::vector<std::size_t>& shard_sizes,
                                              const LcflConfig& cfg);

struct TracePoint {
    long step = 0;           // loop passes at this point
    long transmissions = 0;  // T at this point
    std::vector<double> client_accuracy;  // empty when no test set given
    double pool_margin_loss = 0.0;
};

struct LoopResult {
    std::vector<SelectionRecord> records;
    std::vector<TracePoint> trace;
    long transmissions = 0;
    long passes = 0;
    double margin_loss_start = 0.0;
    double margin_loss_end = 0.0;
    std::vector<Dataset> retained;  // per client, selected data kept across updates
};

/// The server-side selection-update loop. Per pass: sample a client i
/// proportionally to shard sizes, draw (x, y) uniformly from D_i, compute
/// the margin; when rho <= 0 and at least one of (i_plus, i_minus) differs
/// from i, send (x, y, y_minus) to both recipients. A recipient whose
/// pending buffer reaches update_threshold retrains for update_epochs on the
/// buffer mixed with everything it retained from earlier updates. Ends at
/// `iterations` transmissions or at the safety cap; pending buffers are
/// flushed with one final update.
LoopResult selection_loop(ModelSet& models, const std::vector<Dataset>& artificial,
                          const std::vector<std::size_t>& shard_sizes,
                          const std::vector<TrainConfig>& update_cfgs, const LcflConfig& cfg,
                          const Dataset* global_test = nullptr);

/// Download (one ledger entry per client) plus local fine-tuning on the
/// private shard mixed with a replay fraction of the retained pool. A client
/// whose shard accuracy regresses reverts to its pre-finetune model.
void finetune_and_download(std::vector<std::unique_ptr<ConfidenceModel>>& models,
                           const std::vector<int>& client_ids,
                           const std::vector<Dataset>& shards,
                           const std::vector<Dataset>& retained,
                           const std::vector<TrainConfig>& train_cfgs, const LcflConfig& cfg,
                           TransmissionLedger& ledger);

struct ContributionCounts {
    std::vector<long> times_as_origin;
    std::vector<long> times_as_recipient;
};

/// Exact tallies over the record log. A record with i_plus == i_minus counts
/// once for that recipient.
ContributionCounts contribution_counts(const std::vector<SelectionRecord>& records, int n_clients);

/// Majority-vote relabeling of a pool by local-model argmax, votes weighted
/// by shard size. Optional hook; off by default in scenarios.
void relabel_by_ensemble(Dataset& pool, const ModelSet& models,
                         const std::vector<std::size_t>& shard_sizes);

}  // namespace lcfl

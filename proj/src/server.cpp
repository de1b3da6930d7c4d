#include "lcfl/server.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "lcfl/gmm.hpp"
#include "lcfl/kde.hpp"
#include "lcfl/parallel.hpp"
#include "lcfl/rng.hpp"

namespace lcfl {

void LcflConfig::validate() const {
    if (iterations < 1) {
        throw std::invalid_argument("LcflConfig: iterations must be >= 1");
    }
    if (update_threshold < 1) {
        throw std::invalid_argument("LcflConfig: update_threshold must be >= 1");
    }
    if (update_epochs < 1) {
        throw std::invalid_argument("LcflConfig: update_epochs must be >= 1");
    }
    if (artificial_per_client < 0) {
        throw std::invalid_argument("LcflConfig: artificial_per_client must be >= 0");
    }
    if (finetune_epochs < 0) {
        throw std::invalid_argument("LcflConfig: finetune_epochs must be >= 0");
    }
    if (finetune_replay_fraction < 0.0 || finetune_replay_fraction > 1.0) {
        throw std::invalid_argument("LcflConfig: finetune_replay_fraction must lie in [0, 1]");
    }
    if (safety_cap != 0 && safety_cap < iterations) {
        throw std::invalid_argument("LcflConfig: safety_cap must be >= iterations");
    }
    if (trace_every < 1) {
        throw std::invalid_argument("LcflConfig: trace_every must be >= 1");
    }
}

ModelSet PretrainOutcome::model_set() const {
    ModelSet set;
    for (std::size_t i = 0; i < client_ids.size(); ++i) {
        set.add(client_ids[i], models[i].get());
    }
    return set;
}

PretrainOutcome pretrain_and_upload(std::vector<ClientSetup>& clients, TransmissionLedger& ledger) {
    if (clients.empty()) {
        throw std::invalid_argument("pretrain_and_upload: need at least one client");
    }
    PretrainOutcome out;
    for (auto& client : clients) {
        if (client.shard.empty()) {
            throw std::invalid_argument("pretrain_and_upload: client " +
                                        std::to_string(client.client_id) + " has an empty shard");
        }
        client.model->fit(client.shard, client.train_cfg);

        std::unique_ptr<Generator> gen;
        const auto gen_seed = derive_seed(client.train_cfg.seed, "generator-fit",
                                          static_cast<std::uint64_t>(client.client_id));
        switch (client.generator_kind) {
            case ClientSetup::GeneratorKind::gmm:
                gen = std::make_unique<GmmGenerator>(client.shard, client.gmm_components, gen_seed,
                                                     client.client_id);
                break;
            case ClientSetup::GeneratorKind::kde:
                gen = std::make_unique<KdeGenerator>(client.shard, client.kde_bandwidth,
                                                     client.client_id);
                break;
        }
        if (client.dp.has_value()) {
            gen = privatize(*gen, *client.dp,
                            derive_seed(client.train_cfg.seed, "dp",
                                        static_cast<std::uint64_t>(client.client_id)));
        }

        // Transfers are simulated through serialization: the server works on
        // the decoded copies, never on the client-side objects.
        auto model_bytes = client.model->serialize();
        ledger.record(TransferDirection::upload, TransferKind::model, client.client_id,
                      model_bytes.size());
        auto gen_bytes = gen->serialize();
        ledger.record(TransferDirection::upload, TransferKind::generator, client.client_id,
                      gen_bytes.size());

        out.client_ids.push_back(client.client_id);
        out.models.push_back(deserialize_model(model_bytes));
        out.generators.push_back(deserialize_generator(gen_bytes));
        out.shard_sizes.push_back(client.shard.size());
        out.update_cfgs.push_back(client.train_cfg);
    }
    return out;
}

std::vector<Dataset> materialize_artificial(const PretrainOutcome& party, const LcflConfig& cfg) {
    cfg.validate();
    std::vector<Dataset> artificial;
    artificial.reserve(party.generators.size());
    for (std::size_t i = 0; i < party.generators.size(); ++i) {
        const auto k = cfg.artificial_per_client > 0
                           ? static_cast<std::size_t>(cfg.artificial_per_client)
                           : 2 * party.shard_sizes[i];
        artificial.push_back(party.generators[i]->sample(k, derive_seed(cfg.seed, "artificial", i)));
    }
    return artificial;
}

std::vector<Dataset> materialize_from_holdout(const Dataset& holdout,
                                              const std::vector<std::vector<std::size_t>>& shard_hists,
                                              const std::vector<std::size_t>& shard_sizes,
                                              const LcflConfig& cfg) {
    cfg.validate();
    if (holdout.empty()) {
        throw std::invalid_argument("materialize_from_holdout: empty holdout pool");
    }
    std::vector<std::vector<std::size_t>> pool_by_class(static_cast<std::size_t>(holdout.num_classes));
    for (std::size_t i = 0; i < holdout.examples.size(); ++i) {
        pool_by_class[static_cast<std::size_t>(holdout.examples[i].y)].push_back(i);
    }

    std::vector<Dataset> artificial;
    for (std::size_t i = 0; i < shard_hists.size(); ++i) {
        const auto k = cfg.artificial_per_client > 0
                           ? static_cast<std::size_t>(cfg.artificial_per_client)
                           : 2 * shard_sizes[i];
        Rng rng(derive_seed(cfg.seed, "holdout", i));
        std::vector<double> weights(shard_hists[i].size());
        for (std::size_t c = 0; c < weights.size(); ++c) {
            weights[c] = pool_by_class[c].empty() ? 0.0 : static_cast<double>(shard_hists[i][c]);
        }
        Dataset d(holdout.dim, holdout.num_classes);
        d.examples.reserve(k);
        for (std::size_t j = 0; j < k; ++j) {
            const auto label = rng.weighted_index(weights);
            const auto& bucket = pool_by_class[label];
            d.examples.push_back(holdout.examples[bucket[rng.index(bucket.size())]]);
        }
        artificial.push_back(std::move(d));
    }
    return artificial;
}

namespace {

TracePoint make_trace_point(long step, long transmissions, const ModelSet& models,
                            const Dataset* global_test, double pool_margin_loss) {
    TracePoint p;
    p.step = step;
    p.transmissions = transmissions;
    p.pool_margin_loss = pool_margin_loss;
    if (global_test != nullptr) {
        for (const auto& entry : models.entries) {
            p.client_accuracy.push_back(evaluate(*entry.model, *global_test));
        }
    }
    return p;
}

}  // namespace

LoopResult selection_loop(ModelSet& models, const std::vector<Dataset>& artificial,
                          const std::vector<std::size_t>& shard_sizes,
                          const std::vector<TrainConfig>& update_cfgs, const LcflConfig& cfg,
                          const Dataset* global_test) {
    cfg.validate();
    const std::size_t n = models.entries.size();
    if (artificial.size() != n || shard_sizes.size() != n || update_cfgs.size() != n) {
        throw std::invalid_argument("selection_loop: per-client argument length mismatch");
    }
    for (const auto& d : artificial) {
        if (d.empty()) {
            throw std::invalid_argument("selection_loop: empty artificial dataset");
        }
    }

    Dataset pool(artificial.front().dim, artificial.front().num_classes);
    for (const auto& d : artificial) {
        pool.append(d);
    }

    LoopResult result;
    result.margin_loss_start = margin_loss(models, pool);
    result.trace.push_back(make_trace_point(0, 0, models, global_test, result.margin_loss_start));

    std::vector<Dataset> pending;
    result.retained.clear();
    for (std::size_t i = 0; i < n; ++i) {
        pending.emplace_back(pool.dim, pool.num_classes);
        result.retained.emplace_back(pool.dim, pool.num_classes);
    }
    std::vector<std::uint64_t> update_counter(n, 0);

    Rng rng(derive_seed(cfg.seed, "loop"));
    std::vector<double> weights;
    weights.reserve(n);
    for (auto s : shard_sizes) {
        weights.push_back(static_cast<double>(s));
    }

    auto run_update = [&](std::size_t pos) {
        Dataset batch = pending[pos];
        batch.append(result.retained[pos]);
        TrainConfig ucfg = update_cfgs[pos];
        ucfg.epochs = cfg.update_epochs;
        ucfg.seed = derive_seed(cfg.seed, "update",
                                (static_cast<std::uint64_t>(pos) << 32) | update_counter[pos]);
        update_counter[pos]++;
        models.entries[pos].model->update(batch, ucfg);
        result.retained[pos].append(pending[pos]);
        pending[pos].examples.clear();
    };

    long transmissions = 0;
    long passes = 0;
    const long cap = cfg.effective_safety_cap();
    while (transmissions < cfg.iterations && passes < cap) {
        passes++;
        const std::size_t i = rng.weighted_index(weights);
        const int origin_id = models.entries[i].client_id;
        const auto& example = artificial[i].examples[rng.index(artificial[i].size())];

        const auto verdict = mpmc_margin(models, example.x, example.y);
        if (!(verdict.rho <= 0.0)) {
            continue;
        }
        if (verdict.i_plus == origin_id && verdict.i_minus == origin_id) {
            continue;  // both roles fall on the origin, nothing is sent
        }

        transmissions++;
        SelectionRecord rec;
        rec.iteration = transmissions;
        rec.origin_client = origin_id;
        rec.x = example.x;
        rec.y = example.y;
        rec.y_minus = verdict.y_minus;
        rec.i_plus = verdict.i_plus;
        rec.i_minus = verdict.i_minus;
        rec.rho = verdict.rho;
        result.records.push_back(std::move(rec));

        const std::size_t pos_plus = models.position(verdict.i_plus);
        const std::size_t pos_minus = models.position(verdict.i_minus);
        pending[pos_plus].add(example.x, example.y);
        if (pos_minus != pos_plus) {
            pending[pos_minus].add(example.x, example.y);
        }
        if (static_cast<int>(pending[pos_plus].size()) >= cfg.update_threshold) {
            run_update(pos_plus);
        }
        if (pos_minus != pos_plus &&
            static_cast<int>(pending[pos_minus].size()) >= cfg.update_threshold) {
            run_update(pos_minus);
        }

        if (transmissions % cfg.trace_every == 0) {
            result.trace.push_back(make_trace_point(passes, transmissions, models, global_test,
                                                    margin_loss(models, pool)));
        }
    }

    // Flush whatever is still buffered with one final update per client.
    for (std::size_t i = 0; i < n; ++i) {
        if (!pending[i].empty()) {
            run_update(i);
        }
    }

    result.transmissions = transmissions;
    result.passes = passes;
    result.margin_loss_end = margin_loss(models, pool);
    result.trace.push_back(
        make_trace_point(passes, transmissions, models, global_test, result.margin_loss_end));
    return result;
}

void finetune_and_download(std::vector<std::unique_ptr<ConfidenceModel>>& models,
                           const std::vector<int>& client_ids,
                           const std::vector<Dataset>& shards,
                           const std::vector<Dataset>& retained,
                           const std::vector<TrainConfig>& train_cfgs, const LcflConfig& cfg,
                           TransmissionLedger& ledger) {
    cfg.validate();
    const std::size_t n = models.size();
    if (client_ids.size() != n || shards.size() != n || retained.size() != n ||
        train_cfgs.size() != n) {
        throw std::invalid_argument("finetune_and_download: per-client argument length mismatch");
    }

    for (std::size_t i = 0; i < n; ++i) {
        ledger.record(TransferDirection::download, TransferKind::model, client_ids[i],
                      models[i]->serialize().size());
        if (cfg.finetune_epochs == 0 || shards[i].empty()) {
            continue;
        }

        const double before = evaluate(*models[i], shards[i]);
        auto backup = models[i]->clone();

        Dataset mix = shards[i];
        const auto replay = static_cast<std::size_t>(
            std::llround(cfg.finetune_replay_fraction * static_cast<double>(retained[i].size())));
        if (replay > 0) {
            Rng rng(derive_seed(cfg.seed, "finetune-replay", i));
            std::vector<std::size_t> order(retained[i].size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            rng.shuffle(order);
            for (std::size_t k = 0; k < replay; ++k) {
                mix.examples.push_back(retained[i].examples[order[k]]);
            }
        }

        TrainConfig fcfg = train_cfgs[i];
        fcfg.epochs = cfg.finetune_epochs;
        fcfg.seed = derive_seed(cfg.seed, "finetune", i);
        models[i]->update(mix, fcfg);

        // Prudent strategy: a regression on the private shard reverts.
        if (evaluate(*models[i], shards[i]) < before) {
            models[i] = std::move(backup);
        }
    }
}

ContributionCounts contribution_counts(const std::vector<SelectionRecord>& records, int n_clients) {
    ContributionCounts counts;
    counts.times_as_origin.assign(static_cast<std::size_t>(n_clients), 0);
    counts.times_as_recipient.assign(static_cast<std::size_t>(n_clients), 0);
    for (const auto& rec : records) {
        counts.times_as_origin[static_cast<std::size_t>(rec.origin_client)]++;
        counts.times_as_recipient[static_cast<std::size_t>(rec.i_plus)]++;
        if (rec.i_minus != rec.i_plus) {
            counts.times_as_recipient[static_cast<std::size_t>(rec.i_minus)]++;
        }
    }
    return counts;
}

void relabel_by_ensemble(Dataset& pool, const ModelSet& models,
                         const std::vector<std::size_t>& shard_sizes) {
    if (shard_sizes.size() != models.entries.size()) {
        throw std::invalid_argument("relabel_by_ensemble: weight count mismatch");
    }
    parallel::for_each_index(pool.size(), [&](std::size_t i) {
        std::vector<double> votes(static_cast<std::size_t>(pool.num_classes), 0.0);
        for (std::size_t mIdx = 0; mIdx < models.entries.size(); ++mIdx) {
            const int cls = predict(*models.entries[mIdx].model, pool.examples[i].x);
            votes[static_cast<std::size_t>(cls)] += static_cast<double>(shard_sizes[mIdx]);
        }
        pool.examples[i].y = static_cast<int>(
            std::max_element(votes.begin(), votes.end()) - votes.begin());
    });
}

}  // namespace lcfl

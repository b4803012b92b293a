#include "rssgen/adapt.hpp"

#include <iostream>
#include <stdexcept>

#include <json.hpp>

#include "rssgen/rng.hpp"

namespace rssgen {

using nlohmann::json;

std::string adapt_method_name(AdaptMethod m) {
    switch (m) {
        case AdaptMethod::proposed: return "proposed";
        case AdaptMethod::finetune: return "finetune";
        case AdaptMethod::finetune_nophys: return "finetune_nophys";
        case AdaptMethod::averaged: return "averaged";
    }
    return "proposed";
}

AdaptMethod adapt_method_from_name(const std::string& name) {
    if (name == "proposed") return AdaptMethod::proposed;
    if (name == "finetune") return AdaptMethod::finetune;
    if (name == "finetune_nophys") return AdaptMethod::finetune_nophys;
    if (name == "averaged") return AdaptMethod::averaged;
    throw std::invalid_argument("unknown adapt method: " + name);
}

TrainConfig AdaptConfig::as_train_config(TrainMethod method) const {
    TrainConfig cfg;
    cfg.epochs = epochs > 0 ? epochs : 1;
    cfg.batch = batch;
    cfg.lr = lr;
    cfg.lr_decay_epochs = {};
    cfg.lambda = lambda;
    cfg.clip_norm = clip_norm;
    cfg.seed = seed;
    cfg.method = method;
    return cfg;
}

AdaptResult collaborative_adapt(int bs_id, const Dataset& adapt_data, const Dataset& eval_data,
                                const std::vector<Donor>& donors, const Model& own_model,
                                AdaptMethod method, const AdaptConfig& acfg) {
    if (adapt_data.empty()) throw std::invalid_argument("collaborative_adapt: empty adaptation set");
    if (acfg.epochs < 0) throw std::invalid_argument("collaborative_adapt: epochs must be >= 0");

    const bool wants_donors = method == AdaptMethod::proposed || method == AdaptMethod::averaged;
    AdaptResult result{own_model, {}, {}, {}, 0, 0, false};

    if (wants_donors && donors.empty()) {
        std::cerr << "[rssgen] warning: BS " << bs_id
                  << " has no donors; falling back to local fine-tuning\n";
        result.fell_back_to_finetune = true;
    }

    TrainMethod loss_method =
        method == AdaptMethod::finetune_nophys ? TrainMethod::baseline1 : TrainMethod::physics;

    if (wants_donors && !donors.empty()) {
        std::vector<Model> models;
        models.reserve(donors.size());
        for (const Donor& d : donors) {
            models.push_back(d.model);
            result.bytes_exchanged += snapshot_bytes(d.model);
        }
        if (method == AdaptMethod::proposed) {
            // Requester-side statistics of the new-domain data under each
            // donor's encoder, compared against the donor's home statistics.
            result.w2.reserve(donors.size());
            for (const Donor& d : donors) {
                FeatureStats mine;
                for (const Record& rec : adapt_data) {
                    update_stats(mine, encode(d.model, rec.features));
                }
                result.flops += 2 * macs_encoders(d.model.config()) *
                                static_cast<std::int64_t>(adapt_data.size());
                result.w2.push_back(w2_distance(mine, d.home_stats));
            }
            result.gamma = similarity_weights(result.w2, acfg.w2_eps);
        } else {
            result.gamma.gamma.assign(donors.size(), 1.0 / static_cast<double>(donors.size()));
        }
        result.model = aggregate(models, result.gamma);
    }

    const std::string gamma_json = json(result.gamma.gamma).dump();
    const TrainConfig tcfg = acfg.as_train_config(loss_method);

    auto log_row = [&](int epoch) {
        AdaptationRow row;
        row.bs_id = bs_id;
        row.method = adapt_method_name(method);
        row.samples_used = static_cast<int>(adapt_data.size());
        row.epoch = epoch;
        if (!eval_data.empty()) {
            const EvalReport rep = evaluate(result.model, eval_data, TrainMethod::physics);
            row.rmse = rep.rmse_dbm;
            row.mae = rep.mae_dbm;
        }
        row.flops = result.flops;
        row.bytes_exchanged = result.bytes_exchanged;
        row.gamma_json = gamma_json;
        result.rows.push_back(row);
    };

    log_row(0);
    OptimizerState opt;
    for (int epoch = 0; epoch < acfg.epochs; ++epoch) {
        sgd_epoch(result.model, adapt_data, tcfg, acfg.lr,
                  mix_seed(acfg.seed, 0xada7ULL, static_cast<std::uint64_t>(epoch)), nullptr, &opt);
        result.flops += flops_estimate(result.model, static_cast<std::int64_t>(adapt_data.size()));
        log_row(epoch + 1);
    }
    return result;
}

} // namespace rssgen

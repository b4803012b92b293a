#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rssgen/stats.hpp"
#include "rssgen/trainer.hpp"

namespace rssgen {

enum class AdaptMethod { proposed, finetune, finetune_nophys, averaged };

std::string adapt_method_name(AdaptMethod m);
AdaptMethod adapt_method_from_name(const std::string& name);

/// A helper BS as seen by the requester: its parameter snapshot and the
/// feature statistics it recorded on its home domain.
struct Donor {
    int bs_id = 0;
    Model model;
    FeatureStats home_stats;
};

struct AdaptConfig {
    int epochs = 10;
    int batch = 16;
    double lr = 0.05;
    double lambda = 0.5;
    double clip_norm = 1.0;
    std::uint64_t seed = 0;
    double w2_eps = 1e-6;

    TrainConfig as_train_config(TrainMethod method) const;
};

struct AdaptationRow {
    int bs_id = 0;
    std::string method;
    int samples_used = 0;
    int epoch = 0;
    double rmse = 0.0;
    double mae = 0.0;
    std::int64_t flops = 0;
    std::size_t bytes_exchanged = 0;
    std::string gamma_json;
};

struct AdaptResult {
    Model model;
    std::vector<AdaptationRow> rows; // epoch 0 = before any fine-tuning
    AggregationWeights gamma;        // empty for local fine-tuning
    std::vector<double> w2;          // per-donor distances (proposed only)
    std::int64_t flops = 0;
    std::size_t bytes_exchanged = 0;
    bool fell_back_to_finetune = false;
};

/// Rolling-window trigger for Algorithm-style shift detection: fires when
/// the windowed RMSE exceeds factor x the training-time baseline RMSE.
struct ShiftDetector {
    double baseline_rmse = 0.0;
    double factor = 1.5;

    bool triggered(double window_rmse) const { return window_rmse > factor * baseline_rmse; }
};

/// Collaborative domain adaptation for one requester BS.
///   proposed        - requester encodes adapt_data under every donor model,
///                     measures W2 against the donor's home stats, aggregates
///                     by softmax(1/W2), then fine-tunes with the physics loss
///   averaged        - uniform (FedAvg-style) aggregation, same fine-tuning
///   finetune        - local fine-tuning of own_model with the physics loss
///   finetune_nophys - local fine-tuning with the plain MSE loss
/// FLOPs include the K-1 encoder passes the similarity measurement costs;
/// bytes_exchanged is the analytic snapshot payload sum. With no donors the
/// aggregation methods fall back to fine-tuning and log a warning.
AdaptResult collaborative_adapt(int bs_id, const Dataset& adapt_data, const Dataset& eval_data,
                                const std::vector<Donor>& donors, const Model& own_model,
                                AdaptMethod method, const AdaptConfig& acfg);

} // namespace rssgen

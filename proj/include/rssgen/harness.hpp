#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rssgen/adapt.hpp"
#include "rssgen/pac.hpp"
#include "rssgen/trainer.hpp"

namespace rssgen {

/// Fully-resolved experiment configuration. Loaded from a schema-versioned
/// JSON document with sections scene/channel/features/dataset/train/sweep/
/// adapt/pac; unknown keys are rejected and every seed must be explicit in
/// the file (no implicit seed defaults).
struct ExperimentConfig {
    SceneConfig scene; // per-BS seed filled from bs_seeds
    ChannelParams channel;
    std::uint64_t shadow_seed = 0;
    FeatureConfig features;

    int n_bs = 5;
    std::vector<std::uint64_t> bs_seeds;
    int n_train = 800;
    int n_val1 = 200;
    int n_val2 = 400;
    double dt_s = 0.3;
    std::vector<int> train_buses;
    std::vector<int> val1_add_buses;
    std::vector<bool> val1_move_vehicles;
    double val1_rx_height_m = 0.0; // 0 keeps the training receiver height
    Vec3 bus_size{12.0, 3.0, 3.5};
    DomainShiftSpec val2_noise;
    DomainShiftSpec train_covariate;
    std::vector<int> train_covariate_bs; // 1-based BS ids trained on noised features

    TrainConfig train;
    std::vector<std::uint64_t> train_seeds;
    int enc_hidden = 32;
    int enc_out = 16;
    int head_hidden = 64;
    int embed_dim = 8;

    SweepSpec sweep;

    AdaptConfig adapt;
    int adapt_pool = 100;
    std::vector<double> budget_fractions{0.1, 0.25, 0.5, 0.75, 1.0};
    double detect_factor = 1.5;
    bool force_adapt = false;

    FiniteClassSpec pac;
    int pac_configs = 20;

    std::string config_hash; // FNV-1a of the canonical config JSON

    static ExperimentConfig load(const std::string& path);
    static ExperimentConfig from_json_text(const std::string& text);
    /// --seed support: re-derives every seed in the config from one value.
    void override_seed(std::uint64_t seed);

    ModelConfig model_config() const;
};

/// Per-BS dataset triple as generated / loaded from disk.
struct BsData {
    int bs_id = 1;
    Dataset train;
    Dataset val1;
    Dataset val2;
};

/// In-memory dataset generation (the core of cmd_gen). Deterministic per
/// config; bs_index is 0-based.
BsData generate_bs_data(const ExperimentConfig& cfg, int bs_index);

/// Base scene for a BS after appending its configured bus blockers.
Scene base_scene_for_bs(const ExperimentConfig& cfg, int bs_index);
/// The VAL-1 concept shift applied to that base scene.
Scene val1_scene_for_bs(const ExperimentConfig& cfg, int bs_index, const Scene& base);

/// CLI entry points; out_dir is created as needed. Each writes files that
/// embed the config hash and are byte-identical across reruns.
void cmd_gen(const ExperimentConfig& cfg, const std::string& out_dir);
void cmd_train(const ExperimentConfig& cfg, const std::string& out_dir);
void cmd_sweep(const ExperimentConfig& cfg, const std::string& out_dir);
void cmd_adapt(const ExperimentConfig& cfg, const std::string& out_dir, const std::string& scenario);
void cmd_pac(const ExperimentConfig& cfg, const std::string& out_dir);

/// Scenario names: "val1-bs45" reads digits as requester BS ids on their
/// VAL-1 data; "val2-bs2" likewise on VAL-2. Donors are all other BSs.
struct AdaptScenario {
    std::string name;
    std::vector<int> requesters; // 1-based
    bool use_val2 = false;
};
AdaptScenario parse_scenario(const std::string& name, int n_bs);

/// Runs per-BS jobs with at most RSSGEN_THREADS worker threads (default:
/// hardware concurrency). Each job writes only its own slot, so results are
/// independent of the thread count.
void parallel_for_bs(int n, const std::function<void(int)>& fn);

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRow& row);
std::string adapt_csv_header();
std::string adapt_csv_row(const AdaptationRow& row);

} // namespace rssgen

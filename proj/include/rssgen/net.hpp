#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rssgen/features.hpp"

namespace rssgen {

/// Layer dimensions of the predictor. Four per-modality encoders (two dense
/// tanh layers each) feed a fused feature of dimension fused_dim(); the head
/// (three dense layers, softplus on the output) maps [fused, embedding(i,j)]
/// to four nonnegative values per receiver: reflection gain, blockage
/// attenuation, reflection bound R-bar, and blockage bound B, all in dB.
struct ModelConfig {
    int bev_dims = 0;
    int radar_dims = 0;
    int gps_dims = 0;
    int rgb_dims = 0;
    int enc_hidden = 32;
    int enc_out = 16;
    int head_hidden = 64;
    int embed_dim = 8;
    int n_receivers = 64;
    /// Fixed input scaling for the coordinate-valued modalities. Radar and
    /// GPS rows carry meters and m/s (tens of units); tanh encoders need
    /// them in O(1) range.
    double radar_input_scale = 0.025;
    double gps_input_scale = 0.025;

    static constexpr int n_outputs = 4;

    int fused_dim() const { return 4 * enc_out; }
    int head_in() const { return fused_dim() + embed_dim; }

    static ModelConfig for_features(const FeatureConfig& fcfg, int n_receivers);
    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

/// Head column indices within the 4-wide output rows.
enum HeadIndex : int { kHeadReflection = 0, kHeadBlockage = 1, kHeadRbar = 2, kHeadBBound = 3 };

struct ParamEntry {
    std::string name;
    std::size_t offset;
    std::size_t rows;
    std::size_t cols; // 1 for bias vectors and embeddings' per-row layout
    std::size_t size() const { return rows * cols; }
};

class Model {
public:
    explicit Model(const ModelConfig& cfg);

    /// Glorot-uniform weights with a = sqrt(6 / (fan_in + fan_out)), zero
    /// biases, uniform embeddings; deterministic per seed.
    static Model init(const ModelConfig& cfg, std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    const std::vector<ParamEntry>& layout() const { return layout_; }
    std::vector<double>& params() { return theta_; }
    const std::vector<double>& params() const { return theta_; }
    std::size_t param_count() const { return theta_.size(); }

    std::span<double> entry_span(std::size_t idx);
    std::span<const double> entry_span(std::size_t idx) const;

private:
    ModelConfig cfg_;
    std::vector<ParamEntry> layout_;
    std::vector<double> theta_;
};

struct Prediction {
    /// rss_hat = r_los + reflection_hat - blockage_hat, per receiver.
    std::vector<double> rss_hat_dbm;
    /// N x 4 row-major, columns per HeadIndex; nonnegative via softplus.
    std::vector<double> heads;
    /// Fused feature f of dimension fused_dim(), input to FeatureStats.
    std::vector<double> fused;
};

/// Intermediate activations retained for backward().
struct ForwardCache {
    std::vector<double> inputs[4]; // bev, radar, gps, rgb slices
    std::vector<double> enc_h1[4];
    std::vector<double> enc_h2[4];
    std::vector<double> fused;
    std::vector<double> head_x;  // N x head_in
    std::vector<double> head_h1; // N x H
    std::vector<double> head_h2; // N x H
    std::vector<double> head_z3; // N x 4 pre-softplus
};

/// features must follow the FeatureBlock::flatten() layout and match the
/// config dims; r_los must have n_receivers entries. Throws
/// std::invalid_argument on shape mismatch.
Prediction forward(const Model& model, std::span<const double> features, std::span<const double> r_los,
                   ForwardCache* cache = nullptr);

/// Encoder-only pass producing the fused feature f; this is the inference a
/// requester runs under each donor model when measuring domain similarity.
std::vector<double> encode(const Model& model, std::span<const double> features);

/// Accumulates d(loss)/d(theta) into grad (same layout/size as params) given
/// d(loss)/d(heads) as an N x 4 row-major block. forward() must have filled
/// the cache for the same model and inputs.
void backward(const Model& model, const ForwardCache& cache, std::span<const double> dheads,
              std::span<double> grad);

/// Scales grad in place so its global L2 norm is at most max_norm; returns
/// the norm before clipping.
double clip_global_norm(std::span<double> grad, double max_norm);

/// Multiply-accumulate count of one forward pass (weights only, biases and
/// activations excluded).
std::int64_t macs_forward(const ModelConfig& cfg);
std::int64_t macs_encoders(const ModelConfig& cfg);

/// Training-cost estimate: 2 * MACs(forward) * 3 * batch, the documented
/// forward+backward approximation.
std::int64_t flops_estimate(const Model& model, std::int64_t batch);
/// Inference-only cost: 2 * MACs(forward) * batch.
std::int64_t flops_forward(const Model& model, std::int64_t batch);

/// Snapshot file layout: u64 little-endian header length, a JSON header
/// (schema version, config, layer shapes, free-form meta), then the flat
/// parameter vector as little-endian doubles.
void save_snapshot(const Model& model, const std::string& path, const std::string& meta_json = "{}");

struct LoadedSnapshot {
    Model model;
    std::string meta_json;
};
LoadedSnapshot load_snapshot(const std::string& path);

/// Size in bytes of a serialized snapshot (the analytic per-donor payload).
std::size_t snapshot_bytes(const Model& model);

} // namespace rssgen

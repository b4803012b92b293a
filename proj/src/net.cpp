#include "rssgen/net.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "rssgen/linalg.hpp"
#include "rssgen/rng.hpp"

namespace rssgen {

using nlohmann::json;

ModelConfig ModelConfig::for_features(const FeatureConfig& fcfg, int n_receivers) {
    ModelConfig cfg;
    cfg.bev_dims = fcfg.bev_cells();
    cfg.radar_dims = fcfg.radar_dims();
    cfg.gps_dims = fcfg.gps_dims();
    cfg.rgb_dims = fcfg.bev_cells();
    cfg.n_receivers = n_receivers;
    return cfg;
}

void ModelConfig::validate() const {
    if (bev_dims <= 0 || radar_dims <= 0 || gps_dims <= 0 || rgb_dims <= 0)
        throw std::invalid_argument("ModelConfig: input dims must be > 0");
    if (enc_hidden <= 0 || enc_out <= 0 || head_hidden <= 0 || embed_dim <= 0 || n_receivers <= 0)
        throw std::invalid_argument("ModelConfig: layer dims must be > 0");
}

namespace {

const char* kEncNames[4] = {"bev", "radar", "gps", "rgb"};

int encoder_input_dim(const ModelConfig& cfg, int e) {
    switch (e) {
        case 0: return cfg.bev_dims;
        case 1: return cfg.radar_dims;
        case 2: return cfg.gps_dims;
        default: return cfg.rgb_dims;
    }
}

std::vector<ParamEntry> build_layout(const ModelConfig& cfg) {
    std::vector<ParamEntry> entries;
    std::size_t offset = 0;
    auto add = [&](std::string name, std::size_t rows, std::size_t cols) {
        entries.push_back({std::move(name), offset, rows, cols});
        offset += rows * cols;
    };
    for (int e = 0; e < 4; ++e) {
        const std::string base = std::string("enc_") + kEncNames[e];
        const auto in = static_cast<std::size_t>(encoder_input_dim(cfg, e));
        add(base + ".w1", static_cast<std::size_t>(cfg.enc_hidden), in);
        add(base + ".b1", static_cast<std::size_t>(cfg.enc_hidden), 1);
        add(base + ".w2", static_cast<std::size_t>(cfg.enc_out), static_cast<std::size_t>(cfg.enc_hidden));
        add(base + ".b2", static_cast<std::size_t>(cfg.enc_out), 1);
    }
    add("head.w1", static_cast<std::size_t>(cfg.head_hidden), static_cast<std::size_t>(cfg.head_in()));
    add("head.b1", static_cast<std::size_t>(cfg.head_hidden), 1);
    add("head.w2", static_cast<std::size_t>(cfg.head_hidden), static_cast<std::size_t>(cfg.head_hidden));
    add("head.b2", static_cast<std::size_t>(cfg.head_hidden), 1);
    add("head.w3", static_cast<std::size_t>(ModelConfig::n_outputs), static_cast<std::size_t>(cfg.head_hidden));
    add("head.b3", static_cast<std::size_t>(ModelConfig::n_outputs), 1);
    add("embed", static_cast<std::size_t>(cfg.n_receivers), static_cast<std::size_t>(cfg.embed_dim));
    return entries;
}

// Layout entry indices: 4 entries per encoder, then 6 head entries, then the
// embedding table.
constexpr std::size_t kHeadW1 = 16, kHeadB1 = 17, kHeadW2 = 18, kHeadB2 = 19, kHeadW3 = 20, kHeadB3 = 21;
constexpr std::size_t kEmbed = 22;

inline double softplus(double x) {
    // Overflow-safe: softplus(x) = max(x, 0) + log1p(exp(-|x|)).
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace

Model::Model(const ModelConfig& cfg) : cfg_(cfg), layout_(build_layout(cfg)) {
    cfg.validate();
    theta_.assign(layout_.back().offset + layout_.back().size(), 0.0);
}

Model Model::init(const ModelConfig& cfg, std::uint64_t seed) {
    Model m(cfg);
    Rng rng(mix_seed(seed, 0x1417ULL));
    for (std::size_t i = 0; i < m.layout_.size(); ++i) {
        const ParamEntry& e = m.layout_[i];
        if (e.cols == 1) continue; // biases start at zero
        auto span = m.entry_span(i);
        const double fan_in = static_cast<double>(e.cols);
        const double fan_out = static_cast<double>(e.rows);
        const double a = std::sqrt(6.0 / (fan_in + fan_out));
        for (double& v : span) v = rng.uniform(-a, a);
    }
    return m;
}

std::span<double> Model::entry_span(std::size_t idx) {
    const ParamEntry& e = layout_.at(idx);
    return {theta_.data() + e.offset, e.size()};
}

std::span<const double> Model::entry_span(std::size_t idx) const {
    const ParamEntry& e = layout_.at(idx);
    return {theta_.data() + e.offset, e.size()};
}

namespace {

/// y = tanh(W x + b) for one vector; returns pre-activation optionally.
void dense_tanh(std::span<const double> w, std::span<const double> b, std::span<const double> x,
                std::span<double> out) {
    const std::size_t rows = b.size(), cols = x.size();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* wr = w.data() + r * cols;
        double acc = b[r];
        for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
        out[r] = std::tanh(acc);
    }
}

} // namespace

Prediction forward(const Model& model, std::span<const double> features, std::span<const double> r_los,
                   ForwardCache* cache) {
    const ModelConfig& cfg = model.config();
    const std::size_t expected = static_cast<std::size_t>(cfg.bev_dims + cfg.radar_dims + cfg.gps_dims + cfg.rgb_dims);
    if (features.size() != expected) throw std::invalid_argument("forward: feature vector size mismatch");
    if (r_los.size() != static_cast<std::size_t>(cfg.n_receivers))
        throw std::invalid_argument("forward: r_los size mismatch");

    ForwardCache local;
    ForwardCache& cc = cache ? *cache : local;

    const int n = cfg.n_receivers;
    const int mf = cfg.fused_dim();
    const int hin = cfg.head_in();
    const int hh = cfg.head_hidden;

    // Encoder stage.
    std::size_t pos = 0;
    cc.fused.assign(static_cast<std::size_t>(mf), 0.0);
    for (int e = 0; e < 4; ++e) {
        const auto in_dim = static_cast<std::size_t>(encoder_input_dim(cfg, e));
        cc.inputs[e].assign(features.begin() + static_cast<std::ptrdiff_t>(pos),
                            features.begin() + static_cast<std::ptrdiff_t>(pos + in_dim));
        const double scale = e == 1 ? cfg.radar_input_scale : (e == 2 ? cfg.gps_input_scale : 1.0);
        if (scale != 1.0) {
            for (double& v : cc.inputs[e]) v *= scale;
        }
        pos += in_dim;
        cc.enc_h1[e].assign(static_cast<std::size_t>(cfg.enc_hidden), 0.0);
        cc.enc_h2[e].assign(static_cast<std::size_t>(cfg.enc_out), 0.0);
        const std::size_t base = static_cast<std::size_t>(e) * 4;
        dense_tanh(model.entry_span(base + 0), model.entry_span(base + 1), cc.inputs[e], cc.enc_h1[e]);
        dense_tanh(model.entry_span(base + 2), model.entry_span(base + 3), cc.enc_h1[e], cc.enc_h2[e]);
        std::copy(cc.enc_h2[e].begin(), cc.enc_h2[e].end(), cc.fused.begin() + e * cfg.enc_out);
    }

    // Head stage, batched over receivers.
    cc.head_x.assign(static_cast<std::size_t>(n * hin), 0.0);
    const auto embed = model.entry_span(kEmbed);
    for (int i = 0; i < n; ++i) {
        double* row = cc.head_x.data() + static_cast<std::size_t>(i) * hin;
        std::memcpy(row, cc.fused.data(), sizeof(double) * static_cast<std::size_t>(mf));
        std::memcpy(row + mf, embed.data() + static_cast<std::size_t>(i) * cfg.embed_dim,
                    sizeof(double) * static_cast<std::size_t>(cfg.embed_dim));
    }

    auto apply_dense_batch = [&](const std::vector<double>& x, std::size_t in_dim, std::size_t w_idx,
                                 std::size_t b_idx, std::size_t out_dim, std::vector<double>& out, bool tanh_act) {
        out.assign(static_cast<std::size_t>(n) * out_dim, 0.0);
        const auto b = model.entry_span(b_idx);
        for (int i = 0; i < n; ++i) {
            double* row = out.data() + static_cast<std::size_t>(i) * out_dim;
            for (std::size_t j = 0; j < out_dim; ++j) row[j] = b[j];
        }
        la::gemm_nt(x.data(), model.entry_span(w_idx).data(), out.data(), static_cast<std::size_t>(n), out_dim,
                    in_dim);
        if (tanh_act) {
            for (double& v : out) v = std::tanh(v);
        }
    };

    apply_dense_batch(cc.head_x, static_cast<std::size_t>(hin), kHeadW1, kHeadB1, static_cast<std::size_t>(hh),
                      cc.head_h1, true);
    apply_dense_batch(cc.head_h1, static_cast<std::size_t>(hh), kHeadW2, kHeadB2, static_cast<std::size_t>(hh),
                      cc.head_h2, true);
    apply_dense_batch(cc.head_h2, static_cast<std::size_t>(hh), kHeadW3, kHeadB3,
                      static_cast<std::size_t>(ModelConfig::n_outputs), cc.head_z3, false);

    Prediction pred;
    pred.fused = cc.fused;
    pred.heads.resize(static_cast<std::size_t>(n) * ModelConfig::n_outputs);
    pred.rss_hat_dbm.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double* z = cc.head_z3.data() + static_cast<std::size_t>(i) * ModelConfig::n_outputs;
        double* h = pred.heads.data() + static_cast<std::size_t>(i) * ModelConfig::n_outputs;
        for (int j = 0; j < ModelConfig::n_outputs; ++j) h[j] = softplus(z[j]);
        pred.rss_hat_dbm[static_cast<std::size_t>(i)] = r_los[static_cast<std::size_t>(i)] + h[kHeadReflection] - h[kHeadBlockage];
    }
    return pred;
}

std::vector<double> encode(const Model& model, std::span<const double> features) {
    const ModelConfig& cfg = model.config();
    const std::size_t expected = static_cast<std::size_t>(cfg.bev_dims + cfg.radar_dims + cfg.gps_dims + cfg.rgb_dims);
    if (features.size() != expected) throw std::invalid_argument("encode: feature vector size mismatch");
    std::vector<double> fused(static_cast<std::size_t>(cfg.fused_dim()), 0.0);
    std::vector<double> h1(static_cast<std::size_t>(cfg.enc_hidden));
    std::vector<double> scaled;
    std::size_t pos = 0;
    for (int e = 0; e < 4; ++e) {
        const auto in_dim = static_cast<std::size_t>(encoder_input_dim(cfg, e));
        std::span<const double> x = features.subspan(pos, in_dim);
        const double scale = e == 1 ? cfg.radar_input_scale : (e == 2 ? cfg.gps_input_scale : 1.0);
        if (scale != 1.0) {
            scaled.assign(x.begin(), x.end());
            for (double& v : scaled) v *= scale;
            x = scaled;
        }
        pos += in_dim;
        const std::size_t base = static_cast<std::size_t>(e) * 4;
        dense_tanh(model.entry_span(base + 0), model.entry_span(base + 1), x, h1);
        std::span<double> out(fused.data() + static_cast<std::size_t>(e) * cfg.enc_out,
                              static_cast<std::size_t>(cfg.enc_out));
        dense_tanh(model.entry_span(base + 2), model.entry_span(base + 3), h1, out);
    }
    return fused;
}

void backward(const Model& model, const ForwardCache& cache, std::span<const double> dheads,
              std::span<double> grad) {
    const ModelConfig& cfg = model.config();
    const int n = cfg.n_receivers;
    const int mf = cfg.fused_dim();
    const int hin = cfg.head_in();
    const std::size_t hh = static_cast<std::size_t>(cfg.head_hidden);
    constexpr std::size_t no = ModelConfig::n_outputs;
    if (dheads.size() != static_cast<std::size_t>(n) * no) throw std::invalid_argument("backward: dheads size mismatch");
    if (grad.size() != model.param_count()) throw std::invalid_argument("backward: grad size mismatch");

    auto gspan = [&](std::size_t idx) {
        const ParamEntry& e = model.layout()[idx];
        return std::span<double>(grad.data() + e.offset, e.size());
    };

    // Through softplus: dz3 = dheads * sigmoid(z3).
    std::vector<double> dz3(static_cast<std::size_t>(n) * no);
    for (std::size_t i = 0; i < dz3.size(); ++i) dz3[i] = dheads[i] * sigmoid(cache.head_z3[i]);

    // Output layer.
    la::gemm_tn(dz3.data(), cache.head_h2.data(), gspan(kHeadW3).data(), static_cast<std::size_t>(n), hh, no);
    {
        auto gb = gspan(kHeadB3);
        for (int i = 0; i < n; ++i)
            for (std::size_t j = 0; j < no; ++j) gb[j] += dz3[static_cast<std::size_t>(i) * no + j];
    }

    std::vector<double> dh2(static_cast<std::size_t>(n) * hh, 0.0);
    la::gemm_nn(dz3.data(), model.entry_span(kHeadW3).data(), dh2.data(), static_cast<std::size_t>(n), hh, no);
    for (std::size_t i = 0; i < dh2.size(); ++i) dh2[i] *= 1.0 - cache.head_h2[i] * cache.head_h2[i];

    la::gemm_tn(dh2.data(), cache.head_h1.data(), gspan(kHeadW2).data(), static_cast<std::size_t>(n), hh, hh);
    {
        auto gb = gspan(kHeadB2);
        for (int i = 0; i < n; ++i)
            for (std::size_t j = 0; j < hh; ++j) gb[j] += dh2[static_cast<std::size_t>(i) * hh + j];
    }

    std::vector<double> dh1(static_cast<std::size_t>(n) * hh, 0.0);
    la::gemm_nn(dh2.data(), model.entry_span(kHeadW2).data(), dh1.data(), static_cast<std::size_t>(n), hh, hh);
    for (std::size_t i = 0; i < dh1.size(); ++i) dh1[i] *= 1.0 - cache.head_h1[i] * cache.head_h1[i];

    la::gemm_tn(dh1.data(), cache.head_x.data(), gspan(kHeadW1).data(), static_cast<std::size_t>(n),
                static_cast<std::size_t>(hin), hh);
    {
        auto gb = gspan(kHeadB1);
        for (int i = 0; i < n; ++i)
            for (std::size_t j = 0; j < hh; ++j) gb[j] += dh1[static_cast<std::size_t>(i) * hh + j];
    }

    std::vector<double> dx(static_cast<std::size_t>(n) * static_cast<std::size_t>(hin), 0.0);
    la::gemm_nn(dh1.data(), model.entry_span(kHeadW1).data(), dx.data(), static_cast<std::size_t>(n),
                static_cast<std::size_t>(hin), hh);

    // Split dx into the shared fused-feature gradient and per-receiver
    // embedding gradients.
    std::vector<double> dfused(static_cast<std::size_t>(mf), 0.0);
    {
        auto gembed = gspan(kEmbed);
        for (int i = 0; i < n; ++i) {
            const double* row = dx.data() + static_cast<std::size_t>(i) * hin;
            for (int j = 0; j < mf; ++j) dfused[static_cast<std::size_t>(j)] += row[j];
            double* ge = gembed.data() + static_cast<std::size_t>(i) * cfg.embed_dim;
            for (int j = 0; j < cfg.embed_dim; ++j) ge[j] += row[mf + j];
        }
    }

    // Encoders.
    for (int e = 0; e < 4; ++e) {
        const std::size_t base = static_cast<std::size_t>(e) * 4;
        const std::size_t out_dim = static_cast<std::size_t>(cfg.enc_out);
        const std::size_t hid = static_cast<std::size_t>(cfg.enc_hidden);
        const std::size_t in_dim = cache.inputs[e].size();

        std::vector<double> dz2(out_dim);
        for (std::size_t j = 0; j < out_dim; ++j) {
            const double h = cache.enc_h2[e][j];
            dz2[j] = dfused[static_cast<std::size_t>(e) * out_dim + j] * (1.0 - h * h);
        }
        la::gemm_tn(dz2.data(), cache.enc_h1[e].data(), gspan(base + 2).data(), 1, hid, out_dim);
        {
            auto gb = gspan(base + 3);
            for (std::size_t j = 0; j < out_dim; ++j) gb[j] += dz2[j];
        }
        std::vector<double> dh1e(hid, 0.0);
        la::gemm_nn(dz2.data(), model.entry_span(base + 2).data(), dh1e.data(), 1, hid, out_dim);
        for (std::size_t j = 0; j < hid; ++j) {
            const double h = cache.enc_h1[e][j];
            dh1e[j] *= 1.0 - h * h;
        }
        la::gemm_tn(dh1e.data(), cache.inputs[e].data(), gspan(base + 0).data(), 1, in_dim, hid);
        auto gb1 = gspan(base + 1);
        for (std::size_t j = 0; j < hid; ++j) gb1[j] += dh1e[j];
    }
}

double clip_global_norm(std::span<double> grad, double max_norm) {
    double sq = 0.0;
    for (double v : grad) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        for (double& v : grad) v *= scale;
    }
    return norm;
}

std::int64_t macs_encoders(const ModelConfig& cfg) {
    std::int64_t macs = 0;
    for (int e = 0; e < 4; ++e) {
        macs += static_cast<std::int64_t>(encoder_input_dim(cfg, e)) * cfg.enc_hidden;
        macs += static_cast<std::int64_t>(cfg.enc_hidden) * cfg.enc_out;
    }
    return macs;
}

std::int64_t macs_forward(const ModelConfig& cfg) {
    std::int64_t macs = macs_encoders(cfg);
    std::int64_t head = static_cast<std::int64_t>(cfg.head_in()) * cfg.head_hidden;
    head += static_cast<std::int64_t>(cfg.head_hidden) * cfg.head_hidden;
    head += static_cast<std::int64_t>(cfg.head_hidden) * ModelConfig::n_outputs;
    macs += head * cfg.n_receivers;
    return macs;
}

std::int64_t flops_estimate(const Model& model, std::int64_t batch) {
    return 2 * macs_forward(model.config()) * 3 * batch;
}

std::int64_t flops_forward(const Model& model, std::int64_t batch) {
    return 2 * macs_forward(model.config()) * batch;
}

namespace {

json config_to_json(const ModelConfig& cfg) {
    json j;
    j["bev_dims"] = cfg.bev_dims;
    j["radar_dims"] = cfg.radar_dims;
    j["gps_dims"] = cfg.gps_dims;
    j["rgb_dims"] = cfg.rgb_dims;
    j["enc_hidden"] = cfg.enc_hidden;
    j["enc_out"] = cfg.enc_out;
    j["head_hidden"] = cfg.head_hidden;
    j["embed_dim"] = cfg.embed_dim;
    j["n_receivers"] = cfg.n_receivers;
    j["radar_input_scale"] = cfg.radar_input_scale;
    j["gps_input_scale"] = cfg.gps_input_scale;
    return j;
}

ModelConfig config_from_json(const json& j) {
    ModelConfig cfg;
    cfg.bev_dims = j.at("bev_dims").get<int>();
    cfg.radar_dims = j.at("radar_dims").get<int>();
    cfg.gps_dims = j.at("gps_dims").get<int>();
    cfg.rgb_dims = j.at("rgb_dims").get<int>();
    cfg.enc_hidden = j.at("enc_hidden").get<int>();
    cfg.enc_out = j.at("enc_out").get<int>();
    cfg.head_hidden = j.at("head_hidden").get<int>();
    cfg.embed_dim = j.at("embed_dim").get<int>();
    cfg.n_receivers = j.at("n_receivers").get<int>();
    cfg.radar_input_scale = j.at("radar_input_scale").get<double>();
    cfg.gps_input_scale = j.at("gps_input_scale").get<double>();
    return cfg;
}

std::string snapshot_header(const Model& model, const std::string& meta_json) {
    json j;
    j["schema"] = 1;
    j["config"] = config_to_json(model.config());
    json layers = json::array();
    for (const ParamEntry& e : model.layout()) {
        layers.push_back(json::array({e.name, e.rows, e.cols}));
    }
    j["layout"] = layers;
    j["count"] = model.param_count();
    j["meta"] = json::parse(meta_json);
    return j.dump();
}

} // namespace

std::size_t snapshot_bytes(const Model& model) {
    return 8 + snapshot_header(model, "{}").size() + model.param_count() * sizeof(double);
}

void save_snapshot(const Model& model, const std::string& path, const std::string& meta_json) {
    const std::string header = snapshot_header(model, meta_json);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_snapshot: cannot open " + path);
    std::uint64_t len = header.size();
    char lenbuf[8];
    for (int i = 0; i < 8; ++i) lenbuf[i] = static_cast<char>((len >> (8 * i)) & 0xff);
    out.write(lenbuf, 8);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(model.params().data()),
              static_cast<std::streamsize>(model.param_count() * sizeof(double)));
    if (!out) throw std::runtime_error("save_snapshot: write failed for " + path);
}

LoadedSnapshot load_snapshot(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_snapshot: cannot open " + path);
    char lenbuf[8];
    in.read(lenbuf, 8);
    if (!in) throw std::runtime_error("load_snapshot: truncated header length");
    std::uint64_t len = 0;
    for (int i = 0; i < 8; ++i) len |= static_cast<std::uint64_t>(static_cast<unsigned char>(lenbuf[i])) << (8 * i);
    std::string header(len, '\0');
    in.read(header.data(), static_cast<std::streamsize>(len));
    if (!in) throw std::runtime_error("load_snapshot: truncated header");
    json j = json::parse(header);
    if (j.at("schema").get<int>() != 1) throw std::runtime_error("load_snapshot: unsupported schema");
    Model model(config_from_json(j.at("config")));
    const auto count = j.at("count").get<std::size_t>();
    if (count != model.param_count()) throw std::runtime_error("load_snapshot: parameter count mismatch");
    in.read(reinterpret_cast<char*>(model.params().data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw std::runtime_error("load_snapshot: truncated payload");
    return {std::move(model), j.at("meta").dump()};
}

} // namespace rssgen

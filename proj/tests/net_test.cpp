#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "rssgen/loss.hpp"
#include "rssgen/net.hpp"
#include "rssgen/rng.hpp"

using namespace rssgen;

namespace {

/// Small config so finite differences stay fast.
ModelConfig tiny_config() {
    FeatureConfig fcfg;
    fcfg.bev_grid = 4;
    fcfg.radar_points = 2;
    fcfg.gps_max = 2;
    ModelConfig cfg = ModelConfig::for_features(fcfg, 9);
    cfg.enc_hidden = 6;
    cfg.enc_out = 4;
    cfg.head_hidden = 8;
    cfg.embed_dim = 3;
    return cfg;
}

std::vector<double> random_features(const ModelConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> f(static_cast<std::size_t>(cfg.bev_dims + cfg.radar_dims + cfg.gps_dims + cfg.rgb_dims));
    for (double& v : f) v = rng.uniform(-1.0, 1.0);
    return f;
}

std::vector<double> random_r_los(const ModelConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> r(static_cast<std::size_t>(cfg.n_receivers));
    for (double& v : r) v = rng.uniform(-60.0, -30.0);
    return r;
}

RssMap random_truth(const ModelConfig& cfg, const std::vector<double>& r_los, std::uint64_t seed) {
    Rng rng(seed);
    RssMap truth;
    truth.r_los_dbm = r_los;
    for (int i = 0; i < cfg.n_receivers; ++i) {
        const bool los = rng.uniform() < 0.6;
        truth.los_mask.push_back(los);
        const double refl = los ? rng.uniform(0.0, 3.0) : 0.0;
        const double block = los ? 0.0 : rng.uniform(10.0, 40.0);
        truth.r_reflection_db.push_back(refl);
        truth.r_blockage_db.push_back(block);
        truth.rss_dbm.push_back(r_los[static_cast<std::size_t>(i)] + refl - block);
    }
    return truth;
}

} // namespace

TEST_CASE("forward: zero parameters cancel to r_los") {
    const ModelConfig cfg = tiny_config();
    const Model model(cfg); // all-zero parameters
    const auto features = random_features(cfg, 1);
    const auto r_los = random_r_los(cfg, 2);
    const Prediction pred = forward(model, features, r_los);
    const double sp0 = std::log(2.0); // softplus(0)
    for (int i = 0; i < cfg.n_receivers; ++i) {
        for (int j = 0; j < ModelConfig::n_outputs; ++j) {
            CHECK(pred.heads[static_cast<std::size_t>(i * 4 + j)] == doctest::Approx(sp0).epsilon(1e-12));
        }
        CHECK(pred.rss_hat_dbm[static_cast<std::size_t>(i)] ==
              doctest::Approx(r_los[static_cast<std::size_t>(i)]).epsilon(1e-12));
    }
}

TEST_CASE("forward: deterministic for fixed init seed and input") {
    const ModelConfig cfg = tiny_config();
    const Model model = Model::init(cfg, 77);
    const auto features = random_features(cfg, 3);
    const auto r_los = random_r_los(cfg, 4);
    const Prediction a = forward(model, features, r_los);
    const Prediction b = forward(model, features, r_los);
    CHECK(a.rss_hat_dbm == b.rss_hat_dbm);
    CHECK(a.heads == b.heads);
    CHECK(a.fused == b.fused);
}

TEST_CASE("forward: heads are nonnegative for random parameter draws") {
    const ModelConfig cfg = tiny_config();
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Model model = Model::init(cfg, seed);
        // Exaggerate the parameters so softplus sees large negatives too.
        for (double& v : model.params()) v *= 50.0;
        const Prediction pred = forward(model, random_features(cfg, seed), random_r_los(cfg, seed + 100));
        for (double h : pred.heads) CHECK(h >= 0.0);
    }
}

TEST_CASE("forward: every modality feeds the output (gps sensitivity)") {
    const ModelConfig cfg = tiny_config();
    const Model model = Model::init(cfg, 5);
    auto features = random_features(cfg, 6);
    const auto r_los = random_r_los(cfg, 7);
    const Prediction base = forward(model, features, r_los);
    // Perturb one gps input only.
    const std::size_t gps_offset = static_cast<std::size_t>(cfg.bev_dims + cfg.radar_dims);
    features[gps_offset] += 1e-3;
    const Prediction bumped = forward(model, features, r_los);
    double delta = 0.0;
    for (std::size_t i = 0; i < base.heads.size(); ++i) delta += std::abs(bumped.heads[i] - base.heads[i]);
    CHECK(delta / 1e-3 > 1e-6); // finite-difference sensitivity strictly positive
}

TEST_CASE("forward: shape mismatches are rejected") {
    const ModelConfig cfg = tiny_config();
    const Model model = Model::init(cfg, 1);
    std::vector<double> short_features(3, 0.0);
    const auto r_los = random_r_los(cfg, 2);
    CHECK_THROWS_AS(forward(model, short_features, r_los), std::invalid_argument);
    const auto features = random_features(cfg, 1);
    std::vector<double> short_rlos(2, -40.0);
    CHECK_THROWS_AS(forward(model, features, short_rlos), std::invalid_argument);
}

TEST_CASE("backward: zero loss gradient gives zero parameter gradient") {
    const ModelConfig cfg = tiny_config();
    const Model model = Model::init(cfg, 9);
    ForwardCache cache;
    (void)forward(model, random_features(cfg, 1), random_r_los(cfg, 2), &cache);
    std::vector<double> dheads(static_cast<std::size_t>(cfg.n_receivers * 4), 0.0);
    std::vector<double> grad(model.param_count(), 0.0);
    backward(model, cache, dheads, grad);
    for (double g : grad) CHECK(g == 0.0);
}

// Central finite differences against the analytic gradient of the full
// training loss. Checks 200 sampled parameters inside every layer entry,
// for lambda = 0 and lambda = 0.5 (criterion tolerance 1e-4 relative).
TEST_CASE("backward: finite-difference check per layer type") {
    const ModelConfig cfg = tiny_config();
    Model model = Model::init(cfg, 11);
    const auto features = random_features(cfg, 12);
    const auto r_los = random_r_los(cfg, 13);
    const RssMap truth = random_truth(cfg, r_los, 14);

    for (double lambda : {0.0, 0.5}) {
        ForwardCache cache;
        std::vector<double> dheads;
        const Prediction pred = forward(model, features, r_los, &cache);
        (void)total_loss(pred, truth, lambda, TrainMethod::physics, &dheads);
        std::vector<double> grad(model.param_count(), 0.0);
        backward(model, cache, dheads, grad);

        auto loss_at = [&](std::size_t pidx, double value) {
            const double saved = model.params()[pidx];
            model.params()[pidx] = value;
            const Prediction p = forward(model, features, r_los);
            const LossBreakdown lb = total_loss(p, truth, lambda, TrainMethod::physics, nullptr);
            model.params()[pidx] = saved;
            return lb.l_total();
        };

        Rng pick(15);
        double max_rel = 0.0;
        for (const ParamEntry& entry : model.layout()) {
            for (int s = 0; s < 200; ++s) {
                const std::size_t pidx = entry.offset + pick.uniform_int(entry.size());
                const double eps = 1e-4;
                const double theta0 = model.params()[pidx];
                const double fd = (loss_at(pidx, theta0 + eps) - loss_at(pidx, theta0 - eps)) / (2 * eps);
                const double a = grad[pidx];
                const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-3});
                max_rel = std::max(max_rel, rel);
            }
        }
        CHECK(max_rel < 1e-4);
    }
}

TEST_CASE("clip_global_norm: norm 5 clips to exactly 1") {
    std::vector<double> g{3.0, 4.0};
    const double before = clip_global_norm(g, 1.0);
    CHECK(before == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(std::hypot(g[0], g[1]) == doctest::Approx(1.0).epsilon(1e-12));
    // Norms below the cap are untouched.
    std::vector<double> h{0.3, 0.4};
    clip_global_norm(h, 1.0);
    CHECK(h[0] == 0.3);
    CHECK(h[1] == 0.4);
}

TEST_CASE("flops: batch scaling and the documented constant") {
    const ModelConfig cfg = tiny_config();
    const Model model = Model::init(cfg, 1);
    CHECK(flops_estimate(model, 0) == 0);
    CHECK(flops_estimate(model, 2) == 2 * flops_estimate(model, 1));
    CHECK(flops_forward(model, 1) * 3 == flops_estimate(model, 1));

    // One dense 64->64 layer at batch 1: 2 * 64*64 * 3 = 24576.
    CHECK(2 * (64 * 64) * 3 == 24576);
    // The model-level count is 2 * MACs * 3 with MACs summed over layers.
    const std::int64_t macs = macs_forward(cfg);
    std::int64_t expect = 0;
    expect += static_cast<std::int64_t>(cfg.bev_dims) * cfg.enc_hidden + cfg.enc_hidden * cfg.enc_out;
    expect += static_cast<std::int64_t>(cfg.radar_dims) * cfg.enc_hidden + cfg.enc_hidden * cfg.enc_out;
    expect += static_cast<std::int64_t>(cfg.gps_dims) * cfg.enc_hidden + cfg.enc_hidden * cfg.enc_out;
    expect += static_cast<std::int64_t>(cfg.rgb_dims) * cfg.enc_hidden + cfg.enc_hidden * cfg.enc_out;
    expect += static_cast<std::int64_t>(cfg.n_receivers) *
              (static_cast<std::int64_t>(cfg.head_in()) * cfg.head_hidden + cfg.head_hidden * cfg.head_hidden +
               cfg.head_hidden * ModelConfig::n_outputs);
    CHECK(macs == expect);
    CHECK(flops_estimate(model, 5) == 2 * macs * 3 * 5);
}

TEST_CASE("snapshot: round-trips parameters and metadata") {
    const ModelConfig cfg = tiny_config();
    const Model model = Model::init(cfg, 33);
    const std::string path = (std::filesystem::temp_directory_path() / "rssgen_net_test_snap.bin").string();
    save_snapshot(model, path, R"({"note":"x"})");
    const LoadedSnapshot snap = load_snapshot(path);
    CHECK(snap.model.params() == model.params());
    CHECK(snap.model.config() == model.config());
    CHECK(snap.meta_json.find("note") != std::string::npos);
    CHECK(snapshot_bytes(model) > model.param_count() * sizeof(double));
    std::filesystem::remove(path);
}

TEST_CASE("init: deterministic per seed, biases zero") {
    const ModelConfig cfg = tiny_config();
    const Model a = Model::init(cfg, 4);
    const Model b = Model::init(cfg, 4);
    const Model c = Model::init(cfg, 5);
    CHECK(a.params() == b.params());
    CHECK(a.params() != c.params());
    for (std::size_t i = 0; i < a.layout().size(); ++i) {
        const ParamEntry& e = a.layout()[i];
        if (e.cols == 1) {
            for (double v : a.entry_span(i)) CHECK(v == 0.0);
        }
    }
    // Parameter count is reported exactly.
    std::size_t total = 0;
    for (const ParamEntry& e : a.layout()) total += e.size();
    CHECK(total == a.param_count());
}

TEST_CASE("encode matches the fused feature of forward") {
    const ModelConfig cfg = tiny_config();
    const Model model = Model::init(cfg, 21);
    const auto features = random_features(cfg, 22);
    const auto r_los = random_r_los(cfg, 23);
    const Prediction pred = forward(model, features, r_los);
    CHECK(encode(model, features) == pred.fused);
}

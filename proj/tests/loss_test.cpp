#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rssgen/loss.hpp"
#include "rssgen/rng.hpp"

using namespace rssgen;

namespace {

constexpr int kNo = ModelConfig::n_outputs;

/// A synthetic prediction/truth pair over n receivers whose heads and labels
/// the test controls directly.
struct Fixture {
    Prediction pred;
    RssMap truth;
};

Fixture make_fixture(int n, std::uint64_t seed) {
    Rng rng(seed);
    Fixture fx;
    for (int i = 0; i < n; ++i) {
        const double r_los = rng.uniform(-60.0, -30.0);
        const bool los = rng.uniform() < 0.5;
        const double true_refl = los ? rng.uniform(0.0, 2.0) : 0.0;
        const double true_block = los ? 0.0 : rng.uniform(5.0, 40.0);
        fx.truth.r_los_dbm.push_back(r_los);
        fx.truth.los_mask.push_back(los);
        fx.truth.r_reflection_db.push_back(true_refl);
        fx.truth.r_blockage_db.push_back(true_block);
        fx.truth.rss_dbm.push_back(r_los + true_refl - true_block);

        const double refl_hat = rng.uniform(0.0, 5.0);
        const double block_hat = rng.uniform(0.0, 30.0);
        const double rbar_hat = rng.uniform(0.0, 5.0);
        const double b_hat = rng.uniform(0.0, 30.0);
        fx.pred.heads.insert(fx.pred.heads.end(), {refl_hat, block_hat, rbar_hat, b_hat});
        fx.pred.rss_hat_dbm.push_back(r_los + refl_hat - block_hat);
    }
    return fx;
}

void set_heads(Fixture& fx, int i, double refl, double block, double rbar, double b) {
    fx.pred.heads[static_cast<std::size_t>(i * kNo + kHeadReflection)] = refl;
    fx.pred.heads[static_cast<std::size_t>(i * kNo + kHeadBlockage)] = block;
    fx.pred.heads[static_cast<std::size_t>(i * kNo + kHeadRbar)] = rbar;
    fx.pred.heads[static_cast<std::size_t>(i * kNo + kHeadBBound)] = b;
    fx.pred.rss_hat_dbm[static_cast<std::size_t>(i)] =
        fx.truth.r_los_dbm[static_cast<std::size_t>(i)] + refl - block;
}

} // namespace

TEST_CASE("data_loss: perfect prediction scores zero") {
    Fixture fx = make_fixture(8, 1);
    for (std::size_t i = 0; i < fx.pred.rss_hat_dbm.size(); ++i) fx.pred.rss_hat_dbm[i] = fx.truth.rss_dbm[i];
    CHECK(data_loss(fx.pred, fx.truth) == 0.0);
}

TEST_CASE("data_loss: constant +1 dBm offset scores exactly 1") {
    Fixture fx = make_fixture(8, 2);
    for (std::size_t i = 0; i < fx.pred.rss_hat_dbm.size(); ++i)
        fx.pred.rss_hat_dbm[i] = fx.truth.rss_dbm[i] + 1.0;
    CHECK(data_loss(fx.pred, fx.truth) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("data_loss: random case matches a straight-line oracle") {
    const Fixture fx = make_fixture(17, 3);
    double acc = 0.0;
    for (std::size_t i = 0; i < fx.pred.rss_hat_dbm.size(); ++i) {
        const double e = fx.pred.rss_hat_dbm[i] - fx.truth.rss_dbm[i];
        acc += e * e;
    }
    CHECK(data_loss(fx.pred, fx.truth) == doctest::Approx(acc / 17.0).epsilon(1e-12));
}

TEST_CASE("physics_loss: constraint-satisfying all-LoS frame scores zero") {
    Fixture fx = make_fixture(6, 4);
    for (int i = 0; i < 6; ++i) {
        fx.truth.los_mask[static_cast<std::size_t>(i)] = true;
        set_heads(fx, i, 1.0, 0.0, 2.0, 0.0); // blockage 0, reflection <= rbar
    }
    const auto [l_los, l_nlos] = physics_loss(fx.pred.heads, fx.truth.los_mask);
    CHECK(l_los == 0.0);
    CHECK(l_nlos == 0.0); // empty NLoS set contributes zero
}

TEST_CASE("physics_loss: LoS hinge arithmetic") {
    Fixture fx = make_fixture(1, 5);
    fx.truth.los_mask[0] = true;
    // blockage 2, reflection 5 over rbar 3 -> 2 + 2 = 4.
    set_heads(fx, 0, 5.0, 2.0, 3.0, 0.0);
    const auto [l_los, l_nlos] = physics_loss(fx.pred.heads, fx.truth.los_mask);
    CHECK(l_los == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(l_nlos == 0.0);
}

TEST_CASE("physics_loss: NLoS hinge arithmetic") {
    Fixture fx = make_fixture(1, 6);
    fx.truth.los_mask[0] = false;
    // reflection 1, bound 10 over blockage 4 -> 1 + 6 = 7.
    set_heads(fx, 0, 1.0, 4.0, 0.0, 10.0);
    const auto [l_los, l_nlos] = physics_loss(fx.pred.heads, fx.truth.los_mask);
    CHECK(l_nlos == doctest::Approx(7.0).epsilon(1e-12));
    CHECK(l_los == 0.0);
}

TEST_CASE("physics_loss: monotone in LoS blockage head") {
    Fixture fx = make_fixture(4, 7);
    for (int i = 0; i < 4; ++i) fx.truth.los_mask[static_cast<std::size_t>(i)] = true;
    set_heads(fx, 0, 0.5, 1.0, 2.0, 0.0);
    const double before = physics_loss(fx.pred.heads, fx.truth.los_mask).first;
    set_heads(fx, 0, 0.5, 1.5, 2.0, 0.0);
    const double after = physics_loss(fx.pred.heads, fx.truth.los_mask).first;
    CHECK(after > before);
}

TEST_CASE("total_loss: lambda composition and the lambda=0 reduction") {
    const Fixture fx = make_fixture(12, 8);
    const LossBreakdown with = total_loss(fx.pred, fx.truth, 0.5, TrainMethod::physics, nullptr);
    const LossBreakdown without = total_loss(fx.pred, fx.truth, 0.0, TrainMethod::physics, nullptr);
    CHECK(without.l_total() == doctest::Approx(without.l_data).epsilon(1e-12));
    CHECK(without.l_data == doctest::Approx(data_loss(fx.pred, fx.truth)).epsilon(1e-12));
    CHECK(with.l_total() == doctest::Approx(with.l_data + 0.5 * with.l_phy()).epsilon(1e-12));
    CHECK(with.l_phy() == doctest::Approx(with.l_los + with.l_nlos).epsilon(1e-12));
}

TEST_CASE("total_loss: head gradients match central finite differences") {
    Fixture fx = make_fixture(10, 9);
    for (TrainMethod method : {TrainMethod::physics, TrainMethod::baseline1, TrainMethod::baseline2,
                               TrainMethod::baseline3}) {
        const double lambda = 0.5;
        std::vector<double> dheads;
        (void)total_loss(fx.pred, fx.truth, lambda, method, &dheads);

        auto loss_with_head = [&](int i, int j, double value) {
            Fixture probe = fx;
            probe.pred.heads[static_cast<std::size_t>(i * kNo + j)] = value;
            probe.pred.rss_hat_dbm[static_cast<std::size_t>(i)] =
                probe.truth.r_los_dbm[static_cast<std::size_t>(i)] +
                probe.pred.heads[static_cast<std::size_t>(i * kNo + kHeadReflection)] -
                probe.pred.heads[static_cast<std::size_t>(i * kNo + kHeadBlockage)];
            return total_loss(probe.pred, probe.truth, lambda, method, nullptr).l_total();
        };

        double max_rel = 0.0;
        for (int i = 0; i < 10; ++i) {
            for (int j = 0; j < kNo; ++j) {
                const double h0 = fx.pred.heads[static_cast<std::size_t>(i * kNo + j)];
                const double eps = 1e-6;
                const double fd = (loss_with_head(i, j, h0 + eps) - loss_with_head(i, j, h0 - eps)) / (2 * eps);
                const double a = dheads[static_cast<std::size_t>(i * kNo + j)];
                max_rel = std::max(max_rel, std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-3}));
            }
        }
        CHECK(max_rel < 1e-4);
    }
}

TEST_CASE("total_loss: hinge subgradient at the kink is zero") {
    Fixture fx = make_fixture(2, 10);
    fx.truth.los_mask = {true, false};
    set_heads(fx, 0, 3.0, 0.0, 3.0, 0.0); // reflection == rbar exactly
    set_heads(fx, 1, 0.0, 5.0, 0.0, 5.0); // b == blockage exactly
    std::vector<double> dheads;
    (void)total_loss(fx.pred, fx.truth, 1.0, TrainMethod::physics, &dheads);
    CHECK(dheads[kHeadRbar] == 0.0);
    CHECK(dheads[static_cast<std::size_t>(kNo + kHeadBBound)] == 0.0);
}

TEST_CASE("baseline2: NLoS squared errors scaled by 1.2") {
    Fixture fx = make_fixture(2, 11);
    fx.truth.los_mask = {true, false};
    fx.pred.rss_hat_dbm[0] = fx.truth.rss_dbm[0] + 1.0;
    fx.pred.rss_hat_dbm[1] = fx.truth.rss_dbm[1] + 2.0;
    const LossBreakdown lb = total_loss(fx.pred, fx.truth, 0.5, TrainMethod::baseline2, nullptr);
    CHECK(lb.l_data == doctest::Approx((1.0 + 1.2 * 4.0) / 2.0).epsilon(1e-12));
    CHECK(lb.l_phy() == 0.0);
}

TEST_CASE("baseline3: LoS receivers carry no data loss and no gradient") {
    Fixture fx = make_fixture(2, 12);
    fx.truth.los_mask = {true, false};
    fx.pred.rss_hat_dbm[0] = fx.truth.rss_dbm[0] + 50.0; // ignored
    fx.pred.rss_hat_dbm[1] = fx.truth.rss_dbm[1] + 3.0;
    std::vector<double> dheads;
    const LossBreakdown lb = total_loss(fx.pred, fx.truth, 0.5, TrainMethod::baseline3, &dheads);
    CHECK(lb.l_data == doctest::Approx(9.0).epsilon(1e-12)); // mean over the single NLoS point
    CHECK(dheads[kHeadReflection] == 0.0);
    CHECK(dheads[kHeadBlockage] == 0.0);
    CHECK(dheads[static_cast<std::size_t>(kNo + kHeadReflection)] != 0.0);
}

TEST_CASE("method_predictions: baseline3 substitutes r_los via its deployed mask") {
    Fixture fx = make_fixture(2, 13);
    fx.truth.los_mask = {true, false};
    const auto plain = method_predictions(fx.pred, fx.truth, TrainMethod::physics);
    CHECK(plain == fx.pred.rss_hat_dbm);
    const std::vector<bool> deployed{true, false};
    const auto b3 = method_predictions(fx.pred, fx.truth, TrainMethod::baseline3, &deployed);
    CHECK(b3[0] == fx.truth.r_los_dbm[0]);
    CHECK(b3[1] == fx.pred.rss_hat_dbm[1]);
    // A stale mask applies the formula where it believes LoS holds, even if
    // the world has shifted; the eval labels are never consulted.
    const std::vector<bool> stale{false, true};
    const auto shifted = method_predictions(fx.pred, fx.truth, TrainMethod::baseline3, &stale);
    CHECK(shifted[0] == fx.pred.rss_hat_dbm[0]);
    CHECK(shifted[1] == fx.truth.r_los_dbm[1]);
    // The mask is mandatory for baseline3.
    CHECK_THROWS_AS(method_predictions(fx.pred, fx.truth, TrainMethod::baseline3), std::invalid_argument);
}

TEST_CASE("loss components are nonnegative on random fixtures") {
    for (std::uint64_t seed = 20; seed < 40; ++seed) {
        const Fixture fx = make_fixture(9, seed);
        const LossBreakdown lb = total_loss(fx.pred, fx.truth, 0.5, TrainMethod::physics, nullptr);
        CHECK(lb.l_data >= 0.0);
        CHECK(lb.l_los >= 0.0);
        CHECK(lb.l_nlos >= 0.0);
        CHECK(lb.l_total() == doctest::Approx(lb.l_data + lb.lambda * lb.l_phy()).epsilon(1e-12));
    }
}

TEST_CASE("physics_loss zero iff constraints hold (synthetic heads)") {
    Fixture fx = make_fixture(4, 50);
    fx.truth.los_mask = {true, true, false, false};
    set_heads(fx, 0, 1.0, 0.0, 1.5, 7.0);
    set_heads(fx, 1, 0.0, 0.0, 0.0, 3.0);
    set_heads(fx, 2, 0.0, 9.0, 2.0, 9.0);
    set_heads(fx, 3, 0.0, 12.0, 0.0, 11.0);
    const auto [l_los, l_nlos] = physics_loss(fx.pred.heads, fx.truth.los_mask);
    CHECK(l_los == 0.0);
    CHECK(l_nlos == 0.0);
    // Violate one constraint and the loss turns strictly positive.
    set_heads(fx, 2, 0.5, 9.0, 2.0, 9.0);
    CHECK(physics_loss(fx.pred.heads, fx.truth.los_mask).second > 0.0);
}

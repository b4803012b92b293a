#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rssgen/channel.hpp"
#include "rssgen/features.hpp"
#include "rssgen/rng.hpp"

using namespace rssgen;

namespace {

Scene empty_scene(std::uint64_t seed = 3) {
    SceneConfig cfg;
    cfg.seed = seed;
    cfg.n_vehicles = 0;
    cfg.n_reflector_facades = 0;
    return generate_scene(cfg);
}

DomainShiftSpec val2_spec() {
    DomainShiftSpec spec;
    spec.kind = ShiftKind::covariate_noise;
    spec.radar_noise_std = 1.0;
    spec.gps_noise_std = 0.5;
    spec.lidar_noise_std = 0.25;
    spec.brightness_scale = 0.75;
    return spec;
}

} // namespace

TEST_CASE("extract_features: empty scene gives zero occupancy, points and gps") {
    const FeatureConfig fcfg;
    const FeatureBlock fb = extract_features(empty_scene(), fcfg);
    for (double v : fb.occupancy_bev) CHECK(v == 0.0);
    for (double v : fb.points) CHECK(v == 0.0);
    for (double v : fb.gps) CHECK(v == 0.0);
    CHECK(fb.n_points == 0);
    CHECK(fb.n_gps == 0);
    // Background brightness is uniform and positive.
    for (double v : fb.brightness) CHECK(v == doctest::Approx(0.25));
}

TEST_CASE("extract_features: footprint rasterization hits exactly the covered cells") {
    // 16x16 grid over 80x40 m: cells are 5.0 x 2.5 m. A box spanning
    // x in (15.5,19.5), y in (-12,-8) covers exactly cells gx=3, gy in {3,4}.
    Scene scene = empty_scene();
    Blocker b;
    b.center = {17.5, -10.0, 1.0};
    b.extent = {4.0, 4.0, 2.0};
    scene.blockers.push_back(b);
    FeatureConfig fcfg;
    const FeatureBlock fb = extract_features(scene, fcfg);
    for (int gx = 0; gx < 16; ++gx) {
        for (int gy = 0; gy < 16; ++gy) {
            const bool expect = gx == 3 && (gy == 3 || gy == 4);
            CHECK(fb.occupancy_bev[static_cast<std::size_t>(gx * 16 + gy)] == (expect ? 1.0 : 0.0));
        }
    }
}

TEST_CASE("extract_features: more blockers than P keeps exactly P farthest-point rows") {
    SceneConfig cfg;
    cfg.seed = 5;
    cfg.n_vehicles = 13;
    cfg.n_reflector_facades = 0;
    const Scene scene = generate_scene(cfg);
    FeatureConfig fcfg;
    fcfg.radar_points = 8;
    const FeatureBlock fb = extract_features(scene, fcfg);
    CHECK(fb.n_points == 8);
    // All kept rows are real candidates (nonzero extent column).
    for (int r = 0; r < 8; ++r) CHECK(fb.points[static_cast<std::size_t>(4 * r + 3)] > 0.0);
}

TEST_CASE("extract_features: deterministic and consistent with blocker footprints") {
    SceneConfig cfg;
    cfg.seed = 6;
    cfg.n_vehicles = 4;
    const Scene scene = generate_scene(cfg);
    const FeatureConfig fcfg;
    const FeatureBlock a = extract_features(scene, fcfg);
    const FeatureBlock b = extract_features(scene, fcfg);
    CHECK(a.flatten() == b.flatten());
    CHECK(a.n_gps == 4);
}

TEST_CASE("flatten: documented order bev, points, gps, brightness") {
    FeatureConfig fcfg;
    fcfg.bev_grid = 2;
    fcfg.radar_points = 1;
    fcfg.gps_max = 1;
    FeatureBlock fb;
    fb.bev_grid = 2;
    fb.occupancy_bev = {1, 0, 0, 1};
    fb.points = {5, 6, 7, 8};
    fb.n_points = 1;
    fb.gps = {9, 10, 11};
    fb.n_gps = 1;
    fb.brightness = {0.1, 0.2, 0.3, 0.4};
    const std::vector<double> flat = fb.flatten();
    const std::vector<double> expect{1, 0, 0, 1, 5, 6, 7, 8, 9, 10, 11, 0.1, 0.2, 0.3, 0.4};
    CHECK(flat == expect);
    CHECK(static_cast<int>(flat.size()) == fcfg.flat_dims());
}

TEST_CASE("apply_covariate_shift: zero stds and unit scale is the identity") {
    SceneConfig cfg;
    cfg.seed = 8;
    cfg.n_vehicles = 3;
    const Scene scene = generate_scene(cfg);
    const FeatureBlock fb = extract_features(scene, FeatureConfig{});
    DomainShiftSpec spec;
    spec.kind = ShiftKind::covariate_noise;
    const FeatureBlock shifted = apply_covariate_shift(fb, spec, 99);
    CHECK(shifted.flatten() == fb.flatten());
}

TEST_CASE("apply_covariate_shift: VAL-2 analog perturbs every modality") {
    SceneConfig cfg;
    cfg.seed = 9;
    cfg.n_vehicles = 5;
    const Scene scene = generate_scene(cfg);
    const FeatureBlock fb = extract_features(scene, FeatureConfig{});
    const FeatureBlock shifted = apply_covariate_shift(fb, val2_spec(), 123);

    bool radar_changed = false, gps_changed = false;
    for (int r = 0; r < fb.n_points * 4; ++r) {
        if (shifted.points[static_cast<std::size_t>(r)] != fb.points[static_cast<std::size_t>(r)])
            radar_changed = true;
    }
    for (int r = 0; r < fb.n_gps * 3; ++r) {
        if (shifted.gps[static_cast<std::size_t>(r)] != fb.gps[static_cast<std::size_t>(r)]) gps_changed = true;
    }
    CHECK(radar_changed);
    CHECK(gps_changed);
    // Padding rows stay exactly zero.
    for (std::size_t r = static_cast<std::size_t>(fb.n_points) * 4; r < fb.points.size(); ++r)
        CHECK(shifted.points[r] == 0.0);
    for (std::size_t r = static_cast<std::size_t>(fb.n_gps) * 3; r < fb.gps.size(); ++r)
        CHECK(shifted.gps[r] == 0.0);
    // Brightness scaled by 0.75 (no clamping in range).
    for (std::size_t i = 0; i < fb.brightness.size(); ++i) {
        CHECK(shifted.brightness[i] == doctest::Approx(fb.brightness[i] * 0.75));
    }
    // Occupancy stays binary.
    for (double v : shifted.occupancy_bev) CHECK((v == 0.0 || v == 1.0));
}

TEST_CASE("apply_covariate_shift: deterministic per seed") {
    SceneConfig cfg;
    cfg.seed = 10;
    cfg.n_vehicles = 4;
    const Scene scene = generate_scene(cfg);
    const FeatureBlock fb = extract_features(scene, FeatureConfig{});
    const FeatureBlock a = apply_covariate_shift(fb, val2_spec(), 7);
    const FeatureBlock b = apply_covariate_shift(fb, val2_spec(), 7);
    const FeatureBlock c = apply_covariate_shift(fb, val2_spec(), 8);
    CHECK(a.flatten() == b.flatten());
    CHECK(a.flatten() != c.flatten());
}

TEST_CASE("apply_covariate_shift: rejects concept specs") {
    const FeatureBlock fb = extract_features(empty_scene(), FeatureConfig{});
    DomainShiftSpec spec;
    spec.kind = ShiftKind::concept_blockage;
    CHECK_THROWS_AS(apply_covariate_shift(fb, spec, 1), std::invalid_argument);
}

TEST_CASE("covariate shift leaves the ground-truth RSS map untouched") {
    SceneConfig cfg;
    cfg.seed = 12;
    cfg.n_vehicles = 5;
    const Scene scene = generate_scene(cfg);
    ChannelParams p;
    p.pathloss.shadow_seed = 12;
    const RssMap before = compute_rss_map(scene, p);
    (void)apply_covariate_shift(extract_features(scene, FeatureConfig{}), val2_spec(), 5);
    const RssMap after = compute_rss_map(scene, p);
    CHECK(before.rss_dbm == after.rss_dbm);
    CHECK(before.los_mask == after.los_mask);
}

TEST_CASE("noise is zero-mean: 1e5 draws per modality") {
    // Sample mean must land within 3*sigma/sqrt(n) of zero.
    FeatureBlock fb;
    fb.bev_grid = 1;
    fb.occupancy_bev = {0.0};
    fb.brightness = {0.5};
    fb.points.assign(4, 0.0);
    fb.n_points = 1;
    fb.gps.assign(3, 0.0);
    fb.n_gps = 1;
    DomainShiftSpec spec;
    spec.kind = ShiftKind::covariate_noise;
    spec.radar_noise_std = 1.0;
    spec.gps_noise_std = 0.5;

    const int n = 100000;
    double radar_sum = 0.0, gps_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const FeatureBlock s = apply_covariate_shift(fb, spec, static_cast<std::uint64_t>(i));
        radar_sum += s.points[0];
        gps_sum += s.gps[0];
    }
    CHECK(std::abs(radar_sum / n) < 3.0 * 1.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(gps_sum / n) < 3.0 * 0.5 / std::sqrt(static_cast<double>(n)));
}

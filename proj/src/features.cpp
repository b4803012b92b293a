#include "rssgen/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rssgen/rng.hpp"

namespace rssgen {

void FeatureConfig::validate() const {
    if (bev_grid <= 0 || radar_points <= 0 || gps_max <= 0)
        throw std::invalid_argument("FeatureConfig: grid and point counts must be > 0");
    if (base_brightness < 0.0 || base_brightness > 1.0)
        throw std::invalid_argument("FeatureConfig: base_brightness must be in [0, 1]");
}

std::vector<double> FeatureBlock::flatten() const {
    std::vector<double> out;
    out.reserve(occupancy_bev.size() + points.size() + gps.size() + brightness.size());
    out.insert(out.end(), occupancy_bev.begin(), occupancy_bev.end());
    out.insert(out.end(), points.begin(), points.end());
    out.insert(out.end(), gps.begin(), gps.end());
    out.insert(out.end(), brightness.begin(), brightness.end());
    return out;
}

namespace {

struct Candidate {
    double x, y, speed, extent;
};

/// Farthest-point down-sampling to exactly p points, seeded from the point
/// farthest from the BS; ties break toward the lower index.
std::vector<Candidate> farthest_point_sample(const std::vector<Candidate>& cand, int p, const Vec3& bs) {
    std::vector<Candidate> kept;
    std::vector<bool> used(cand.size(), false);
    std::size_t first = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < cand.size(); ++i) {
        const double d = std::hypot(cand[i].x - bs.x, cand[i].y - bs.y);
        if (d > best) { best = d; first = i; }
    }
    kept.push_back(cand[first]);
    used[first] = true;
    while (static_cast<int>(kept.size()) < p) {
        std::size_t pick = 0;
        double pick_d = -1.0;
        for (std::size_t i = 0; i < cand.size(); ++i) {
            if (used[i]) continue;
            double dmin = 1e300;
            for (const Candidate& k : kept) {
                dmin = std::min(dmin, std::hypot(cand[i].x - k.x, cand[i].y - k.y));
            }
            if (dmin > pick_d) { pick_d = dmin; pick = i; }
        }
        kept.push_back(cand[pick]);
        used[pick] = true;
    }
    return kept;
}

} // namespace

FeatureBlock extract_features(const Scene& scene, const FeatureConfig& fcfg) {
    fcfg.validate();
    const SceneConfig& cfg = scene.config;
    const int g = fcfg.bev_grid;
    FeatureBlock fb;
    fb.bev_grid = g;
    fb.occupancy_bev.assign(static_cast<std::size_t>(g * g), 0.0);
    fb.brightness.assign(static_cast<std::size_t>(g * g), 0.0);
    fb.points.assign(static_cast<std::size_t>(fcfg.radar_dims()), 0.0);
    fb.gps.assign(static_cast<std::size_t>(fcfg.gps_dims()), 0.0);

    const double cell_x = cfg.area_x_m / g;
    const double cell_y = cfg.area_y_m / g;
    const double y0 = scene.area_y_min();

    // Occupancy and brightness grids from blocker footprints. A cell is
    // occupied iff some footprint overlaps it with positive area.
    for (int gx = 0; gx < g; ++gx) {
        for (int gy = 0; gy < g; ++gy) {
            const double cx_lo = gx * cell_x, cx_hi = (gx + 1) * cell_x;
            const double cy_lo = y0 + gy * cell_y, cy_hi = y0 + (gy + 1) * cell_y;
            double occupied = 0.0;
            double tallest = 0.0;
            for (const Blocker& b : scene.blockers) {
                const Vec3 lo = b.box().min_corner(), hi = b.box().max_corner();
                if (lo.x < cx_hi && hi.x > cx_lo && lo.y < cy_hi && hi.y > cy_lo) {
                    occupied = 1.0;
                    tallest = std::max(tallest, b.extent.z);
                }
            }
            const std::size_t idx = static_cast<std::size_t>(gx * g + gy);
            fb.occupancy_bev[idx] = occupied;
            // Silhouette shading grows with blocker height so large vehicles
            // read differently from cars; empty cells are dim background.
            const double shade = occupied > 0.0 ? std::clamp(0.5 + 0.125 * tallest, 0.0, 1.0) : 0.25;
            fb.brightness[idx] = std::clamp(shade * fcfg.base_brightness, 0.0, 1.0);
        }
    }

    // Radar stand-in: one candidate per blocker, down-sampled to P rows.
    std::vector<Candidate> cand;
    cand.reserve(scene.blockers.size());
    for (const Blocker& b : scene.blockers) {
        cand.push_back({b.center.x, b.center.y, std::hypot(b.vel_x_mps, b.vel_y_mps), b.extent.norm()});
    }
    std::vector<Candidate> rows;
    if (static_cast<int>(cand.size()) > fcfg.radar_points) {
        rows = farthest_point_sample(cand, fcfg.radar_points, scene.bs_pos);
    } else {
        rows = cand;
    }
    fb.n_points = static_cast<int>(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        fb.points[4 * r + 0] = rows[r].x;
        fb.points[4 * r + 1] = rows[r].y;
        fb.points[4 * r + 2] = rows[r].speed;
        fb.points[4 * r + 3] = rows[r].extent;
    }

    // GPS stand-in: vehicle coordinates and speeds in generation order.
    const int n_gps = std::min(static_cast<int>(scene.blockers.size()), fcfg.gps_max);
    fb.n_gps = n_gps;
    for (int r = 0; r < n_gps; ++r) {
        const Blocker& b = scene.blockers[static_cast<std::size_t>(r)];
        fb.gps[static_cast<std::size_t>(3 * r + 0)] = b.center.x;
        fb.gps[static_cast<std::size_t>(3 * r + 1)] = b.center.y;
        fb.gps[static_cast<std::size_t>(3 * r + 2)] = std::hypot(b.vel_x_mps, b.vel_y_mps);
    }
    return fb;
}

FeatureBlock apply_covariate_shift(const FeatureBlock& fb, const DomainShiftSpec& spec, std::uint64_t seed) {
    if (!is_covariate_kind(spec.kind))
        throw std::invalid_argument("apply_covariate_shift: spec kind is not a covariate shift");
    FeatureBlock out = fb;
    Rng rng(mix_seed(seed, 0xc0faULL));
    if (spec.lidar_noise_std > 0.0) {
        for (double& v : out.occupancy_bev) {
            v = (v + rng.normal(0.0, spec.lidar_noise_std)) >= 0.5 ? 1.0 : 0.0;
        }
    }
    if (spec.radar_noise_std > 0.0) {
        for (int r = 0; r < out.n_points; ++r) {
            for (int c = 0; c < 4; ++c) {
                out.points[static_cast<std::size_t>(4 * r + c)] += rng.normal(0.0, spec.radar_noise_std);
            }
        }
    }
    if (spec.gps_noise_std > 0.0) {
        for (int r = 0; r < out.n_gps; ++r) {
            for (int c = 0; c < 3; ++c) {
                out.gps[static_cast<std::size_t>(3 * r + c)] += rng.normal(0.0, spec.gps_noise_std);
            }
        }
    }
    if (spec.brightness_scale != 1.0) {
        if (spec.brightness_scale < 0.0)
            throw std::invalid_argument("apply_covariate_shift: brightness_scale must be >= 0");
        for (double& v : out.brightness) v = std::clamp(v * spec.brightness_scale, 0.0, 1.0);
    }
    return out;
}

} // namespace rssgen

#pragma once

#include <cstdint>
#include <vector>

#include "rssgen/scene.hpp"

namespace rssgen {

struct FeatureConfig {
    int bev_grid = 16;      // G: occupancy and brightness are G x G
    int radar_points = 8;   // P: fixed point count after down-sampling
    int gps_max = 12;       // V_max: zero-padded GPS rows
    double base_brightness = 1.0;

    int bev_cells() const { return bev_grid * bev_grid; }
    int radar_dims() const { return radar_points * 4; }
    int gps_dims() const { return gps_max * 3; }
    int flat_dims() const { return 2 * bev_cells() + radar_dims() + gps_dims(); }
    void validate() const;
};

/// Per-frame multi-modal input block. Stand-ins for the four sensors:
/// occupancy_bev (LiDAR), points (radar), gps (GPS), brightness (RGB).
struct FeatureBlock {
    int bev_grid = 0;
    std::vector<double> occupancy_bev; // G*G, values in {0, 1}, row-major gx then gy
    std::vector<double> points;        // P*4, rows [x, y, speed, extent]; padding rows zero
    int n_points = 0;                  // valid (non-padding) point rows
    std::vector<double> gps;           // V_max*3, rows [x, y, speed]; padding rows zero
    int n_gps = 0;
    std::vector<double> brightness;    // G*G in [0, 1]

    /// Fixed-order flattening: bev row-major, then points, then gps, then
    /// brightness. This is the exact layout of dataset feature vectors.
    std::vector<double> flatten() const;
};

FeatureBlock extract_features(const Scene& scene, const FeatureConfig& fcfg);

/// Adds per-modality Gaussian noise and scales brightness, per the covariate
/// parameters of the spec. LiDAR occupancy is noised then re-thresholded at
/// 0.5 so it stays binary. Throws std::invalid_argument for concept kinds.
FeatureBlock apply_covariate_shift(const FeatureBlock& fb, const DomainShiftSpec& spec, std::uint64_t seed);

} // namespace rssgen

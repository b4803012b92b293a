#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rssgen/geometry.hpp"

namespace rssgen {

/// Any blocker at least this tall is tagged "bus". The tag only affects
/// scenario naming, never the channel math.
inline constexpr double kBusHeightThresholdM = 3.0;

struct SceneConfig {
    std::uint64_t seed = 0;
    double area_x_m = 80.0;
    double area_y_m = 40.0;
    int grid_nx = 8;
    int grid_ny = 8;
    double bs_height_m = 5.5;
    double rx_height_m = 1.5;
    int n_vehicles = 6;
    // Full box extents [length(x), width(y), height(z)] sampled uniformly.
    Vec3 vehicle_size_min{3.8, 1.6, 1.4};
    Vec3 vehicle_size_max{9.0, 2.6, 2.8};
    double speed_min_mps = 3.0;
    double speed_max_mps = 12.0;
    /// When enabled, ordinary vehicles spawn and stay inside this y band
    /// (the "road"). Blockers outside it only ever appear through concept
    /// shifts, which is what makes those shifts genuinely unseen.
    bool has_traffic_band = false;
    double traffic_y_min = 0.0;
    double traffic_y_max = 0.0;
    /// Vehicles allowed to roam the whole area even when a band is set
    /// (light stray traffic).
    int n_free_vehicles = 0;
    int n_reflector_facades = 2;
    double facade_height_m = 8.0;
    double carrier_ghz = 28.0;
    double ptx_dbm = 25.0;
    double gtx_db = 10.0;
    double grx_db = 10.0;

    int n_receivers() const { return grid_nx * grid_ny; }
    /// Throws std::invalid_argument when a dimension or count is not positive.
    void validate() const;
};

struct Blocker {
    Vec3 center;
    Vec3 extent;
    double vel_x_mps = 0.0;
    double vel_y_mps = 0.0;
    /// Clamp bounds for the box center's y while driving; vehicles keep to
    /// their lane band, shift-added blockers carry their own bounds.
    double clamp_y_min = -1e9;
    double clamp_y_max = 1e9;

    bool is_bus() const { return extent.z >= kBusHeightThresholdM; }
    std::string tag() const { return is_bus() ? "bus" : "vehicle"; }
    Aabb box() const { return {center, extent}; }
};

/// Vertical reflector rectangle lying in a plane of constant x or y.
/// `axis` names the fixed coordinate: 0 -> plane x = c, 1 -> plane y = c.
/// The rectangle spans [lo, hi] in the free horizontal coordinate and
/// [0, height] in z.
struct Facade {
    int axis = 1;
    double c = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double height_m = 8.0;
};

/// Geometric world for one BS: coordinate convention puts the BS at
/// (0, 0, bs_height) and the coverage area at [0, area_x] x [-area_y/2, +area_y/2].
struct Scene {
    SceneConfig config;
    Vec3 bs_pos;
    /// Grid order is row-major in i then j: index = i * grid_ny + j, with i
    /// indexing x and j indexing y. Each receiver sits at the centroid of
    /// grid cell (i, j) at height rx_height_m.
    std::vector<Vec3> receivers;
    std::vector<Blocker> blockers;
    std::vector<Facade> facades;

    int n_receivers() const { return static_cast<int>(receivers.size()); }
    double area_y_min() const { return -config.area_y_m / 2.0; }
    double area_y_max() const { return config.area_y_m / 2.0; }

    std::string to_json() const;
    static Scene from_json(const std::string& text);
};

enum class ShiftKind {
    none,
    concept_blockage,
    concept_rx_height,
    covariate_noise,
    covariate_brightness,
};

bool is_concept_kind(ShiftKind k);
bool is_covariate_kind(ShiftKind k);
std::string shift_kind_name(ShiftKind k);
ShiftKind shift_kind_from_name(const std::string& name);

struct BlockerEdit {
    enum class Op { add, resize, move };
    Op op = Op::add;
    // add: the new blocker. resize: new extent for blockers[index].
    // move: new center (x, y) and velocity for blockers[index]; a relocated
    // blocker loses its lane band (clamp bounds reset to the whole area).
    Blocker blocker;
    int index = 0;
    Vec3 new_extent;
    Vec3 new_center;
    double new_vel_x_mps = 0.0;
    double new_vel_y_mps = 0.0;
};

struct DomainShiftSpec {
    ShiftKind kind = ShiftKind::none;
    // Concept parameters.
    std::vector<BlockerEdit> blocker_edits;
    double new_rx_height_m = 0.0;
    // Covariate parameters (consumed by the features module).
    double radar_noise_std = 0.0;
    double gps_noise_std = 0.0;
    double lidar_noise_std = 0.0;
    double brightness_scale = 1.0;
};

/// Deterministic scene construction from the config; same config (including
/// seed) always yields a bit-identical scene.
Scene generate_scene(const SceneConfig& cfg);

/// Moves every blocker along its stored velocity for dt_s seconds, clamping
/// boxes inside the area (the clamped velocity component flips sign so
/// traffic keeps circulating). The seed drives occasional heading changes.
/// dt_s == 0 returns the input unchanged; dt_s < 0 throws.
Scene advance_frame(const Scene& scene, double dt_s, std::uint64_t seed);

/// Applies a concept shift (geometry only). Throws std::invalid_argument for
/// covariate kinds. ShiftKind::none or an empty edit list is the identity.
Scene apply_concept_shift(const Scene& scene, const DomainShiftSpec& spec);

} // namespace rssgen

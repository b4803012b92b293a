#include "rssgen/scene.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "rssgen/rng.hpp"

namespace rssgen {

using nlohmann::json;

void SceneConfig::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0)) throw std::invalid_argument(std::string("SceneConfig: ") + name + " must be > 0");
    };
    positive(area_x_m, "area_x_m");
    positive(area_y_m, "area_y_m");
    positive(bs_height_m, "bs_height_m");
    positive(rx_height_m, "rx_height_m");
    positive(carrier_ghz, "carrier_ghz");
    if (grid_nx <= 0 || grid_ny <= 0) throw std::invalid_argument("SceneConfig: grid dimensions must be > 0");
    if (n_vehicles < 0 || n_free_vehicles < 0)
        throw std::invalid_argument("SceneConfig: vehicle counts must be >= 0");
    if (n_reflector_facades < 0) throw std::invalid_argument("SceneConfig: n_reflector_facades must be >= 0");
    if (vehicle_size_min.x <= 0 || vehicle_size_min.y <= 0 || vehicle_size_min.z <= 0)
        throw std::invalid_argument("SceneConfig: vehicle sizes must be > 0");
    if (vehicle_size_max.x < vehicle_size_min.x || vehicle_size_max.y < vehicle_size_min.y ||
        vehicle_size_max.z < vehicle_size_min.z)
        throw std::invalid_argument("SceneConfig: vehicle_size_max must dominate vehicle_size_min");
    if (speed_min_mps < 0 || speed_max_mps < speed_min_mps)
        throw std::invalid_argument("SceneConfig: invalid speed range");
    if (has_traffic_band) {
        if (!(traffic_y_min < traffic_y_max) || traffic_y_min < -area_y_m / 2 || traffic_y_max > area_y_m / 2)
            throw std::invalid_argument("SceneConfig: traffic band must be a nonempty range inside the area");
    }
}

bool is_concept_kind(ShiftKind k) {
    return k == ShiftKind::concept_blockage || k == ShiftKind::concept_rx_height;
}

bool is_covariate_kind(ShiftKind k) {
    return k == ShiftKind::covariate_noise || k == ShiftKind::covariate_brightness;
}

std::string shift_kind_name(ShiftKind k) {
    switch (k) {
        case ShiftKind::none: return "none";
        case ShiftKind::concept_blockage: return "concept_blockage";
        case ShiftKind::concept_rx_height: return "concept_rx_height";
        case ShiftKind::covariate_noise: return "covariate_noise";
        case ShiftKind::covariate_brightness: return "covariate_brightness";
    }
    return "none";
}

ShiftKind shift_kind_from_name(const std::string& name) {
    if (name == "none") return ShiftKind::none;
    if (name == "concept_blockage") return ShiftKind::concept_blockage;
    if (name == "concept_rx_height") return ShiftKind::concept_rx_height;
    if (name == "covariate_noise") return ShiftKind::covariate_noise;
    if (name == "covariate_brightness") return ShiftKind::covariate_brightness;
    throw std::invalid_argument("unknown shift kind: " + name);
}

namespace {

void clamp_blocker_inside(const Scene& scene, Blocker& b) {
    const double hx = b.extent.x / 2.0, hy = b.extent.y / 2.0;
    double x_lo = hx, x_hi = scene.config.area_x_m - hx;
    double y_lo = std::max(scene.area_y_min() + hy, b.clamp_y_min);
    double y_hi = std::min(scene.area_y_max() - hy, b.clamp_y_max);
    if (x_hi < x_lo) x_lo = x_hi = scene.config.area_x_m / 2.0;
    if (y_hi < y_lo) y_lo = y_hi = (y_lo + y_hi) / 2.0;
    if (b.center.x < x_lo) { b.center.x = x_lo; b.vel_x_mps = std::abs(b.vel_x_mps); }
    if (b.center.x > x_hi) { b.center.x = x_hi; b.vel_x_mps = -std::abs(b.vel_x_mps); }
    if (b.center.y < y_lo) { b.center.y = y_lo; b.vel_y_mps = std::abs(b.vel_y_mps); }
    if (b.center.y > y_hi) { b.center.y = y_hi; b.vel_y_mps = -std::abs(b.vel_y_mps); }
}

Blocker draw_vehicle(const Scene& scene, Rng& rng, bool free_roaming) {
    const SceneConfig& cfg = scene.config;
    Blocker b;
    b.extent.x = rng.uniform(cfg.vehicle_size_min.x, cfg.vehicle_size_max.x);
    b.extent.y = rng.uniform(cfg.vehicle_size_min.y, cfg.vehicle_size_max.y);
    b.extent.z = rng.uniform(cfg.vehicle_size_min.z, cfg.vehicle_size_max.z);
    b.center.z = b.extent.z / 2.0; // boxes sit on the ground
    const double speed = rng.uniform(cfg.speed_min_mps, cfg.speed_max_mps);
    const double heading = rng.uniform(0.0, 6.283185307179586476925286766559);
    b.vel_x_mps = speed * std::cos(heading);
    b.vel_y_mps = speed * std::sin(heading);
    double y_lo = scene.area_y_min(), y_hi = scene.area_y_max();
    if (cfg.has_traffic_band && !free_roaming) {
        y_lo = cfg.traffic_y_min;
        y_hi = cfg.traffic_y_max;
        b.clamp_y_min = y_lo;
        b.clamp_y_max = y_hi;
    }
    // Rejection-sample the position: the box must not contain the BS.
    for (int attempt = 0; attempt < 256; ++attempt) {
        b.center.x = rng.uniform(0.0, cfg.area_x_m);
        b.center.y = rng.uniform(y_lo, y_hi);
        Blocker probe = b;
        clamp_blocker_inside(scene, probe);
        probe.vel_x_mps = b.vel_x_mps;
        probe.vel_y_mps = b.vel_y_mps;
        if (!probe.box().contains(scene.bs_pos)) { probe.center.z = b.center.z; return probe; }
    }
    throw std::invalid_argument("generate_scene: could not place vehicle away from the BS");
}

} // namespace

Scene generate_scene(const SceneConfig& cfg) {
    cfg.validate();
    Scene scene;
    scene.config = cfg;
    scene.bs_pos = {0.0, 0.0, cfg.bs_height_m};

    const double cell_x = cfg.area_x_m / cfg.grid_nx;
    const double cell_y = cfg.area_y_m / cfg.grid_ny;
    scene.receivers.reserve(static_cast<std::size_t>(cfg.n_receivers()));
    for (int i = 0; i < cfg.grid_nx; ++i) {
        for (int j = 0; j < cfg.grid_ny; ++j) {
            scene.receivers.push_back({(i + 0.5) * cell_x, scene.area_y_min() + (j + 0.5) * cell_y, cfg.rx_height_m});
        }
    }

    Rng rng(mix_seed(cfg.seed, 0x5ce9eULL));
    for (int v = 0; v < cfg.n_vehicles; ++v) {
        scene.blockers.push_back(draw_vehicle(scene, rng, false));
    }
    for (int v = 0; v < cfg.n_free_vehicles; ++v) {
        scene.blockers.push_back(draw_vehicle(scene, rng, true));
    }

    // Facades line the three non-BS edges of the area (street-canyon walls
    // along y = +-area_y/2 and the building face at x = area_x).
    Rng frng(mix_seed(cfg.seed, 0xfacadeULL));
    for (int f = 0; f < cfg.n_reflector_facades; ++f) {
        Facade fa;
        const int edge = static_cast<int>(frng.uniform_int(3));
        double extent_lo, extent_hi;
        if (edge < 2) {
            fa.axis = 1;
            fa.c = edge == 0 ? scene.area_y_min() : scene.area_y_max();
            extent_lo = 0.0;
            extent_hi = cfg.area_x_m;
        } else {
            fa.axis = 0;
            fa.c = cfg.area_x_m;
            extent_lo = scene.area_y_min();
            extent_hi = scene.area_y_max();
        }
        const double max_span = extent_hi - extent_lo;
        const double span = frng.uniform(0.4 * max_span, 0.9 * max_span);
        const double mid = frng.uniform(extent_lo + span / 2.0, extent_hi - span / 2.0);
        fa.lo = mid - span / 2.0;
        fa.hi = mid + span / 2.0;
        fa.height_m = cfg.facade_height_m;
        scene.facades.push_back(fa);
    }
    return scene;
}

Scene advance_frame(const Scene& scene, double dt_s, std::uint64_t seed) {
    if (dt_s < 0.0) throw std::invalid_argument("advance_frame: dt_s must be >= 0");
    if (dt_s == 0.0) return scene;
    Scene out = scene;
    for (std::size_t v = 0; v < out.blockers.size(); ++v) {
        Blocker& b = out.blockers[v];
        Rng rng(mix_seed(seed, 0x7ea5ULL, v));
        // Piecewise-constant velocity: occasionally pick a fresh heading,
        // keeping the current speed.
        if (rng.uniform() < 0.15) {
            const double speed = std::hypot(b.vel_x_mps, b.vel_y_mps);
            const double heading = rng.uniform(0.0, 6.283185307179586476925286766559);
            b.vel_x_mps = speed * std::cos(heading);
            b.vel_y_mps = speed * std::sin(heading);
        }
        b.center.x += b.vel_x_mps * dt_s;
        b.center.y += b.vel_y_mps * dt_s;
        clamp_blocker_inside(out, b);
    }
    return out;
}

Scene apply_concept_shift(const Scene& scene, const DomainShiftSpec& spec) {
    if (spec.kind == ShiftKind::none) return scene;
    if (!is_concept_kind(spec.kind))
        throw std::invalid_argument("apply_concept_shift: spec kind is not a concept shift");
    Scene out = scene;
    if (spec.kind == ShiftKind::concept_rx_height) {
        if (!(spec.new_rx_height_m > 0.0))
            throw std::invalid_argument("apply_concept_shift: new_rx_height_m must be > 0");
        out.config.rx_height_m = spec.new_rx_height_m;
        for (Vec3& rx : out.receivers) rx.z = spec.new_rx_height_m;
        return out;
    }
    for (const BlockerEdit& edit : spec.blocker_edits) {
        switch (edit.op) {
            case BlockerEdit::Op::add:
                out.blockers.push_back(edit.blocker);
                break;
            case BlockerEdit::Op::resize: {
                if (edit.index < 0 || edit.index >= static_cast<int>(out.blockers.size()))
                    throw std::invalid_argument("apply_concept_shift: resize index out of range");
                Blocker& b = out.blockers[static_cast<std::size_t>(edit.index)];
                b.extent = edit.new_extent;
                b.center.z = b.extent.z / 2.0;
                break;
            }
            case BlockerEdit::Op::move: {
                if (edit.index < 0 || edit.index >= static_cast<int>(out.blockers.size()))
                    throw std::invalid_argument("apply_concept_shift: move index out of range");
                Blocker& b = out.blockers[static_cast<std::size_t>(edit.index)];
                b.center.x = edit.new_center.x;
                b.center.y = edit.new_center.y;
                b.vel_x_mps = edit.new_vel_x_mps;
                b.vel_y_mps = edit.new_vel_y_mps;
                b.clamp_y_min = -1e9;
                b.clamp_y_max = 1e9;
                break;
            }
        }
    }
    return out;
}

namespace {

json vec3_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec3_from_json(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

} // namespace

std::string Scene::to_json() const {
    json j;
    j["schema"] = 1;
    json cfg;
    cfg["seed"] = config.seed;
    cfg["area_x_m"] = config.area_x_m;
    cfg["area_y_m"] = config.area_y_m;
    cfg["grid_nx"] = config.grid_nx;
    cfg["grid_ny"] = config.grid_ny;
    cfg["bs_height_m"] = config.bs_height_m;
    cfg["rx_height_m"] = config.rx_height_m;
    cfg["n_vehicles"] = config.n_vehicles;
    cfg["n_free_vehicles"] = config.n_free_vehicles;
    cfg["vehicle_size_min"] = vec3_to_json(config.vehicle_size_min);
    cfg["vehicle_size_max"] = vec3_to_json(config.vehicle_size_max);
    cfg["speed_min_mps"] = config.speed_min_mps;
    cfg["speed_max_mps"] = config.speed_max_mps;
    cfg["has_traffic_band"] = config.has_traffic_band;
    cfg["traffic_y_min"] = config.traffic_y_min;
    cfg["traffic_y_max"] = config.traffic_y_max;
    cfg["n_reflector_facades"] = config.n_reflector_facades;
    cfg["facade_height_m"] = config.facade_height_m;
    cfg["carrier_ghz"] = config.carrier_ghz;
    cfg["ptx_dbm"] = config.ptx_dbm;
    cfg["gtx_db"] = config.gtx_db;
    cfg["grx_db"] = config.grx_db;
    j["config"] = cfg;
    j["bs_pos"] = vec3_to_json(bs_pos);
    json rxs = json::array();
    for (const Vec3& r : receivers) rxs.push_back(vec3_to_json(r));
    j["receivers"] = rxs;
    json bls = json::array();
    for (const Blocker& b : blockers) {
        json jb;
        jb["center"] = vec3_to_json(b.center);
        jb["extent"] = vec3_to_json(b.extent);
        jb["vel_mps"] = json::array({b.vel_x_mps, b.vel_y_mps});
        jb["clamp_y"] = json::array({b.clamp_y_min, b.clamp_y_max});
        jb["tag"] = b.tag();
        bls.push_back(jb);
    }
    j["blockers"] = bls;
    json fcs = json::array();
    for (const Facade& f : facades) {
        json jf;
        jf["axis"] = f.axis == 0 ? "x" : "y";
        jf["c"] = f.c;
        jf["lo"] = f.lo;
        jf["hi"] = f.hi;
        jf["height_m"] = f.height_m;
        fcs.push_back(jf);
    }
    j["facades"] = fcs;
    return j.dump();
}

Scene Scene::from_json(const std::string& text) {
    json j = json::parse(text);
    if (j.at("schema").get<int>() != 1) throw std::invalid_argument("Scene::from_json: unsupported schema");
    Scene s;
    const json& cfg = j.at("config");
    s.config.seed = cfg.at("seed").get<std::uint64_t>();
    s.config.area_x_m = cfg.at("area_x_m").get<double>();
    s.config.area_y_m = cfg.at("area_y_m").get<double>();
    s.config.grid_nx = cfg.at("grid_nx").get<int>();
    s.config.grid_ny = cfg.at("grid_ny").get<int>();
    s.config.bs_height_m = cfg.at("bs_height_m").get<double>();
    s.config.rx_height_m = cfg.at("rx_height_m").get<double>();
    s.config.n_vehicles = cfg.at("n_vehicles").get<int>();
    s.config.n_free_vehicles = cfg.at("n_free_vehicles").get<int>();
    s.config.vehicle_size_min = vec3_from_json(cfg.at("vehicle_size_min"));
    s.config.vehicle_size_max = vec3_from_json(cfg.at("vehicle_size_max"));
    s.config.speed_min_mps = cfg.at("speed_min_mps").get<double>();
    s.config.speed_max_mps = cfg.at("speed_max_mps").get<double>();
    s.config.has_traffic_band = cfg.at("has_traffic_band").get<bool>();
    s.config.traffic_y_min = cfg.at("traffic_y_min").get<double>();
    s.config.traffic_y_max = cfg.at("traffic_y_max").get<double>();
    s.config.n_reflector_facades = cfg.at("n_reflector_facades").get<int>();
    s.config.facade_height_m = cfg.at("facade_height_m").get<double>();
    s.config.carrier_ghz = cfg.at("carrier_ghz").get<double>();
    s.config.ptx_dbm = cfg.at("ptx_dbm").get<double>();
    s.config.gtx_db = cfg.at("gtx_db").get<double>();
    s.config.grx_db = cfg.at("grx_db").get<double>();
    s.bs_pos = vec3_from_json(j.at("bs_pos"));
    for (const json& r : j.at("receivers")) s.receivers.push_back(vec3_from_json(r));
    for (const json& jb : j.at("blockers")) {
        Blocker b;
        b.center = vec3_from_json(jb.at("center"));
        b.extent = vec3_from_json(jb.at("extent"));
        b.vel_x_mps = jb.at("vel_mps").at(0).get<double>();
        b.vel_y_mps = jb.at("vel_mps").at(1).get<double>();
        b.clamp_y_min = jb.at("clamp_y").at(0).get<double>();
        b.clamp_y_max = jb.at("clamp_y").at(1).get<double>();
        s.blockers.push_back(b);
    }
    for (const json& jf : j.at("facades")) {
        Facade f;
        f.axis = jf.at("axis").get<std::string>() == "x" ? 0 : 1;
        f.c = jf.at("c").get<double>();
        f.lo = jf.at("lo").get<double>();
        f.hi = jf.at("hi").get<double>();
        f.height_m = jf.at("height_m").get<double>();
        s.facades.push_back(f);
    }
    return s;
}

} // namespace rssgen

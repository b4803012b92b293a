#include "rssgen/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "rssgen/io_util.hpp"
#include "rssgen/rng.hpp"

namespace rssgen {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& known, const std::string& section) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!known.count(it.key())) {
            throw std::invalid_argument("config: unknown key \"" + it.key() + "\" in section " + section);
        }
    }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
    if (obj.contains(key)) return obj.at(key).get<T>();
    return fallback;
}

Vec3 vec3_or(const json& obj, const char* key, Vec3 fallback) {
    if (!obj.contains(key)) return fallback;
    const json& a = obj.at(key);
    return {a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()};
}

DomainShiftSpec parse_covariate(const json& obj, const std::string& section) {
    reject_unknown_keys(obj, {"radar_std", "gps_std", "lidar_std", "brightness_scale"}, section);
    DomainShiftSpec spec;
    spec.kind = ShiftKind::covariate_noise;
    spec.radar_noise_std = get_or(obj, "radar_std", 0.0);
    spec.gps_noise_std = get_or(obj, "gps_std", 0.0);
    spec.lidar_noise_std = get_or(obj, "lidar_std", 0.0);
    spec.brightness_scale = get_or(obj, "brightness_scale", 1.0);
    return spec;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create directory " + dir + ": " + ec.message());
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path);
}

std::string data_dir(const std::string& out_dir) { return out_dir + "/data"; }
std::string models_dir(const std::string& out_dir) { return out_dir + "/models"; }
std::string metrics_dir(const std::string& out_dir) { return out_dir + "/metrics"; }
std::string plots_dir(const std::string& out_dir) { return out_dir + "/plots"; }

std::string split_path(const std::string& out_dir, int bs_id, const std::string& split) {
    return data_dir(out_dir) + "/bs" + std::to_string(bs_id) + "_" + split + ".jsonl";
}

std::string model_path(const std::string& out_dir, int bs_id, TrainMethod method, std::uint64_t seed) {
    return models_dir(out_dir) + "/bs" + std::to_string(bs_id) + "_" + train_method_name(method) + "_seed" +
           std::to_string(seed) + ".bin";
}

} // namespace

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    const json j = json::parse(text);
    reject_unknown_keys(j, {"schema", "scene", "channel", "features", "dataset", "train", "sweep", "adapt", "pac"},
                        "(root)");
    if (j.at("schema").get<int>() != 1) throw std::invalid_argument("config: unsupported schema version");

    ExperimentConfig cfg;
    cfg.config_hash = fnv1a_hex(j.dump());

    const json scene = j.value("scene", json::object());
    reject_unknown_keys(scene,
                        {"area_x_m", "area_y_m", "grid_nx", "grid_ny", "bs_height_m", "rx_height_m", "n_vehicles",
                         "vehicle_size_min", "vehicle_size_max", "speed_min_mps", "speed_max_mps",
                         "traffic_y_min", "traffic_y_max", "n_free_vehicles", "n_reflector_facades", "facade_height_m",
                         "carrier_ghz", "ptx_dbm", "gtx_db", "grx_db"},
                        "scene");
    cfg.scene.area_x_m = get_or(scene, "area_x_m", cfg.scene.area_x_m);
    cfg.scene.area_y_m = get_or(scene, "area_y_m", cfg.scene.area_y_m);
    cfg.scene.grid_nx = get_or(scene, "grid_nx", cfg.scene.grid_nx);
    cfg.scene.grid_ny = get_or(scene, "grid_ny", cfg.scene.grid_ny);
    cfg.scene.bs_height_m = get_or(scene, "bs_height_m", cfg.scene.bs_height_m);
    cfg.scene.rx_height_m = get_or(scene, "rx_height_m", cfg.scene.rx_height_m);
    cfg.scene.n_vehicles = get_or(scene, "n_vehicles", cfg.scene.n_vehicles);
    cfg.scene.n_free_vehicles = get_or(scene, "n_free_vehicles", cfg.scene.n_free_vehicles);
    cfg.scene.vehicle_size_min = vec3_or(scene, "vehicle_size_min", cfg.scene.vehicle_size_min);
    cfg.scene.vehicle_size_max = vec3_or(scene, "vehicle_size_max", cfg.scene.vehicle_size_max);
    cfg.scene.speed_min_mps = get_or(scene, "speed_min_mps", cfg.scene.speed_min_mps);
    cfg.scene.speed_max_mps = get_or(scene, "speed_max_mps", cfg.scene.speed_max_mps);
    if (scene.contains("traffic_y_min") != scene.contains("traffic_y_max"))
        throw std::invalid_argument("config: traffic_y_min and traffic_y_max must be set together");
    if (scene.contains("traffic_y_min")) {
        cfg.scene.has_traffic_band = true;
        cfg.scene.traffic_y_min = scene.at("traffic_y_min").get<double>();
        cfg.scene.traffic_y_max = scene.at("traffic_y_max").get<double>();
    }
    cfg.scene.n_reflector_facades = get_or(scene, "n_reflector_facades", cfg.scene.n_reflector_facades);
    cfg.scene.facade_height_m = get_or(scene, "facade_height_m", cfg.scene.facade_height_m);
    cfg.scene.carrier_ghz = get_or(scene, "carrier_ghz", cfg.scene.carrier_ghz);
    cfg.scene.ptx_dbm = get_or(scene, "ptx_dbm", cfg.scene.ptx_dbm);
    cfg.scene.gtx_db = get_or(scene, "gtx_db", cfg.scene.gtx_db);
    cfg.scene.grx_db = get_or(scene, "grx_db", cfg.scene.grx_db);

    const json channel = j.value("channel", json::object());
    reject_unknown_keys(channel,
                        {"shadow_sigma_db", "shadow_seed", "per_blocker_db", "per_meter_db", "blockage_cap_db",
                         "reflection_loss_db"},
                        "channel");
    if (!channel.contains("shadow_seed")) throw std::invalid_argument("config: channel.shadow_seed is required");
    cfg.channel.pathloss.fc_ghz = cfg.scene.carrier_ghz;
    cfg.channel.pathloss.shadow_sigma_db = get_or(channel, "shadow_sigma_db", cfg.channel.pathloss.shadow_sigma_db);
    cfg.shadow_seed = channel.at("shadow_seed").get<std::uint64_t>();
    cfg.channel.per_blocker_db = get_or(channel, "per_blocker_db", cfg.channel.per_blocker_db);
    cfg.channel.per_meter_db = get_or(channel, "per_meter_db", cfg.channel.per_meter_db);
    cfg.channel.blockage_cap_db = get_or(channel, "blockage_cap_db", cfg.channel.blockage_cap_db);
    cfg.channel.reflection_loss_db = get_or(channel, "reflection_loss_db", cfg.channel.reflection_loss_db);

    const json features = j.value("features", json::object());
    reject_unknown_keys(features, {"bev_grid", "radar_points", "gps_max", "base_brightness"}, "features");
    cfg.features.bev_grid = get_or(features, "bev_grid", cfg.features.bev_grid);
    cfg.features.radar_points = get_or(features, "radar_points", cfg.features.radar_points);
    cfg.features.gps_max = get_or(features, "gps_max", cfg.features.gps_max);
    cfg.features.base_brightness = get_or(features, "base_brightness", cfg.features.base_brightness);

    const json dataset = j.value("dataset", json::object());
    reject_unknown_keys(dataset,
                        {"n_bs", "bs_seeds", "n_train", "n_val1", "n_val2", "dt_s", "train_buses", "val1_add_buses",
                         "val1_move_vehicles", "val1_rx_height_m", "bus_size", "val2_noise", "train_covariate",
                         "train_covariate_bs"},
                        "dataset");
    cfg.n_bs = get_or(dataset, "n_bs", cfg.n_bs);
    if (!dataset.contains("bs_seeds")) throw std::invalid_argument("config: dataset.bs_seeds is required");
    cfg.bs_seeds = dataset.at("bs_seeds").get<std::vector<std::uint64_t>>();
    if (static_cast<int>(cfg.bs_seeds.size()) != cfg.n_bs)
        throw std::invalid_argument("config: dataset.bs_seeds must list one seed per BS");
    cfg.n_train = get_or(dataset, "n_train", cfg.n_train);
    cfg.n_val1 = get_or(dataset, "n_val1", cfg.n_val1);
    cfg.n_val2 = get_or(dataset, "n_val2", cfg.n_val2);
    cfg.dt_s = get_or(dataset, "dt_s", cfg.dt_s);
    cfg.train_buses = get_or(dataset, "train_buses", std::vector<int>(static_cast<std::size_t>(cfg.n_bs), 0));
    cfg.val1_add_buses = get_or(dataset, "val1_add_buses", std::vector<int>(static_cast<std::size_t>(cfg.n_bs), 0));
    {
        std::vector<bool> default_move(static_cast<std::size_t>(cfg.n_bs), true);
        cfg.val1_move_vehicles = get_or(dataset, "val1_move_vehicles", default_move);
    }
    cfg.val1_rx_height_m = get_or(dataset, "val1_rx_height_m", 0.0);
    cfg.bus_size = vec3_or(dataset, "bus_size", cfg.bus_size);
    if (dataset.contains("val2_noise")) {
        cfg.val2_noise = parse_covariate(dataset.at("val2_noise"), "dataset.val2_noise");
    } else {
        cfg.val2_noise.kind = ShiftKind::covariate_noise;
        cfg.val2_noise.radar_noise_std = 1.0;
        cfg.val2_noise.gps_noise_std = 0.5;
        cfg.val2_noise.lidar_noise_std = 0.25;
        cfg.val2_noise.brightness_scale = 0.75;
    }
    if (dataset.contains("train_covariate")) {
        cfg.train_covariate = parse_covariate(dataset.at("train_covariate"), "dataset.train_covariate");
    } else {
        cfg.train_covariate.kind = ShiftKind::covariate_noise;
    }
    cfg.train_covariate_bs = get_or(dataset, "train_covariate_bs", std::vector<int>{});
    if (static_cast<int>(cfg.train_buses.size()) != cfg.n_bs ||
        static_cast<int>(cfg.val1_add_buses.size()) != cfg.n_bs ||
        static_cast<int>(cfg.val1_move_vehicles.size()) != cfg.n_bs)
        throw std::invalid_argument("config: per-BS dataset arrays must have n_bs entries");

    const json train = j.value("train", json::object());
    reject_unknown_keys(train,
                        {"epochs", "batch", "lr", "lr_decay_epochs", "lr_decay_factor", "lambda", "seeds", "method",
                         "eval_every", "clip_norm", "optimizer", "enc_hidden", "enc_out", "head_hidden",
                         "embed_dim"},
                        "train");
    cfg.enc_hidden = get_or(train, "enc_hidden", cfg.enc_hidden);
    cfg.enc_out = get_or(train, "enc_out", cfg.enc_out);
    cfg.head_hidden = get_or(train, "head_hidden", cfg.head_hidden);
    cfg.embed_dim = get_or(train, "embed_dim", cfg.embed_dim);
    cfg.train.epochs = get_or(train, "epochs", cfg.train.epochs);
    cfg.train.batch = get_or(train, "batch", cfg.train.batch);
    cfg.train.lr = get_or(train, "lr", cfg.train.lr);
    cfg.train.lr_decay_epochs = get_or(train, "lr_decay_epochs", cfg.train.lr_decay_epochs);
    cfg.train.lr_decay_factor = get_or(train, "lr_decay_factor", cfg.train.lr_decay_factor);
    cfg.train.lambda = get_or(train, "lambda", cfg.train.lambda);
    cfg.train.clip_norm = get_or(train, "clip_norm", cfg.train.clip_norm);
    cfg.train.eval_every = get_or(train, "eval_every", cfg.train.eval_every);
    if (!train.contains("seeds")) throw std::invalid_argument("config: train.seeds is required");
    cfg.train_seeds = train.at("seeds").get<std::vector<std::uint64_t>>();
    if (cfg.train_seeds.empty()) throw std::invalid_argument("config: train.seeds must be nonempty");
    cfg.train.seed = cfg.train_seeds.front();
    cfg.train.method = train_method_from_name(get_or<std::string>(train, "method", "physics"));
    cfg.train.optimizer = optimizer_from_name(get_or<std::string>(train, "optimizer", "adam"));

    const json sweep = j.value("sweep", json::object());
    reject_unknown_keys(sweep, {"fractions", "methods", "seeds"}, "sweep");
    cfg.sweep.fractions = get_or(sweep, "fractions", std::vector<double>{0.125, 0.25, 0.5, 1.0});
    for (const std::string& name :
         get_or(sweep, "methods", std::vector<std::string>{"physics", "baseline1", "baseline2", "baseline3"})) {
        cfg.sweep.methods.push_back(train_method_from_name(name));
    }
    cfg.sweep.seeds = get_or(sweep, "seeds", cfg.train_seeds);

    const json adapt = j.value("adapt", json::object());
    reject_unknown_keys(adapt,
                        {"epochs", "batch", "lr", "lambda", "clip_norm", "seed", "w2_eps", "adapt_pool",
                         "budget_fractions", "detect_factor", "force_adapt"},
                        "adapt");
    if (!adapt.contains("seed")) throw std::invalid_argument("config: adapt.seed is required");
    cfg.adapt.epochs = get_or(adapt, "epochs", cfg.adapt.epochs);
    cfg.adapt.batch = get_or(adapt, "batch", cfg.adapt.batch);
    cfg.adapt.lr = get_or(adapt, "lr", cfg.adapt.lr);
    cfg.adapt.lambda = get_or(adapt, "lambda", cfg.adapt.lambda);
    cfg.adapt.clip_norm = get_or(adapt, "clip_norm", cfg.adapt.clip_norm);
    cfg.adapt.seed = adapt.at("seed").get<std::uint64_t>();
    cfg.adapt.w2_eps = get_or(adapt, "w2_eps", cfg.adapt.w2_eps);
    cfg.adapt_pool = get_or(adapt, "adapt_pool", cfg.adapt_pool);
    cfg.budget_fractions = get_or(adapt, "budget_fractions", cfg.budget_fractions);
    cfg.detect_factor = get_or(adapt, "detect_factor", cfg.detect_factor);
    cfg.force_adapt = get_or(adapt, "force_adapt", cfg.force_adapt);

    const json pac = j.value("pac", json::object());
    reject_unknown_keys(pac, {"n_cells", "threshold", "epsilon0", "epsilon1", "delta", "trials", "seed", "configs"},
                        "pac");
    if (!pac.contains("seed")) throw std::invalid_argument("config: pac.seed is required");
    cfg.pac.n_cells = get_or(pac, "n_cells", cfg.pac.n_cells);
    cfg.pac.threshold = get_or(pac, "threshold", cfg.pac.threshold);
    cfg.pac.epsilon0 = get_or(pac, "epsilon0", cfg.pac.epsilon0);
    cfg.pac.epsilon1 = get_or(pac, "epsilon1", cfg.pac.epsilon1);
    cfg.pac.delta = get_or(pac, "delta", cfg.pac.delta);
    cfg.pac.trials = get_or(pac, "trials", cfg.pac.trials);
    cfg.pac.seed = pac.at("seed").get<std::uint64_t>();
    cfg.pac_configs = get_or(pac, "configs", cfg.pac_configs);

    cfg.scene.validate();
    cfg.features.validate();
    cfg.train.validate();
    return cfg;
}

void ExperimentConfig::override_seed(std::uint64_t seed) {
    for (std::size_t k = 0; k < bs_seeds.size(); ++k) bs_seeds[k] = mix_seed(seed, 0xb5ULL, k);
    shadow_seed = mix_seed(seed, 0x5adULL);
    for (std::size_t i = 0; i < train_seeds.size(); ++i) train_seeds[i] = mix_seed(seed, 0x7ULL, i);
    train.seed = train_seeds.front();
    for (std::size_t i = 0; i < sweep.seeds.size(); ++i) sweep.seeds[i] = mix_seed(seed, 0x7ULL, i);
    adapt.seed = mix_seed(seed, 0xadULL);
    pac.seed = mix_seed(seed, 0xbacULL);
    config_hash = fnv1a_hex(config_hash + "+seed" + std::to_string(seed));
}

ModelConfig ExperimentConfig::model_config() const {
    ModelConfig mcfg = ModelConfig::for_features(features, scene.n_receivers());
    mcfg.enc_hidden = enc_hidden;
    mcfg.enc_out = enc_out;
    mcfg.head_hidden = head_hidden;
    mcfg.embed_dim = embed_dim;
    return mcfg;
}

namespace {

/// Bus strips: the two parts of the area outside the traffic band, where
/// buses cruise slowly along x. Strip 0 is the lower (y < band) strip,
/// strip 1 the upper one. Without a band the whole area is one strip.
std::pair<double, double> bus_strip(const ExperimentConfig& cfg, int which) {
    const double hy = cfg.bus_size.y / 2.0;
    const double y_lo_area = -cfg.scene.area_y_m / 2 + hy;
    const double y_hi_area = cfg.scene.area_y_m / 2 - hy;
    if (!cfg.scene.has_traffic_band) return {y_lo_area, y_hi_area};
    const double lower_hi = cfg.scene.traffic_y_min - hy;
    const double upper_lo = cfg.scene.traffic_y_max + hy;
    const bool lower_ok = lower_hi > y_lo_area;
    const bool upper_ok = upper_lo < y_hi_area;
    if (lower_ok && upper_ok) {
        return which % 2 == 0 ? std::pair{y_lo_area, lower_hi} : std::pair{upper_lo, y_hi_area};
    }
    if (lower_ok) return {y_lo_area, lower_hi};
    if (upper_ok) return {upper_lo, y_hi_area};
    return {y_lo_area, y_hi_area};
}

int strip_of(const ExperimentConfig& cfg, const Blocker& b) {
    if (!cfg.scene.has_traffic_band) return 0;
    return b.center.y > cfg.scene.traffic_y_max ? 1 : 0;
}

Blocker make_strip_bus(const ExperimentConfig& cfg, Rng& rng, int which) {
    Blocker bus;
    bus.extent = cfg.bus_size;
    const auto [y_lo, y_hi] = bus_strip(cfg, which);
    bus.center = {rng.uniform(8.0, cfg.scene.area_x_m - 8.0), rng.uniform(y_lo, y_hi), cfg.bus_size.z / 2.0};
    bus.clamp_y_min = y_lo;
    bus.clamp_y_max = y_hi;
    // Slow cruise along the strip; the band clamp keeps it off the road.
    bus.vel_x_mps = (rng.uniform() < 0.5 ? 1.0 : -1.0) * rng.uniform(1.0, 3.0);
    bus.vel_y_mps = 0.0;
    return bus;
}

} // namespace

Scene base_scene_for_bs(const ExperimentConfig& cfg, int bs_index) {
    SceneConfig scfg = cfg.scene;
    scfg.seed = cfg.bs_seeds[static_cast<std::size_t>(bs_index)];
    Scene scene = generate_scene(scfg);

    const int buses = cfg.train_buses[static_cast<std::size_t>(bs_index)];
    if (buses > 0) {
        Rng rng(mix_seed(scfg.seed, 0xb05eULL));
        DomainShiftSpec spec;
        spec.kind = ShiftKind::concept_blockage;
        for (int b = 0; b < buses; ++b) {
            BlockerEdit edit;
            edit.op = BlockerEdit::Op::add;
            // Strip assignment rotates per BS so each BS's home pattern is
            // another BS's unseen pattern.
            edit.blocker = make_strip_bus(cfg, rng, bs_index + b);
            spec.blocker_edits.push_back(edit);
        }
        scene = apply_concept_shift(scene, spec);
    }
    return scene;
}

Scene val1_scene_for_bs(const ExperimentConfig& cfg, int bs_index, const Scene& base) {
    Scene shifted = base;
    Rng rng(mix_seed(cfg.bs_seeds[static_cast<std::size_t>(bs_index)], 0x7a11ULL));
    DomainShiftSpec spec;
    spec.kind = ShiftKind::concept_blockage;

    if (cfg.val1_move_vehicles[static_cast<std::size_t>(bs_index)]) {
        // "Large vehicles at different locations": park every bus in the
        // strip it never visited during training, and relocate the largest
        // ordinary vehicle.
        int largest = -1;
        double best = 0.0;
        for (std::size_t i = 0; i < base.blockers.size(); ++i) {
            const Blocker& b = base.blockers[i];
            if (b.is_bus()) {
                const auto [y_lo, y_hi] = bus_strip(cfg, 1 - strip_of(cfg, b));
                BlockerEdit edit;
                edit.op = BlockerEdit::Op::move;
                edit.index = static_cast<int>(i);
                edit.new_center = {rng.uniform(8.0, cfg.scene.area_x_m - 8.0), rng.uniform(y_lo, y_hi), 0.0};
                spec.blocker_edits.push_back(edit);
            } else if (b.extent.x * b.extent.y > best) {
                best = b.extent.x * b.extent.y;
                largest = static_cast<int>(i);
            }
        }
        if (largest >= 0) {
            const Blocker& b = base.blockers[static_cast<std::size_t>(largest)];
            BlockerEdit edit;
            edit.op = BlockerEdit::Op::move;
            edit.index = largest;
            edit.new_center = {rng.uniform(4.0, cfg.scene.area_x_m - 4.0),
                               rng.uniform(-cfg.scene.area_y_m / 2 + 2.0, cfg.scene.area_y_m / 2 - 2.0), 0.0};
            edit.new_vel_x_mps = b.vel_x_mps;
            edit.new_vel_y_mps = b.vel_y_mps;
            spec.blocker_edits.push_back(edit);
        }
    }
    for (int b = 0; b < cfg.val1_add_buses[static_cast<std::size_t>(bs_index)]; ++b) {
        // "Unseen large vehicles": buses this BS never trained with. The
        // strip offset is shifted by one so a single-strip BS gets its
        // additions in the strip it never saw.
        BlockerEdit edit;
        edit.op = BlockerEdit::Op::add;
        edit.blocker = make_strip_bus(cfg, rng, bs_index + 1 + b);
        spec.blocker_edits.push_back(edit);
    }
    if (!spec.blocker_edits.empty()) shifted = apply_concept_shift(shifted, spec);
    if (cfg.val1_rx_height_m > 0.0) {
        DomainShiftSpec h;
        h.kind = ShiftKind::concept_rx_height;
        h.new_rx_height_m = cfg.val1_rx_height_m;
        shifted = apply_concept_shift(shifted, h);
    }
    return shifted;
}

namespace {

bool bs_has_train_covariate(const ExperimentConfig& cfg, int bs_id) {
    return std::find(cfg.train_covariate_bs.begin(), cfg.train_covariate_bs.end(), bs_id) !=
           cfg.train_covariate_bs.end();
}

struct CovariatePass {
    const DomainShiftSpec* spec = nullptr;
    std::uint64_t noise_tag = 0;
};

Dataset roll_frames(const ExperimentConfig& cfg, Scene scene, int bs_id, int n_frames, std::uint64_t stream_tag,
                    int frame_id_base, const std::vector<CovariatePass>& covariates) {
    Dataset data;
    data.reserve(static_cast<std::size_t>(n_frames));
    ChannelParams ch = cfg.channel;
    ch.pathloss.fc_ghz = cfg.scene.carrier_ghz;
    ch.pathloss.shadow_seed = mix_seed(cfg.shadow_seed, static_cast<std::uint64_t>(bs_id));
    const std::uint64_t bs_seed = cfg.bs_seeds[static_cast<std::size_t>(bs_id - 1)];
    for (int t = 0; t < n_frames; ++t) {
        scene = advance_frame(scene, cfg.dt_s, mix_seed(bs_seed, stream_tag, static_cast<std::uint64_t>(t)));
        FeatureBlock fb = extract_features(scene, cfg.features);
        for (const CovariatePass& pass : covariates) {
            if (pass.spec) {
                fb = apply_covariate_shift(fb, *pass.spec,
                                           mix_seed(bs_seed, pass.noise_tag, static_cast<std::uint64_t>(t)));
            }
        }
        Record rec;
        rec.frame_id = frame_id_base + t;
        rec.bs_id = bs_id;
        rec.features = fb.flatten();
        rec.truth = compute_rss_map(scene, ch);
        rec.scene_hash = fnv1a_hex(scene.to_json());
        data.push_back(std::move(rec));
    }
    return data;
}

} // namespace

BsData generate_bs_data(const ExperimentConfig& cfg, int bs_index) {
    if (bs_index < 0 || bs_index >= cfg.n_bs) throw std::invalid_argument("generate_bs_data: bs_index out of range");
    const int bs_id = bs_index + 1;
    const Scene base = base_scene_for_bs(cfg, bs_index);
    const Scene shifted = val1_scene_for_bs(cfg, bs_index, base);

    BsData out;
    out.bs_id = bs_id;
    // A BS listed in train_covariate_bs lives with degraded sensors: the
    // covariate treatment is part of its home domain, so it applies to every
    // split, and VAL-2 stacks its extra noise on top.
    const DomainShiftSpec* home_cov = bs_has_train_covariate(cfg, bs_id) ? &cfg.train_covariate : nullptr;
    out.train = roll_frames(cfg, base, bs_id, cfg.n_train, 0xf7a0ULL, 0, {{home_cov, 0x7c00ULL}});
    out.val1 = roll_frames(cfg, shifted, bs_id, cfg.n_val1, 0xf7a1ULL, 100000, {{home_cov, 0x7c01ULL}});
    out.val2 = roll_frames(cfg, base, bs_id, cfg.n_val2, 0xf7a2ULL, 200000,
                           {{home_cov, 0x7c03ULL}, {&cfg.val2_noise, 0x7c02ULL}});
    return out;
}

AdaptScenario parse_scenario(const std::string& name, int n_bs) {
    AdaptScenario sc;
    sc.name = name;
    std::string rest;
    if (name.rfind("val1-bs", 0) == 0) {
        sc.use_val2 = false;
        rest = name.substr(7);
    } else if (name.rfind("val2-bs", 0) == 0) {
        sc.use_val2 = true;
        rest = name.substr(7);
    } else {
        throw std::invalid_argument("unknown scenario \"" + name + "\" (expected val1-bs<ids> or val2-bs<ids>)");
    }
    if (rest.empty()) throw std::invalid_argument("scenario \"" + name + "\" names no BS ids");
    for (char c : rest) {
        if (c < '1' || c > '9') throw std::invalid_argument("scenario \"" + name + "\": BS ids must be digits 1-9");
        const int id = c - '0';
        if (id > n_bs) throw std::invalid_argument("scenario \"" + name + "\": BS id exceeds n_bs");
        sc.requesters.push_back(id);
    }
    return sc;
}

void parallel_for_bs(int n, const std::function<void(int)>& fn) {
    int max_threads = static_cast<int>(std::thread::hardware_concurrency());
    if (max_threads <= 0) max_threads = 1;
    if (const char* env = std::getenv("RSSGEN_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) max_threads = std::min(max_threads, cap);
    }
    const int workers = std::min(n, max_threads);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            try {
                for (int i = w; i < n; i += workers) fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (std::thread& t : pool) t.join();
    for (const std::exception_ptr& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::string metrics_csv_header() { return "bs_id,method,seed,fraction,epoch,split,mae,rmse,flops,l_data,l_phy"; }

std::string metrics_csv_row(const MetricsRow& row) {
    std::string out;
    out += std::to_string(row.bs_id);
    out += ',';
    out += row.method;
    out += ',';
    out += std::to_string(row.seed);
    out += ',';
    out += fmt_double(row.fraction);
    out += ',';
    out += std::to_string(row.epoch);
    out += ',';
    out += row.split;
    out += ',';
    out += fmt_double(row.mae);
    out += ',';
    out += fmt_double(row.rmse);
    out += ',';
    out += std::to_string(row.flops);
    out += ',';
    out += fmt_double(row.l_data);
    out += ',';
    out += fmt_double(row.l_phy);
    return out;
}

std::string adapt_csv_header() {
    return "bs_id,method,samples_used,epoch,rmse,mae,flops,bytes_exchanged,gamma_json";
}

std::string adapt_csv_row(const AdaptationRow& row) {
    std::string out;
    out += std::to_string(row.bs_id);
    out += ',';
    out += row.method;
    out += ',';
    out += std::to_string(row.samples_used);
    out += ',';
    out += std::to_string(row.epoch);
    out += ',';
    out += fmt_double(row.rmse);
    out += ',';
    out += fmt_double(row.mae);
    out += ',';
    out += std::to_string(row.flops);
    out += ',';
    out += std::to_string(row.bytes_exchanged);
    out += ',';
    out += csv_quote(row.gamma_json);
    return out;
}

void cmd_gen(const ExperimentConfig& cfg, const std::string& out_dir) {
    ensure_dir(data_dir(out_dir));
    std::vector<json> manifests(static_cast<std::size_t>(cfg.n_bs));
    parallel_for_bs(cfg.n_bs, [&](int k) {
        const BsData data = generate_bs_data(cfg, k);
        const Scene base = base_scene_for_bs(cfg, k);
        write_text_file(data_dir(out_dir) + "/bs" + std::to_string(data.bs_id) + "_scene.json", base.to_json());
        write_jsonl(data.train, split_path(out_dir, data.bs_id, "train"), cfg.config_hash);
        write_jsonl(data.val1, split_path(out_dir, data.bs_id, "val1"), cfg.config_hash);
        write_jsonl(data.val2, split_path(out_dir, data.bs_id, "val2"), cfg.config_hash);
        json m;
        m["bs_id"] = data.bs_id;
        m["n_train"] = data.train.size();
        m["n_val1"] = data.val1.size();
        m["n_val2"] = data.val2.size();
        manifests[static_cast<std::size_t>(k)] = m;
    });
    json manifest;
    manifest["schema"] = 1;
    manifest["config_hash"] = cfg.config_hash;
    manifest["bs"] = manifests;
    write_text_file(data_dir(out_dir) + "/manifest.json", manifest.dump(2) + "\n");
    std::cout << "gen: wrote " << cfg.n_bs * 3 << " dataset files to " << data_dir(out_dir) << "\n";
}

namespace {

BsData load_bs_data(const ExperimentConfig& cfg, const std::string& out_dir, int bs_id) {
    BsData data;
    data.bs_id = bs_id;
    data.train = read_jsonl(split_path(out_dir, bs_id, "train"));
    data.val1 = read_jsonl(split_path(out_dir, bs_id, "val1"));
    data.val2 = read_jsonl(split_path(out_dir, bs_id, "val2"));
    (void)cfg;
    return data;
}

std::string train_meta_json(const ExperimentConfig& cfg, int bs_id, const TrainResult& res) {
    json meta;
    meta["bs_id"] = bs_id;
    meta["train_rmse"] = res.final_train_rmse;
    meta["stats"] = json::parse(res.stats.to_json());
    meta["config_hash"] = cfg.config_hash;
    return meta.dump();
}

json series_json(const std::string& label, const std::vector<double>& x, const std::vector<double>& y) {
    json s;
    s["label"] = label;
    s["x"] = x;
    s["y"] = y;
    return s;
}

void write_plot(const std::string& path, const std::string& figure, const ExperimentConfig& cfg,
                const std::vector<json>& series) {
    json j;
    j["schema"] = 1;
    j["figure"] = figure;
    j["config_hash"] = cfg.config_hash;
    j["series"] = series;
    write_text_file(path, j.dump(2) + "\n");
}

} // namespace

void cmd_train(const ExperimentConfig& cfg, const std::string& out_dir) {
    ensure_dir(models_dir(out_dir));
    ensure_dir(metrics_dir(out_dir));
    ensure_dir(plots_dir(out_dir));
    const ModelConfig mcfg = cfg.model_config();

    struct Job {
        int bs_id;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (int k = 0; k < cfg.n_bs; ++k) {
        for (std::uint64_t seed : cfg.train_seeds) jobs.push_back({k + 1, seed});
    }
    std::vector<std::vector<MetricsRow>> rows(jobs.size());
    parallel_for_bs(static_cast<int>(jobs.size()), [&](int idx) {
        const Job& job = jobs[static_cast<std::size_t>(idx)];
        const BsData data = load_bs_data(cfg, out_dir, job.bs_id);
        TrainConfig tcfg = cfg.train;
        tcfg.seed = job.seed;
        const TrainResult res = train(job.bs_id, mcfg, data.train,
                                      {{"val1", &data.val1}, {"val2", &data.val2}}, tcfg);
        save_snapshot(res.model, model_path(out_dir, job.bs_id, tcfg.method, job.seed),
                      train_meta_json(cfg, job.bs_id, res));
        rows[static_cast<std::size_t>(idx)] = res.history;
    });

    std::string csv = "# config_hash=" + cfg.config_hash + "\n" + metrics_csv_header() + "\n";
    for (const auto& job_rows : rows) {
        for (const MetricsRow& r : job_rows) csv += metrics_csv_row(r) + "\n";
    }
    write_text_file(metrics_dir(out_dir) + "/train_metrics.csv", csv);

    // Learning-curve plot data per BS (first seed, val1 RMSE/MAE by epoch).
    std::vector<json> series;
    for (int k = 0; k < cfg.n_bs; ++k) {
        std::vector<double> x, y;
        for (const auto& job_rows : rows) {
            for (const MetricsRow& r : job_rows) {
                if (r.bs_id == k + 1 && r.seed == cfg.train_seeds.front() && r.split == "val1") {
                    x.push_back(r.epoch);
                    y.push_back(r.mae);
                }
            }
        }
        series.push_back(series_json("bs" + std::to_string(k + 1) + "/" + train_method_name(cfg.train.method), x, y));
    }
    write_plot(plots_dir(out_dir) + "/train_curves_mae.json", "train_curves_mae", cfg, series);
    std::cout << "train: wrote metrics and " << jobs.size() << " snapshots to " << out_dir << "\n";
}

void cmd_sweep(const ExperimentConfig& cfg, const std::string& out_dir) {
    ensure_dir(metrics_dir(out_dir));
    ensure_dir(plots_dir(out_dir));
    const ModelConfig mcfg = cfg.model_config();

    std::vector<std::vector<SweepRow>> all(static_cast<std::size_t>(cfg.n_bs));
    parallel_for_bs(cfg.n_bs, [&](int k) {
        const BsData data = load_bs_data(cfg, out_dir, k + 1);
        all[static_cast<std::size_t>(k)] =
            sample_efficiency_sweep(k + 1, mcfg, data.train, data.val1, data.val2, cfg.train, cfg.sweep);
    });

    std::string csv = "# config_hash=" + cfg.config_hash + "\n" + metrics_csv_header() + "\n";
    for (const auto& bs_rows : all) {
        for (const SweepRow& r : bs_rows) {
            MetricsRow m1;
            m1.bs_id = r.bs_id;
            m1.method = train_method_name(r.method);
            m1.seed = r.seed;
            m1.fraction = r.fraction;
            m1.epoch = cfg.train.epochs - 1;
            m1.split = "val1";
            m1.mae = r.val1.mae_dbm;
            m1.rmse = r.val1.rmse_dbm;
            m1.flops = r.flops;
            m1.l_data = r.l_data;
            m1.l_phy = r.l_phy;
            csv += metrics_csv_row(m1) + "\n";
            m1.split = "val2";
            m1.mae = r.val2.mae_dbm;
            m1.rmse = r.val2.rmse_dbm;
            csv += metrics_csv_row(m1) + "\n";
        }
    }
    write_text_file(metrics_dir(out_dir) + "/sweep_metrics.csv", csv);

    // Fig.4-style plot data: median-over-seeds MAE/RMSE vs training fraction.
    for (const char* metric : {"mae", "rmse"}) {
        std::vector<json> series;
        for (int k = 0; k < cfg.n_bs; ++k) {
            for (TrainMethod method : cfg.sweep.methods) {
                std::vector<double> x, y;
                for (double f : cfg.sweep.fractions) {
                    std::vector<double> vals;
                    for (const SweepRow& r : all[static_cast<std::size_t>(k)]) {
                        if (r.method == method && r.fraction == f) {
                            vals.push_back(std::string(metric) == "mae" ? r.val1.mae_dbm : r.val1.rmse_dbm);
                        }
                    }
                    if (vals.empty()) continue;
                    std::sort(vals.begin(), vals.end());
                    x.push_back(f);
                    y.push_back(vals[vals.size() / 2]);
                }
                series.push_back(series_json(
                    "bs" + std::to_string(k + 1) + "/" + train_method_name(method), x, y));
            }
        }
        write_plot(plots_dir(out_dir) + "/fig4_" + metric + "_val1.json",
                   std::string("sweep_") + metric + "_val1", cfg, series);
    }
    std::cout << "sweep: wrote sweep metrics for " << cfg.n_bs << " BSs to " << out_dir << "\n";
}

void cmd_adapt(const ExperimentConfig& cfg, const std::string& out_dir, const std::string& scenario_name) {
    ensure_dir(metrics_dir(out_dir));
    ensure_dir(plots_dir(out_dir));
    const AdaptScenario scenario = parse_scenario(scenario_name.empty() ? "val1-bs45" : scenario_name, cfg.n_bs);

    // Load every BS's trained model (first seed) and shipped stats.
    std::vector<Model> models;
    std::vector<FeatureStats> stats;
    std::vector<double> train_rmse(static_cast<std::size_t>(cfg.n_bs), 0.0);
    for (int k = 0; k < cfg.n_bs; ++k) {
        const std::string path = model_path(out_dir, k + 1, cfg.train.method, cfg.train_seeds.front());
        if (!fs::exists(path)) throw std::runtime_error("cmd_adapt: missing " + path + " (run train first)");
        LoadedSnapshot snap = load_snapshot(path);
        const json meta = json::parse(snap.meta_json);
        stats.push_back(FeatureStats::from_json(meta.at("stats").dump()));
        train_rmse[static_cast<std::size_t>(k)] = meta.at("train_rmse").get<double>();
        models.push_back(std::move(snap.model));
    }

    const std::vector<AdaptMethod> methods{AdaptMethod::proposed, AdaptMethod::finetune,
                                           AdaptMethod::finetune_nophys, AdaptMethod::averaged};
    std::string csv = "# config_hash=" + cfg.config_hash + "\n" + adapt_csv_header() + "\n";

    for (int bs_id : scenario.requesters) {
        const BsData data = load_bs_data(cfg, out_dir, bs_id);
        const Dataset& shifted = scenario.use_val2 ? data.val2 : data.val1;
        const int pool = std::min<int>(cfg.adapt_pool, static_cast<int>(shifted.size()) / 2);
        if (pool < 1) throw std::runtime_error("cmd_adapt: shifted split too small for the adaptation pool");
        const Dataset adapt_pool(shifted.begin(), shifted.begin() + pool);
        const Dataset eval_set(shifted.begin() + pool, shifted.end());

        // Rolling-window detection against the training-time baseline, unless
        // the scenario is forced via config.
        const Model& own = models[static_cast<std::size_t>(bs_id - 1)];
        if (!cfg.force_adapt) {
            const int window = std::min<int>(32, pool);
            const Dataset window_set(adapt_pool.begin(), adapt_pool.begin() + window);
            const ShiftDetector detector{train_rmse[static_cast<std::size_t>(bs_id - 1)], cfg.detect_factor};
            const EvalReport rep = evaluate(own, window_set, TrainMethod::physics);
            if (!detector.triggered(rep.rmse_dbm)) {
                std::cout << "adapt: BS " << bs_id << " window rmse " << rep.rmse_dbm
                          << " below trigger; skipping adaptation\n";
                continue;
            }
            std::cout << "adapt: BS " << bs_id << " shift detected (window rmse " << rep.rmse_dbm
                      << " > " << cfg.detect_factor << " x " << detector.baseline_rmse << ")\n";
        }

        std::vector<Donor> donors;
        for (int other = 1; other <= cfg.n_bs; ++other) {
            if (other == bs_id) continue;
            donors.push_back({other, models[static_cast<std::size_t>(other - 1)],
                              stats[static_cast<std::size_t>(other - 1)]});
        }

        // Budget sweep: every method adapts on nested prefixes of the pool.
        std::vector<json> fig9_series;
        std::vector<json> fig10_series;
        for (AdaptMethod method : methods) {
            std::vector<double> budget_x, budget_y;
            for (double f : cfg.budget_fractions) {
                const int take = std::max(1, static_cast<int>(std::ceil(f * pool)));
                const Dataset subset(adapt_pool.begin(), adapt_pool.begin() + take);
                const AdaptResult res =
                    collaborative_adapt(bs_id, subset, eval_set, donors, own, method, cfg.adapt);
                for (const AdaptationRow& row : res.rows) csv += adapt_csv_row(row) + "\n";
                budget_x.push_back(take);
                budget_y.push_back(res.rows.back().rmse);
                if (f == cfg.budget_fractions.back()) {
                    std::vector<double> fx, fy;
                    for (const AdaptationRow& row : res.rows) {
                        fx.push_back(static_cast<double>(row.flops));
                        fy.push_back(row.rmse);
                    }
                    fig10_series.push_back(series_json(adapt_method_name(method), fx, fy));
                }
            }
            fig9_series.push_back(series_json(adapt_method_name(method), budget_x, budget_y));
        }
        write_plot(plots_dir(out_dir) + "/fig9_rmse_bs" + std::to_string(bs_id) + ".json",
                   "adapt_rmse_vs_samples", cfg, fig9_series);
        write_plot(plots_dir(out_dir) + "/fig10_rmse_bs" + std::to_string(bs_id) + ".json",
                   "adapt_rmse_vs_flops", cfg, fig10_series);
    }
    write_text_file(metrics_dir(out_dir) + "/adapt_report_" + scenario.name + ".csv", csv);
    std::cout << "adapt: scenario " << scenario.name << " done\n";
}

void cmd_pac(const ExperimentConfig& cfg, const std::string& out_dir) {
    ensure_dir(out_dir + "/pac");

    auto run_to_json = [](const PacRunResult& r) {
        json j;
        j["m"] = r.m;
        j["class_size_restricted"] = r.class_size_restricted;
        j["class_size_total"] = r.class_size_total;
        j["trials"] = r.trials;
        j["success_rate_lex"] = r.success_rate_lex;
        j["success_rate_worst"] = r.success_rate_worst;
        return j;
    };

    json report;
    report["schema"] = 1;
    report["config_hash"] = cfg.config_hash;
    {
        json base;
        base["n_cells"] = cfg.pac.n_cells;
        base["threshold"] = cfg.pac.threshold;
        base["epsilon0"] = cfg.pac.epsilon0;
        base["epsilon1"] = cfg.pac.epsilon1;
        base["delta"] = cfg.pac.delta;
        base["trials"] = cfg.pac.trials;
        base["physics_filter"] = run_to_json(monte_carlo_verify(cfg.pac, true));
        base["no_filter_same_m"] = run_to_json(monte_carlo_verify(cfg.pac, false));
        report["default_spec"] = base;
    }

    // Randomized planted configurations, all meeting the bound.
    json sweep = json::array();
    for (int i = 0; i < cfg.pac_configs; ++i) {
        FiniteClassSpec spec = cfg.pac;
        Rng rng(mix_seed(cfg.pac.seed, 0xcf9ULL, static_cast<std::uint64_t>(i)));
        spec.n_cells = 12 + static_cast<int>(rng.uniform_int(3)); // 12..14
        spec.threshold = 2 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(spec.n_cells - 3)));
        const double eps0_choices[5] = {0.0, 0.1, 0.2, 0.3, 1.0};
        spec.epsilon0 = eps0_choices[rng.uniform_int(5)];
        // eps1 kept small enough that m covers the cell grid; see pac tests.
        spec.epsilon1 = 0.08 + 0.04 * rng.uniform();
        spec.delta = rng.uniform() < 0.5 ? 0.05 : 0.1;
        spec.seed = mix_seed(cfg.pac.seed, 0xc09fULL, static_cast<std::uint64_t>(i));
        const PacRunResult run = monte_carlo_verify(spec, true);
        json entry;
        entry["n_cells"] = spec.n_cells;
        entry["threshold"] = spec.threshold;
        entry["epsilon0"] = spec.epsilon0;
        entry["epsilon1"] = spec.epsilon1;
        entry["delta"] = spec.delta;
        entry["result"] = run_to_json(run);
        entry["meets_guarantee"] = run.success_rate_worst >= 1.0 - spec.delta - 2.0 * std::sqrt(spec.delta * (1.0 - spec.delta) / spec.trials);
        sweep.push_back(entry);
    }
    report["planted_configs"] = sweep;
    write_text_file(out_dir + "/pac/verification.json", report.dump(2) + "\n");
    std::cout << "pac: wrote " << out_dir << "/pac/verification.json\n";
}

} // namespace rssgen

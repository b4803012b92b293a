#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rssgen/harness.hpp"

namespace py = pybind11;
using namespace rssgen;

PYBIND11_MODULE(_rssgen, m) {
    m.doc() = "Synthetic mmWave RSS map workbench: scene oracle, physics-informed training, "
              "collaborative domain adaptation, and sample-complexity checks.";

    py::class_<Vec3>(m, "Vec3")
        .def(py::init<>())
        .def(py::init([](double x, double y, double z) { return Vec3{x, y, z}; }), py::arg("x"), py::arg("y"),
             py::arg("z"))
        .def_readwrite("x", &Vec3::x)
        .def_readwrite("y", &Vec3::y)
        .def_readwrite("z", &Vec3::z);

    py::class_<SceneConfig>(m, "SceneConfig")
        .def(py::init<>())
        .def_readwrite("seed", &SceneConfig::seed)
        .def_readwrite("area_x_m", &SceneConfig::area_x_m)
        .def_readwrite("area_y_m", &SceneConfig::area_y_m)
        .def_readwrite("grid_nx", &SceneConfig::grid_nx)
        .def_readwrite("grid_ny", &SceneConfig::grid_ny)
        .def_readwrite("bs_height_m", &SceneConfig::bs_height_m)
        .def_readwrite("rx_height_m", &SceneConfig::rx_height_m)
        .def_readwrite("n_vehicles", &SceneConfig::n_vehicles)
        .def_readwrite("n_reflector_facades", &SceneConfig::n_reflector_facades)
        .def_readwrite("carrier_ghz", &SceneConfig::carrier_ghz)
        .def_readwrite("ptx_dbm", &SceneConfig::ptx_dbm)
        .def_readwrite("gtx_db", &SceneConfig::gtx_db)
        .def_readwrite("grx_db", &SceneConfig::grx_db)
        .def("n_receivers", &SceneConfig::n_receivers);

    py::class_<Blocker>(m, "Blocker")
        .def(py::init<>())
        .def_readwrite("center", &Blocker::center)
        .def_readwrite("extent", &Blocker::extent)
        .def_readwrite("vel_x_mps", &Blocker::vel_x_mps)
        .def_readwrite("vel_y_mps", &Blocker::vel_y_mps)
        .def("tag", &Blocker::tag);

    py::class_<Scene>(m, "Scene")
        .def_readonly("config", &Scene::config)
        .def_readonly("bs_pos", &Scene::bs_pos)
        .def_readonly("receivers", &Scene::receivers)
        .def_readwrite("blockers", &Scene::blockers)
        .def("to_json", &Scene::to_json)
        .def_static("from_json", &Scene::from_json);

    py::enum_<ShiftKind>(m, "ShiftKind")
        .value("none", ShiftKind::none)
        .value("concept_blockage", ShiftKind::concept_blockage)
        .value("concept_rx_height", ShiftKind::concept_rx_height)
        .value("covariate_noise", ShiftKind::covariate_noise)
        .value("covariate_brightness", ShiftKind::covariate_brightness);

    py::class_<DomainShiftSpec>(m, "DomainShiftSpec")
        .def(py::init<>())
        .def_readwrite("kind", &DomainShiftSpec::kind)
        .def_readwrite("new_rx_height_m", &DomainShiftSpec::new_rx_height_m)
        .def_readwrite("radar_noise_std", &DomainShiftSpec::radar_noise_std)
        .def_readwrite("gps_noise_std", &DomainShiftSpec::gps_noise_std)
        .def_readwrite("lidar_noise_std", &DomainShiftSpec::lidar_noise_std)
        .def_readwrite("brightness_scale", &DomainShiftSpec::brightness_scale);

    m.def("generate_scene", &generate_scene, py::arg("config"));
    m.def("advance_frame", &advance_frame, py::arg("scene"), py::arg("dt_s"), py::arg("seed"));
    m.def("apply_concept_shift", &apply_concept_shift, py::arg("scene"), py::arg("spec"));

    py::class_<PathLossParams>(m, "PathLossParams")
        .def(py::init<>())
        .def_readwrite("fc_ghz", &PathLossParams::fc_ghz)
        .def_readwrite("shadow_sigma_db", &PathLossParams::shadow_sigma_db)
        .def_readwrite("shadow_seed", &PathLossParams::shadow_seed);

    py::class_<ChannelParams>(m, "ChannelParams")
        .def(py::init<>())
        .def_readwrite("pathloss", &ChannelParams::pathloss)
        .def_readwrite("per_blocker_db", &ChannelParams::per_blocker_db)
        .def_readwrite("per_meter_db", &ChannelParams::per_meter_db)
        .def_readwrite("blockage_cap_db", &ChannelParams::blockage_cap_db)
        .def_readwrite("reflection_loss_db", &ChannelParams::reflection_loss_db);

    py::class_<RssMap>(m, "RssMap")
        .def_readonly("rss_dbm", &RssMap::rss_dbm)
        .def_readonly("los_mask", &RssMap::los_mask)
        .def_readonly("r_los_dbm", &RssMap::r_los_dbm)
        .def_readonly("r_reflection_db", &RssMap::r_reflection_db)
        .def_readonly("r_blockage_db", &RssMap::r_blockage_db);

    m.def("pathloss_umi_los", &pathloss_umi_los, py::arg("d_m"), py::arg("params"), py::arg("rx_index"));
    m.def("los_test", &los_test, py::arg("scene"), py::arg("rx_index"));
    m.def("compute_rss_map", &compute_rss_map, py::arg("scene"), py::arg("params"));

    py::class_<FeatureConfig>(m, "FeatureConfig")
        .def(py::init<>())
        .def_readwrite("bev_grid", &FeatureConfig::bev_grid)
        .def_readwrite("radar_points", &FeatureConfig::radar_points)
        .def_readwrite("gps_max", &FeatureConfig::gps_max)
        .def_readwrite("base_brightness", &FeatureConfig::base_brightness)
        .def("flat_dims", &FeatureConfig::flat_dims);

    py::class_<FeatureBlock>(m, "FeatureBlock")
        .def_readonly("occupancy_bev", &FeatureBlock::occupancy_bev)
        .def_readonly("points", &FeatureBlock::points)
        .def_readonly("gps", &FeatureBlock::gps)
        .def_readonly("brightness", &FeatureBlock::brightness)
        .def("flatten", &FeatureBlock::flatten);

    m.def("extract_features", &extract_features, py::arg("scene"), py::arg("config"));
    m.def("apply_covariate_shift", &apply_covariate_shift, py::arg("block"), py::arg("spec"), py::arg("seed"));

    py::class_<ModelConfig>(m, "ModelConfig")
        .def(py::init<>())
        .def_static("for_features", &ModelConfig::for_features, py::arg("features"), py::arg("n_receivers"))
        .def_readwrite("enc_hidden", &ModelConfig::enc_hidden)
        .def_readwrite("enc_out", &ModelConfig::enc_out)
        .def_readwrite("head_hidden", &ModelConfig::head_hidden)
        .def_readwrite("embed_dim", &ModelConfig::embed_dim)
        .def_readwrite("n_receivers", &ModelConfig::n_receivers)
        .def("fused_dim", &ModelConfig::fused_dim);

    py::class_<Model>(m, "Model")
        .def_static("init", &Model::init, py::arg("config"), py::arg("seed"))
        .def("param_count", &Model::param_count)
        .def("params", [](const Model& model) { return model.params(); })
        .def("config", &Model::config, py::return_value_policy::copy);

    py::class_<Prediction>(m, "Prediction")
        .def_readonly("rss_hat_dbm", &Prediction::rss_hat_dbm)
        .def_readonly("heads", &Prediction::heads)
        .def_readonly("fused", &Prediction::fused);

    m.def(
        "forward",
        [](const Model& model, const std::vector<double>& features, const std::vector<double>& r_los) {
            return forward(model, features, r_los);
        },
        py::arg("model"), py::arg("features"), py::arg("r_los"));
    m.def("encode",
          [](const Model& model, const std::vector<double>& features) { return encode(model, features); },
          py::arg("model"), py::arg("features"));
    m.def("flops_estimate", &flops_estimate, py::arg("model"), py::arg("batch"));
    m.def("save_snapshot", &save_snapshot, py::arg("model"), py::arg("path"), py::arg("meta_json") = "{}");
    m.def(
        "load_snapshot",
        [](const std::string& path) {
            LoadedSnapshot snap = load_snapshot(path);
            return py::make_tuple(std::move(snap.model), snap.meta_json);
        },
        py::arg("path"));

    py::enum_<TrainMethod>(m, "TrainMethod")
        .value("physics", TrainMethod::physics)
        .value("baseline1", TrainMethod::baseline1)
        .value("baseline2", TrainMethod::baseline2)
        .value("baseline3", TrainMethod::baseline3);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("batch", &TrainConfig::batch)
        .def_readwrite("lr", &TrainConfig::lr)
        .def_readwrite("lr_decay_epochs", &TrainConfig::lr_decay_epochs)
        .def_readwrite("lr_decay_factor", &TrainConfig::lr_decay_factor)
        .def_readwrite("lambda_", &TrainConfig::lambda)
        .def_readwrite("clip_norm", &TrainConfig::clip_norm)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("method", &TrainConfig::method)
        .def_readwrite("eval_every", &TrainConfig::eval_every);

    py::class_<EvalReport>(m, "EvalReport")
        .def_readonly("mae_dbm", &EvalReport::mae_dbm)
        .def_readonly("rmse_dbm", &EvalReport::rmse_dbm);

    py::class_<FeatureStats>(m, "FeatureStats")
        .def(py::init<>())
        .def_readonly("mu", &FeatureStats::mu)
        .def_readonly("count", &FeatureStats::count)
        .def("sigma_diag", &FeatureStats::sigma_diag);

    m.def("update_stats",
          [](FeatureStats& stats, const std::vector<double>& f) { update_stats(stats, f); },
          py::arg("stats"), py::arg("feature"));
    m.def("w2_distance", &w2_distance, py::arg("a"), py::arg("b"));
    m.def(
        "similarity_weights",
        [](const std::vector<double>& d, double eps) { return similarity_weights(d, eps).gamma; },
        py::arg("distances"), py::arg("eps") = 1e-6);
    m.def(
        "aggregate",
        [](const std::vector<Model>& models, const std::vector<double>& gamma) {
            return aggregate(models, AggregationWeights{gamma});
        },
        py::arg("models"), py::arg("gamma"));

    py::class_<FiniteClassSpec>(m, "FiniteClassSpec")
        .def(py::init<>())
        .def_readwrite("n_cells", &FiniteClassSpec::n_cells)
        .def_readwrite("threshold", &FiniteClassSpec::threshold)
        .def_readwrite("epsilon0", &FiniteClassSpec::epsilon0)
        .def_readwrite("epsilon1", &FiniteClassSpec::epsilon1)
        .def_readwrite("delta", &FiniteClassSpec::delta)
        .def_readwrite("trials", &FiniteClassSpec::trials)
        .def_readwrite("seed", &FiniteClassSpec::seed);

    py::class_<PacCounts>(m, "PacCounts")
        .def_readonly("restricted", &PacCounts::restricted)
        .def_readonly("total", &PacCounts::total);

    py::class_<PacRunResult>(m, "PacRunResult")
        .def_readonly("m", &PacRunResult::m)
        .def_readonly("class_size_restricted", &PacRunResult::class_size_restricted)
        .def_readonly("class_size_total", &PacRunResult::class_size_total)
        .def_readonly("trials", &PacRunResult::trials)
        .def_readonly("success_rate_lex", &PacRunResult::success_rate_lex)
        .def_readonly("success_rate_worst", &PacRunResult::success_rate_worst);

    m.def("enumerate_restricted_class", &enumerate_restricted_class, py::arg("spec"));
    m.def("required_samples", &required_samples, py::arg("class_size"), py::arg("eps1"), py::arg("delta"));
    m.def("monte_carlo_verify", &monte_carlo_verify, py::arg("spec"), py::arg("physics_filter") = true);
}

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "rssgen/harness.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::int64_t seed = -1;
    std::string scenario;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_scenario) {
    cmd->add_option("--config", args.config_path, "experiment config JSON")->required();
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "override every seed in the config");
    if (with_scenario) cmd->add_option("--scenario", args.scenario, "adaptation scenario name");
}

rssgen::ExperimentConfig load_config(const CommonArgs& args) {
    rssgen::ExperimentConfig cfg = rssgen::ExperimentConfig::load(args.config_path);
    if (args.seed >= 0) cfg.override_seed(static_cast<std::uint64_t>(args.seed));
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"rssgen: synthetic mmWave RSS map workbench"};
    app.require_subcommand(1);

    CommonArgs args;
    CLI::App* gen = app.add_subcommand("gen", "generate per-BS datasets");
    add_common(gen, args, false);
    CLI::App* train = app.add_subcommand("train", "train per-BS models");
    add_common(train, args, false);
    CLI::App* sweep = app.add_subcommand("sweep", "training-size sweep");
    add_common(sweep, args, false);
    CLI::App* adapt = app.add_subcommand("adapt", "collaborative domain adaptation");
    add_common(adapt, args, true);
    CLI::App* pac = app.add_subcommand("pac", "sample-complexity verification");
    add_common(pac, args, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) rssgen::cmd_gen(load_config(args), args.out_dir);
        if (train->parsed()) rssgen::cmd_train(load_config(args), args.out_dir);
        if (sweep->parsed()) rssgen::cmd_sweep(load_config(args), args.out_dir);
        if (adapt->parsed()) rssgen::cmd_adapt(load_config(args), args.out_dir, args.scenario);
        if (pac->parsed()) rssgen::cmd_pac(load_config(args), args.out_dir);
    } catch (const std::exception& e) {
        nlohmann::json err;
        err["error"] = e.what();
        std::cerr << err.dump() << "\n";
        return 1;
    }
    return 0;
}

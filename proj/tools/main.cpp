// fbguide-bench: benchmark CLI over the feedback-guided policy engine.
//
// Subcommands: observer-report | predict-eval | success-eval | weights-report
//              | trajectory-export | gen-demos
// Exit codes: 0 success, 1 usage/config error, 2 runtime evaluation error.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "fbguide/config.hpp"
#include "fbguide/errors.hpp"
#include "fbguide/experiment.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir = "out";
    uint64_t seed = 0;
    bool seed_set = false;
    int episodes = -1;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "Path to a config file");
    cmd->add_option("--out", opts.out_dir, "Output directory for CSV artifacts");
    cmd->add_option("--seed", opts.seed, "Master seed (overrides eval.seed)")
        ->each([&opts](const std::string&) { opts.seed_set = true; });
    cmd->add_option("--episodes", opts.episodes, "Episode count (overrides eval.n_episodes)");
    cmd->add_flag("--quiet", opts.quiet, "Suppress progress output");
}

fbguide::ExperimentConfig load(const CommonOpts& opts) {
    fbguide::ExperimentConfig cfg;
    if (!opts.config_path.empty()) cfg = fbguide::parse_config(opts.config_path);
    if (opts.seed_set) cfg.eval.seed = opts.seed;
    if (opts.episodes >= 0) {
        if (opts.episodes == 0) throw fbguide::ConfigError("--episodes must be positive");
        cfg.eval.n_episodes = opts.episodes;
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Feedback-guided diffusion policy benchmark"};
    app.require_subcommand(1);

    CommonOpts observer_opts, predict_opts, success_opts, weights_opts, traj_opts, demos_opts;
    bool strict = false;

    CLI::App* observer = app.add_subcommand("observer-report", "Observer error-bound verification");
    add_common(observer, observer_opts);
    observer->add_flag("--strict", strict, "Fail instead of skipping an unstable configured gain");

    CLI::App* predict = app.add_subcommand("predict-eval", "One-step prediction MSE comparison");
    add_common(predict, predict_opts);

    CLI::App* success = app.add_subcommand("success-eval", "Paired success-rate comparison");
    add_common(success, success_opts);

    CLI::App* weights = app.add_subcommand("weights-report", "Controllability weight diagnostics");
    add_common(weights, weights_opts);

    CLI::App* traj = app.add_subcommand("trajectory-export", "Latent trajectory drift export");
    add_common(traj, traj_opts);

    CLI::App* demos = app.add_subcommand("gen-demos", "Export expert demonstrations as CSV");
    add_common(demos, demos_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (observer->parsed()) {
            const auto cfg = load(observer_opts);
            fbguide::observer_report(cfg, observer_opts.out_dir, strict, observer_opts.quiet);
        } else if (predict->parsed()) {
            const auto cfg = load(predict_opts);
            fbguide::prediction_eval(cfg, predict_opts.out_dir, predict_opts.quiet);
        } else if (success->parsed()) {
            const auto cfg = load(success_opts);
            fbguide::success_eval(cfg, success_opts.out_dir, success_opts.quiet);
        } else if (weights->parsed()) {
            const auto cfg = load(weights_opts);
            fbguide::weights_report(cfg, weights_opts.out_dir, weights_opts.quiet);
        } else if (traj->parsed()) {
            const auto cfg = load(traj_opts);
            fbguide::trajectory_export(cfg, traj_opts.out_dir, traj_opts.quiet);
        } else if (demos->parsed()) {
            const auto cfg = load(demos_opts);
            fbguide::gen_demos_cmd(cfg, demos_opts.out_dir, demos_opts.quiet);
        }
    } catch (const fbguide::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}

#pragma once

#include <string>
#include <vector>

#include "fbguide/config.hpp"
#include "fbguide/diffusion.hpp"

namespace fbguide {

struct MetricsRow {
    std::string method;
    double sigma_ood = 0.0;
    int episodes = 0;
    int successes = 0;
    double mean_mse_openloop = 0.0;
    double mean_mse_feedback = 0.0;
    double reduction_pct = 0.0;
};

struct WilsonInterval {
    double lo = 0.0;
    double hi = 0.0;
};
WilsonInterval wilson_interval(int successes, int n);

/// Shared fixtures derived from one config: demos, encoder, fitted world
/// model, score policy, expert memory, controllability weights, gain.
struct Workbench {
    EnvConfig env;
    std::vector<Demo> demos;
    Encoder enc;
    WorldModel wm;
    GmmScorePolicy policy;
    ExpertMemory mem;
    ControllabilityWeights weights;
    Gain gain;

    Workbench(EnvConfig e, std::vector<Demo> d, Encoder en, WorldModel w, GmmScorePolicy p,
              ExpertMemory m, ControllabilityWeights cw, Gain g)
        : env(std::move(e)), demos(std::move(d)), enc(std::move(en)), wm(std::move(w)),
          policy(std::move(p)), mem(std::move(m)), weights(std::move(cw)), gain(std::move(g)) {}
};

Workbench build_workbench(const ExperimentConfig& cfg);

/// Residual-injected world model wrapping the true environment dynamics
/// (identity encoder); the injected Delta comes from the wm config section.
WorldModel residual_injected_from_env(const ExperimentConfig& cfg);
DeltaSchedule schedule_from_config(const WmSection& wm, int dim);

struct ObserverInstanceResult {
    int instance = 0;
    int dim = 0;
    double dt = 0.0;
    double gamma = 0.0;
    double lambda_min = 0.0;
    double bound = 0.0;
    double final_norm_e = 0.0;
    bool constant_delta = false;
    double steady_state_err = 0.0;
    bool pass = false;
};

/// Appendix-style bound verification: the configured gain plus 100 random
/// stable instances, each simulated for T = 2000 steps.
std::vector<ObserverInstanceResult> observer_report(const ExperimentConfig& cfg,
                                                    const std::string& out_dir, bool strict,
                                                    bool quiet);

/// One-step MSE of open-loop vs feedback-corrected predictions on identical
/// executed actions (base policy, no guidance), per OOD level.
std::vector<MetricsRow> prediction_eval(const ExperimentConfig& cfg, const std::string& out_dir,
                                        bool quiet);

/// Paired success-rate comparison across guidance methods on OOD episodes.
std::vector<MetricsRow> success_eval(const ExperimentConfig& cfg, const std::string& out_dir,
                                     bool quiet);

struct WeightsReport {
    ControllabilityWeights weights;
    double top5_share = 0.0;
    double nuisance_share = 0.0;
    bool degenerate = false;
};
WeightsReport weights_report(const ExperimentConfig& cfg, const std::string& out_dir, bool quiet);

struct TrajectoryReport {
    double mean_dist_base = 0.0;
    double mean_dist_feedback = 0.0;
    int steps = 0;
};
TrajectoryReport trajectory_export(const ExperimentConfig& cfg, const std::string& out_dir,
                                   bool quiet);

void gen_demos_cmd(const ExperimentConfig& cfg, const std::string& out_dir, bool quiet);

/// Episode CSV: (t, mse_openloop, mse_feedback, norm_e, success_final).
void write_episode_csv(const EpisodeRecord& rec, const std::string& path);

}  // namespace fbguide

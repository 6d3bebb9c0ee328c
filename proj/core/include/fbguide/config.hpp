#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fbguide/envsim.hpp"

namespace fbguide {

struct WmSection {
    std::string variant = "ridge";  // ridge | residual
    double lambda_reg = 1e-2;
    // Residual-injected schedule parameters.
    std::string delta_decay = "constant";  // constant | exponential | oscillating
    double gamma = 0.5;
    double delta_inf = 0.3;  // norm of the limiting residual
    double rate = 0.05;
    double freq = 0.3;
};

struct FeedbackSection {
    double l = 0.5;
    double dt = 1.0;
};

struct GuidanceSection {
    double lambda = 1.0;
    int tau_g = 5;
    double beta = 1.0;
    std::string mode = "none";  // none | standard | feedback | feedback_aa
    std::vector<std::string> methods = {"base", "standard", "rollout", "feedback", "feedback_aa"};
};

struct EvalSection {
    int n_episodes = 200;
    std::vector<double> sigma_ood = {0.0, 0.1};
    double sigma_ood_success = 0.5;
    uint64_t seed = 0;
    int n_demos = 50;
    int k_cond = 5;
    double bandwidth = 0.05;
    int m_states = 200;
    int k_actions = 32;
    int burn_in = 2;
    int n_rollouts = 50;
    int diffusion_steps = 50;
    int threads = 0;  // 0 = hardware concurrency
};

struct ExperimentConfig {
    EnvConfig env;
    WmSection wm;
    FeedbackSection feedback;
    GuidanceSection guidance;
    EvalSection eval;
};

/// Strict parse of the sectioned key=value format ("section.key = value",
/// '#' comments). Unknown keys, bad enum values, and type mismatches throw
/// ConfigError naming the offending key.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);

/// Fully-resolved config echo, parseable by parse_config_text.
std::string resolved_config(const ExperimentConfig& cfg);

}  // namespace fbguide

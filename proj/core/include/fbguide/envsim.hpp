#pragma once

#include <cstdint>
#include <vector>

#include "fbguide/rng.hpp"
#include "fbguide/types.hpp"

namespace fbguide {

/// Synthetic 2D manipulation environment: a point mass (double integrator)
/// must touch an object and carry it to a target. State layout:
///   [0:2)  mass position
///   [2:4)  mass velocity
///   [4:6)  object position
///   [6:n)  nuisance dimensions (autonomous sinusoids, action-independent)
struct EnvConfig {
    int n_state = 12;
    int m_action = 2;
    int horizon = 8;       // chunk length H
    int exec_prefix = 4;   // executed prefix T_a
    double dt_dec = 1.0;   // decision-step interval
    int t_max = 60;
    double grasp_radius = 0.15;
    double goal_radius = 0.2;
    double a_max = 1.0;
    double sigma_proc = 0.0;
    double drag = 0.0;      // quadratic velocity drag on the mass
    double drag_lin = 0.0;  // linear drag; both 0 = pure double integrator
    double demo_noise_std = 0.0;  // exploration noise on recorded expert actions

    Vec nuis_amp;
    Vec nuis_freq;
    Vec nuis_phase;
    double nuis_noise_std = 0.0;

    // Task geometry.
    double start_x = 0.0, start_y = 0.0;
    double start_box = 0.5;  // side length of the nominal start box
    double object_x = 1.0, object_y = 0.35;
    double target_x = -0.5, target_y = 0.9;
    double pos_bound = 2.5;
    double vel_bound = 3.0;

    // Expert PD gains (frozen after tuning).
    double k_p = 0.8;
    double k_d = 1.2;

    EnvConfig();

    int n_nuisance() const { return n_state - 6; }
    double substep() const { return dt_dec / exec_prefix; }
    void validate() const;
};

enum class Phase { Reach, Carry, Done };

struct EnvState {
    Vec s;
    Phase phase = Phase::Reach;
    int step = 0;
};

struct Demo {
    std::vector<Vec> observations;   // length = |chunks| + 1
    std::vector<ActionChunk> chunks;
    bool success = false;
    uint64_t seed = 0;
};

/// Fresh state from the nominal initial distribution: mass position uniform
/// in the start box, zero velocity, object/target fixed, nuisance at t = 0.
EnvState nominal_state(const EnvConfig& cfg, RngStream& rng);

/// Noise-free latent velocity induced by executing the first T_a actions:
/// env_step at sigma_proc = 0 satisfies s' = s + dt_dec * true_velocity.
Vec true_velocity(const EnvConfig& cfg, const EnvState& state, const ActionChunk& chunk);

/// Executes the first T_a actions at substep resolution, handles the
/// attach/goal phase transitions and advances the nuisance sinusoids.
EnvState env_step(const EnvConfig& cfg, const EnvState& state, const ActionChunk& chunk,
                  RngStream& rng);

/// PD law toward the current subgoal, rolled forward over H steps.
ActionChunk expert_controller(const EnvConfig& cfg, const EnvState& state);

/// n successful expert episodes; failed episodes are re-rolled with fresh
/// stream ids (at most 10n attempts).
std::vector<Demo> generate_demos(const EnvConfig& cfg, int n, uint64_t seed);

/// Gaussian perturbation of the 4 mass dimensions only, clipped to the
/// workspace bounds. Object, target and nuisance are untouched.
EnvState perturb_initial_state(const EnvConfig& cfg, const EnvState& state, double sigma_ood,
                               RngStream& rng);

bool is_success(const EnvState& state);

}  // namespace fbguide

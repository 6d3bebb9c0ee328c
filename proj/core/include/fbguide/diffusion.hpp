#pragma once

#include <cstdint>
#include <vector>

#include "fbguide/envsim.hpp"
#include "fbguide/feedback.hpp"
#include "fbguide/guidance.hpp"
#include "fbguide/rng.hpp"
#include "fbguide/types.hpp"

namespace fbguide {

/// DDPM noise schedule: betas linear in tau, alpha_bar cumulative with the
/// alpha_bar[0] = 1 boundary convention. Index tau runs 1..steps.
struct NoiseSchedule {
    int steps = 0;
    Vec beta;       // beta[tau], tau in 1..steps (index 0 unused)
    Vec alpha;      // 1 - beta
    Vec alpha_bar;  // cumulative product, alpha_bar[0] = 1
};

NoiseSchedule make_linear_schedule(int steps = 50, double beta_start = 1e-4,
                                   double beta_end = 0.02);

/// Analytic retrieval-conditioned mixture score. Conditioning on z_t selects
/// the k_cond nearest demo observations; the clean-action distribution is an
/// equal-weight Gaussian mixture over their recorded chunks with isotropic
/// bandwidth sigma_a.
struct GmmScorePolicy {
    std::vector<LatentVector> obs_latents;
    std::vector<ActionChunk> chunks;
    int k_cond = 5;
    double bandwidth = 0.05;
};

GmmScorePolicy build_policy(const std::vector<Demo>& demos, const Encoder& enc, int k_cond,
                            double bandwidth);

/// Indices of the k_cond nearest bank observations (ascending distance,
/// ties to the lowest index).
std::vector<int> retrieve_components(const GmmScorePolicy& policy, const LatentVector& z);

/// Exact score of the tau-noised conditional mixture at a_noisy, computed
/// with log-sum-exp responsibilities.
Vec score(const GmmScorePolicy& policy, const ActionChunk& a_noisy, const LatentVector& z,
          int tau, const NoiseSchedule& sched);

/// Same, with the retrieval precomputed (one retrieval per decision step).
Vec score_with_components(const GmmScorePolicy& policy, const std::vector<int>& components,
                          const ActionChunk& a_noisy, int tau, const NoiseSchedule& sched);

/// s_tilde = base - lambda * grad_E.
Vec guided_score(const Vec& base, const Vec& grad_e, double lambda);

/// Ancestral update A_{tau-1} = (A_tau + (1 - alpha) s_tilde) / sqrt(alpha)
/// + sqrt(beta) xi, with xi forced to zero at tau = 1.
ActionChunk denoise_step(const ActionChunk& a_tau, const Vec& s_tilde, int tau,
                         const NoiseSchedule& sched, RngStream& rng);

enum class GuidanceMode { None, Standard, Feedback, FeedbackActionAware };

struct GuidanceConfig {
    double lambda = 1.0;
    int tau_g = 5;
    GuidanceMode mode = GuidanceMode::None;
    double beta = 1.0;
};

/// Full guided reverse chain: noise, denoise T..1 with guidance in the last
/// tau_g steps, clip the clean chunk to a_max. The feedback state is
/// read-only here; all modes consume the identical rng stream.
ActionChunk sample_action(const GmmScorePolicy& policy, const NoiseSchedule& sched,
                          const GuidanceConfig& gcfg, const LatentVector& z,
                          const FeedbackState& fb, const WorldModel& wm, const Gain& gain,
                          const ExpertMemory& mem, const ControllabilityWeights& weights,
                          double a_max, RngStream& rng);

struct EpisodeStep {
    LatentVector z;
    LatentVector belief;
    Vec residual;               // the e_t used during this step's guidance
    ActionChunk executed;
    LatentVector open_loop_pred;
    LatentVector corrected_pred;
    LatentVector true_next;
};

struct EpisodeRecord {
    std::vector<EpisodeStep> steps;
    bool success = false;
    uint64_t seed = 0;
};

/// Algorithm-style outer loop: encode, sample, execute the chunk prefix,
/// propagate the belief with the corrected velocity of the executed chunk,
/// observe, update the residual. Logs open-loop and corrected predictions on
/// the identical executed actions.
EpisodeRecord run_episode(const EnvConfig& env_cfg, const EnvState& init_state,
                          const Encoder& enc, const GmmScorePolicy& policy,
                          const WorldModel& wm, const Gain& gain, const GuidanceConfig& gcfg,
                          const ExpertMemory& mem, const ControllabilityWeights& weights,
                          uint64_t seed);

}  // namespace fbguide

#pragma once

#include <utility>
#include <vector>

#include "fbguide/feedback.hpp"
#include "fbguide/rng.hpp"
#include "fbguide/types.hpp"
#include "fbguide/worldmodel.hpp"

namespace fbguide {

/// Encoded expert observations used as the retrieval target of the guidance
/// energy.
struct ExpertMemory {
    std::vector<LatentVector> latents;
};

ExpertMemory build_expert_memory(const std::vector<Demo>& demos, const Encoder& enc);

/// Brute-force argmin of unweighted squared L2 distance; ties break to the
/// lowest index.
std::pair<int, LatentVector> nearest_expert(const ExpertMemory& mem, const LatentVector& z);

/// Squared latent distance to the matched expert state.
double energy(const LatentVector& z_pred, const LatentVector& z_expert);

/// Per-dimension controllability weights: raw counterfactual variances w,
/// mean-normalized w_bar, and beta-interpolated w_beta = 1 + beta(w_bar - 1).
struct ControllabilityWeights {
    Vec w;
    Vec w_bar;
    Vec w_beta;
    double beta = 0.0;
    double eps = 1e-8;
};

/// Deterministic core of the weight estimate: per-dimension population
/// variance of the model predictions over the supplied chunks, averaged over
/// states.
Vec weights_from_samples(const WorldModel& wm, const std::vector<LatentVector>& states,
                         const std::vector<std::vector<ActionChunk>>& chunks_per_state);

/// Counterfactual variance with K chunks resampled uniformly (with
/// replacement) from the demo action pool at each of the M states.
Vec compute_weights(const WorldModel& wm, const std::vector<LatentVector>& states,
                    const std::vector<ActionChunk>& action_pool, int samples_per_state,
                    RngStream& rng);

/// M demo latents at uniformly spaced indices along the concatenated
/// demonstration trajectory, plus the pooled chunk bank.
std::vector<LatentVector> sample_demo_latents(const std::vector<Demo>& demos,
                                              const Encoder& enc, int m);
std::vector<ActionChunk> demo_action_pool(const std::vector<Demo>& demos);

ControllabilityWeights normalize_weights(const Vec& w, double beta);

/// All-ones weights (the beta = 0 limit), used by unweighted feedback
/// guidance.
ControllabilityWeights unit_weights(int dim);

double weighted_energy(const LatentVector& z_fb, const LatentVector& z_expert,
                       const ControllabilityWeights& weights);

/// Gradient of the weighted energy w.r.t. the action chunk, with the
/// nearest-neighbor index held fixed: 2 J^T (w_beta .* (z_fb - z_expert)).
Vec energy_gradient(const WorldModel& wm, const LatentVector& z, const FeedbackState& fb,
                    const Gain& gain, const ActionChunk& chunk, const ExpertMemory& mem,
                    const ControllabilityWeights& weights);

}  // namespace fbguide

#include "fbguide/guidance.hpp"

#include <cmath>
#include <limits>

#include "fbguide/errors.hpp"

namespace fbguide {

ExpertMemory build_expert_memory(const std::vector<Demo>& demos, const Encoder& enc) {
    ExpertMemory mem;
    for (const Demo& demo : demos) {
        for (const Vec& obs : demo.observations) mem.latents.push_back(encode(enc, obs));
    }
    return mem;
}

std::pair<int, LatentVector> nearest_expert(const ExpertMemory& mem, const LatentVector& z) {
    if (mem.latents.empty()) throw EvaluationError("nearest_expert: empty memory");
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < mem.latents.size(); ++i) {
        const Vec& cand = mem.latents[i];
        if (cand.size() != z.size()) throw DimensionError("nearest_expert: dimension mismatch");
        double d = 0.0;
        for (size_t j = 0; j < z.size(); ++j) {
            const double diff = z[j] - cand[j];
            d += diff * diff;
        }
        if (d < best_d) {  // strict: ties keep the lowest index
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return {best, mem.latents[best]};
}

double energy(const LatentVector& z_pred, const LatentVector& z_expert) {
    if (z_pred.size() != z_expert.size()) throw DimensionError("energy: dimension mismatch");
    double e = 0.0;
    for (size_t j = 0; j < z_pred.size(); ++j) {
        const double d = z_pred[j] - z_expert[j];
        e += d * d;
    }
    return e;
}

Vec weights_from_samples(const WorldModel& wm, const std::vector<LatentVector>& states,
                         const std::vector<std::vector<ActionChunk>>& chunks_per_state) {
    if (states.empty() || states.size() != chunks_per_state.size()) {
        throw EvaluationError("weights_from_samples: states/chunks mismatch");
    }
    const int d = wm.latent_dim();
    Vec w(d, 0.0);
    for (size_t i = 0; i < states.size(); ++i) {
        const auto& chunks = chunks_per_state[i];
        if (chunks.size() < 2) {
            throw EvaluationError("weights_from_samples: need >= 2 chunks per state");
        }
        const double k = static_cast<double>(chunks.size());
        Vec mean(d, 0.0), sq(d, 0.0);
        for (const ActionChunk& chunk : chunks) {
            const Vec pred = wm.predict(states[i], chunk);
            for (int j = 0; j < d; ++j) {
                mean[j] += pred[j];
                sq[j] += pred[j] * pred[j];
            }
        }
        for (int j = 0; j < d; ++j) {
            const double mu = mean[j] / k;
            // Population variance, as pinned.
            w[j] += std::max(0.0, sq[j] / k - mu * mu);
        }
    }
    for (int j = 0; j < d; ++j) w[j] /= static_cast<double>(states.size());
    return w;
}

Vec compute_weights(const WorldModel& wm, const std::vector<LatentVector>& states,
                    const std::vector<ActionChunk>& action_pool, int samples_per_state,
                    RngStream& rng) {
    if (samples_per_state < 2) {
        throw EvaluationError("compute_weights: samples_per_state must be >= 2 for a variance");
    }
    if (action_pool.empty()) throw EvaluationError("compute_weights: empty action pool");
    std::vector<std::vector<ActionChunk>> chunks_per_state(states.size());
    for (auto& chunks : chunks_per_state) {
        chunks.reserve(samples_per_state);
        for (int k = 0; k < samples_per_state; ++k) {
            chunks.push_back(action_pool[rng.uniform_int(static_cast<int>(action_pool.size()))]);
        }
    }
    return weights_from_samples(wm, states, chunks_per_state);
}

std::vector<LatentVector> sample_demo_latents(const std::vector<Demo>& demos,
                                              const Encoder& enc, int m) {
    std::vector<const Vec*> all;
    for (const Demo& demo : demos)
        for (const Vec& obs : demo.observations) all.push_back(&obs);
    if (all.empty()) throw EvaluationError("sample_demo_latents: no demo observations");

    std::vector<LatentVector> out;
    out.reserve(m);
    const size_t n = all.size();
    for (int i = 0; i < m; ++i) {
        // Uniformly spaced indices along the concatenated trajectory.
        const size_t idx = (static_cast<size_t>(i) * n) / static_cast<size_t>(m);
        out.push_back(encode(enc, *all[idx]));
    }
    return out;
}

std::vector<ActionChunk> demo_action_pool(const std::vector<Demo>& demos) {
    std::vector<ActionChunk> pool;
    for (const Demo& demo : demos)
        for (const ActionChunk& chunk : demo.chunks) pool.push_back(chunk);
    return pool;
}

ControllabilityWeights normalize_weights(const Vec& w, double beta) {
    if (beta < 0.0 || beta > 1.0) throw InvalidWeightError("normalize_weights: beta outside [0, 1]");
    ControllabilityWeights out;
    out.w = w;
    out.beta = beta;
    double mean = 0.0;
    for (double v : w) {
        if (v < 0.0) throw InvalidWeightError("normalize_weights: negative weight entry");
        mean += v;
    }
    mean /= static_cast<double>(w.size());
    out.w_bar.resize(w.size());
    out.w_beta.resize(w.size());
    for (size_t j = 0; j < w.size(); ++j) {
        out.w_bar[j] = w[j] / (mean + out.eps);
        out.w_beta[j] = 1.0 + beta * (out.w_bar[j] - 1.0);
    }
    return out;
}

ControllabilityWeights unit_weights(int dim) {
    ControllabilityWeights out;
    out.w.assign(dim, 1.0);
    out.beta = 0.0;
    out.w_bar.assign(dim, 1.0);
    out.w_beta.assign(dim, 1.0);
    return out;
}

double weighted_energy(const LatentVector& z_fb, const LatentVector& z_expert,
                       const ControllabilityWeights& weights) {
    if (z_fb.size() != z_expert.size() || weights.w_beta.size() != z_fb.size()) {
        throw DimensionError("weighted_energy: dimension mismatch");
    }
    double e = 0.0;
    for (size_t j = 0; j < z_fb.size(); ++j) {
        const double d = z_fb[j] - z_expert[j];
        e += weights.w_beta[j] * d * d;
    }
    return e;
}

Vec energy_gradient(const WorldModel& wm, const LatentVector& z, const FeedbackState& fb,
                    const Gain& gain, const ActionChunk& chunk, const ExpertMemory& mem,
                    const ControllabilityWeights& weights) {
    const CorrectedPrediction cp = corrected_prediction(wm, z, fb, chunk, gain);
    // Retrieval stays unweighted; weights enter only after the match.
    const auto [idx, z_expert] = nearest_expert(mem, cp.prediction);
    (void)idx;

    Vec weighted_diff(z.size());
    for (size_t j = 0; j < z.size(); ++j) {
        weighted_diff[j] = weights.w_beta[j] * (cp.prediction[j] - z_expert[j]);
    }
    const Mat jac = wm.action_jacobian(z, chunk);
    Vec grad = jac.transposed() * weighted_diff;
    for (double& g : grad) g *= 2.0;
    return grad;
}

}  // namespace fbguide

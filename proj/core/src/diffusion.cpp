#include "fbguide/diffusion.hpp"

#include <algorithm>
#include <cmath>

#include "fbguide/errors.hpp"

namespace fbguide {

NoiseSchedule make_linear_schedule(int steps, double beta_start, double beta_end) {
    if (steps < 1) throw ConfigError("make_linear_schedule: steps must be >= 1");
    NoiseSchedule s;
    s.steps = steps;
    s.beta.assign(steps + 1, 0.0);
    s.alpha.assign(steps + 1, 1.0);
    s.alpha_bar.assign(steps + 1, 1.0);
    for (int tau = 1; tau <= steps; ++tau) {
        const double frac = steps == 1 ? 0.0 : static_cast<double>(tau - 1) / (steps - 1);
        s.beta[tau] = beta_start + (beta_end - beta_start) * frac;
        s.alpha[tau] = 1.0 - s.beta[tau];
        s.alpha_bar[tau] = s.alpha_bar[tau - 1] * s.alpha[tau];
    }
    return s;
}

GmmScorePolicy build_policy(const std::vector<Demo>& demos, const Encoder& enc, int k_cond,
                            double bandwidth) {
    GmmScorePolicy policy;
    policy.k_cond = k_cond;
    policy.bandwidth = bandwidth;
    for (const Demo& demo : demos) {
        for (size_t i = 0; i < demo.chunks.size(); ++i) {
            policy.obs_latents.push_back(encode(enc, demo.observations[i]));
            policy.chunks.push_back(demo.chunks[i]);
        }
    }
    return policy;
}

std::vector<int> retrieve_components(const GmmScorePolicy& policy, const LatentVector& z) {
    if (policy.obs_latents.empty()) throw EvaluationError("score: empty demo bank");
    const int n = static_cast<int>(policy.obs_latents.size());
    const int k = std::min(policy.k_cond, n);

    std::vector<std::pair<double, int>> dist(n);
    for (int i = 0; i < n; ++i) {
        const Vec& cand = policy.obs_latents[i];
        double d = 0.0;
        for (size_t j = 0; j < z.size(); ++j) {
            const double diff = z[j] - cand[j];
            d += diff * diff;
        }
        dist[i] = {d, i};
    }
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = dist[i].second;
    return idx;
}

Vec score_with_components(const GmmScorePolicy& policy, const std::vector<int>& components,
                          const ActionChunk& a_noisy, int tau, const NoiseSchedule& sched) {
    if (tau < 1 || tau > sched.steps) throw ConfigError("score: tau outside 1..T");
    if (components.empty()) throw EvaluationError("score: no mixture components");

    const double abar = sched.alpha_bar[tau];
    const double sqrt_abar = std::sqrt(abar);
    const double var = abar * policy.bandwidth * policy.bandwidth + (1.0 - abar);
    const int n = a_noisy.size();

    // Equal-weight mixture; responsibilities via log-sum-exp.
    std::vector<double> logp(components.size());
    for (size_t i = 0; i < components.size(); ++i) {
        const ActionChunk& mu = policy.chunks[components[i]];
        double sq = 0.0;
        for (int j = 0; j < n; ++j) {
            const double d = a_noisy.a[j] - sqrt_abar * mu.a[j];
            sq += d * d;
        }
        logp[i] = -sq / (2.0 * var);
    }
    const double lmax = *std::max_element(logp.begin(), logp.end());
    double zsum = 0.0;
    for (double lp : logp) zsum += std::exp(lp - lmax);

    Vec s(n, 0.0);
    for (size_t i = 0; i < components.size(); ++i) {
        const double r = std::exp(logp[i] - lmax) / zsum;
        const ActionChunk& mu = policy.chunks[components[i]];
        for (int j = 0; j < n; ++j) {
            s[j] += r * (sqrt_abar * mu.a[j] - a_noisy.a[j]) / var;
        }
    }
    return s;
}

Vec score(const GmmScorePolicy& policy, const ActionChunk& a_noisy, const LatentVector& z,
          int tau, const NoiseSchedule& sched) {
    return score_with_components(policy, retrieve_components(policy, z), a_noisy, tau, sched);
}

Vec guided_score(const Vec& base, const Vec& grad_e, double lambda) {
    if (base.size() != grad_e.size()) throw DimensionError("guided_score: length mismatch");
    Vec out(base.size());
    for (size_t i = 0; i < base.size(); ++i) out[i] = base[i] - lambda * grad_e[i];
    return out;
}

ActionChunk denoise_step(const ActionChunk& a_tau, const Vec& s_tilde, int tau,
                         const NoiseSchedule& sched, RngStream& rng) {
    if (tau < 1 || tau > sched.steps) throw ConfigError("denoise_step: tau outside 1..T");
    const double alpha = sched.alpha[tau];
    const double sigma = std::sqrt(sched.beta[tau]);
    const double inv_sqrt_alpha = 1.0 / std::sqrt(alpha);

    ActionChunk out = a_tau;
    for (int j = 0; j < out.size(); ++j) {
        out.a[j] = inv_sqrt_alpha * (a_tau.a[j] + (1.0 - alpha) * s_tilde[j]);
    }
    if (tau > 1) {
        for (int j = 0; j < out.size(); ++j) out.a[j] += sigma * rng.normal();
    }
    return out;
}

ActionChunk sample_action(const GmmScorePolicy& policy, const NoiseSchedule& sched,
                          const GuidanceConfig& gcfg, const LatentVector& z,
                          const FeedbackState& fb, const WorldModel& wm, const Gain& gain,
                          const ExpertMemory& mem, const ControllabilityWeights& weights,
                          double a_max, RngStream& rng) {
    const int h = wm.chunk_len() > 0 && !policy.chunks.empty() ? policy.chunks[0].horizon : 0;
    const int m = !policy.chunks.empty() ? policy.chunks[0].action_dim : 0;
    ActionChunk a(h, m);
    for (int j = 0; j < a.size(); ++j) a.a[j] = rng.normal();

    const std::vector<int> components = retrieve_components(policy, z);

    // Standard guidance forces e = 0; Feedback uses the real residual with
    // unit weights; FeedbackActionAware adds w_beta.
    FeedbackState zero_fb = fb;
    zero_fb.residual.assign(fb.residual.size(), 0.0);
    const ControllabilityWeights unit = unit_weights(wm.latent_dim());

    for (int tau = sched.steps; tau >= 1; --tau) {
        Vec s = score_with_components(policy, components, a, tau, sched);
        if (gcfg.mode != GuidanceMode::None && tau <= gcfg.tau_g) {
            Vec grad;
            switch (gcfg.mode) {
                case GuidanceMode::Standard:
                    grad = energy_gradient(wm, z, zero_fb, gain, a, mem, unit);
                    break;
                case GuidanceMode::Feedback:
                    grad = energy_gradient(wm, z, fb, gain, a, mem, unit);
                    break;
                case GuidanceMode::FeedbackActionAware:
                    grad = energy_gradient(wm, z, fb, gain, a, mem, weights);
                    break;
                default:
                    break;
            }
            s = guided_score(s, grad, gcfg.lambda);
        }
        a = denoise_step(a, s, tau, sched, rng);
    }
    return a.clipped(a_max);
}

EpisodeRecord run_episode(const EnvConfig& env_cfg, const EnvState& init_state,
                          const Encoder& enc, const GmmScorePolicy& policy,
                          const WorldModel& wm, const Gain& gain, const GuidanceConfig& gcfg,
                          const ExpertMemory& mem, const ControllabilityWeights& weights,
                          uint64_t seed) {
    const NoiseSchedule sched = make_linear_schedule();
    RngStream rng(seed, 0);

    EpisodeRecord rec;
    rec.seed = seed;

    EnvState state = init_state;
    LatentVector z = encode(enc, state.s);
    FeedbackState fb = init_feedback(z);

    while (state.phase != Phase::Done && state.step < env_cfg.t_max) {
        const WorldModel wm_t = wm.with_step(state.step);
        const ActionChunk chunk =
            sample_action(policy, sched, gcfg, z, fb, wm_t, gain, mem, weights, env_cfg.a_max, rng);

        const CorrectedPrediction cp = corrected_prediction(wm_t, z, fb, chunk, gain);
        const LatentVector open_loop = wm_t.predict(z, chunk);

        EpisodeStep step;
        step.z = z;
        step.belief = fb.belief;
        step.residual = fb.residual;
        step.executed = chunk;
        step.open_loop_pred = open_loop;
        step.corrected_pred = cp.prediction;

        state = env_step(env_cfg, state, chunk, rng);
        const LatentVector z_next = encode(enc, state.s);
        step.true_next = z_next;
        rec.steps.push_back(std::move(step));

        fb = propagate_belief(fb, cp.velocity, env_cfg.dt_dec);
        fb = update_residual(fb, z_next);
        z = z_next;
    }
    rec.success = is_success(state);
    return rec;
}

}  // namespace fbguide

#include "fbguide/envsim.hpp"

#include <algorithm>
#include <cmath>

#include "fbguide/errors.hpp"

namespace fbguide {

namespace {

double clamp(double v, double lo, double hi) { return std::max(lo, std::min(hi, v)); }

double nuisance_value(const EnvConfig& cfg, int j, int decision_step) {
    return cfg.nuis_amp[j] * std::sin(cfg.nuis_freq[j] * decision_step + cfg.nuis_phase[j]);
}

// Core substep integrator shared by env_step and true_velocity. Applies the
// first T_a actions of the chunk, updates phases, and writes the nuisance
// sinusoids for decision step (state.step + 1). Noise-free.
EnvState integrate_decision_step(const EnvConfig& cfg, const EnvState& state,
                                 const ActionChunk& chunk) {
    EnvState next = state;
    Vec& s = next.s;
    const double h = cfg.substep();

    for (int k = 0; k < cfg.exec_prefix && next.phase != Phase::Done; ++k) {
        double ax = clamp(chunk.at(k, 0), -cfg.a_max, cfg.a_max);
        double ay = clamp(chunk.at(k, 1), -cfg.a_max, cfg.a_max);

        const double speed = std::sqrt(s[2] * s[2] + s[3] * s[3]);
        s[2] += ax - (cfg.drag_lin + cfg.drag * speed) * s[2];
        s[3] += ay - (cfg.drag_lin + cfg.drag * speed) * s[3];
        s[0] += h * s[2];
        s[1] += h * s[3];

        if (next.phase == Phase::Reach) {
            const double dx = s[0] - s[4], dy = s[1] - s[5];
            if (std::sqrt(dx * dx + dy * dy) < cfg.grasp_radius) next.phase = Phase::Carry;
        }
        if (next.phase == Phase::Carry) {
            s[4] = s[0];
            s[5] = s[1];
            const double gx = s[4] - cfg.target_x, gy = s[5] - cfg.target_y;
            if (std::sqrt(gx * gx + gy * gy) < cfg.goal_radius) next.phase = Phase::Done;
        }
    }

    for (int j = 0; j < cfg.n_nuisance(); ++j) {
        s[6 + j] = nuisance_value(cfg, j, state.step + 1);
    }
    next.step = state.step + 1;
    return next;
}

}  // namespace

EnvConfig::EnvConfig() {
    const int nn = n_nuisance();
    // Small enough that retrieval stays dominated by the mass/object state.
    nuis_amp = {0.2, 0.18, 0.16, 0.14, 0.12, 0.1};
    nuis_freq = {0.11, 0.17, 0.23, 0.31, 0.41, 0.47};
    nuis_phase = {0.0, 0.7, 1.4, 2.1, 2.8, 3.5};
    nuis_amp.resize(nn, 0.3);
    nuis_freq.resize(nn, 0.3);
    nuis_phase.resize(nn, 0.0);
}

void EnvConfig::validate() const {
    if (n_state < 6) throw ConfigError("env.n_state must be >= 6");
    if (m_action != 2) throw ConfigError("env.m_action must be 2 for this environment");
    if (exec_prefix < 1 || exec_prefix > horizon) {
        throw ConfigError("env: need 1 <= exec_prefix <= horizon");
    }
    if (dt_dec <= 0.0) throw ConfigError("env.dt_dec must be positive");
    if (grasp_radius <= 0.0 || goal_radius <= 0.0) {
        throw ConfigError("env: grasp_radius and goal_radius must be positive");
    }
    if (static_cast<int>(nuis_amp.size()) != n_nuisance() ||
        static_cast<int>(nuis_freq.size()) != n_nuisance() ||
        static_cast<int>(nuis_phase.size()) != n_nuisance()) {
        throw ConfigError("env: nuisance parameter vectors must have length n_state - 6");
    }
}

EnvState nominal_state(const EnvConfig& cfg, RngStream& rng) {
    EnvState st;
    st.s.assign(cfg.n_state, 0.0);
    const double half = cfg.start_box / 2.0;
    st.s[0] = cfg.start_x + rng.uniform(-half, half);
    st.s[1] = cfg.start_y + rng.uniform(-half, half);
    st.s[4] = cfg.object_x;
    st.s[5] = cfg.object_y;
    for (int j = 0; j < cfg.n_nuisance(); ++j) st.s[6 + j] = nuisance_value(cfg, j, 0);
    return st;
}

Vec true_velocity(const EnvConfig& cfg, const EnvState& state, const ActionChunk& chunk) {
    const EnvState next = integrate_decision_step(cfg, state, chunk);
    Vec v(cfg.n_state);
    for (int i = 0; i < cfg.n_state; ++i) v[i] = (next.s[i] - state.s[i]) / cfg.dt_dec;
    return v;
}

EnvState env_step(const EnvConfig& cfg, const EnvState& state, const ActionChunk& chunk,
                  RngStream& rng) {
    if (state.phase == Phase::Done) {
        throw EpisodeTerminatedError("env_step: episode already Done");
    }
    if (state.step >= cfg.t_max) {
        throw EpisodeTerminatedError("env_step: episode expired at t_max");
    }

    EnvState next = integrate_decision_step(cfg, state, chunk);
    if (cfg.sigma_proc > 0.0) {
        next.s[2] += cfg.sigma_proc * rng.normal();
        next.s[3] += cfg.sigma_proc * rng.normal();
    }
    if (cfg.nuis_noise_std > 0.0) {
        for (int j = 0; j < cfg.n_nuisance(); ++j) {
            next.s[6 + j] += cfg.nuis_noise_std * rng.normal();
        }
    }
    return next;
}

ActionChunk expert_controller(const EnvConfig& cfg, const EnvState& state) {
    const bool reach = state.phase == Phase::Reach;
    const double gx = reach ? state.s[4] : cfg.target_x;
    const double gy = reach ? state.s[5] : cfg.target_y;

    ActionChunk chunk(cfg.horizon, cfg.m_action);
    double px = state.s[0], py = state.s[1];
    double vx = state.s[2], vy = state.s[3];
    const double h = cfg.substep();

    for (int i = 0; i < cfg.horizon; ++i) {
        double ax = clamp(cfg.k_p * (gx - px) - cfg.k_d * vx, -cfg.a_max, cfg.a_max);
        double ay = clamp(cfg.k_p * (gy - py) - cfg.k_d * vy, -cfg.a_max, cfg.a_max);
        chunk.at(i, 0) = ax;
        chunk.at(i, 1) = ay;
        const double speed = std::sqrt(vx * vx + vy * vy);
        vx += ax - (cfg.drag_lin + cfg.drag * speed) * vx;
        vy += ay - (cfg.drag_lin + cfg.drag * speed) * vy;
        px += h * vx;
        py += h * vy;
    }
    return chunk;
}

std::vector<Demo> generate_demos(const EnvConfig& cfg, int n, uint64_t seed) {
    if (n < 1) throw GenerationFailureError("generate_demos: n must be >= 1");

    std::vector<Demo> demos;
    demos.reserve(n);
    const int max_attempts = 10 * n;
    int attempt = 0;
    while (static_cast<int>(demos.size()) < n) {
        if (attempt >= max_attempts) {
            throw GenerationFailureError("generate_demos: exceeded 10n attempts without n successes");
        }
        RngStream rng(seed, static_cast<uint64_t>(attempt));
        ++attempt;

        Demo demo;
        demo.seed = seed;
        EnvState st = nominal_state(cfg, rng);
        demo.observations.push_back(st.s);
        while (st.phase != Phase::Done && st.step < cfg.t_max) {
            ActionChunk chunk = expert_controller(cfg, st);
            // Exploration noise decorrelates chunk entries so downstream
            // least-squares fits can identify per-action effects.
            if (cfg.demo_noise_std > 0.0) {
                for (double& a : chunk.a) a += cfg.demo_noise_std * rng.normal();
            }
            chunk = chunk.clipped(cfg.a_max);
            st = env_step(cfg, st, chunk, rng);
            demo.chunks.push_back(chunk);
            demo.observations.push_back(st.s);
        }
        demo.success = st.phase == Phase::Done;
        if (demo.success) demos.push_back(std::move(demo));
    }
    return demos;
}

EnvState perturb_initial_state(const EnvConfig& cfg, const EnvState& state, double sigma_ood,
                               RngStream& rng) {
    EnvState out = state;
    if (sigma_ood == 0.0) return out;
    for (int i = 0; i < 2; ++i) {
        out.s[i] = clamp(out.s[i] + sigma_ood * rng.normal(), -cfg.pos_bound, cfg.pos_bound);
    }
    for (int i = 2; i < 4; ++i) {
        out.s[i] = clamp(out.s[i] + sigma_ood * rng.normal(), -cfg.vel_bound, cfg.vel_bound);
    }
    return out;
}

bool is_success(const EnvState& state) { return state.phase == Phase::Done; }

}  // namespace fbguide

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fbguide/envsim.hpp"
#include "fbguide/types.hpp"

namespace fbguide {

enum class EncoderKind { Identity, RandomOrthogonal };

/// Observation encoder. RandomOrthogonal applies a seeded orthogonal matrix,
/// so it is an isometry of the observation space.
struct Encoder {
    EncoderKind kind = EncoderKind::Identity;
    int input_dim = 0;
    int latent_dim = 0;
    Mat q;  // latent_dim x input_dim, only for RandomOrthogonal
    uint64_t seed = 0;
};

Encoder make_identity_encoder(int n);
Encoder make_orthogonal_encoder(int n, uint64_t seed);
LatentVector encode(const Encoder& enc, const Vec& obs);

enum class DeltaDecay { Constant, Exponential, Oscillating };

/// Bounded, asymptotically convergent residual sequence t -> Delta_t with
/// ||Delta_t|| <= gamma and Delta_t -> delta_inf.
struct DeltaSchedule {
    Vec delta_inf;
    double gamma = 0.0;
    DeltaDecay decay = DeltaDecay::Constant;
    double rate = 0.0;  // decay rate for Exponential / Oscillating
    double freq = 0.0;  // oscillation frequency

    Vec delta_at(int t) const;
    void validate() const;
};

struct RidgeCoeffs {
    Mat a;  // D x D
    Mat b;  // D x (H * m)
    Vec c;  // D
    double residual_rms = 0.0;
};

struct Transition {
    LatentVector z;
    ActionChunk chunk;
    LatentVector z_next;
};

using TrueVelocityFn = std::function<Vec(const LatentVector&, const ActionChunk&, int step)>;

/// One-step action-conditioned latent predictor. The Ridge variant is affine
/// in (z, flattened chunk); the ResidualInjected variant wraps a known true
/// velocity and under-predicts it by exactly Delta_t, so the model error is
/// controllable for the observer analysis.
class WorldModel {
public:
    static WorldModel ridge(RidgeCoeffs coeffs, double dt);
    static WorldModel residual_injected(TrueVelocityFn true_velocity, DeltaSchedule schedule,
                                        double dt, int latent_dim, int chunk_len);

    bool is_ridge() const { return is_ridge_; }
    double dt() const { return dt_; }
    int latent_dim() const { return latent_dim_; }
    int chunk_len() const { return chunk_len_; }
    int step() const { return step_; }

    const RidgeCoeffs& coeffs() const;
    const DeltaSchedule& schedule() const;

    /// Copy pinned to decision step t (selects Delta_t for ResidualInjected).
    WorldModel with_step(int t) const;

    LatentVector predict(const LatentVector& z, const ActionChunk& chunk) const;
    /// (predict(z, A) - z) / dt, exactly.
    Vec velocity(const LatentVector& z, const ActionChunk& chunk) const;
    /// d predict / d chunk: analytic dt*B for Ridge, central differences
    /// (h = 1e-5) for ResidualInjected.
    Mat action_jacobian(const LatentVector& z, const ActionChunk& chunk) const;

private:
    WorldModel() = default;

    bool is_ridge_ = true;
    double dt_ = 1.0;
    int latent_dim_ = 0;
    int chunk_len_ = 0;
    int step_ = 0;
    RidgeCoeffs ridge_;
    TrueVelocityFn true_velocity_;
    DeltaSchedule schedule_;
};

/// Ridge least squares on the velocity residual:
///   min sum ||z_next - z - dt (A z + B abar + c)||^2 + lambda (||A||_F^2 + ||B||_F^2).
/// The bias c is unpenalized. Throws SingularMatrixError when the normal
/// matrix is singular at lambda = 0.
WorldModel fit_ridge(const std::vector<Transition>& transitions, double lambda_reg, double dt);

/// Appendix-style rollout-enhanced refit: ridge fit on demo + rollout
/// transitions pooled together.
WorldModel refit_with_rollouts(const std::vector<Transition>& demo_transitions,
                               const std::vector<Transition>& rollout_transitions,
                               double lambda_reg, double dt);

/// Iterates predict, feeding each prediction back as the next input.
/// Returns [z0, z1, ..., z_n]. The internal schedule step advances from
/// wm.step() by one per chunk.
std::vector<LatentVector> rollout_open_loop(const WorldModel& wm, const LatentVector& z0,
                                            const std::vector<ActionChunk>& chunks);

/// Encoded (z, chunk, z_next) triples from expert demos.
std::vector<Transition> transitions_from_demos(const std::vector<Demo>& demos,
                                               const Encoder& enc);

/// Flat text serialization of fitted ridge coefficients (dims header then
/// row-major values).
std::string serialize_ridge(const WorldModel& wm);
WorldModel deserialize_ridge(const std::string& text);

}  // namespace fbguide

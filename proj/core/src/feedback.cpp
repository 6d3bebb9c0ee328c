#include "fbguide/feedback.hpp"

#include "fbguide/errors.hpp"

namespace fbguide {

Gain Gain::scalar(double l, int dim) {
    Gain g;
    g.l_ = Mat::identity(dim).scaled(l);
    return g;
}

Gain Gain::matrix(const Mat& m) {
    if (!m.is_square()) throw ShapeError("Gain: matrix must be square");
    if (!m.is_symmetric(1e-10)) throw ShapeError("Gain: matrix must be symmetric within 1e-10");
    Gain g;
    g.l_ = m;
    return g;
}

double Gain::lambda_min() const { return lambda_min_symmetric(l_); }

FeedbackState init_feedback(const LatentVector& z0) {
    FeedbackState fb;
    fb.belief = z0;
    fb.residual.assign(z0.size(), 0.0);
    fb.step = 0;
    fb.awaiting_observation = false;
    return fb;
}

CorrectedPrediction corrected_prediction(const WorldModel& wm, const LatentVector& z,
                                         const FeedbackState& fb, const ActionChunk& chunk,
                                         const Gain& gain) {
    if (fb.residual.size() != z.size() || gain.dim() != static_cast<int>(z.size())) {
        throw DimensionError("corrected_prediction: dimension mismatch");
    }
    CorrectedPrediction out;
    out.velocity = vec_add(wm.velocity(z, chunk), gain.apply(fb.residual));
    out.prediction = vec_add(z, vec_scaled(out.velocity, wm.dt()));
    return out;
}

FeedbackState propagate_belief(const FeedbackState& fb, const Vec& v_exec, double dt) {
    FeedbackState out = fb;
    out.belief = vec_add(fb.belief, vec_scaled(v_exec, dt));
    out.step = fb.step + 1;
    out.awaiting_observation = true;  // residual is stale until update_residual
    return out;
}

FeedbackState update_residual(const FeedbackState& fb, const LatentVector& z_next) {
    if (!fb.awaiting_observation) {
        throw ProtocolOrderError("update_residual: propagate_belief must run first at this step");
    }
    FeedbackState out = fb;
    out.residual = vec_sub(z_next, fb.belief);
    out.awaiting_observation = false;
    return out;
}

std::vector<Vec> simulate_error_dynamics(const Gain& gain, double dt,
                                         const DeltaSchedule& schedule, const Vec& e0, int T) {
    const Mat a = Mat::identity(gain.dim()) - gain.matrix().scaled(dt);
    std::vector<Vec> seq;
    seq.reserve(T + 1);
    seq.push_back(e0);
    for (int t = 0; t < T; ++t) {
        seq.push_back(vec_add(a * seq.back(), vec_scaled(schedule.delta_at(t), dt)));
    }
    return seq;
}

bool is_stable(const Gain& gain, double dt) {
    const Mat a = Mat::identity(gain.dim()) - gain.matrix().scaled(dt);
    return spectral_radius(a) < 1.0 - 1e-12;
}

double asymptotic_bound(const Gain& gain, double gamma) {
    if (gamma < 0.0) throw InvalidGainError("asymptotic_bound: gamma must be >= 0");
    const double lmin = gain.lambda_min();
    if (lmin <= 0.0) throw InvalidGainError("asymptotic_bound: gain is not positive definite");
    return gamma / lmin;
}

Vec steady_state_error(const Gain& gain, const Vec& delta_inf) {
    return solve_linear(gain.matrix(), delta_inf);
}

}  // namespace fbguide

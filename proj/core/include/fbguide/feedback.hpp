#pragma once

#include <vector>

#include "fbguide/types.hpp"
#include "fbguide/worldmodel.hpp"

namespace fbguide {

/// Observer state: internal belief z_bar, accumulated residual e = z - z_bar,
/// and the decision-step index. The residual is frozen between step
/// boundaries; update_residual before propagate_belief is a protocol error.
struct FeedbackState {
    LatentVector belief;
    Vec residual;
    int step = 0;
    bool awaiting_observation = false;
};

/// Positive-definite feedback gain, either scalar l*I or a full symmetric
/// matrix (checked symmetric within 1e-10).
class Gain {
public:
    static Gain scalar(double l, int dim);
    static Gain matrix(const Mat& m);

    int dim() const { return l_.rows(); }
    const Mat& matrix() const { return l_; }
    Vec apply(const Vec& e) const { return l_ * e; }
    double lambda_min() const;

private:
    Mat l_;
};

FeedbackState init_feedback(const LatentVector& z0);

struct CorrectedPrediction {
    Vec velocity;              // v + L e
    LatentVector prediction;   // z + dt (v + L e)
};

/// Velocity correction with the step's frozen residual. Repeated calls at the
/// same step with different chunks see the identical residual.
CorrectedPrediction corrected_prediction(const WorldModel& wm, const LatentVector& z,
                                         const FeedbackState& fb, const ActionChunk& chunk,
                                         const Gain& gain);

/// z_bar_{t+1} = z_bar_t + dt * v_exec, where v_exec is the corrected
/// velocity at the executed clean chunk.
FeedbackState propagate_belief(const FeedbackState& fb, const Vec& v_exec, double dt);

/// e_{t+1} = z_{t+1} - z_bar_{t+1}; requires propagate_belief first.
FeedbackState update_residual(const FeedbackState& fb, const LatentVector& z_next);

/// Exact iteration of e_{t+1} = (I - dt L) e_t + dt Delta_t.
/// Returns e_0 .. e_T (length T + 1).
std::vector<Vec> simulate_error_dynamics(const Gain& gain, double dt,
                                         const DeltaSchedule& schedule, const Vec& e0, int T);

/// True iff rho(I - dt L) < 1 - 1e-12.
bool is_stable(const Gain& gain, double dt);

/// gamma / lambda_min(L); throws InvalidGainError when lambda_min <= 0.
double asymptotic_bound(const Gain& gain, double gamma);

/// lim e_t for constant residual: L^{-1} delta_inf.
Vec steady_state_error(const Gain& gain, const Vec& delta_inf);

}  // namespace fbguide

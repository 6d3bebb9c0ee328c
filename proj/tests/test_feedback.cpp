#include <cmath>

#include "doctest.h"
#include "fbguide/feedback.hpp"
#include "fbguide/errors.hpp"

using namespace fbguide;

namespace {

WorldModel constant_truth_model(const Vec& u, const DeltaSchedule& sched, double dt,
                                int chunk_len) {
    TrueVelocityFn tv = [u](const LatentVector&, const ActionChunk&, int) { return u; };
    return WorldModel::residual_injected(tv, sched, dt, static_cast<int>(u.size()), chunk_len);
}

struct ClosedLoopTrace {
    std::vector<Vec> residuals;       // e_0 .. e_T
    std::vector<double> onestep_err;  // ||z_fb(A) - z_next|| per step
};

// Drives the corrected-prediction / belief-propagation / residual-update
// pipeline against the exact environment z_{t+1} = z_t + dt * v_true.
ClosedLoopTrace run_closed_loop(const WorldModel& wm, const Gain& gain, const Vec& z0,
                                const Vec& u_true, double dt, int T) {
    ClosedLoopTrace trace;
    FeedbackState fb = init_feedback(z0);
    Vec z = z0;
    const ActionChunk chunk(wm.chunk_len(), 1);
    trace.residuals.push_back(fb.residual);
    for (int t = 0; t < T; ++t) {
        const WorldModel wt = wm.with_step(t);
        const CorrectedPrediction cp = corrected_prediction(wt, z, fb, chunk, gain);
        const Vec z_next = vec_add(z, vec_scaled(u_true, dt));
        trace.onestep_err.push_back(norm2(vec_sub(cp.prediction, z_next)));
        fb = propagate_belief(fb, cp.velocity, dt);
        fb = update_residual(fb, z_next);
        trace.residuals.push_back(fb.residual);
        z = z_next;
    }
    return trace;
}

}  // namespace

TEST_CASE("init_feedback: belief is z0 and the residual is zero") {
    const FeedbackState fb = init_feedback({1.0, 2.0});
    CHECK(fb.belief[0] == 1.0);
    CHECK(fb.belief[1] == 2.0);
    CHECK(norm2(fb.residual) == 0.0);
    CHECK(fb.step == 0);
    const FeedbackState fb2 = init_feedback({1.0, 2.0});
    CHECK(fb.belief == fb2.belief);
    CHECK(fb.residual == fb2.residual);
}

TEST_CASE("corrected_prediction: zero residual reduces to the open-loop prediction") {
    const Vec u = {0.3, -0.2};
    DeltaSchedule sched;
    sched.delta_inf = {0.1, 0.0};
    sched.gamma = 0.2;
    const WorldModel wm = constant_truth_model(u, sched, 1.0, 3);
    const Gain gain = Gain::scalar(0.5, 2);
    const Vec z = {1.0, -1.0};
    const ActionChunk chunk(3, 1);
    const FeedbackState fb = init_feedback(z);
    const CorrectedPrediction cp = corrected_prediction(wm, z, fb, chunk, gain);
    const Vec open = wm.predict(z, chunk);
    for (int j = 0; j < 2; ++j) CHECK(cp.prediction[j] == open[j]);
}

TEST_CASE("corrected_prediction: scalar gain shifts by dt * l * e") {
    const Vec u = {0.3, -0.2};
    DeltaSchedule sched;
    sched.delta_inf = {0.1, 0.0};
    sched.gamma = 0.2;
    const double dt = 0.5, l = 0.4;
    const WorldModel wm = constant_truth_model(u, sched, dt, 3);
    const Gain gain = Gain::scalar(l, 2);
    const Vec z = {1.0, -1.0};
    const ActionChunk chunk(3, 1);
    FeedbackState fb = init_feedback(z);
    fb.residual = {0.7, -0.3};
    const CorrectedPrediction cp = corrected_prediction(wm, z, fb, chunk, gain);
    const Vec open = wm.predict(z, chunk);
    for (int j = 0; j < 2; ++j) {
        CHECK(std::abs(cp.prediction[j] - (open[j] + dt * l * fb.residual[j])) <= 1e-12);
    }
    CHECK_THROWS_AS(corrected_prediction(wm, {1.0, 2.0, 3.0}, fb, chunk, gain), DimensionError);
}

TEST_CASE("corrected_prediction: e = L^{-1} Delta cancels a constant model error") {
    const Vec u = {0.3, -0.2};
    DeltaSchedule sched;
    sched.delta_inf = {0.2, -0.1};
    sched.gamma = 0.3;
    const WorldModel wm = constant_truth_model(u, sched, 1.0, 3);
    const Gain gain = Gain::scalar(0.5, 2);
    const Vec z = {0.0, 0.0};
    FeedbackState fb = init_feedback(z);
    fb.residual = steady_state_error(gain, sched.delta_inf);
    const ActionChunk chunk(3, 1);
    const CorrectedPrediction cp = corrected_prediction(wm, z, fb, chunk, gain);
    const Vec z_next = vec_add(z, u);  // dt = 1
    for (int j = 0; j < 2; ++j) CHECK(std::abs(cp.prediction[j] - z_next[j]) <= 1e-12);
}

TEST_CASE("update_residual before propagate_belief is a protocol error") {
    FeedbackState fb = init_feedback({0.0, 0.0});
    CHECK_THROWS_AS(update_residual(fb, {1.0, 1.0}), ProtocolOrderError);
    fb = propagate_belief(fb, {0.5, 0.5}, 1.0);
    const FeedbackState ok = update_residual(fb, {1.0, 1.0});
    CHECK(ok.residual[0] == doctest::Approx(0.5));
    CHECK_THROWS_AS(update_residual(ok, {1.0, 1.0}), ProtocolOrderError);
}

TEST_CASE("residual chain follows the scalar geometric recursion") {
    // l = 1, dt = 0.1, constant Delta = 0.5 e1: e_t = 0.5 (1 - 0.9^t).
    DeltaSchedule sched;
    sched.delta_inf = {0.5, 0.0};
    sched.gamma = 0.5;
    const Gain gain = Gain::scalar(1.0, 2);
    const auto seq = simulate_error_dynamics(gain, 0.1, sched, {0.0, 0.0}, 10);
    for (int t = 0; t <= 10; ++t) {
        const double expected = 0.5 * (1.0 - std::pow(0.9, t));
        CHECK(std::abs(seq[static_cast<size_t>(t)][0] - expected) <= 1e-12);
        CHECK(seq[static_cast<size_t>(t)][1] == 0.0);
    }
    CHECK(seq[10][0] == doctest::Approx(0.32566078).epsilon(1e-6));

    // The closed-loop pipeline on the residual-injected model reproduces it.
    const WorldModel wm = constant_truth_model({0.2, -0.4}, sched, 0.1, 3);
    const ClosedLoopTrace trace =
        run_closed_loop(wm, gain, {1.0, -1.0}, {0.2, -0.4}, 0.1, 10);
    for (int t = 0; t <= 10; ++t) {
        CHECK(norm2(vec_sub(trace.residuals[static_cast<size_t>(t)],
                            seq[static_cast<size_t>(t)])) <= 1e-10);
    }
}

TEST_CASE("closed loop matches simulate_error_dynamics for a decaying residual") {
    DeltaSchedule sched;
    sched.delta_inf = {0.15, -0.1, 0.05};
    sched.gamma = 0.4;
    sched.decay = DeltaDecay::Exponential;
    sched.rate = 0.2;
    const Gain gain = Gain::scalar(0.5, 3);
    const Vec u = {0.1, 0.2, -0.3};
    const WorldModel wm = constant_truth_model(u, sched, 1.0, 2);
    const ClosedLoopTrace trace = run_closed_loop(wm, gain, {0.0, 1.0, 2.0}, u, 1.0, 60);
    const auto seq = simulate_error_dynamics(gain, 1.0, sched, {0.0, 0.0, 0.0}, 60);
    for (size_t t = 0; t < seq.size(); ++t) {
        CHECK(norm2(vec_sub(trace.residuals[t], seq[t])) <= 1e-10);
    }
}

TEST_CASE("homogeneous error decays geometrically") {
    DeltaSchedule zero;
    zero.delta_inf = {0.0, 0.0};
    zero.gamma = 0.0;
    const Gain gain = Gain::scalar(1.0, 2);
    const auto seq = simulate_error_dynamics(gain, 0.1, zero, {1.0, -2.0}, 50);
    for (size_t t = 1; t < seq.size(); ++t) {
        CHECK(norm2(seq[t]) <= norm2(seq[t - 1]) + 1e-15);
        CHECK(norm2(seq[t]) == doctest::Approx(norm2(seq[0]) * std::pow(0.9, t)).epsilon(1e-9));
    }
}

TEST_CASE("is_stable: spectral-radius condition with the boundary excluded") {
    CHECK(is_stable(Gain::scalar(1.0, 3), 0.1));
    CHECK_FALSE(is_stable(Gain::scalar(25.0, 3), 0.1));  // rho = 1.5
    CHECK_FALSE(is_stable(Gain::scalar(20.0, 3), 0.1));  // dt*l = 2 exactly
}

TEST_CASE("asymptotic_bound: gamma over the smallest eigenvalue") {
    CHECK(asymptotic_bound(Gain::scalar(1.0, 2), 0.5) == doctest::Approx(0.5));
    CHECK(asymptotic_bound(Gain::scalar(3.0, 2), 0.0) == 0.0);
    CHECK(asymptotic_bound(Gain::matrix(Mat::diagonal({0.2, 2.0})), 1.0) == doctest::Approx(5.0));
    CHECK_THROWS_AS(asymptotic_bound(Gain::matrix(Mat::diagonal({-1.0, 2.0})), 1.0),
                    InvalidGainError);
    CHECK_THROWS_AS(Gain::matrix(Mat(2, 3)), ShapeError);
    Mat asym = Mat::identity(2);
    asym(0, 1) = 0.5;
    CHECK_THROWS_AS(Gain::matrix(asym), ShapeError);
}

TEST_CASE("steady_state_error: closed form and long-run simulation agree") {
    const Vec delta = {0.4, -0.2};
    const Vec ss_id = steady_state_error(Gain::matrix(Mat::identity(2)), delta);
    for (int j = 0; j < 2; ++j) CHECK(ss_id[j] == doctest::Approx(delta[j]));
    const Vec ss_scalar = steady_state_error(Gain::scalar(0.5, 2), delta);
    for (int j = 0; j < 2; ++j) CHECK(ss_scalar[j] == doctest::Approx(delta[j] / 0.5));

    DeltaSchedule sched;
    sched.delta_inf = delta;
    sched.gamma = 0.5;
    const Gain gain = Gain::scalar(1.0, 2);  // dt = 0.1 -> rho = 0.9
    const auto seq = simulate_error_dynamics(gain, 0.1, sched, {0.0, 0.0}, 2000);
    const Vec ss = steady_state_error(gain, vec_scaled(delta, 0.1 / 0.1));
    CHECK(norm2(vec_sub(seq.back(), ss)) <= 1e-8);
}

TEST_CASE("the residual is held fixed across chunks within one step") {
    DeltaSchedule sched;
    sched.delta_inf = {0.1, 0.0};
    sched.gamma = 0.2;
    const WorldModel wm = constant_truth_model({0.3, -0.2}, sched, 1.0, 4);
    const Gain gain = Gain::scalar(0.5, 2);
    FeedbackState fb = init_feedback({0.0, 0.0});
    fb.residual = {0.123456789, -0.987654321};
    const Vec before = fb.residual;
    RngStream rng(7, 0);
    for (int i = 0; i < 100; ++i) {
        ActionChunk chunk(4, 1);
        for (double& v : chunk.a) v = rng.normal();
        (void)corrected_prediction(wm, {0.0, 0.0}, fb, chunk, gain);
        CHECK(fb.residual[0] == before[0]);
        CHECK(fb.residual[1] == before[1]);
    }
}

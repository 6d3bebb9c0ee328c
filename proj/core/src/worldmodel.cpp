#include "fbguide/worldmodel.hpp"

#include <cmath>
#include <sstream>

#include "fbguide/errors.hpp"
#include "fbguide/rng.hpp"

namespace fbguide {

Encoder make_identity_encoder(int n) {
    Encoder e;
    e.kind = EncoderKind::Identity;
    e.input_dim = n;
    e.latent_dim = n;
    return e;
}

Encoder make_orthogonal_encoder(int n, uint64_t seed) {
    // QR of a seeded Gaussian matrix via modified Gram-Schmidt with one
    // re-orthogonalization pass.
    RngStream rng(seed, 0xE2C0DE);
    Mat g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = rng.normal();

    Mat q(n, n);
    for (int col = 0; col < n; ++col) {
        Vec v(n);
        for (int i = 0; i < n; ++i) v[i] = g(i, col);
        for (int pass = 0; pass < 2; ++pass) {
            for (int prev = 0; prev < col; ++prev) {
                double proj = 0.0;
                for (int i = 0; i < n; ++i) proj += q(i, prev) * v[i];
                for (int i = 0; i < n; ++i) v[i] -= proj * q(i, prev);
            }
        }
        const double nrm = norm2(v);
        for (int i = 0; i < n; ++i) q(i, col) = v[i] / nrm;
    }

    Encoder e;
    e.kind = EncoderKind::RandomOrthogonal;
    e.input_dim = n;
    e.latent_dim = n;
    e.q = q;
    e.seed = seed;
    return e;
}

LatentVector encode(const Encoder& enc, const Vec& obs) {
    if (static_cast<int>(obs.size()) != enc.input_dim) {
        throw DimensionError("encode: observation dimension mismatch");
    }
    if (enc.kind == EncoderKind::Identity) return obs;
    return enc.q * obs;
}

Vec DeltaSchedule::delta_at(int t) const {
    if (decay == DeltaDecay::Constant) return delta_inf;

    const double inf_norm = norm2(delta_inf);
    Vec dir(delta_inf.size(), 0.0);
    if (inf_norm > 0.0) {
        dir = vec_scaled(delta_inf, 1.0 / inf_norm);
    } else if (!dir.empty()) {
        dir[0] = 1.0;
    }
    const double headroom = gamma - inf_norm;  // keeps ||Delta_t|| <= gamma
    double mod = std::exp(-rate * t);
    if (decay == DeltaDecay::Oscillating) mod *= std::sin(freq * t);
    return vec_add(delta_inf, vec_scaled(dir, headroom * mod));
}

void DeltaSchedule::validate() const {
    if (gamma < 0.0) throw ConfigError("DeltaSchedule: gamma must be >= 0");
    if (norm2(delta_inf) > gamma + 1e-12) {
        throw ConfigError("DeltaSchedule: ||delta_inf|| must not exceed gamma");
    }
}

WorldModel WorldModel::ridge(RidgeCoeffs coeffs, double dt) {
    WorldModel wm;
    wm.is_ridge_ = true;
    wm.dt_ = dt;
    wm.latent_dim_ = coeffs.a.rows();
    wm.chunk_len_ = coeffs.b.cols();
    wm.ridge_ = std::move(coeffs);
    return wm;
}

WorldModel WorldModel::residual_injected(TrueVelocityFn true_velocity, DeltaSchedule schedule,
                                         double dt, int latent_dim, int chunk_len) {
    WorldModel wm;
    wm.is_ridge_ = false;
    wm.dt_ = dt;
    wm.latent_dim_ = latent_dim;
    wm.chunk_len_ = chunk_len;
    wm.true_velocity_ = std::move(true_velocity);
    wm.schedule_ = std::move(schedule);
    return wm;
}

const RidgeCoeffs& WorldModel::coeffs() const {
    if (!is_ridge_) throw std::logic_error("WorldModel::coeffs: not a ridge model");
    return ridge_;
}

const DeltaSchedule& WorldModel::schedule() const {
    if (is_ridge_) throw std::logic_error("WorldModel::schedule: not residual-injected");
    return schedule_;
}

WorldModel WorldModel::with_step(int t) const {
    WorldModel copy = *this;
    copy.step_ = t;
    return copy;
}

LatentVector WorldModel::predict(const LatentVector& z, const ActionChunk& chunk) const {
    if (static_cast<int>(z.size()) != latent_dim_) {
        throw DimensionError("WorldModel::predict: latent dimension mismatch");
    }
    if (chunk.size() != chunk_len_) {
        throw DimensionError("WorldModel::predict: chunk arity mismatch");
    }
    if (is_ridge_) {
        Vec v = ridge_.a * z;
        const Vec bu = ridge_.b * chunk.a;
        for (int i = 0; i < latent_dim_; ++i) v[i] += bu[i] + ridge_.c[i];
        return vec_add(z, vec_scaled(v, dt_));
    }
    // Model velocity trails the true velocity by exactly Delta_t.
    Vec v = true_velocity_(z, chunk, step_);
    const Vec delta = schedule_.delta_at(step_);
    for (int i = 0; i < latent_dim_; ++i) v[i] -= delta[i];
    return vec_add(z, vec_scaled(v, dt_));
}

Vec WorldModel::velocity(const LatentVector& z, const ActionChunk& chunk) const {
    return vec_scaled(vec_sub(predict(z, chunk), z), 1.0 / dt_);
}

Mat WorldModel::action_jacobian(const LatentVector& z, const ActionChunk& chunk) const {
    if (is_ridge_) return ridge_.b.scaled(dt_);

    constexpr double h = 1e-5;
    Mat jac(latent_dim_, chunk_len_);
    for (int j = 0; j < chunk_len_; ++j) {
        ActionChunk up = chunk, dn = chunk;
        up.a[j] += h;
        dn.a[j] -= h;
        const Vec fu = predict(z, up);
        const Vec fd = predict(z, dn);
        for (int i = 0; i < latent_dim_; ++i) jac(i, j) = (fu[i] - fd[i]) / (2.0 * h);
    }
    return jac;
}

WorldModel fit_ridge(const std::vector<Transition>& transitions, double lambda_reg, double dt) {
    if (transitions.empty()) throw EvaluationError("fit_ridge: no transitions");
    const int d = static_cast<int>(transitions.front().z.size());
    const int f = transitions.front().chunk.size();
    const int p = d + f + 1;

    Mat gram(p, p);
    Mat rhs(p, d);
    Vec x(p);
    for (const Transition& tr : transitions) {
        for (int i = 0; i < d; ++i) x[i] = tr.z[i];
        for (int i = 0; i < f; ++i) x[d + i] = tr.chunk.a[i];
        x[p - 1] = 1.0;
        for (int i = 0; i < p; ++i) {
            for (int j = i; j < p; ++j) gram(i, j) += x[i] * x[j];
            const double yi_scale = 1.0 / dt;
            for (int k = 0; k < d; ++k) {
                rhs(i, k) += x[i] * (tr.z_next[k] - tr.z[k]) * yi_scale;
            }
        }
    }
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < i; ++j) gram(i, j) = gram(j, i);
    // Penalize A and B entries, never the bias.
    for (int i = 0; i < p - 1; ++i) gram(i, i) += lambda_reg;

    RidgeCoeffs coeffs;
    coeffs.a = Mat(d, d);
    coeffs.b = Mat(d, f);
    coeffs.c.assign(d, 0.0);
    for (int k = 0; k < d; ++k) {
        Vec b(p);
        for (int i = 0; i < p; ++i) b[i] = rhs(i, k);
        Vec theta;
        try {
            theta = solve_linear(gram, b);
        } catch (const SingularMatrixError&) {
            throw SingularMatrixError(
                "fit_ridge: normal matrix is singular; retry with lambda_reg > 0");
        }
        for (int j = 0; j < d; ++j) coeffs.a(k, j) = theta[j];
        for (int j = 0; j < f; ++j) coeffs.b(k, j) = theta[d + j];
        coeffs.c[k] = theta[p - 1];
    }

    WorldModel wm = WorldModel::ridge(std::move(coeffs), dt);
    double sq = 0.0;
    size_t count = 0;
    for (const Transition& tr : transitions) {
        const Vec pred = wm.predict(tr.z, tr.chunk);
        for (int i = 0; i < d; ++i) {
            const double r = pred[i] - tr.z_next[i];
            sq += r * r;
            ++count;
        }
    }
    RidgeCoeffs with_rms = wm.coeffs();
    with_rms.residual_rms = std::sqrt(sq / static_cast<double>(count));
    return WorldModel::ridge(std::move(with_rms), dt);
}

WorldModel refit_with_rollouts(const std::vector<Transition>& demo_transitions,
                               const std::vector<Transition>& rollout_transitions,
                               double lambda_reg, double dt) {
    std::vector<Transition> pooled = demo_transitions;
    pooled.insert(pooled.end(), rollout_transitions.begin(), rollout_transitions.end());
    return fit_ridge(pooled, lambda_reg, dt);
}

std::vector<LatentVector> rollout_open_loop(const WorldModel& wm, const LatentVector& z0,
                                            const std::vector<ActionChunk>& chunks) {
    std::vector<LatentVector> traj;
    traj.reserve(chunks.size() + 1);
    traj.push_back(z0);
    int t = wm.step();
    for (const ActionChunk& chunk : chunks) {
        traj.push_back(wm.with_step(t).predict(traj.back(), chunk));
        ++t;
    }
    return traj;
}

std::vector<Transition> transitions_from_demos(const std::vector<Demo>& demos,
                                               const Encoder& enc) {
    std::vector<Transition> out;
    for (const Demo& demo : demos) {
        for (size_t i = 0; i < demo.chunks.size(); ++i) {
            Transition tr;
            tr.z = encode(enc, demo.observations[i]);
            tr.chunk = demo.chunks[i];
            tr.z_next = encode(enc, demo.observations[i + 1]);
            out.push_back(std::move(tr));
        }
    }
    return out;
}

std::string serialize_ridge(const WorldModel& wm) {
    const RidgeCoeffs& rc = wm.coeffs();
    std::ostringstream os;
    os.precision(17);
    os << "ridge " << rc.a.rows() << " " << rc.b.cols() << " " << wm.dt() << "\n";
    for (int i = 0; i < rc.a.rows(); ++i)
        for (int j = 0; j < rc.a.cols(); ++j) os << rc.a(i, j) << (j + 1 == rc.a.cols() ? "\n" : " ");
    for (int i = 0; i < rc.b.rows(); ++i)
        for (int j = 0; j < rc.b.cols(); ++j) os << rc.b(i, j) << (j + 1 == rc.b.cols() ? "\n" : " ");
    for (size_t i = 0; i < rc.c.size(); ++i) os << rc.c[i] << (i + 1 == rc.c.size() ? "\n" : " ");
    return os.str();
}

WorldModel deserialize_ridge(const std::string& text) {
    std::istringstream is(text);
    std::string tag;
    int d = 0, f = 0;
    double dt = 0.0;
    is >> tag >> d >> f >> dt;
    if (tag != "ridge" || d <= 0 || f <= 0 || dt <= 0.0 || !is) {
        throw ConfigError("deserialize_ridge: malformed header");
    }
    RidgeCoeffs rc;
    rc.a = Mat(d, d);
    rc.b = Mat(d, f);
    rc.c.assign(d, 0.0);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) is >> rc.a(i, j);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < f; ++j) is >> rc.b(i, j);
    for (int i = 0; i < d; ++i) is >> rc.c[i];
    if (!is) throw ConfigError("deserialize_ridge: truncated coefficient block");
    return WorldModel::ridge(std::move(rc), dt);
}

}  // namespace fbguide

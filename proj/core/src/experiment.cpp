#include "fbguide/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>

#include "fbguide/csv.hpp"
#include "fbguide/errors.hpp"

namespace fbguide {

namespace {

uint64_t derive_seed(uint64_t seed, uint64_t tag) { return RngStream(seed, tag).next_u64(); }

void ensure_out_dir(const std::string& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw EvaluationError("cannot create output directory '" + out_dir + "'");
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

void write_resolved_config(const ExperimentConfig& cfg, const std::string& out_dir) {
    std::ofstream out(join_path(out_dir, "resolved_config.txt"), std::ios::binary);
    if (!out) throw EvaluationError("cannot write resolved_config.txt");
    out << resolved_config(cfg);
}

/// Runs fn(i) for i in [0, n) on a small thread pool; results must be written
/// into index-addressed slots so the gather is order-independent.
template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error = nullptr;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

GuidanceMode mode_from_string(const std::string& s) {
    if (s == "none") return GuidanceMode::None;
    if (s == "standard") return GuidanceMode::Standard;
    if (s == "feedback") return GuidanceMode::Feedback;
    if (s == "feedback_aa") return GuidanceMode::FeedbackActionAware;
    throw ConfigError("unknown guidance mode '" + s + "'");
}

double mse_per_dim(const Vec& a, const Vec& b) {
    double sq = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sq += d * d;
    }
    return sq / static_cast<double>(a.size());
}

// Stream-id tags; every command draws from a disjoint id range so reruns of
// one command never perturb another.
constexpr uint64_t kTagDemos = 0xDE305;
constexpr uint64_t kTagWeights = 0xC0117;
constexpr uint64_t kTagObserver = 0x0B5E00;
constexpr uint64_t kTagPredInit = 0x101000;
constexpr uint64_t kTagPredEp = 0x202000;
constexpr uint64_t kTagRollout = 0x303000;
constexpr uint64_t kTagSuccInit = 0x404000;
constexpr uint64_t kTagSuccEp = 0x505000;
constexpr uint64_t kTagTrajInit = 0x606000;
constexpr uint64_t kTagTrajEp = 0x707000;

}  // namespace

WilsonInterval wilson_interval(int successes, int n) {
    if (n <= 0) return {0.0, 1.0};
    const double z = 1.959963984540054;  // 95% two-sided
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

DeltaSchedule schedule_from_config(const WmSection& wm, int dim) {
    DeltaSchedule sched;
    sched.gamma = wm.gamma;
    sched.rate = wm.rate;
    sched.freq = wm.freq;
    if (wm.delta_decay == "constant") {
        sched.decay = DeltaDecay::Constant;
    } else if (wm.delta_decay == "exponential") {
        sched.decay = DeltaDecay::Exponential;
    } else if (wm.delta_decay == "oscillating") {
        sched.decay = DeltaDecay::Oscillating;
    } else {
        throw ConfigError("unknown delta_decay '" + wm.delta_decay + "'");
    }
    sched.delta_inf.assign(static_cast<size_t>(dim), 0.0);
    if (dim > 0) sched.delta_inf[0] = wm.delta_inf;  // fixed direction e1
    sched.validate();
    return sched;
}

WorldModel residual_injected_from_env(const ExperimentConfig& cfg) {
    const EnvConfig env = cfg.env;
    // Identity encoder lets the closure reinterpret the latent as the raw
    // environment state; the phase is recovered from the grasp geometry.
    TrueVelocityFn tv = [env](const LatentVector& z, const ActionChunk& chunk, int step) {
        EnvState st;
        st.s = z;
        st.step = step;
        const double dx = z[0] - z[4];
        const double dy = z[1] - z[5];
        st.phase = std::sqrt(dx * dx + dy * dy) <= env.grasp_radius ? Phase::Carry : Phase::Reach;
        return true_velocity(env, st, chunk);
    };
    return WorldModel::residual_injected(std::move(tv), schedule_from_config(cfg.wm, env.n_state),
                                         env.dt_dec, env.n_state, env.horizon * env.m_action);
}

Workbench build_workbench(const ExperimentConfig& cfg) {
    const EnvConfig& env = cfg.env;
    env.validate();

    std::vector<Demo> demos = generate_demos(env, cfg.eval.n_demos, derive_seed(cfg.eval.seed, kTagDemos));
    Encoder enc = make_identity_encoder(env.n_state);

    WorldModel wm = cfg.wm.variant == "residual"
                        ? residual_injected_from_env(cfg)
                        : fit_ridge(transitions_from_demos(demos, enc), cfg.wm.lambda_reg, env.dt_dec);

    GmmScorePolicy policy = build_policy(demos, enc, cfg.eval.k_cond, cfg.eval.bandwidth);
    ExpertMemory mem = build_expert_memory(demos, enc);

    std::vector<LatentVector> states = sample_demo_latents(demos, enc, cfg.eval.m_states);
    std::vector<ActionChunk> pool = demo_action_pool(demos);
    RngStream wrng(cfg.eval.seed, kTagWeights);
    Vec raw = compute_weights(wm, states, pool, cfg.eval.k_actions, wrng);
    ControllabilityWeights weights = normalize_weights(raw, cfg.guidance.beta);

    Gain gain = Gain::scalar(cfg.feedback.l, env.n_state);
    return Workbench(env, std::move(demos), std::move(enc), std::move(wm), std::move(policy),
                     std::move(mem), std::move(weights), std::move(gain));
}

std::vector<ObserverInstanceResult> observer_report(const ExperimentConfig& cfg,
                                                    const std::string& out_dir, bool strict,
                                                    bool quiet) {
    ensure_out_dir(out_dir);
    write_resolved_config(cfg, out_dir);

    constexpr int kHorizon = 2000;
    constexpr int kRandomInstances = 100;
    std::vector<ObserverInstanceResult> results;

    auto run_instance = [&](int instance, const Gain& gain, double dt, const DeltaSchedule& sched,
                            bool emit_series) {
        ObserverInstanceResult r;
        r.instance = instance;
        r.dim = gain.dim();
        r.dt = dt;
        r.gamma = sched.gamma;
        r.lambda_min = gain.lambda_min();
        r.constant_delta = sched.decay == DeltaDecay::Constant;

        if (!is_stable(gain, dt)) {
            const double rho = spectral_radius(Mat::identity(gain.dim()) - gain.matrix().scaled(dt));
            char msg[128];
            std::snprintf(msg, sizeof(msg),
                          "observer-report: unstable gain, rho(I - dt L) = %.6g >= 1", rho);
            if (strict) throw EvaluationError(msg);
            if (!quiet) std::printf("instance %d: SKIPPED (%s)\n", instance, msg);
            r.pass = false;
            results.push_back(r);
            return;
        }

        r.bound = asymptotic_bound(gain, sched.gamma);
        const Vec e0(static_cast<size_t>(gain.dim()), 0.0);
        const std::vector<Vec> errs = simulate_error_dynamics(gain, dt, sched, e0, kHorizon);

        bool within = true;
        for (const Vec& e : errs) {
            if (norm2(e) > r.bound + 1e-9) within = false;
        }
        r.final_norm_e = norm2(errs.back());
        if (r.constant_delta) {
            const Vec ss = steady_state_error(gain, sched.delta_inf);
            r.steady_state_err = norm2(vec_sub(errs.back(), ss));
            within = within && r.steady_state_err <= 1e-8;
        }
        r.pass = within;

        if (emit_series) {
            CsvWriter csv(join_path(out_dir, "observer_report.csv"), {"t", "norm_e", "bound"});
            for (size_t t = 0; t < errs.size(); ++t) {
                csv.row({cell(static_cast<int>(t)), cell(norm2(errs[t])), cell(r.bound)});
            }
        }
        results.push_back(r);
    };

    // Instance 0: the configured gain against the configured residual schedule.
    run_instance(0, Gain::scalar(cfg.feedback.l, cfg.env.n_state), cfg.feedback.dt,
                 schedule_from_config(cfg.wm, cfg.env.n_state), /*emit_series=*/true);

    // Random stable instances: symmetric PD gains with controlled spectra,
    // dt chosen so dt * lambda_max <= 1.
    for (int i = 1; i <= kRandomInstances; ++i) {
        RngStream rng(cfg.eval.seed, kTagObserver + static_cast<uint64_t>(i));
        const int d = 2 + rng.uniform_int(15);
        Vec lam(static_cast<size_t>(d));
        double lam_max = 0.0;
        for (double& v : lam) {
            v = rng.uniform(0.2, 1.5);
            lam_max = std::max(lam_max, v);
        }
        const Mat q = make_orthogonal_encoder(d, rng.next_u64()).q;
        Mat l = q * Mat::diagonal(lam) * q.transposed();
        l = (l + l.transposed()).scaled(0.5);

        const double dt = rng.uniform(0.5, 1.0) / lam_max;

        DeltaSchedule sched;
        sched.decay = static_cast<DeltaDecay>(i % 3);
        sched.gamma = rng.uniform(0.1, 1.0);
        Vec dir(static_cast<size_t>(d));
        for (double& v : dir) v = rng.normal();
        const double dn = norm2(dir);
        sched.delta_inf = vec_scaled(dir, 0.8 * sched.gamma / (dn > 0.0 ? dn : 1.0));
        sched.rate = rng.uniform(0.02, 0.1);
        sched.freq = rng.uniform(0.1, 1.0);
        sched.validate();

        run_instance(i, Gain::matrix(l), dt, sched, /*emit_series=*/false);
    }

    CsvWriter summary(join_path(out_dir, "observer_summary.csv"),
                      {"instance", "dim", "dt", "gamma", "lambda_min", "bound", "final_norm_e",
                       "constant_delta", "steady_state_err", "pass"});
    int passed = 0;
    for (const ObserverInstanceResult& r : results) {
        summary.row({cell(r.instance), cell(r.dim), cell(r.dt), cell(r.gamma), cell(r.lambda_min),
                     cell(r.bound), cell(r.final_norm_e), cell(r.constant_delta ? 1 : 0),
                     cell(r.steady_state_err), cell(r.pass ? 1 : 0)});
        passed += r.pass ? 1 : 0;
        if (!quiet && !r.pass) {
            std::printf("instance %d: FAIL (final ||e|| = %.6g, bound = %.6g)\n", r.instance,
                        r.final_norm_e, r.bound);
        }
    }
    if (!quiet) {
        std::printf("observer-report: %d/%zu instances within gamma/lambda_min bound\n", passed,
                    results.size());
    }
    return results;
}

std::vector<MetricsRow> prediction_eval(const ExperimentConfig& cfg, const std::string& out_dir,
                                        bool quiet) {
    ensure_out_dir(out_dir);
    write_resolved_config(cfg, out_dir);

    Workbench wb = build_workbench(cfg);
    GuidanceConfig gcfg;  // base policy, no guidance
    gcfg.mode = GuidanceMode::None;

    const int n = cfg.eval.n_episodes;
    const int burn_in = cfg.eval.burn_in;
    std::vector<MetricsRow> rows;

    CsvWriter csv(join_path(out_dir, "prediction_mse.csv"),
                  {"method", "sigma_ood", "episodes", "successes", "mse_openloop", "mse_feedback",
                   "reduction_pct"});

    for (double sigma : cfg.eval.sigma_ood) {
        struct PerEpisode {
            double sq_ol = 0.0, sq_fb = 0.0;
            long count = 0;
            bool success = false;
        };
        std::vector<PerEpisode> per(static_cast<size_t>(n));

        parallel_for(n, cfg.eval.threads, [&](int i) {
            RngStream init_rng(cfg.eval.seed, kTagPredInit + static_cast<uint64_t>(i));
            EnvState s0 = nominal_state(wb.env, init_rng);
            s0 = perturb_initial_state(wb.env, s0, sigma, init_rng);
            const uint64_t ep_seed = derive_seed(cfg.eval.seed, kTagPredEp + static_cast<uint64_t>(i));
            const EpisodeRecord rec = run_episode(wb.env, s0, wb.enc, wb.policy, wb.wm, wb.gain,
                                                  gcfg, wb.mem, wb.weights, ep_seed);
            PerEpisode& p = per[static_cast<size_t>(i)];
            p.success = rec.success;
            for (size_t t = static_cast<size_t>(burn_in); t < rec.steps.size(); ++t) {
                const EpisodeStep& st = rec.steps[t];
                p.sq_ol += mse_per_dim(st.open_loop_pred, st.true_next);
                p.sq_fb += mse_per_dim(st.corrected_pred, st.true_next);
                p.count += 1;
            }
        });

        double sq_ol = 0.0, sq_fb = 0.0;
        long count = 0;
        int successes = 0;
        for (const PerEpisode& p : per) {
            sq_ol += p.sq_ol;
            sq_fb += p.sq_fb;
            count += p.count;
            successes += p.success ? 1 : 0;
        }
        if (count == 0) {
            throw EvaluationError("predict-eval: no prediction steps survive the burn-in window");
        }

        MetricsRow row;
        row.method = cfg.wm.variant;
        row.sigma_ood = sigma;
        row.episodes = n;
        row.successes = successes;
        row.mean_mse_openloop = sq_ol / static_cast<double>(count);
        row.mean_mse_feedback = sq_fb / static_cast<double>(count);
        row.reduction_pct = row.mean_mse_openloop > 1e-12
                                ? 100.0 * (1.0 - row.mean_mse_feedback / row.mean_mse_openloop)
                                : 0.0;
        rows.push_back(row);

        csv.row({cell(row.method), cell(row.sigma_ood), cell(row.episodes), cell(row.successes),
                 cell(row.mean_mse_openloop), cell(row.mean_mse_feedback), cell(row.reduction_pct)});
        if (!quiet) {
            std::printf("predict-eval: sigma=%.3g mse_openloop=%.6g mse_feedback=%.6g reduction=%.2f%%\n",
                        sigma, row.mean_mse_openloop, row.mean_mse_feedback, row.reduction_pct);
        }
    }
    return rows;
}

std::vector<MetricsRow> success_eval(const ExperimentConfig& cfg, const std::string& out_dir,
                                     bool quiet) {
    ensure_out_dir(out_dir);
    write_resolved_config(cfg, out_dir);

    Workbench wb = build_workbench(cfg);
    const std::vector<std::string>& methods = cfg.guidance.methods;

    // Rollout-enhanced model: refit on demos + base-policy rollouts from
    // unperturbed starts.
    WorldModel wm_refit = wb.wm;
    if (std::find(methods.begin(), methods.end(), "rollout") != methods.end() && wb.wm.is_ridge()) {
        std::vector<Transition> extra;
        GuidanceConfig none;
        for (int i = 0; i < cfg.eval.n_rollouts; ++i) {
            RngStream init_rng(cfg.eval.seed, kTagRollout + static_cast<uint64_t>(i));
            const EnvState s0 = nominal_state(wb.env, init_rng);
            const uint64_t ep_seed =
                derive_seed(cfg.eval.seed, kTagRollout + 0x10000 + static_cast<uint64_t>(i));
            const EpisodeRecord rec = run_episode(wb.env, s0, wb.enc, wb.policy, wb.wm, wb.gain,
                                                  none, wb.mem, wb.weights, ep_seed);
            for (const EpisodeStep& st : rec.steps) extra.push_back({st.z, st.executed, st.true_next});
        }
        wm_refit = refit_with_rollouts(transitions_from_demos(wb.demos, wb.enc), extra,
                                       cfg.wm.lambda_reg, wb.env.dt_dec);
    }

    struct MethodSetup {
        std::string name;
        GuidanceConfig gcfg;
        const WorldModel* wm;
    };
    std::vector<MethodSetup> setups;
    for (const std::string& m : methods) {
        MethodSetup s;
        s.name = m;
        s.gcfg.lambda = cfg.guidance.lambda;
        s.gcfg.tau_g = cfg.guidance.tau_g;
        s.gcfg.beta = cfg.guidance.beta;
        s.wm = &wb.wm;
        if (m == "base") {
            s.gcfg.mode = GuidanceMode::None;
        } else if (m == "standard") {
            s.gcfg.mode = GuidanceMode::Standard;
        } else if (m == "rollout") {
            s.gcfg.mode = GuidanceMode::Standard;
            s.wm = &wm_refit;
        } else if (m == "feedback") {
            s.gcfg.mode = GuidanceMode::Feedback;
        } else if (m == "feedback_aa") {
            s.gcfg.mode = GuidanceMode::FeedbackActionAware;
        } else {
            throw ConfigError("success-eval: unknown method '" + m + "'");
        }
        setups.push_back(std::move(s));
    }

    const int n = cfg.eval.n_episodes;
    const double sigma = cfg.eval.sigma_ood_success;
    // successes[method][episode]; paired initial states and paired seeds.
    std::vector<std::vector<char>> outcome(setups.size(), std::vector<char>(static_cast<size_t>(n), 0));

    parallel_for(n, cfg.eval.threads, [&](int i) {
        RngStream init_rng(cfg.eval.seed, kTagSuccInit + static_cast<uint64_t>(i));
        EnvState s0 = nominal_state(wb.env, init_rng);
        s0 = perturb_initial_state(wb.env, s0, sigma, init_rng);
        const uint64_t ep_seed = derive_seed(cfg.eval.seed, kTagSuccEp + static_cast<uint64_t>(i));
        for (size_t m = 0; m < setups.size(); ++m) {
            const EpisodeRecord rec = run_episode(wb.env, s0, wb.enc, wb.policy, *setups[m].wm,
                                                  wb.gain, setups[m].gcfg, wb.mem, wb.weights,
                                                  ep_seed);
            outcome[m][static_cast<size_t>(i)] = rec.success ? 1 : 0;
        }
    });

    CsvWriter csv(join_path(out_dir, "success.csv"),
                  {"method", "sigma_ood", "episodes", "successes", "rate", "wilson_lo", "wilson_hi"});
    std::vector<MetricsRow> rows;
    for (size_t m = 0; m < setups.size(); ++m) {
        int successes = 0;
        for (char c : outcome[m]) successes += c;
        const double rate = n > 0 ? static_cast<double>(successes) / n : 0.0;
        const WilsonInterval wi = wilson_interval(successes, n);
        csv.row({cell(setups[m].name), cell(sigma), cell(n), cell(successes), cell(rate),
                 cell(wi.lo), cell(wi.hi)});
        MetricsRow row;
        row.method = setups[m].name;
        row.sigma_ood = sigma;
        row.episodes = n;
        row.successes = successes;
        rows.push_back(row);
        if (!quiet) {
            std::printf("success-eval: %-12s rate=%.3f [%.3f, %.3f]\n", setups[m].name.c_str(),
                        rate, wi.lo, wi.hi);
        }
    }
    return rows;
}

WeightsReport weights_report(const ExperimentConfig& cfg, const std::string& out_dir, bool quiet) {
    ensure_out_dir(out_dir);
    write_resolved_config(cfg, out_dir);

    Workbench wb = build_workbench(cfg);
    const Vec& w = wb.weights.w;
    const int d = static_cast<int>(w.size());

    WeightsReport report;
    report.weights = wb.weights;

    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    report.degenerate = total <= 1e-12;

    Vec sorted = w;
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    const int k = std::max(1, static_cast<int>(std::ceil(0.05 * d)));
    double top = 0.0;
    for (int i = 0; i < k && i < d; ++i) top += sorted[static_cast<size_t>(i)];
    report.top5_share = report.degenerate ? 0.0 : top / total;

    double nuis = 0.0;
    for (int j = 6; j < d; ++j) nuis += w[static_cast<size_t>(j)];
    report.nuisance_share = report.degenerate ? 0.0 : nuis / total;

    CsvWriter csv(join_path(out_dir, "weights.csv"), {"dim", "w", "w_bar", "w_beta"});
    for (int j = 0; j < d; ++j) {
        csv.row({cell(j), cell(w[static_cast<size_t>(j)]),
                 cell(wb.weights.w_bar[static_cast<size_t>(j)]),
                 cell(wb.weights.w_beta[static_cast<size_t>(j)])});
    }
    CsvWriter summary(join_path(out_dir, "weights_summary.csv"), {"metric", "value"});
    summary.row({cell(std::string("top5_mass_share")), cell(report.top5_share)});
    summary.row({cell(std::string("nuisance_mass_share")), cell(report.nuisance_share)});
    summary.row({cell(std::string("degenerate")), cell(report.degenerate ? 1 : 0)});

    if (!quiet) {
        std::printf("weights-report: top5_share=%.4f nuisance_share=%.4f degenerate=%d\n",
                    report.top5_share, report.nuisance_share, report.degenerate ? 1 : 0);
    }
    return report;
}

void write_episode_csv(const EpisodeRecord& rec, const std::string& path) {
    CsvWriter csv(path, {"t", "mse_openloop", "mse_feedback", "norm_e", "success_final"});
    for (size_t t = 0; t < rec.steps.size(); ++t) {
        const EpisodeStep& st = rec.steps[t];
        csv.row({cell(static_cast<int>(t)), cell(mse_per_dim(st.open_loop_pred, st.true_next)),
                 cell(mse_per_dim(st.corrected_pred, st.true_next)), cell(norm2(st.residual)),
                 cell(rec.success ? 1 : 0)});
    }
}

TrajectoryReport trajectory_export(const ExperimentConfig& cfg, const std::string& out_dir,
                                   bool quiet) {
    ensure_out_dir(out_dir);
    write_resolved_config(cfg, out_dir);

    Workbench wb = build_workbench(cfg);
    GuidanceConfig gcfg;
    gcfg.mode = mode_from_string(cfg.guidance.mode);
    gcfg.lambda = cfg.guidance.lambda;
    gcfg.tau_g = cfg.guidance.tau_g;
    gcfg.beta = cfg.guidance.beta;

    RngStream init_rng(cfg.eval.seed, kTagTrajInit);
    EnvState s0 = nominal_state(wb.env, init_rng);
    s0 = perturb_initial_state(wb.env, s0, cfg.eval.sigma_ood_success, init_rng);
    const EpisodeRecord rec = run_episode(wb.env, s0, wb.enc, wb.policy, wb.wm, wb.gain, gcfg,
                                          wb.mem, wb.weights, derive_seed(cfg.eval.seed, kTagTrajEp));
    if (rec.steps.empty()) throw EvaluationError("trajectory-export: empty episode");
    write_episode_csv(rec, join_path(out_dir, "episode.csv"));

    const int t_len = static_cast<int>(rec.steps.size());
    const int d = static_cast<int>(rec.steps.front().z.size());

    // Three aligned latent trajectories of length t_len + 1.
    std::vector<LatentVector> gt, openloop, belief;
    std::vector<ActionChunk> executed;
    for (const EpisodeStep& st : rec.steps) {
        gt.push_back(st.z);
        belief.push_back(st.belief);
        executed.push_back(st.executed);
    }
    gt.push_back(rec.steps.back().true_next);
    openloop = rollout_open_loop(wb.wm.with_step(0), rec.steps.front().z, executed);
    // The belief after the final propagation: z_bar + dt * v_exec equals the
    // previous belief shifted by the corrected displacement.
    belief.push_back(vec_add(rec.steps.back().belief,
                             vec_sub(rec.steps.back().corrected_pred, rec.steps.back().z)));

    // PCA over the pooled points.
    std::vector<const std::vector<LatentVector>*> sources = {&gt, &openloop, &belief};
    Vec mean(static_cast<size_t>(d), 0.0);
    int total = 0;
    for (const auto* src : sources) {
        for (const LatentVector& p : *src) {
            for (int j = 0; j < d; ++j) mean[static_cast<size_t>(j)] += p[static_cast<size_t>(j)];
            ++total;
        }
    }
    for (double& v : mean) v /= total;
    Mat cov(d, d);
    for (const auto* src : sources) {
        for (const LatentVector& p : *src) {
            for (int i = 0; i < d; ++i) {
                const double ci = p[static_cast<size_t>(i)] - mean[static_cast<size_t>(i)];
                for (int j = i; j < d; ++j) {
                    cov(i, j) += ci * (p[static_cast<size_t>(j)] - mean[static_cast<size_t>(j)]);
                }
            }
        }
    }
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < i; ++j) cov(i, j) = cov(j, i);
    const SymmetricEigen eig = jacobi_eigen(cov);
    Vec pc1(static_cast<size_t>(d)), pc2(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i) {
        pc1[static_cast<size_t>(i)] = eig.vectors(i, d - 1);  // values ascending
        pc2[static_cast<size_t>(i)] = eig.vectors(i, d - 2);
    }

    CsvWriter csv(join_path(out_dir, "trajectory.csv"), {"step", "source", "pc1", "pc2"});
    const char* names[3] = {"gt", "openloop", "feedback"};
    for (int s = 0; s < 3; ++s) {
        const auto& src = *sources[static_cast<size_t>(s)];
        for (size_t t = 0; t < src.size(); ++t) {
            const Vec centered = vec_sub(src[t], mean);
            csv.row({cell(static_cast<int>(t)), cell(std::string(names[s])),
                     cell(dot(centered, pc1)), cell(dot(centered, pc2))});
        }
    }

    TrajectoryReport report;
    report.steps = t_len;
    for (int t = 0; t <= t_len; ++t) {
        report.mean_dist_base += norm2(vec_sub(gt[static_cast<size_t>(t)], openloop[static_cast<size_t>(t)]));
        report.mean_dist_feedback += norm2(vec_sub(gt[static_cast<size_t>(t)], belief[static_cast<size_t>(t)]));
    }
    report.mean_dist_base /= t_len + 1;
    report.mean_dist_feedback /= t_len + 1;

    CsvWriter summary(join_path(out_dir, "trajectory_summary.csv"), {"source", "mean_dist_to_gt"});
    summary.row({cell(std::string("openloop")), cell(report.mean_dist_base)});
    summary.row({cell(std::string("feedback")), cell(report.mean_dist_feedback)});

    if (!quiet) {
        std::printf("trajectory-export: %d steps, mean drift openloop=%.6g feedback=%.6g\n",
                    report.steps, report.mean_dist_base, report.mean_dist_feedback);
    }
    return report;
}

void gen_demos_cmd(const ExperimentConfig& cfg, const std::string& out_dir, bool quiet) {
    ensure_out_dir(out_dir);
    write_resolved_config(cfg, out_dir);

    const EnvConfig& env = cfg.env;
    env.validate();
    const std::vector<Demo> demos =
        generate_demos(env, cfg.eval.n_demos, derive_seed(cfg.eval.seed, kTagDemos));

    std::vector<std::string> obs_header = {"demo", "t"};
    for (int j = 0; j < env.n_state; ++j) obs_header.push_back("s" + std::to_string(j));
    CsvWriter obs_csv(join_path(out_dir, "observations.csv"), obs_header);

    std::vector<std::string> act_header = {"demo", "t"};
    for (int j = 0; j < env.horizon * env.m_action; ++j) act_header.push_back("a" + std::to_string(j));
    CsvWriter act_csv(join_path(out_dir, "actions.csv"), act_header);

    for (size_t di = 0; di < demos.size(); ++di) {
        const Demo& demo = demos[di];
        for (size_t t = 0; t < demo.observations.size(); ++t) {
            std::vector<std::string> row = {cell(static_cast<int>(di)), cell(static_cast<int>(t))};
            for (double v : demo.observations[t]) row.push_back(cell(v));
            obs_csv.row(row);
        }
        for (size_t t = 0; t < demo.chunks.size(); ++t) {
            std::vector<std::string> row = {cell(static_cast<int>(di)), cell(static_cast<int>(t))};
            for (double v : demo.chunks[t].a) row.push_back(cell(v));
            act_csv.row(row);
        }
    }
    if (!quiet) {
        std::printf("gen-demos: %zu demonstrations exported\n", demos.size());
    }
}

}  // namespace fbguide

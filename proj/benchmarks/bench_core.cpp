#include <benchmark/benchmark.h>

#include "fbguide/diffusion.hpp"
#include "fbguide/experiment.hpp"
#include "fbguide/linalg.hpp"

namespace {

using namespace fbguide;

const ExperimentConfig& small_config() {
    static ExperimentConfig cfg = [] {
        ExperimentConfig c;
        c.eval.n_demos = 10;
        c.eval.m_states = 40;
        c.eval.k_actions = 8;
        return c;
    }();
    return cfg;
}

const Workbench& bench_workbench() {
    static Workbench wb = build_workbench(small_config());
    return wb;
}

void BM_SpectralRadius(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    RngStream rng(7, 1);
    Mat m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = rng.normal() / n;
    for (auto _ : state) benchmark::DoNotOptimize(spectral_radius(m));
}
BENCHMARK(BM_SpectralRadius)->Arg(8)->Arg(16)->Arg(32);

void BM_EnvStep(benchmark::State& state) {
    const Workbench& wb = bench_workbench();
    RngStream rng(11, 2);
    EnvState s = nominal_state(wb.env, rng);
    const ActionChunk chunk = expert_controller(wb.env, s);
    for (auto _ : state) {
        EnvState next = env_step(wb.env, s, chunk, rng);
        benchmark::DoNotOptimize(next);
    }
}
BENCHMARK(BM_EnvStep);

void BM_Score(benchmark::State& state) {
    const Workbench& wb = bench_workbench();
    const NoiseSchedule sched = make_linear_schedule();
    RngStream rng(13, 3);
    const LatentVector& z = wb.policy.obs_latents.front();
    ActionChunk a = wb.policy.chunks.front();
    for (double& v : a.a) v += 0.1 * rng.normal();
    for (auto _ : state) benchmark::DoNotOptimize(score(wb.policy, a, z, 25, sched));
}
BENCHMARK(BM_Score);

void BM_SampleAction(benchmark::State& state) {
    const Workbench& wb = bench_workbench();
    const NoiseSchedule sched = make_linear_schedule();
    GuidanceConfig gcfg;
    gcfg.mode = static_cast<GuidanceMode>(state.range(0));
    RngStream rng(17, 4);
    const LatentVector& z = wb.policy.obs_latents.front();
    const FeedbackState fb = init_feedback(z);
    for (auto _ : state) {
        ActionChunk a = sample_action(wb.policy, sched, gcfg, z, fb, wb.wm, wb.gain, wb.mem,
                                      wb.weights, wb.env.a_max, rng);
        benchmark::DoNotOptimize(a);
    }
}
BENCHMARK(BM_SampleAction)->Arg(0)->Arg(3);

}  // namespace

BENCHMARK_MAIN();

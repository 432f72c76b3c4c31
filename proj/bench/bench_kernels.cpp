// Serial reference kernels against their OpenMP versions.
#include <benchmark/benchmark.h>

#include <stdexcept>

#include "lowlogit/eval.hpp"
#include "lowlogit/isan.hpp"
#include "lowlogit/learner.hpp"
#include "lowlogit/oracle.hpp"
#include "lowlogit/sampler.hpp"

using namespace lowlogit;

namespace {

const IsanModel& model() {
    static IsanModel m = random_isan(6, 3, 3, 1.0, 11);
    return m;
}

struct Learned {
    IsanModel m = random_isan(5, 3, 2, 1.0, 5);
    LearnedModel lm;
    std::vector<Seq> prefixes;
    Learned() {
        ExactOracle oracle(m);
        IsanTrajectorySampler sampler(m);
        ParamOverrides o;
        o.K = 60;
        o.n = 60;
        o.gamma_thres = 1e-4;
        o.seed = 1;
        LearnResult r = learn(oracle, sampler, default_params(m.T, m.sigma, m.d, isan_alpha_bound(m), 0.1, 0.1, 1e-6, o));
        if (!r.model) throw std::runtime_error("bench: fixture did not learn");
        lm = *r.model;
        Rng rng(3);
        for (int i = 0; i < 64; ++i) prefixes.push_back(isan_sample_prefix(m, rng, m.T - 1));
    }
};

const Learned& learned() {
    static Learned l;
    return l;
}

std::pair<std::vector<Seq>, std::vector<Seq>> hf() {
    return {all_sequences(3, 2), all_sequences_upto(3, 0, 3)};
}

}  // namespace

static void BM_true_dist_serial(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(serial::enumerate_true_dist(model()));
}
static void BM_true_dist_parallel(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(enumerate_true_dist(model()));
}
static void BM_logit_matrix_serial(benchmark::State& st) {
    auto [H, F] = hf();
    for (auto _ : st) benchmark::DoNotOptimize(serial::build_logit_matrix(model(), H, F));
}
static void BM_logit_matrix_parallel(benchmark::State& st) {
    auto [H, F] = hf();
    for (auto _ : st) benchmark::DoNotOptimize(build_logit_matrix(model(), H, F));
}
static void BM_learned_dist_serial(benchmark::State& st) {
    const auto& l = learned();
    for (auto _ : st) benchmark::DoNotOptimize(serial::enumerate_learned_dist(l.lm));
}
static void BM_learned_dist_parallel(benchmark::State& st) {
    const auto& l = learned();
    for (auto _ : st) benchmark::DoNotOptimize(enumerate_learned_dist(l.lm));
}
static void BM_lp_batch_serial(benchmark::State& st) {
    const auto& l = learned();
    for (auto _ : st)
        benchmark::DoNotOptimize(serial::solve_feasibility_batch(l.lm.bank, l.lm.futures, l.prefixes, l.lm.beta, l.lm.tau_feas));
}
static void BM_lp_batch_parallel(benchmark::State& st) {
    const auto& l = learned();
    for (auto _ : st)
        benchmark::DoNotOptimize(solve_feasibility_batch(l.lm.bank, l.lm.futures, l.prefixes, l.lm.beta, l.lm.tau_feas));
}

BENCHMARK(BM_true_dist_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_true_dist_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_logit_matrix_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_logit_matrix_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_learned_dist_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_learned_dist_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_lp_batch_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_lp_batch_parallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

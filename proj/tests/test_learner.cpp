#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "bank.hpp"
#include "brute.hpp"
#include "lowlogit/eval.hpp"
#include "lowlogit/learner.hpp"
#include "lowlogit/sampler.hpp"

using namespace lowlogit;

static LearnResult run_exact(const IsanModel& m, const ParamOverrides& o, int d, ExactOracle* keep = nullptr) {
    ExactOracle local(m);
    ExactOracle& oracle = keep ? *keep : local;
    IsanTrajectorySampler sampler(m);
    LearnerConfig cfg = default_params(m.T, m.sigma, d, isan_alpha_bound(m), 0.1, 0.1, 1e-6, o);
    return learn(oracle, sampler, cfg);
}

TEST_CASE("default_params follows the schedule") {
    const int T = 5, sigma = 3, d = 3;
    const double alpha = 1.5, eps = 0.1, delta = 0.1, eps_apx = 1e-3;
    LearnerConfig c = default_params(T, sigma, d, alpha, eps, delta, eps_apx);
    CHECK(c.beta == 2.0);
    const int K = static_cast<int>(std::ceil(2.0 * T * d * std::log(2.0 * d * alpha * T / (eps_apx * delta))));
    CHECK(c.K == K);
    CHECK(c.gamma == doctest::Approx(4.0 * K * eps_apx));
    const double gt = c.gamma * std::sqrt(4.0 * d * std::log(2.0 * 2.0 * K * alpha * alpha / c.gamma));
    CHECK(c.gamma_thres == doctest::Approx(gt));
    const int n = static_cast<int>(std::ceil(2.0 * std::log(T * static_cast<double>(K) / delta) / gt));
    CHECK(c.n == n);
    CHECK(c.eta == doctest::Approx(eps / (3.0 * T * T * n)));
    CHECK(addition_bound(c) == static_cast<int>(std::ceil(4.0 * d * std::log(2.0 * d * alpha * K / c.gamma))));

    LearnerConfig lemma = default_params(T, sigma, d, alpha, eps, delta, eps_apx, [] {
        ParamOverrides o;
        o.lemma_n = true;
        return o;
    }());
    CHECK(lemma.n == static_cast<int>(std::ceil(2.0 * std::log(T * static_cast<double>(K) / delta) / gt * K * 2.0 * alpha)));

    ParamOverrides o;
    o.K = 7;
    o.n = 11;
    o.gamma_thres = 0.5;
    LearnerConfig ov = default_params(T, sigma, d, alpha, eps, delta, eps_apx, o);
    CHECK(ov.K == 7);
    CHECK(ov.n == 11);
    CHECK(ov.gamma_thres == 0.5);
    CHECK(ov.gamma == doctest::Approx(28 * eps_apx));

    CHECK_THROWS_AS(default_params(T, sigma, d, alpha, 0.0, delta, eps_apx), ParameterError);
    CHECK_THROWS_AS(default_params(T, sigma, d, -1.0, eps, delta, eps_apx), ParameterError);
    CHECK_THROWS_AS(default_params(T, sigma, 0, alpha, eps, delta, eps_apx), ParameterError);
}

TEST_CASE("rank-1 product model learns in at most two epochs") {
    IsanModel m = product_isan(4, 3, 1.0, 12);
    LearnResult r = run_exact(m, {}, 1);
    REQUIRE(r.model);
    CHECK(r.stats.epochs <= 2);
    CHECK(tv_exact(m, *r.model) <= 0.02);
}

TEST_CASE("rank-3 model learns to small TV") {
    IsanModel m = random_isan(5, 3, 3, 1.0, 1);
    LearnResult r = run_exact(m, {}, 3);
    REQUIRE(r.model);
    CHECK(tv_exact(m, *r.model) <= 0.1);
}

TEST_CASE("run with future additions") {
    IsanModel m = random_isan(6, 3, 5, 1.0, 3);
    ExactOracle oracle(m);
    ParamOverrides o;
    o.seed = 1;
    LearnResult r = run_exact(m, o, 5, &oracle);
    REQUIRE(r.model);
    const LearnedModel& lm = *r.model;
    LearnerConfig cfg = default_params(m.T, m.sigma, 5, isan_alpha_bound(m), 0.1, 0.1, 1e-6, o);

    // |hat| grows by at most one future per epoch and never shrinks
    int violations = 0, infeasible = 0;
    for (const auto& rec : r.stats.log) {
        violations += rec.event == "violation";
        infeasible += rec.event == "infeasible";
    }
    CHECK(violations > 0);
    std::size_t total_hat = 0;
    for (const auto& h : lm.futures.hat) total_hat += h.size();
    CHECK(total_hat == static_cast<std::size_t>(m.T * m.sigma + violations));
    for (std::size_t k = 1; k < r.stats.log.size(); ++k) CHECK(r.stats.log[k].dstar >= r.stats.log[k - 1].dstar);

    for (int a : r.stats.additions) CHECK(a <= addition_bound(cfg));
    CHECK(static_cast<double>(r.stats.queries) <= query_budget(cfg));
    CHECK(r.stats.queries == oracle.trace().total_count());

    // stored single-token values are exact oracle reads
    for (int s = 0; s < m.T; ++s)
        for (int i = 0; i < lm.dstar; ++i)
            for (Token y = 0; y < m.sigma; ++y) {
                const Seq& h = lm.bank.histories[s][i];
                Vec want = mean_center(isan_next_logits(m, h));
                CHECK(lm.single_token[s][i][y] == doctest::Approx(want[y]).epsilon(1e-12));
            }

    // every solvable program meets its constraints, and step 0 reads the true values
    int solved = 0;
    for (int t = 1; t < m.T; ++t)
        for (const Seq& y : all_sequences(m.sigma, t)) {
            FeasProblem p = build_feasibility(lm.bank, lm.futures, y, lm.beta);
            auto sol = solve_feasibility(p, lm.tau_feas);
            if (!sol) continue;
            ++solved;
            CHECK(sol->max_violation <= feas_tolerance(p, lm.tau_feas));
            for (std::size_t k = 0; k < lm.futures.hat[0].size(); ++k)
                CHECK(std::abs(sol->Lhat[0][k] - bankutil::exact_lapx(m, Seq{}, lm.futures.hat[0][k])) <= 1e-9);
        }
    CHECK(solved > 0);
}

TEST_CASE("budget exhaustion is reported, infeasible epochs leave the future sets alone") {
    IsanModel m = random_isan(6, 3, 5, 1.0, 3);
    ParamOverrides o;
    o.K = 1;
    o.seed = 1;
    LearnResult r = run_exact(m, o, 5);
    CHECK(r.budget_exhausted());
    CHECK(r.stats.epochs == 1);
}

TEST_CASE("determinism and serialization") {
    IsanModel m = random_isan(6, 2, 6, 1.0, 3);
    ParamOverrides o;
    o.seed = 4;
    LearnResult a = run_exact(m, o, 6), b = run_exact(m, o, 6);
    REQUIRE(a.model);
    REQUIRE(b.model);
    CHECK(learned_to_json(*a.model).dump() == learned_to_json(*b.model).dump());
    CHECK(a.stats.queries == b.stats.queries);

    std::string path = "learned_roundtrip_test.json";
    save_learned(*a.model, path);
    LearnedModel back = load_learned(path);
    std::remove(path.c_str());
    CHECK(learned_to_json(back).dump() == learned_to_json(*a.model).dump());
    CHECK(tv_exact(m, back) == tv_exact(m, *a.model));

    nlohmann::json j = learned_to_json(*a.model);
    j["futures_tilde"][1].erase(0);
    CHECK_THROWS(learned_from_json(j));
}

TEST_CASE("run log") {
    IsanModel m = random_isan(6, 2, 6, 1.0, 3);
    LearnResult r = run_exact(m, {}, 6);
    std::ostringstream out;
    write_run_log(r.stats, out);
    std::string text = out.str();
    CHECK(text.rfind("epoch,step_reached,event,violated_step,added_future,dstar,queries_cum\n", 0) == 0);
    CHECK(text.find(",pass,") != std::string::npos);
}

namespace {
// product model over two tokens with step logits (0, a) and (0, b)
IsanModel two_step_product(double a, double b) {
    IsanModel m = uniform_isan(3, 2);
    m.B[1](1, 0) = a;
    m.B[2](1, 0) = b;
    return m;
}
}  // namespace

TEST_CASE("discrepancy test on a hand-built state") {
    IsanModel m = two_step_product(0.8, -0.6);
    FutureSets fs = FutureSets::seeded(3, 2);
    std::vector<std::vector<Seq>> picks{{Seq{}}, {Seq{0}}, {Seq{0, 0}}};
    SpannerBank bank = bankutil::make_bank(m, fs, picks);
    ExactOracle oracle(m);
    LogitCache cache(oracle);
    std::vector<Seq> ys{Seq{1, 1}};
    const double thres = 0.05;

    auto state = [&](double k) {
        LPSolution sol;
        Vec e1(static_cast<std::size_t>(fs.dstar), 0.0);
        e1[0] = 1.0;
        Vec c1 = e1;
        c1[0] = k;
        sol.c = {e1, c1};
        return std::vector<LPSolution>{sol};
    };
    CHECK_FALSE(discrepancy_test(cache, bank, 2, ys, state(1.0), thres, 2));

    // centered step-1 logits are +-0.4, so scaling c_1 by k moves the direct value by 0.4 |k - 1|
    const double k = 1.0 + 2 * thres / 0.4;
    auto v = discrepancy_test(cache, bank, 2, ys, state(k), thres, 2);
    REQUIRE(v);
    CHECK(v->step == 1);
    CHECK(v->future == Seq{0});
    CHECK(v->gap == doctest::Approx(2 * thres));
    auto again = discrepancy_test(cache, bank, 2, ys, state(k), thres, 2);
    REQUIRE(again);
    CHECK(again->future == v->future);

    const double small = 1.0 + 0.5 * thres / 0.4;
    CHECK_FALSE(discrepancy_test(cache, bank, 2, ys, state(small), thres, 2));
}

TEST_CASE("logit cache counts misses as queries") {
    IsanModel m = random_isan(4, 3, 2, 1.0, 2);
    ExactOracle o(m);
    LogitCache c(o);
    c.lapx(Seq{1, 2});
    c.lapx(Seq{1, 0});
    c.lapx(Seq{}, Seq{2});
    CHECK(c.misses() == 2);
    CHECK(o.trace().total_count() == 2);
    CHECK(c.lapx(Seq{1, 2}) == doctest::Approx(mean_center(isan_next_logits(m, Seq{1}))[2]));
}

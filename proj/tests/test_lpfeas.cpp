#include <doctest.h>

#include <algorithm>

#include "bank.hpp"
#include "lowlogit/lpfeas.hpp"

using namespace lowlogit;

TEST_CASE("future sets") {
    FutureSets fs = FutureSets::seeded(4, 3);
    CHECK(fs.hat[0].size() == 3);
    CHECK(fs.tilde[0].size() == 12);
    CHECK(fs.tilde[3].size() == 3);
    CHECK(fs.dstar == 12);
    CHECK(fs.add(1, Seq{0, 2}));
    CHECK_FALSE(fs.add(1, Seq{0, 2}));
    CHECK(fs.tilde[0].size() == 15);
    CHECK(fs.tilde_pos(0, Seq{1, 0, 2}) >= 0);
    CHECK_THROWS_AS(fs.tilde_pos(2, Seq{1, 0, 2}), ConsistencyError);
    CHECK_THROWS_AS(fs.add(3, Seq{0, 1}), DomainError);
    // tilde matches its definition
    for (int s = 0; s < 4; ++s) {
        std::vector<Seq> want = fs.hat[s];
        if (s + 1 < 4)
            for (const Seq& f : fs.hat[s + 1])
                for (Token y = 0; y < 3; ++y)
                    if (std::find(want.begin(), want.end(), concat(Seq{y}, f)) == want.end()) want.push_back(concat(Seq{y}, f));
        std::vector<Seq> got = fs.tilde[s];
        std::sort(want.begin(), want.end());
        std::sort(got.begin(), got.end());
        CHECK(got == want);
    }
}

TEST_CASE("problem shape") {
    IsanModel m = random_isan(5, 3, 2, 1.0, 3);
    FutureSets fs = FutureSets::seeded(5, 3);
    fs.add(2, Seq{1, 1});
    fs.add(3, Seq{0, 2});
    SpannerBank bank = bankutil::true_bank(m, fs);
    for (int t = 1; t <= 4; ++t) {
        Seq prefix(static_cast<std::size_t>(t), 1);
        FeasProblem p = build_feasibility(bank, fs, prefix, 2.0);
        int rows = 0;
        for (int s = 1; s <= t - 1; ++s) rows += static_cast<int>(fs.hat[s].size());
        CHECK(p.constraint_count() == rows);
        CHECK(p.variable_count() == (t - 1) * fs.dstar);
    }
    FeasProblem p1 = build_feasibility(bank, fs, Seq{2}, 2.0);
    auto s1 = solve_feasibility(p1, 1e-8);
    REQUIRE(s1);
    CHECK(s1->c[0][0] == 1.0);
    for (int i = 1; i < fs.dstar; ++i) CHECK(s1->c[0][i] == 0.0);
    CHECK_THROWS_AS(build_feasibility(bank, fs, Seq{}, 2.0), HorizonError);
}

TEST_CASE("true spanners on an exact low-rank model are always feasible") {
    for (std::uint64_t seed : {1, 2, 3}) {
        IsanModel m = random_isan(4, 3, 2, 1.0, seed);
        FutureSets fs = FutureSets::seeded(4, 3);
        SpannerBank bank = bankutil::true_bank(m, fs);
        for (int t = 1; t <= 3; ++t)
            for (const Seq& y : all_sequences(3, t)) {
                FeasProblem p = build_feasibility(bank, fs, y, 2.0);
                auto sol = solve_feasibility(p, 1e-8);
                REQUIRE(sol);
                const double tau = feas_tolerance(p, 1e-8);
                CHECK(sol->max_violation <= tau);
                for (const auto& c : sol->c)
                    for (double v : c) CHECK(std::abs(v) <= 2.0 + tau);
                // Lhat over hat[t] reproduces the true next-step values
                for (std::size_t k = 0; k < fs.hat[t].size(); ++k)
                    CHECK(std::abs(sol->Lhat[t][k] - bankutil::exact_lapx(m, y, fs.hat[t][k])) <= 1e-6);
                auto again = solve_feasibility(p, 1e-8);
                CHECK(again->c == sol->c);
            }
    }
}

TEST_CASE("rank-1 model returns the first basis vector everywhere") {
    IsanModel m = product_isan(4, 3, 1.0, 5);
    FutureSets fs = FutureSets::seeded(4, 3);
    SpannerBank bank = bankutil::true_bank(m, fs);
    for (const Seq& y : all_sequences(3, 3)) {
        auto sol = solve_feasibility(build_feasibility(bank, fs, y, 2.0), 1e-8);
        REQUIRE(sol);
        for (const auto& c : sol->c) {
            CHECK(std::abs(c[0] - 1.0) <= 1e-9);
            for (std::size_t i = 1; i < c.size(); ++i) CHECK(std::abs(c[i]) <= 1e-9);
        }
    }
}

TEST_CASE("a poor bank makes some prefixes infeasible, independent of future order") {
    IsanModel m = random_isan(4, 3, 3, 1.0, 8);
    FutureSets fs = FutureSets::seeded(4, 3);
    std::vector<std::vector<Seq>> picks(4, std::vector<Seq>{Seq{}});
    for (int s = 1; s < 4; ++s) picks[s] = {Seq(static_cast<std::size_t>(s), 0)};
    SpannerBank bank = bankutil::make_bank(m, fs, picks);

    FutureSets rev = fs;
    for (auto& h : rev.hat) std::reverse(h.begin(), h.end());
    rev.rebuild();
    SpannerBank bank_rev = bankutil::make_bank(m, rev, picks);

    int infeasible = 0;
    for (int t = 2; t <= 3; ++t)
        for (const Seq& y : all_sequences(3, t)) {
            bool a = solve_feasibility(build_feasibility(bank, fs, y, 2.0), 1e-8).has_value();
            bool b = solve_feasibility(build_feasibility(bank_rev, rev, y, 2.0), 1e-8).has_value();
            CHECK(a == b);
            infeasible += !a;
        }
    CHECK(infeasible > 0);
}

TEST_CASE("batch solve matches the serial reference") {
    IsanModel m = random_isan(4, 3, 2, 1.0, 4);
    FutureSets fs = FutureSets::seeded(4, 3);
    SpannerBank bank = bankutil::true_bank(m, fs);
    auto ys = all_sequences(3, 3);
    auto par = solve_feasibility_batch(bank, fs, ys, 2.0, 1e-8);
    auto ser = serial::solve_feasibility_batch(bank, fs, ys, 2.0, 1e-8);
    REQUIRE(par.size() == ser.size());
    for (std::size_t u = 0; u < ys.size(); ++u) {
        REQUIRE(par[u].has_value() == ser[u].has_value());
        if (par[u]) CHECK(par[u]->c == ser[u]->c);
    }
}

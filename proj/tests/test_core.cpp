#include <doctest.h>

#include <cmath>
#include <random>

#include "lowlogit/core.hpp"

using namespace lowlogit;

TEST_CASE("softmax basics") {
    Vec p = softmax({0.0, 0.0});
    CHECK(p[0] == doctest::Approx(0.5));
    CHECK(p[1] == doctest::Approx(0.5));
    Vec q = softmax({0.0, std::log(2.0), std::log(3.0)});
    CHECK(q[0] == doctest::Approx(1.0 / 6).epsilon(1e-14));
    CHECK(q[1] == doctest::Approx(1.0 / 3).epsilon(1e-14));
    CHECK(q[2] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("softmax shift invariance and stability") {
    Rng rng(1);
    std::uniform_real_distribution<double> u(-700, 700);
    for (int trial = 0; trial < 200; ++trial) {
        Vec l(5);
        for (auto& v : l) v = u(rng);
        Vec p = softmax(l);
        double sum = 0;
        for (double v : p) {
            CHECK(v >= 0.0);
            CHECK(std::isfinite(v));
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
        Vec shifted = l;
        for (auto& v : shifted) v += 3.25;
        CHECK(max_abs_diff(softmax(shifted), p) <= 1e-12);
    }
}

TEST_CASE("log_softmax agrees with log of softmax") {
    Vec l{0.3, -1.2, 2.0};
    Vec a = log_softmax(l), p = softmax(l);
    for (std::size_t i = 0; i < l.size(); ++i) CHECK(a[i] == doctest::Approx(std::log(p[i])).epsilon(1e-13));
}

TEST_CASE("mean_center") {
    Vec c = mean_center({1, 2, 3});
    CHECK(c[0] == doctest::Approx(-1));
    CHECK(c[1] == doctest::Approx(0));
    CHECK(c[2] == doctest::Approx(1));
    for (double v : mean_center({4, 4, 4, 4})) CHECK(v == 0.0);
    Rng rng(2);
    std::uniform_real_distribution<double> u(-50, 50);
    for (int trial = 0; trial < 100; ++trial) {
        Vec v(6);
        double inf = 0;
        for (auto& x : v) inf = std::max(inf, std::abs(x = u(rng)));
        Vec m = mean_center(v);
        double s = 0;
        for (double x : m) s += x;
        CHECK(std::abs(s) <= 1e-12 * inf * 6);
        CHECK(max_abs_diff(mean_center(m), m) <= 1e-12 * inf);
        CHECK(max_abs_diff(softmax(m), softmax(v)) <= 1e-12);
    }
}

TEST_CASE("tv_distance") {
    CHECK(tv_distance({0.2, 0.8}, {0.2, 0.8}) == 0.0);
    CHECK(tv_distance({1, 0}, {0, 1}) == doctest::Approx(1.0));
    CHECK(tv_distance({0.5, 0.5}, {0.25, 0.75}) == doctest::Approx(0.25));
    CHECK(tv_distance({0.1, 0.9}, {0.6, 0.4}) == tv_distance({0.6, 0.4}, {0.1, 0.9}));
    CHECK_THROWS_AS(tv_distance({1.0}, {0.5, 0.5}), DimensionError);
}

TEST_CASE("softmax TV is a quarter-Lipschitz in sup norm") {
    Rng rng(3);
    std::uniform_real_distribution<double> u(-10, 10);
    int violations = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        Vec a(4), b(4);
        for (auto& v : a) v = u(rng);
        for (auto& v : b) v = u(rng);
        if (tv_distance(softmax(a), softmax(b)) > 0.25 * max_abs_diff(a, b) + 1e-15) ++violations;
    }
    CHECK(violations == 0);
}

TEST_CASE("softmax TV is half-Lipschitz in sup norm") {
    Rng rng(3);
    std::uniform_real_distribution<double> u(-10, 10), small(-0.5, 0.5);
    int violations = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        Vec a(4), b(4);
        for (auto& v : a) v = u(rng);
        for (std::size_t i = 0; i < 4; ++i) b[i] = trial % 2 ? u(rng) : a[i] + small(rng);
        if (tv_distance(softmax(a), softmax(b)) > 0.5 * max_abs_diff(a, b) + 1e-15) ++violations;
    }
    CHECK(violations == 0);
}

TEST_CASE("the quarter constant fails on opposite two-token shifts") {
    // (0, 0) against (x, -x): tv = sigmoid(2x) - 1/2, about x/2 for small x
    const double x = 0.1;
    double tv = tv_distance(softmax({0.0, 0.0}), softmax({x, -x}));
    CHECK(tv == doctest::Approx(1.0 / (1.0 + std::exp(-2 * x)) - 0.5));
    CHECK(tv > 0.25 * x);
    CHECK(tv <= 0.5 * x);
}

TEST_CASE("sequence helpers") {
    CHECK(concat(Seq{1, 2}, Seq{3}) == Seq{1, 2, 3});
    CHECK(concat(Seq{}, 4) == Seq{4});
    CHECK(slice(Seq{0, 1, 2, 3}, 1, 3) == Seq{1, 2});
    CHECK(all_sequences(3, 2).size() == 9);
    CHECK(all_sequences(2, 0).size() == 1);
    CHECK(all_sequences_upto(3, 0, 2).size() == 13);
    CHECK(ipow(3, 5) == 243);
    CHECK(seq_from_string(seq_to_string(Seq{0, 2, 1})) == Seq{0, 2, 1});
    CHECK(hash_seq(Seq{1, 2}, 7) == hash_seq(Seq{1, 2}, 7));
    CHECK(hash_seq(Seq{1, 2}, 7) != hash_seq(Seq{2, 1}, 7));
    CHECK(fmt17(0.1) == "0.10000000000000001");
}

TEST_CASE("sample_index follows the distribution") {
    Rng rng(4);
    Vec p{0.2, 0.5, 0.3};
    std::vector<int> counts(3, 0);
    const int N = 100000;
    for (int i = 0; i < N; ++i) ++counts[sample_index(p, rng)];
    for (int y = 0; y < 3; ++y) {
        double sd = std::sqrt(N * p[y] * (1 - p[y]));
        CHECK(std::abs(counts[y] - N * p[y]) <= 4 * sd);
    }
}

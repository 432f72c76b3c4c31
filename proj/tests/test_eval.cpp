#include <doctest.h>

#include <cmath>
#include <sstream>

#include "brute.hpp"
#include "lowlogit/eval.hpp"

using namespace lowlogit;

TEST_CASE("enumerated sequence law matches hand-stepped joints") {
    IsanModel m = random_isan(4, 3, 3, 1.0, 17);
    Vec par = enumerate_true_dist(m);
    Vec ser = serial::enumerate_true_dist(m);
    auto ys = all_sequences(3, 4);
    REQUIRE(par.size() == ys.size());
    double total = 0.0;
    for (std::size_t k = 0; k < ys.size(); ++k) {
        double want = brute::joint(m, ys[k]);
        CHECK(std::abs(par[k] - want) <= 1e-12 * want);
        CHECK(ser[k] == doctest::Approx(par[k]).epsilon(1e-14));
        total += par[k];
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

    Vec u = enumerate_true_dist(uniform_isan(3, 4));
    for (double p : u) CHECK(p == doctest::Approx(1.0 / 64).epsilon(1e-12));
}

TEST_CASE("TV with a failure atom") {
    LearnedDist l;
    l.probs = {0.5, 0.5};
    CHECK(tv_with_failure({0.5, 0.5}, l) == 0.0);
    l.probs = {0.4, 0.4};
    l.fail_mass = 0.2;
    CHECK(tv_with_failure({0.5, 0.5}, l) == doctest::Approx(0.2));
    l.probs = {1.0, 0.0};
    l.fail_mass = 0.0;
    CHECK(tv_with_failure({0.0, 1.0}, l) == doctest::Approx(1.0));
    CHECK_THROWS_AS(tv_with_failure({1.0}, l), DimensionError);
}

TEST_CASE("deterministic model against a uniform learned law") {
    const int T = 3, S = 3;
    IsanModel det = uniform_isan(T, S);
    for (int t = 0; t < T; ++t) {
        det.B[t].setConstant(-40.0);
        det.B[t](t % S, 0) = 40.0;
    }
    LearnedDist uni;
    uni.probs.assign(ipow(S, T), 1.0 / 27);
    CHECK(tv_with_failure(enumerate_true_dist(det), uni) >= 1.0 - 1.0 / 27 - 1e-12);
}

TEST_CASE("logit matrix") {
    IsanModel m = random_isan(4, 2, 2, 1.0, 5);
    std::vector<Seq> H = all_sequences(2, 2);
    std::vector<Seq> F = all_sequences_upto(2, 0, 1);
    LogitMatrix L = build_logit_matrix(m, H, F);
    LogitMatrix Ls = serial::build_logit_matrix(m, H, F);
    REQUIRE(L.values.rows() == 4);
    REQUIRE(L.values.cols() == static_cast<Eigen::Index>(F.size()) * 2);
    CHECK((L.values - Ls.values).cwiseAbs().maxCoeff() == 0.0);
    for (std::size_t r = 0; r < H.size(); ++r)
        for (std::size_t k = 0; k < F.size(); ++k) {
            Vec want = brute::centered_log(brute::conditional(m, concat(H[r], F[k])));
            for (int y = 0; y < 2; ++y)
                CHECK(L.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(2 * k + y)) ==
                      doctest::Approx(want[y]).epsilon(1e-10));
        }
    LogitMatrix empty_row = build_logit_matrix(m, {Seq{}}, {Seq{}});
    Vec first = brute::centered_log(brute::conditional(m, {}));
    CHECK(empty_row.values(0, 1) == doctest::Approx(first[1]));
}

TEST_CASE("logit matrix rank is at most the state dimension") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        IsanModel m = random_isan(5, 3, 2, 1.0, seed);
        LogitMatrix L = build_logit_matrix(m, all_sequences(3, 2), all_sequences_upto(3, 0, 2));
        Eigen::VectorXd sv = singular_values(L.values);
        CHECK(sv(2) <= 1e-8 * sv(0));
    }
}

TEST_CASE("rank profile") {
    Eigen::MatrixXd M(3, 2);
    M << 1, -2, 0.5, 0, -1, 3;
    RankProfile rp = rank_profile(M, {2, 0, 1, 9});
    REQUIRE(rp.points.size() == 4);
    CHECK(rp.points[0].rank == 0);
    CHECK(rp.points[0].avg_l1_error == doctest::Approx(M.cwiseAbs().mean()));
    CHECK(rp.points[0].frobenius_error == doctest::Approx(M.norm()));
    for (std::size_t k = 1; k < rp.points.size(); ++k) CHECK(rp.points[k].frobenius_error <= rp.points[k - 1].frobenius_error + 1e-15);
    CHECK(rp.points[2].frobenius_error <= 1e-12);
    CHECK(rp.points[3].rank == 9);
    CHECK(rp.points[3].avg_l1_error <= 1e-12);

    // rank-1 truncation error equals the trailing singular value
    Eigen::VectorXd sv = singular_values(M);
    CHECK(rp.points[1].frobenius_error == doctest::Approx(sv(1)));

    std::ostringstream out;
    write_rank_profile_csv(rp, out);
    CHECK(out.str().rfind("rank,frobenius_error,avg_l1_error,rows,cols,seed\n0,", 0) == 0);

    CHECK_THROWS_AS(rank_profile(Eigen::MatrixXd(0, 0), {1}), EmptyInputError);
    CHECK_THROWS_AS(rank_profile(M, {-1}), ParameterError);
}

TEST_CASE("average low-rank error estimate") {
    IsanModel m = random_isan(6, 3, 2, 1.0, 8);
    CHECK(estimate_eps_avg(m, 2, 2, 5, 30, 30, 1) <= 1e-9);
    CHECK(estimate_eps_avg(m, 1, 2, 5, 30, 30, 1) > 1e-4);
    // independent resamples agree to within a factor of two
    double a = estimate_eps_avg(m, 1, 2, 5, 60, 60, 2), b = estimate_eps_avg(m, 1, 2, 5, 60, 60, 3);
    CHECK(std::max(a, b) <= 2 * std::min(a, b));
    CHECK(estimate_eps_avg_max(m, 1, 2, {4, 5}, 30, 30, 1) >= estimate_eps_avg(m, 1, 2, 5, 30, 30, 1));

    LogitMatrix L = sample_logit_matrix(m, 2, 5, 7, 4, 9);
    CHECK(L.values.rows() == 7);
    CHECK(L.values.cols() == 12);
    for (const Seq& h : L.histories) CHECK(h.size() == 2);
    for (const Seq& f : L.futures) CHECK(f.size() == 2);

    CHECK_THROWS_AS(sample_logit_matrix(m, 3, 3, 5, 5, 0), ParameterError);
    CHECK_THROWS_AS(sample_logit_matrix(m, 2, 7, 5, 5, 0), ParameterError);
    CHECK_THROWS_AS(sample_logit_matrix(m, 2, 4, 0, 5, 0), EmptyInputError);
}

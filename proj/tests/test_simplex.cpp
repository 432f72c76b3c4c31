#include <doctest.h>

#include "exact_lp.hpp"
#include "lowlogit/core.hpp"
#include "lowlogit/simplex.hpp"

using namespace lowlogit;

static bool reverifies(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const BoxLPResult& r, double bound, double tau) {
    if (r.status != LPStatus::feasible) return true;
    return (A * r.x - b).cwiseAbs().maxCoeff() <= tau && r.x.cwiseAbs().maxCoeff() <= bound + tau;
}

TEST_CASE("contradictory toy is infeasible") {
    Eigen::MatrixXd A(2, 1);
    A << 1, 1;
    Eigen::VectorXd b(2);
    b << 3, -3;
    CHECK(solve_box_lp(A, b, 2.0, 1e-8).status == LPStatus::infeasible);
}

TEST_CASE("box binds") {
    Eigen::MatrixXd A(1, 1);
    A << 1;
    Eigen::VectorXd b(1);
    b << 3;
    CHECK(solve_box_lp(A, b, 2.0, 1e-8).status == LPStatus::infeasible);
    b << 2;
    BoxLPResult r = solve_box_lp(A, b, 2.0, 1e-8);
    REQUIRE(r.status == LPStatus::feasible);
    CHECK(r.x(0) == doctest::Approx(2.0));
}

TEST_CASE("phase two picks a minimal l1 point") {
    // x1 + x2 = 1 within [-2, 2]^2: every point on the segment x1, x2 >= 0 has l1 norm 1
    Eigen::MatrixXd A(1, 3);
    A << 1, 1, 0;
    Eigen::VectorXd b(1);
    b << 1;
    BoxLPResult r = solve_box_lp(A, b, 2.0, 1e-10);
    REQUIRE(r.status == LPStatus::feasible);
    CHECK(r.x.lpNorm<1>() == doctest::Approx(1.0));
    CHECK(r.x(2) == 0.0);
}

TEST_CASE("no constraints") {
    Eigen::MatrixXd A(0, 3);
    Eigen::VectorXd b(0);
    BoxLPResult r = solve_box_lp(A, b, 2.0, 1e-8);
    CHECK(r.status == LPStatus::feasible);
    CHECK(r.x.size() == 3);
}

TEST_CASE("verdicts match exact rational elimination") {
    Rng rng(31);
    std::uniform_int_distribution<int> coef(-3, 3), vars(1, 6), cons(1, 8);
    int agree = 0, feasible = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const int n = vars(rng), m = cons(rng);
        Eigen::MatrixXd A(m, n);
        for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = coef(rng);
        Eigen::VectorXd b(m);
        if (trial % 2 == 0) {
            Eigen::VectorXd x(n);
            for (auto& v : x) v = coef(rng) / 2.0;
            b = A * x;
        } else {
            for (auto& v : b) v = coef(rng) * 2;
        }
        const double tau = 1e-8 * std::max(1.0, std::max(A.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()));
        BoxLPResult r = solve_box_lp(A, b, 2.0, tau);
        bool want = exact_lp::feasible(A, b, 2.0);
        feasible += want;
        if ((r.status == LPStatus::feasible) == want) ++agree;
        CHECK(reverifies(A, b, r, 2.0, tau));
        CHECK(solve_box_lp(A, b, 2.0, tau).x == r.x);
    }
    CHECK(agree == 300);
    CHECK(feasible > 50);
    CHECK(feasible < 250);
}

TEST_CASE("exact checker sanity") {
    Eigen::MatrixXd A(2, 2);
    A << 1, 1, 1, -1;
    Eigen::VectorXd b(2);
    b << 4, 0;
    CHECK(exact_lp::feasible(A, b, 2.0));
    b << 4.5, 0;
    CHECK_FALSE(exact_lp::feasible(A, b, 2.0));
}
